"""Compact transformer sequence classifier plus base-checkpoint handling.

The "pre-trained base" is a checkpoint file: every trial reloads it so
weights genuinely restart from the foundation rather than warm-starting.
In this offline environment the base is materialized deterministically
from the model id; drop a real exported checkpoint at the same path to
fine-tune from actual pre-trained weights.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch import nn

from .data import PAD_ID


@dataclass(frozen=True)
class ModelConfig:
    vocab_buckets: int
    dim: int
    heads: int
    layers: int
    ffn_dim: int
    max_len: int


# Known base model ids. "tiny-base-v1" trains in seconds on a laptop CPU
# and is what the tests use; "mistral-60m" matches a ~60M-parameter
# encoder footprint for realistic runs.
BASE_MODELS = {
    "tiny-base-v1": ModelConfig(vocab_buckets=2048, dim=32, heads=2, layers=1,
                                ffn_dim=64, max_len=128),
    "mistral-60m": ModelConfig(vocab_buckets=32768, dim=512, heads=8, layers=12,
                               ffn_dim=2048, max_len=512),
}


class SequenceClassifier(nn.Module):
    """Embedding + transformer encoder + masked mean pool + linear head."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.embed = nn.Embedding(config.vocab_buckets, config.dim, padding_idx=PAD_ID)
        self.positions = nn.Embedding(config.max_len, config.dim)
        layer = nn.TransformerEncoderLayer(
            d_model=config.dim, nhead=config.heads, dim_feedforward=config.ffn_dim,
            dropout=0.0, batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=config.layers,
                                             enable_nested_tensor=False)
        self.head = nn.Linear(config.dim, 1)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        mask = ids.eq(PAD_ID)
        pos = torch.arange(ids.shape[1], device=ids.device).unsqueeze(0)
        hidden = self.encoder(self.embed(ids) + self.positions(pos),
                              src_key_padding_mask=mask)
        keep = (~mask).unsqueeze(-1).float()
        pooled = (hidden * keep).sum(dim=1) / keep.sum(dim=1).clamp(min=1.0)
        return self.head(pooled).squeeze(-1)


def base_checkpoint_path(base_dir: Path, base_model_id: str) -> Path:
    return Path(base_dir) / f"{base_model_id}.pt"


def ensure_base_checkpoint(base_dir: Path, base_model_id: str) -> Path:
    """Materialize the base checkpoint if it is not already on disk."""
    if base_model_id not in BASE_MODELS:
        raise ValueError(
            f"unknown base_model_id {base_model_id!r}; known: {sorted(BASE_MODELS)}"
        )
    path = base_checkpoint_path(base_dir, base_model_id)
    if path.exists():
        return path
    config = BASE_MODELS[base_model_id]
    seed = int.from_bytes(base_model_id.encode("utf-8")[:4].ljust(4, b"\0"), "big")
    torch.manual_seed(seed)
    model = SequenceClassifier(config)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({"base_model_id": base_model_id, "config": asdict(config),
                "state_dict": model.state_dict()}, path)
    return path


def load_base(base_dir: Path, base_model_id: str) -> SequenceClassifier:
    """Fresh model with the base weights; called once per trial."""
    payload = torch.load(ensure_base_checkpoint(base_dir, base_model_id),
                         map_location="cpu", weights_only=True)
    config = ModelConfig(**payload["config"])
    model = SequenceClassifier(config)
    model.load_state_dict(payload["state_dict"])
    return model
