"""Job description for one (fold, trial, horizon) fine-tune cell."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class FinetuneJob:
    dataset_path: Path
    fold: int
    horizon: int
    trial: int = 0
    base_model_id: str = "mistral-60m"
    epochs: int = 3
    learning_rate: float = 1e-3
    max_sequence_tokens: int = 256
    batch_size: int = 8
    seed: int = 0
    fold_plan_path: Path | None = None  # defaults next to the dataset
    base_dir: Path = field(default_factory=lambda: Path("base_models"))
    out_dir: Path = field(default_factory=lambda: Path("checkpoints"))

    def __post_init__(self):
        self.dataset_path = Path(self.dataset_path)
        if self.fold_plan_path is None:
            self.fold_plan_path = self.dataset_path.with_name("fold_plan.json")
        self.fold_plan_path = Path(self.fold_plan_path)
        self.base_dir = Path(self.base_dir)
        self.out_dir = Path(self.out_dir)

    def checkpoint_path(self) -> Path:
        return self.out_dir / f"checkpoint_f{self.fold}_t{self.trial}_h{self.horizon}.pt"

    def log_path(self) -> Path:
        return self.out_dir / f"training_log_f{self.fold}_t{self.trial}_h{self.horizon}.json"

    def predictions_path(self) -> Path:
        return self.out_dir / f"predictions_f{self.fold}_t{self.trial}_h{self.horizon}.jsonl"
