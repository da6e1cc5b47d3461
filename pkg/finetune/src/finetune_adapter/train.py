"""Fine-tune one grid cell and emit exchange-format predictions."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .data import (
    PAD_ID,
    DatasetSchemaError,
    oversample,
    read_dataset_rows,
    read_fold_plan,
    split_rows,
    token_ids,
)
from .jobs import FinetuneJob
from .model import ModelConfig, SequenceClassifier, load_base

logger = logging.getLogger(__name__)


class FinetuneError(RuntimeError):
    """Training aborted (divergence, leakage, coverage gap)."""


def _encode_batch(rows, config: ModelConfig, max_tokens: int) -> torch.Tensor:
    seqs = [token_ids(r["text"], config.vocab_buckets, min(max_tokens, config.max_len))
            for r in rows]
    width = max(1, max(len(s) for s in seqs))
    out = torch.full((len(seqs), width), PAD_ID, dtype=torch.long)
    for i, seq in enumerate(seqs):
        out[i, :len(seq)] = torch.tensor(seq, dtype=torch.long)
    return out


def _batches(rows, batch_size, rng: np.random.Generator | None):
    order = np.arange(len(rows))
    if rng is not None:
        rng.shuffle(order)
    for start in range(0, len(rows), batch_size):
        yield [rows[i] for i in order[start:start + batch_size]]


def _mean_loss(model, rows, horizon, config, max_tokens, batch_size) -> float:
    loss_fn = nn.BCEWithLogitsLoss(reduction="sum")
    total, count = 0.0, 0
    with torch.no_grad():
        for batch in _batches(rows, batch_size, rng=None):
            ids = _encode_batch(batch, config, max_tokens)
            y = torch.tensor([float(r["labels"][horizon]) for r in batch])
            total += float(loss_fn(model(ids), y))
            count += len(batch)
    return total / max(count, 1)


def finetune(job: FinetuneJob) -> Path:
    """Fine-tune the classification head model for one cell.

    The dataset is schema-validated before any training. Weights reload
    from the pre-trained base checkpoint at the start of every trial.
    Training batches are audited so no test-fold example id ever enters
    one; a violation aborts the job. Per-epoch train and validation
    losses are persisted next to the checkpoint, and a non-finite loss
    aborts with the log already written.
    """
    rows = read_dataset_rows(job.dataset_path)
    plan = read_fold_plan(job.fold_plan_path)
    train_rows, val_rows, test_rows = split_rows(rows, plan, job.fold)
    test_ids = {r["example_id"] for r in test_rows if job.horizon in r["labels"]}

    torch.manual_seed(job.seed)
    torch.use_deterministic_algorithms(True)
    torch.set_num_threads(1)

    balanced = oversample(train_rows, job.horizon, seed=job.seed)
    val_usable = [r for r in val_rows if job.horizon in r["labels"]]

    model = load_base(job.base_dir, job.base_model_id)  # fresh weights every trial
    config = model.config
    optimizer = torch.optim.Adam(model.parameters(), lr=job.learning_rate)
    loss_fn = nn.BCEWithLogitsLoss()
    shuffler = np.random.default_rng(job.seed)

    log = {"job": {k: str(v) if isinstance(v, Path) else v
                   for k, v in asdict(job).items()},
           "train_examples": len(balanced), "validation_examples": len(val_usable),
           "test_examples": len(test_ids), "epochs": []}
    job.out_dir.mkdir(parents=True, exist_ok=True)

    trained_ids: set[str] = set()
    for epoch in range(job.epochs):
        model.train()
        epoch_loss, seen = 0.0, 0
        for batch in _batches(balanced, job.batch_size, shuffler):
            trained_ids.update(r["example_id"] for r in batch)
            ids = _encode_batch(batch, config, job.max_sequence_tokens)
            y = torch.tensor([float(r["labels"][job.horizon]) for r in batch])
            optimizer.zero_grad()
            loss = loss_fn(model(ids), y)
            loss_value = float(loss.detach())
            if not math.isfinite(loss_value):
                log["aborted"] = f"non-finite loss at epoch {epoch}"
                job.log_path().write_text(json.dumps(log, indent=2) + "\n")
                raise FinetuneError(f"non-finite loss at epoch {epoch}")
            loss.backward()
            optimizer.step()
            epoch_loss += loss_value * len(batch)
            seen += len(batch)
        model.eval()
        entry = {"epoch": epoch, "train_loss": epoch_loss / max(seen, 1)}
        if val_usable:
            entry["validation_loss"] = _mean_loss(
                model, val_usable, job.horizon, config,
                job.max_sequence_tokens, job.batch_size,
            )
        log["epochs"].append(entry)
        logger.info("fold %d trial %d h%d epoch %d: train loss %.4f",
                    job.fold, job.trial, job.horizon, epoch, entry["train_loss"])

    leaked = trained_ids & test_ids
    if leaked:
        raise FinetuneError(f"test-fold examples leaked into training: {sorted(leaked)[:5]}")

    checkpoint = job.checkpoint_path()
    torch.save({
        "base_model_id": job.base_model_id,
        "config": asdict(config),
        "state_dict": model.state_dict(),
        "fold": job.fold,
        "trial": job.trial,
        "horizon": job.horizon,
        "seed": job.seed,
        "max_sequence_tokens": job.max_sequence_tokens,
        "test_example_ids": sorted(test_ids),
    }, checkpoint)
    job.log_path().write_text(json.dumps(log, indent=2) + "\n")
    return checkpoint


def emit_predictions(checkpoint_path, dataset_path, fold: int, horizon: int,
                     out_path=None) -> Path:
    """Score the test fold and write the exchange-format prediction file.

    One line per test-fold example recorded at training time; scores are
    class-1 probabilities and the decision is score >= 0.5. Any example
    the checkpoint expects but the dataset no longer provides is a
    coverage error listing the ids.
    """
    payload = torch.load(Path(checkpoint_path), map_location="cpu", weights_only=True)
    if payload["fold"] != fold or payload["horizon"] != horizon:
        raise FinetuneError(
            f"checkpoint is for fold {payload['fold']} horizon {payload['horizon']}, "
            f"asked for fold {fold} horizon {horizon}"
        )
    config = ModelConfig(**payload["config"])
    model = SequenceClassifier(config)
    model.load_state_dict(payload["state_dict"])
    model.eval()

    rows = read_dataset_rows(dataset_path)
    expected = set(payload["test_example_ids"])
    scoreable = [r for r in rows if r["example_id"] in expected]
    missing = expected - {r["example_id"] for r in scoreable}
    if missing:
        raise FinetuneError(f"coverage gap, test examples absent from dataset: "
                            f"{sorted(missing)}")

    scoreable.sort(key=lambda r: r["example_id"])
    lines = []
    with torch.no_grad():
        for start in range(0, len(scoreable), 16):
            batch = scoreable[start:start + 16]
            ids = _encode_batch(batch, config, payload["max_sequence_tokens"])
            scores = torch.sigmoid(model(ids))
            for row, score in zip(batch, scores):
                s = float(score)
                lines.append(json.dumps({
                    "example_id": row["example_id"],
                    "horizon": horizon,
                    "decision": 1 if s >= 0.5 else 0,
                    "score": s,
                }))
    out_path = Path(out_path) if out_path else (
        Path(checkpoint_path).parent
        / f"predictions_f{fold}_t{payload['trial']}_h{horizon}.jsonl"
    )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return out_path


def run_job(job: FinetuneJob) -> Path:
    """finetune + emit in one call; returns the prediction file path."""
    checkpoint = finetune(job)
    return emit_predictions(checkpoint, job.dataset_path, job.fold, job.horizon,
                            out_path=job.predictions_path())
