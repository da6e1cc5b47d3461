"""Fine-tune adapter: small-transformer classification over tenk files.

The adapter talks to the experiment pipeline exclusively through files:
it reads ``dataset.jsonl`` and the fold plan JSON, fine-tunes a compact
transformer classifier for one (fold, trial, horizon) cell, and writes
``predictions_f{fold}_t{trial}_h{horizon}.jsonl`` in the prediction
exchange format. One job runs per process; the orchestrator fans the
grid out as independent processes.
"""

from .data import DatasetSchemaError, read_dataset_rows, read_fold_plan, split_rows
from .jobs import FinetuneJob
from .train import FinetuneError, emit_predictions, finetune

__version__ = "0.1.0"

__all__ = [
    "DatasetSchemaError", "FinetuneError", "FinetuneJob",
    "emit_predictions", "finetune",
    "read_dataset_rows", "read_fold_plan", "split_rows",
]
