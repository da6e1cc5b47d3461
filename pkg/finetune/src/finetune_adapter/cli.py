"""CLI: one fine-tune job per invocation, as the orchestrator launches them."""

from __future__ import annotations

import argparse
import logging
import sys

from .data import DatasetSchemaError
from .jobs import FinetuneJob
from .model import BASE_MODELS, ensure_base_checkpoint
from .train import FinetuneError, run_job


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finetune-adapter",
        description="fine-tune a small transformer on tenk dataset files",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    base = sub.add_parser("make-base", help="materialize a base checkpoint")
    base.add_argument("--base-model-id", default="mistral-60m", choices=sorted(BASE_MODELS))
    base.add_argument("--base-dir", default="base_models")

    run = sub.add_parser("run", help="fine-tune one cell and emit predictions")
    run.add_argument("--dataset", required=True, help="dataset.jsonl path")
    run.add_argument("--fold-plan", default=None, help="fold plan JSON (default: sibling)")
    run.add_argument("--fold", type=int, required=True)
    run.add_argument("--horizon", type=int, required=True)
    run.add_argument("--trial", type=int, default=0)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--epochs", type=int, default=3)
    run.add_argument("--learning-rate", type=float, default=1e-3)
    run.add_argument("--max-sequence-tokens", type=int, default=256)
    run.add_argument("--base-model-id", default="mistral-60m", choices=sorted(BASE_MODELS))
    run.add_argument("--base-dir", default="base_models")
    run.add_argument("--out-dir", default="checkpoints")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "make-base":
            path = ensure_base_checkpoint(args.base_dir, args.base_model_id)
            print(f"base checkpoint ready: {path}")
            return 0
        job = FinetuneJob(
            dataset_path=args.dataset,
            fold_plan_path=args.fold_plan,
            fold=args.fold,
            horizon=args.horizon,
            trial=args.trial,
            seed=args.seed,
            epochs=args.epochs,
            learning_rate=args.learning_rate,
            max_sequence_tokens=args.max_sequence_tokens,
            base_model_id=args.base_model_id,
            base_dir=args.base_dir,
            out_dir=args.out_dir,
        )
        predictions = run_job(job)
        print(f"predictions written: {predictions}")
        return 0
    except DatasetSchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 4
    except FinetuneError as exc:
        print(f"finetune error: {exc}", file=sys.stderr)
        return 4


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
