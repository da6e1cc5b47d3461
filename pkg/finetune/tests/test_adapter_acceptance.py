"""Adapter conformance acceptance: the primary pipeline must accept and
score this adapter's output end to end.

Run with ``pytest -s`` to see the per-criterion PASS lines.
"""

import json

import pytest

from finetune_adapter import FinetuneJob, emit_predictions, finetune
from finetune_adapter.data import read_dataset_rows, read_fold_plan, split_rows
from fixture_data import write_fixture_dataset

# The primary package is imported only to PROVE conformance with its
# loader and evaluator; the adapter's runtime never touches it.
from tenk.metrics import class_metrics, confusion, macro_f1
from tenk.model import load_external_predictions


def test_criterion_10_smoke_conformance_and_memorizable_toy(tmp_path):
    # --- smoke: fixture dataset, one epoch, tiny base model -------------
    smoke_dir = tmp_path / "smoke"
    dataset, plan_path = write_fixture_dataset(smoke_dir, memorizable=False)
    job = FinetuneJob(
        dataset_path=dataset, fold=0, horizon=9, trial=0, seed=11,
        base_model_id="tiny-base-v1", epochs=1, learning_rate=2e-3,
        max_sequence_tokens=32, base_dir=smoke_dir / "base",
        out_dir=smoke_dir / "ckpt",
    )
    checkpoint = finetune(job)
    assert checkpoint.exists()
    assert job.log_path().exists()

    pred_path = emit_predictions(checkpoint, dataset, fold=0, horizon=9,
                                 out_path=job.predictions_path())
    assert pred_path.name == "predictions_f0_t0_h9.jsonl"

    rows = read_dataset_rows(dataset)
    plan = read_fold_plan(plan_path)
    _, _, test_rows = split_rows(rows, plan, fold=0)
    expected_ids = {r["example_id"] for r in test_rows if 9 in r["labels"]}

    # the primary loader must accept the file, with full test coverage
    predictions = load_external_predictions(
        pred_path, known_example_ids={r["example_id"] for r in rows}
    )
    assert {p.example_id for p in predictions} == expected_ids
    assert len(predictions) == len(expected_ids)
    print(f"\nPASS criterion 10a: smoke prediction file accepted by the primary "
          f"loader with full test-fold coverage ({len(predictions)} examples)")

    # --- memorizable toy: the primary evaluator reports F1 = 1.0 --------
    toy_dir = tmp_path / "toy"
    toy_dataset, toy_plan_path = write_fixture_dataset(toy_dir, memorizable=True)
    scores = []
    for fold in (0, 5):
        toy_job = FinetuneJob(
            dataset_path=toy_dataset, fold=fold, horizon=9, trial=0, seed=21,
            base_model_id="tiny-base-v1", epochs=12, learning_rate=3e-3,
            max_sequence_tokens=32, base_dir=toy_dir / "base",
            out_dir=toy_dir / "ckpt",
        )
        toy_pred = emit_predictions(finetune(toy_job), toy_dataset, fold=fold,
                                    horizon=9, out_path=toy_job.predictions_path())
        toy_rows = read_dataset_rows(toy_dataset)
        predictions = load_external_predictions(
            toy_pred, known_example_ids={r["example_id"] for r in toy_rows}
        )
        labels_by_id = {r["example_id"]: r["labels"] for r in toy_rows}
        sell, buy = class_metrics(confusion(predictions, labels_by_id, 9))
        scores.append((fold, sell.f1, buy.f1, macro_f1(sell, buy)))
        assert sell.f1 == 1.0 and buy.f1 == 1.0, scores[-1]
    print("PASS criterion 10b: memorizable toy scored F1 = 1.0 for both classes "
          f"by the primary evaluator on folds {[s[0] for s in scores]}")


def test_full_grid_feeds_primary_evaluate_stage(tmp_path):
    """Adapter prediction files drive the primary evaluate/report stages."""
    from tenk.pipeline import load_config, run_stage
    from tenk.synthetic import build_corpus

    paths = build_corpus(tmp_path / "corpus", seed=7)
    config = load_config(paths.config_path)
    for stage in ("parse", "summarize", "label", "dataset"):
        run_stage(stage, config)

    adapter_out = tmp_path / "adapter_predictions"
    for fold in range(10):
        for trial in range(config.trials):
            job = FinetuneJob(
                dataset_path=config.dataset_path, fold=fold, horizon=9,
                trial=trial, seed=1000 + fold * 10 + trial,
                base_model_id="tiny-base-v1", epochs=1, learning_rate=2e-3,
                max_sequence_tokens=64, base_dir=tmp_path / "base",
                out_dir=adapter_out,
            )
            pred_path = emit_predictions(finetune(job), config.dataset_path,
                                         fold=fold, horizon=9,
                                         out_path=job.predictions_path())
            assert pred_path.parent == adapter_out

    result = run_stage("evaluate", config, horizon=9, predictions=str(adapter_out))
    assert result.status == "ok"
    run_stage("report", config)
    aggregate = (config.reports_dir / "aggregate.csv").read_text()
    assert aggregate.splitlines()[0] == "horizon,class,f1,precision,recall,support"
    assert aggregate.count("\n9,") + aggregate.count("\n") >= 2
    print("\nPASS: adapter grid scored end to end by the primary evaluate stage")


def test_predictions_round_trip_primary_loader_without_rejection(tmp_path):
    dataset, _ = write_fixture_dataset(tmp_path, memorizable=True)
    job = FinetuneJob(
        dataset_path=dataset, fold=3, horizon=6, trial=2, seed=9,
        base_model_id="tiny-base-v1", epochs=1, learning_rate=2e-3,
        max_sequence_tokens=32, base_dir=tmp_path / "base",
        out_dir=tmp_path / "ckpt",
    )
    pred_path = emit_predictions(finetune(job), dataset, fold=3, horizon=6,
                                 out_path=job.predictions_path())
    loaded = load_external_predictions(pred_path)
    for line, pred in zip(pred_path.read_text().splitlines(), loaded):
        obj = json.loads(line)
        assert obj["decision"] == pred.decision
        assert 0.0 <= obj["score"] <= 1.0
