#!/usr/bin/env python3
"""Company-level folds, oversampling, and the built-in baseline classifier.

Folds are assigned per company so near-identical filings from adjacent
years of the same issuer can never sit on both sides of a split. Each
fold under test uses the next fold for validation and trains on the
remaining eight: an 80:10:10 split and a 10-fold rotation at once.
"""

from collections import Counter
from pathlib import Path

from tenk.dataset import (
    make_fold_plan, oversample_minority, read_dataset, split_for_fold,
)
from tenk.model import Hyperparameters, predict, train_baseline
from tenk.pipeline import load_config, run_stage
from tenk.synthetic import build_corpus

WORKSPACE = Path("demo_workspace")
paths = build_corpus(WORKSPACE, seed=7)
config = load_config(paths.config_path)
for stage in ("parse", "summarize", "label", "dataset"):
    run_stage(stage, config)

examples = read_dataset(config.dataset_path)
print(f"dataset: {len(examples)} labeled examples")

# ---------------------------------------------------------------------------
# The fold plan: a seeded shuffle, round-robin over 10 folds.
plan = make_fold_plan(sorted({e.cik for e in examples}), seed=13)
sizes = Counter(plan.assignment.values())
print("fold sizes:", dict(sorted(sizes.items())))

split = split_for_fold(plan, fold=0, examples=examples)
print(f"fold 0 split: train={len(split.train)} val={len(split.validation)} "
      f"test={len(split.test)}")
overlap = {e.cik for e in split.train} & {e.cik for e in split.test}
print("companies shared between train and test:", overlap or "none")
print()

# ---------------------------------------------------------------------------
# Class balance differs per horizon, so oversampling is per horizon:
# minority examples are duplicated (never synthesized) to exact parity.
horizon = 6
before = Counter(e.labels[horizon] for e in split.train if horizon in e.labels)
balanced = oversample_minority(split.train, horizon, seed=99)
after = Counter(e.labels[horizon] for e in balanced)
print(f"horizon {horizon} class counts before {dict(before)} -> after {dict(after)}")
print()

# ---------------------------------------------------------------------------
# The built-in baseline: bag-of-words logistic classifier, trained from
# a seeded fresh start so repeated trials are honest re-trainings.
hyper = Hyperparameters(learning_rate=0.2, epochs=60, l2_penalty=1e-4,
                        min_token_count=5)
model = train_baseline(balanced, horizon, hyper, seed=4242)
print(f"trained baseline: vocabulary={len(model.vocabulary)} tokens")
test_scoreable = [e for e in split.test if horizon in e.labels]
preds = predict(model, test_scoreable, horizon)
hits = sum(p.decision == e.labels[horizon] for p, e in zip(preds, test_scoreable))
print(f"fold 0 test set: {hits}/{len(preds)} decisions correct")
print("three predictions:")
for p in preds[:3]:
    print(f"  {p.example_id}  score={p.score:.3f}  decision={p.decision}")
