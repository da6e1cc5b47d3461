#!/usr/bin/env python3
"""The whole experiment front to back, then the three report tables.

Stages communicate through files, so any step can be swapped out; an
external classifier joins by writing prediction files in the exchange
format (see the finetune/ package for one that does).
"""

from pathlib import Path

from tenk.pipeline import load_config, run_stage
from tenk.synthetic import build_corpus

WORKSPACE = Path("demo_workspace")
paths = build_corpus(WORKSPACE, seed=7)
config = load_config(paths.config_path)

for stage in ("parse", "summarize", "label", "dataset",
              "train", "predict", "evaluate", "report"):
    result = run_stage(stage, config)
    print(f"[{result.status:>10}] {stage:<9} ({result.elapsed_seconds:.2f}s)")
print()

# ---------------------------------------------------------------------------
# aggregate.csv mirrors the per-horizon, per-class metric table;
# baseline.csv adds the fair-coin comparison; sectors.csv is the
# sector x horizon macro-F1 grid with an unweighted AVG row.
for name in ("aggregate.csv", "baseline.csv", "sectors.csv"):
    print(f"--- {name} ---")
    print((config.reports_dir / name).read_text())

print("--- summary.txt ---")
print((config.reports_dir / "summary.txt").read_text())
