"""Write fixture dataset/fold-plan files in the documented exchange formats."""

from __future__ import annotations

import hashlib
import json
import random
from pathlib import Path

BUY_WORDS = "alpha alpha alpha growth surge strong expanding record".split()
SELL_WORDS = "omega omega omega decline slump weak shrinking impaired".split()
FILLER = ("the company reported results for the period and management "
          "discussed conditions in its markets").split()


def example_id(cik: str, year: int) -> str:
    return hashlib.sha256(f"{cik}:{year}".encode()).hexdigest()[:16]


def write_fixture_dataset(root: Path, n_companies: int = 20,
                          years=(2019, 2020), horizons=(3, 6, 9, 12),
                          memorizable: bool = False, seed: int = 5):
    """dataset.jsonl + fold_plan.json under ``root``.

    With ``memorizable`` the text deterministically encodes every label
    (companies 0..9 are buys, 10..19 sells at all horizons), so a
    classifier that learns the marker words scores perfectly. Otherwise
    labels follow a seeded coin with loosely correlated text.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    rows, assignment = [], {}
    for i in range(n_companies):
        cik = str(9000 + i).zfill(10)
        assignment[cik] = i % 10
        for year in years:
            if memorizable:
                label = 1 if i < 10 else 0
                labels = {str(h): label for h in horizons}
                bank = BUY_WORDS if label else SELL_WORDS
                words = bank * 3 + FILLER + [f"tag{cik[-3:]}{year}"]
            else:
                labels = {str(h): rng.randint(0, 1) for h in horizons}
                lean = BUY_WORDS if labels["9"] else SELL_WORDS
                words = FILLER * 2 + rng.choices(lean, k=6) + [f"tag{cik[-3:]}{year}"]
            rows.append({
                "example_id": example_id(cik, year),
                "cik": cik,
                "ticker": f"FT{i:02d}",
                "sector": "Information Technology",
                "filing_date": f"{year + 1}-02-14",
                "text": " ".join(words),
                "labels": labels,
            })
    dataset = root / "dataset.jsonl"
    dataset.write_text("\n".join(json.dumps(r, sort_keys=True) for r in rows) + "\n")
    plan = root / "fold_plan.json"
    plan.write_text(json.dumps({"seed": seed, "fold_count": 10,
                                "assignment": assignment}, indent=2) + "\n")
    return dataset, plan
