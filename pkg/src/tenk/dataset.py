"""Assemble labeled examples, assign leakage-free folds, balance classes.

Folds are assigned at the company level so the same issuer never appears
in both training and test data; text across a company's consecutive
filings is often near-identical, which would otherwise leak. For each
fold under test, the next fold (mod 10) is validation and the remaining
eight train, which realizes the 80:10:10 split and the 10-fold rotation
at the same time.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping

from .edgar import CompanyRecord
from .errors import DataError, DegenerateTrainingError, InfeasiblePlanError
from .summarize import Summary

DEFAULT_FOLD_COUNT = 10


def example_id_for(cik: str, fiscal_year: int) -> str:
    """Stable content id so input reordering can never relabel examples."""
    return hashlib.sha256(f"{cik}:{fiscal_year}".encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class LabeledExample:
    example_id: str
    cik: str
    ticker: str
    sector: str
    filing_date: date
    text: str
    labels: dict[int, int] = field(default_factory=dict)  # horizon -> 0/1


@dataclass
class LabelRecord:
    """Labeling output for one (cik, fiscal_year), pre-join."""

    cik: str
    fiscal_year: int
    filing_date: date
    labels: dict[int, int]


@dataclass
class FoldPlan:
    seed: int
    assignment: dict[str, int]  # cik -> fold index
    fold_count: int = DEFAULT_FOLD_COUNT

    def fold_of(self, cik: str) -> int:
        if cik not in self.assignment:
            raise DataError(f"cik {cik} is not in the fold plan")
        return self.assignment[cik]


@dataclass
class SplitView:
    fold_under_test: int
    train: list[LabeledExample]
    validation: list[LabeledExample]
    test: list[LabeledExample]


def build_examples(
    summaries: Iterable[Summary],
    label_records: Mapping[tuple[str, int], LabelRecord],
    universe: Iterable[CompanyRecord],
) -> tuple[list[LabeledExample], Counter]:
    """Inner-join summaries with labels; account for every drop.

    Returns examples sorted by (cik, fiscal_year) plus a reason -> count
    table covering summaries without labels, label records without
    summaries, companies missing from the universe, and filings where no
    horizon resolved.
    """
    by_cik = {c.cik: c for c in universe}
    drops: Counter = Counter()
    examples: list[LabeledExample] = []
    joined_keys = set()
    for summary in summaries:
        key = (summary.cik, summary.fiscal_year)
        record = label_records.get(key)
        if record is None:
            drops["unlabelable"] += 1
            continue
        joined_keys.add(key)
        company = by_cik.get(summary.cik)
        if company is None:
            drops["unknown_company"] += 1
            continue
        if not record.labels:
            drops["no_horizon_resolved"] += 1
            continue
        if not summary.text:
            drops["empty_summary"] += 1
            continue
        examples.append(
            LabeledExample(
                example_id=example_id_for(summary.cik, summary.fiscal_year),
                cik=summary.cik,
                ticker=company.ticker,
                sector=company.sector,
                filing_date=record.filing_date,
                text=summary.text,
                labels=dict(sorted(record.labels.items())),
            )
        )
    drops["no_summary"] = len(set(label_records) - joined_keys)
    if drops["no_summary"] == 0:
        del drops["no_summary"]
    examples.sort(key=lambda e: (e.cik, e.filing_date))
    return examples, drops


def make_fold_plan(universe, seed: int, fold_count: int = DEFAULT_FOLD_COUNT) -> FoldPlan:
    """Deterministic seeded shuffle, round-robin into ``fold_count`` folds.

    Fold sizes differ by at most one. Accepts CompanyRecords or bare cik
    strings.
    """
    ciks = sorted(c.cik if isinstance(c, CompanyRecord) else str(c) for c in universe)
    if len(set(ciks)) != len(ciks):
        raise DataError("duplicate ciks in universe")
    if len(ciks) < fold_count:
        raise InfeasiblePlanError(
            f"need at least {fold_count} companies for {fold_count} folds, got {len(ciks)}"
        )
    rng = random.Random(seed)
    rng.shuffle(ciks)
    return FoldPlan(
        seed=seed,
        assignment={cik: i % fold_count for i, cik in enumerate(ciks)},
        fold_count=fold_count,
    )


def split_for_fold(plan: FoldPlan, fold: int, examples: Iterable[LabeledExample]) -> SplitView:
    """Test on ``fold``, validate on the next fold (mod count), train on the rest."""
    if not 0 <= fold < plan.fold_count:
        raise DataError(f"fold must be in 0..{plan.fold_count - 1}, got {fold}")
    val_fold = (fold + 1) % plan.fold_count
    train, validation, test = [], [], []
    for ex in examples:
        f = plan.fold_of(ex.cik)
        if f == fold:
            test.append(ex)
        elif f == val_fold:
            validation.append(ex)
        else:
            train.append(ex)
    return SplitView(fold_under_test=fold, train=train, validation=validation, test=test)


def oversample_minority(
    train: Iterable[LabeledExample], horizon: int, seed: int
) -> list[LabeledExample]:
    """Balance the training split at one horizon by random duplication.

    Examples lacking a label at the horizon are dropped (they cannot
    train this head). Minority examples are duplicated uniformly at
    random with replacement until the class counts match; every original
    is retained and duplicates are the originals themselves, never
    synthetic text. The output order is a seed-deterministic shuffle.
    """
    usable = [e for e in train if horizon in e.labels]
    sells = [e for e in usable if e.labels[horizon] == 0]
    buys = [e for e in usable if e.labels[horizon] == 1]
    if not sells or not buys:
        raise DegenerateTrainingError(
            f"horizon {horizon}: training split has a single class "
            f"(sell={len(sells)}, buy={len(buys)})"
        )
    minority, majority = (sells, buys) if len(sells) < len(buys) else (buys, sells)
    rng = random.Random(seed)
    duplicates = rng.choices(minority, k=len(majority) - len(minority))
    out = usable + duplicates
    rng.shuffle(out)
    return out


# ---------------------------------------------------------------------------
# File formats: dataset.jsonl and the fold plan JSON.

def example_to_dict(ex: LabeledExample) -> dict:
    return {
        "example_id": ex.example_id,
        "cik": ex.cik,
        "ticker": ex.ticker,
        "sector": ex.sector,
        "filing_date": ex.filing_date.isoformat(),
        "text": ex.text,
        "labels": {str(h): v for h, v in sorted(ex.labels.items())},
    }


def example_from_dict(obj: dict) -> LabeledExample:
    return LabeledExample(
        example_id=obj["example_id"],
        cik=obj["cik"],
        ticker=obj["ticker"],
        sector=obj["sector"],
        filing_date=date.fromisoformat(obj["filing_date"]),
        text=obj["text"],
        labels={int(h): int(v) for h, v in obj["labels"].items()},
    )


def write_dataset(examples: Iterable[LabeledExample], path) -> None:
    lines = [json.dumps(example_to_dict(e), sort_keys=True) for e in examples]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_dataset(path) -> list[LabeledExample]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(example_from_dict(json.loads(line)))
    return out


def write_fold_plan(plan: FoldPlan, path) -> None:
    payload = {
        "seed": plan.seed,
        "fold_count": plan.fold_count,
        "assignment": dict(sorted(plan.assignment.items())),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_fold_plan(path) -> FoldPlan:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return FoldPlan(
        seed=int(obj["seed"]),
        assignment={k: int(v) for k, v in obj["assignment"].items()},
        fold_count=int(obj.get("fold_count", DEFAULT_FOLD_COUNT)),
    )
