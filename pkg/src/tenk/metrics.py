"""Per-class metrics, fold/trial aggregation, fair-coin baseline, sectors.

Conventions used everywhere: buy (label 1) is the positive class for the
buy row and sell (label 0) is the positive class for the sell row; any
zero-denominator precision, recall, or F1 is defined as 0 (small sector
cells do hit this); macro F1 is the unweighted mean of the two class F1
values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import LabeledExample
from .edgar import GICS_SECTORS
from .errors import DataError
from .model import Prediction

LOW_SUPPORT_THRESHOLD = 10


@dataclass(frozen=True)
class ClassMetrics:
    class_id: int  # 0 sell, 1 buy
    f1: float
    precision: float
    recall: float
    support: int


@dataclass(frozen=True)
class BaselineComparison:
    class_id: int
    f1: float
    f1_rand: float
    delta: float


@dataclass(frozen=True)
class SectorCell:
    sector: str
    horizon: int
    f1_macro: float
    support: int
    low_support: bool


@dataclass(frozen=True)
class TrialResult:
    fold: int
    trial: int
    horizon: int
    sell: ClassMetrics
    buy: ClassMetrics


@dataclass(frozen=True)
class HorizonAggregate:
    horizon: int
    sell: ClassMetrics
    buy: ClassMetrics
    f1_macro: float


@dataclass
class HorizonReport:
    aggregate: HorizonAggregate
    baseline: list[BaselineComparison]
    sectors: list[SectorCell]


@dataclass
class MetricsReport:
    """Everything the report tables need, for all configured horizons."""

    per_horizon: dict[int, HorizonReport] = field(default_factory=dict)

    def horizons(self) -> list[int]:
        return sorted(self.per_horizon)


def confusion(
    predictions: Iterable[Prediction],
    labels: Mapping[str, Mapping[int, int]],
    horizon: int,
) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn) with buy = positive."""
    tp = fp = fn = tn = 0
    for pred in predictions:
        try:
            truth = labels[pred.example_id][horizon]
        except KeyError:
            raise DataError(
                f"no label at horizon {horizon} for example {pred.example_id}"
            ) from None
        if pred.decision == 1:
            if truth == 1:
                tp += 1
            else:
                fp += 1
        else:
            if truth == 1:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return f1, precision, recall


def class_metrics(conf: tuple[int, int, int, int]) -> tuple[ClassMetrics, ClassMetrics]:
    """Per-class metrics from one confusion matrix; returns (sell, buy)."""
    tp, fp, fn, tn = conf
    if tp + fp + fn + tn == 0:
        raise DataError("empty confusion matrix")
    buy_f1, buy_p, buy_r = _prf(tp, fp, fn)
    sell_f1, sell_p, sell_r = _prf(tn, fn, fp)
    return (
        ClassMetrics(class_id=0, f1=sell_f1, precision=sell_p, recall=sell_r, support=tn + fp),
        ClassMetrics(class_id=1, f1=buy_f1, precision=buy_p, recall=buy_r, support=tp + fn),
    )


def macro_f1(sell: ClassMetrics, buy: ClassMetrics) -> float:
    return (sell.f1 + buy.f1) / 2.0


def aggregate(trial_results: Sequence[TrialResult]) -> HorizonAggregate:
    """Unweighted mean over (fold, trial) cells; supports summed once per fold.

    Trials within a fold evaluate the same test set, so their supports
    must agree; the fold supports are then summed so the aggregate
    support is the total test population, not inflated by trial count.
    """
    if not trial_results:
        raise DataError("no trial results to aggregate")
    horizons = {r.horizon for r in trial_results}
    if len(horizons) != 1:
        raise DataError(f"aggregate expects a single horizon, got {sorted(horizons)}")
    (horizon,) = horizons

    fold_supports: dict[int, tuple[int, int]] = {}
    for r in trial_results:
        sup = (r.sell.support, r.buy.support)
        if fold_supports.setdefault(r.fold, sup) != sup:
            raise DataError(f"fold {r.fold}: supports differ across trials")
    sell_support = sum(s for s, _ in fold_supports.values())
    buy_support = sum(b for _, b in fold_supports.values())

    cells = sorted(trial_results, key=lambda r: (r.fold, r.trial))
    sell = ClassMetrics(
        class_id=0,
        f1=float(np.mean([r.sell.f1 for r in cells])),
        precision=float(np.mean([r.sell.precision for r in cells])),
        recall=float(np.mean([r.sell.recall for r in cells])),
        support=sell_support,
    )
    buy = ClassMetrics(
        class_id=1,
        f1=float(np.mean([r.buy.f1 for r in cells])),
        precision=float(np.mean([r.buy.precision for r in cells])),
        recall=float(np.mean([r.buy.recall for r in cells])),
        support=buy_support,
    )
    agg = HorizonAggregate(horizon=horizon, sell=sell, buy=buy, f1_macro=macro_f1(sell, buy))
    assert abs(agg.f1_macro - (sell.f1 + buy.f1) / 2.0) < 1e-12
    return agg


def random_baseline(
    labels: Sequence[int], horizon: int, trials: int = 2500, seed: int = 0
) -> tuple[ClassMetrics, ClassMetrics]:
    """Expected metrics of a fair-coin decision rule on these labels.

    Each trial draws an independent 0/1 decision per example, computes
    the per-class metrics, and the reported numbers are means over
    trials. The analytic limit for each class F1 is pi / (pi + 0.5)
    where pi is the class prevalence, since a fair coin has precision pi
    and recall one half; the Monte-Carlo mean sits within a fraction of
    a percent of that at the default trial count.
    """
    y = np.asarray(labels, dtype=np.uint8)
    if y.size == 0:
        raise DataError("labels must be non-empty")
    if trials < 1:
        raise DataError("trials must be positive")
    rng = np.random.default_rng(seed)
    decisions = rng.integers(0, 2, size=(trials, y.size), dtype=np.uint8)

    pos = y[None, :] == 1
    dec = decisions == 1
    tp = (dec & pos).sum(axis=1).astype(float)
    fp = (dec & ~pos).sum(axis=1).astype(float)
    fn = (~dec & pos).sum(axis=1).astype(float)
    tn = (~dec & ~pos).sum(axis=1).astype(float)

    def mean_prf(tp_, fp_, fn_) -> tuple[float, float, float]:
        pred = tp_ + fp_
        actual = tp_ + fn_
        precision = np.divide(tp_, pred, out=np.zeros_like(tp_), where=pred > 0)
        recall = np.divide(tp_, actual, out=np.zeros_like(tp_), where=actual > 0)
        pr = precision + recall
        f1 = np.divide(2 * precision * recall, pr, out=np.zeros_like(tp_), where=pr > 0)
        return float(f1.mean()), float(precision.mean()), float(recall.mean())

    buy_f1, buy_p, buy_r = mean_prf(tp, fp, fn)
    sell_f1, sell_p, sell_r = mean_prf(tn, fn, fp)
    n_buy = int(pos[0].sum())
    n_sell = int(y.size - n_buy)
    return (
        ClassMetrics(class_id=0, f1=sell_f1, precision=sell_p, recall=sell_r, support=n_sell),
        ClassMetrics(class_id=1, f1=buy_f1, precision=buy_p, recall=buy_r, support=n_buy),
    )


def delta_report(
    metrics: Sequence[ClassMetrics], rand_metrics: Sequence[ClassMetrics]
) -> list[BaselineComparison]:
    """Pair model metrics with their random counterparts; delta = f1 - f1_rand."""
    by_class = {m.class_id: m for m in rand_metrics}
    out = []
    for m in metrics:
        if m.class_id not in by_class:
            raise DataError(f"no random baseline for class {m.class_id}")
        rand = by_class[m.class_id]
        out.append(
            BaselineComparison(
                class_id=m.class_id, f1=m.f1, f1_rand=rand.f1, delta=m.f1 - rand.f1
            )
        )
    return out


def sector_crosssection(
    predictions: Iterable[Prediction],
    labels: Mapping[str, Mapping[int, int]],
    examples: Iterable[LabeledExample],
    horizon: int,
) -> list[SectorCell]:
    """Macro F1 per GICS sector on one prediction set.

    Cells with fewer than ten examples are flagged low-support; their
    numbers print all the same but deserve no conclusions.
    """
    sector_of: dict[str, str] = {}
    for ex in examples:
        if ex.sector not in GICS_SECTORS:
            raise DataError(f"unknown sector {ex.sector!r} for {ex.example_id}")
        sector_of[ex.example_id] = ex.sector
    grouped: dict[str, list[Prediction]] = {}
    for pred in predictions:
        if pred.example_id not in sector_of:
            raise DataError(f"prediction for unknown example {pred.example_id}")
        grouped.setdefault(sector_of[pred.example_id], []).append(pred)

    cells = []
    for sector in sorted(grouped):
        conf = confusion(grouped[sector], labels, horizon)
        sell, buy = class_metrics(conf)
        support = sum(conf)
        cells.append(
            SectorCell(
                sector=sector,
                horizon=horizon,
                f1_macro=macro_f1(sell, buy),
                support=support,
                low_support=support < LOW_SUPPORT_THRESHOLD,
            )
        )
    return cells


# ---------------------------------------------------------------------------
# MetricsReport (de)serialization for the metrics.json artifact.

def _cm_to_dict(m: ClassMetrics) -> dict:
    return {"class_id": m.class_id, "f1": m.f1, "precision": m.precision,
            "recall": m.recall, "support": m.support}


def _cm_from_dict(d: dict) -> ClassMetrics:
    return ClassMetrics(class_id=int(d["class_id"]), f1=float(d["f1"]),
                        precision=float(d["precision"]), recall=float(d["recall"]),
                        support=int(d["support"]))


def report_to_dict(report: MetricsReport) -> dict:
    out: dict = {"horizons": {}}
    for horizon, hr in sorted(report.per_horizon.items()):
        out["horizons"][str(horizon)] = {
            "aggregate": {
                "sell": _cm_to_dict(hr.aggregate.sell),
                "buy": _cm_to_dict(hr.aggregate.buy),
                "f1_macro": hr.aggregate.f1_macro,
            },
            "baseline": [
                {"class_id": b.class_id, "f1": b.f1, "f1_rand": b.f1_rand, "delta": b.delta}
                for b in hr.baseline
            ],
            "sectors": [
                {"sector": c.sector, "f1_macro": c.f1_macro, "support": c.support,
                 "low_support": c.low_support}
                for c in hr.sectors
            ],
        }
    return out


def report_from_dict(obj: dict) -> MetricsReport:
    report = MetricsReport()
    for horizon_str, hr in obj["horizons"].items():
        horizon = int(horizon_str)
        sell = _cm_from_dict(hr["aggregate"]["sell"])
        buy = _cm_from_dict(hr["aggregate"]["buy"])
        report.per_horizon[horizon] = HorizonReport(
            aggregate=HorizonAggregate(
                horizon=horizon, sell=sell, buy=buy,
                f1_macro=float(hr["aggregate"]["f1_macro"]),
            ),
            baseline=[
                BaselineComparison(
                    class_id=int(b["class_id"]), f1=float(b["f1"]),
                    f1_rand=float(b["f1_rand"]), delta=float(b["delta"]),
                )
                for b in hr["baseline"]
            ],
            sectors=[
                SectorCell(
                    sector=c["sector"], horizon=horizon, f1_macro=float(c["f1_macro"]),
                    support=int(c["support"]), low_support=bool(c["low_support"]),
                )
                for c in hr["sectors"]
            ],
        )
    return report
