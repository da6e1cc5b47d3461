"""Directional labels from adjusted-close price series.

A filing gets one binary label per horizon: 1 (buy) when the first
tradable price after the filing date is strictly below the price at the
horizon date, else 0 (sell; ties are sells). Horizon dates are calendar
months after the filing date with the day-of-month clamped to month end,
then rolled forward to the next trading day within a small slip window.
"""

from __future__ import annotations

import csv
from bisect import bisect_left
from calendar import monthrange
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .errors import InvalidPriceError, UnresolvableDateError

HORIZONS_MONTHS = (3, 6, 9, 12)
DEFAULT_MAX_SLIP_DAYS = 5


@dataclass
class PriceSeries:
    """Ordered adjusted-close observations for one ticker."""

    ticker: str
    dates: list[date]
    closes: list[float]

    def __post_init__(self):
        if len(self.dates) != len(self.closes):
            raise InvalidPriceError(f"{self.ticker}: dates/closes length mismatch")
        for i, price in enumerate(self.closes):
            if not price > 0:
                raise InvalidPriceError(
                    f"{self.ticker}: non-positive price {price} at {self.dates[i]}"
                )
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise InvalidPriceError(f"{self.ticker}: dates not strictly increasing at {b}")

    def __len__(self) -> int:
        return len(self.dates)


def load_price_csv(path, ticker: str | None = None) -> PriceSeries:
    """Load a per-ticker price CSV with header ``date,adjusted_close``.

    Raw (unadjusted) close columns are rejected: labels are only
    meaningful on split/dividend-adjusted prices.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        names = tuple(reader.fieldnames or ())
        if names != ("date", "adjusted_close"):
            raise InvalidPriceError(
                f"{path}: expected header date,adjusted_close, got {','.join(names)}"
            )
        dates, closes = [], []
        for row in reader:
            dates.append(date.fromisoformat(row["date"]))
            closes.append(float(row["adjusted_close"]))
    return PriceSeries(ticker=ticker or path.stem, dates=dates, closes=closes)


@dataclass(frozen=True)
class DirectionLabel:
    """One horizon's label plus the prices that produced it."""

    horizon: int
    value: int  # 0 sell, 1 buy
    base_price: float
    base_date: date
    target_price: float
    target_date: date


@dataclass
class FilingLabels:
    """Labels for one filing; horizons that could not resolve carry a reason."""

    labels: list[DirectionLabel]
    skipped: dict[int, str] = field(default_factory=dict)

    def as_map(self) -> dict[int, int]:
        return {lb.horizon: lb.value for lb in self.labels}


def resolve_price_on_or_after(
    series: PriceSeries, when: date, max_slip_days: int = DEFAULT_MAX_SLIP_DAYS
) -> tuple[date, float]:
    """First observation on or after ``when`` within the slip window."""
    if not len(series):
        raise UnresolvableDateError(f"{series.ticker}: empty series")
    i = bisect_left(series.dates, when)
    if i == len(series.dates):
        raise UnresolvableDateError(f"{series.ticker}: no observation on/after {when}")
    found = series.dates[i]
    if (found - when).days > max_slip_days:
        raise UnresolvableDateError(
            f"{series.ticker}: nearest observation {found} exceeds slip window from {when}"
        )
    return found, series.closes[i]


def compute_direction(base_price: float, target_price: float) -> int:
    """0 when base >= target (ties are sells), 1 on a strict rise."""
    if not (base_price > 0 and target_price > 0):
        raise InvalidPriceError(
            f"prices must be positive, got base={base_price} target={target_price}"
        )
    return 0 if base_price >= target_price else 1


def add_months(d: date, months: int) -> date:
    """Calendar-month advance with day-of-month clamped to month end."""
    month_index = d.month - 1 + months
    year = d.year + month_index // 12
    month = month_index % 12 + 1
    return date(year, month, min(d.day, monthrange(year, month)[1]))


def validate_horizons(horizons) -> tuple[int, ...]:
    out = tuple(int(h) for h in horizons)
    bad = [h for h in out if h not in HORIZONS_MONTHS]
    if bad:
        raise InvalidPriceError(f"unsupported horizons {bad}; allowed {HORIZONS_MONTHS}")
    return out


def label_filing(
    series: PriceSeries,
    filing_date: date,
    horizons=HORIZONS_MONTHS,
    max_slip_days: int = DEFAULT_MAX_SLIP_DAYS,
) -> FilingLabels:
    """Label one filing at each horizon.

    The base price is the first trading close on or after the filing
    date (the report only becomes actionable once filed). A horizon
    whose target date cannot resolve within the slip window is skipped
    with a recorded reason rather than failing the filing; an
    unresolvable base raises UnresolvableDateError and excludes the
    filing entirely.
    """
    horizons = validate_horizons(horizons)
    base_date, base_price = resolve_price_on_or_after(series, filing_date, max_slip_days)
    result = FilingLabels(labels=[])
    for months in horizons:
        target = add_months(filing_date, months)
        try:
            target_date, target_price = resolve_price_on_or_after(
                series, target, max_slip_days
            )
        except UnresolvableDateError as exc:
            result.skipped[months] = str(exc)
            continue
        result.labels.append(
            DirectionLabel(
                horizon=months,
                value=compute_direction(base_price, target_price),
                base_price=base_price,
                base_date=base_date,
                target_price=target_price,
                target_date=target_date,
            )
        )
    return result
