#!/usr/bin/env python3
"""Direction labels from adjusted-close prices.

The rule: label 1 (buy) when the first tradable price after the filing
date is strictly below the price at the horizon date, else 0 (sell);
ties are sells. Horizon dates are calendar months ahead with the day
clamped to month end, rolled forward to the next trading day.
"""

from datetime import date

from tenk.labels import PriceSeries, add_months, compute_direction, label_filing
from tenk.synthetic import synth_price_rows, trading_days

# ---------------------------------------------------------------------------
# Ties are sells: a flat series labels 0 at every horizon.
days = trading_days(date(2019, 1, 1), date(2021, 6, 1))
flat = PriceSeries("FLAT", days, [100.0] * len(days))
result = label_filing(flat, date(2019, 6, 15))
print("flat series labels:", result.as_map(), "(ties resolve to sell)")
print()

# ---------------------------------------------------------------------------
# Month-end clamping: Nov 30 + 3 months lands on the clamped Feb 29.
print("add_months(2019-11-30, 3) =", add_months(date(2019, 11, 30), 3))
print("add_months(2018-11-30, 3) =", add_months(date(2018, 11, 30), 3))
print()

# ---------------------------------------------------------------------------
# Weekend roll-forward plus full provenance on a random-walk series.
rows = synth_price_rows("DEMO", date(2018, 6, 1), date(2021, 6, 1),
                        seed="labels-demo", drift=0.0004)
series = PriceSeries("DEMO", [d for d, _ in rows], [p for _, p in rows])
saturday = date(2019, 8, 17)
result = label_filing(series, saturday)
print(f"filing dated {saturday} (a Saturday):")
for lb in result.labels:
    print(f"  T={lb.horizon:>2}m  base {lb.base_date} @ {lb.base_price:8.2f}"
          f"  target {lb.target_date} @ {lb.target_price:8.2f}  -> {lb.value}")
print("note the base landed on the following Monday")
print()

# ---------------------------------------------------------------------------
# The label depends only on the price ratio, so rescaling the whole
# series (splits, unit changes) never flips a label.
scaled = PriceSeries("DEMO", list(series.dates), [p * 7.5 for p in series.closes])
assert label_filing(scaled, saturday).as_map() == result.as_map()
print("scale invariance: multiplying every price by 7.5 changed nothing")
print()

# ---------------------------------------------------------------------------
# The decision itself is one comparison.
for base, target in ((100.0, 100.0), (100.0, 100.01), (50.25, 49.99)):
    print(f"compute_direction({base}, {target}) = {compute_direction(base, target)}")
