#!/usr/bin/env python3
"""The fair-coin baseline: Monte Carlo against the closed form.

A classifier only matters if it beats random selection. The baseline
here flips an independent fair coin per example, 2500 times, and reports
mean per-class F1. Because a fair coin has precision equal to the class
prevalence pi and recall one half, its expected F1 has the closed form
pi / (pi + 0.5); the simulation should sit on top of it.
"""

import time

from tenk.metrics import ClassMetrics, delta_report, random_baseline

# An imbalanced support profile per horizon (sell count, buy count),
# typical of multi-year buy-heavy samples.
SUPPORTS = {3: (1940, 2627), 6: (1649, 2918), 9: (2009, 2558), 12: (1930, 2637)}

print(f"{'T':>3} {'class':>5} {'prevalence':>10} {'closed form':>11} "
      f"{'monte carlo':>11} {'gap':>9}")
started = time.perf_counter()
rand_by_horizon = {}
for horizon, (n_sell, n_buy) in SUPPORTS.items():
    labels = [0] * n_sell + [1] * n_buy
    sell, buy = random_baseline(labels, horizon, trials=2500, seed=11)
    rand_by_horizon[horizon] = (sell, buy)
    total = n_sell + n_buy
    for name, cm, count in (("sell", sell, n_sell), ("buy", buy, n_buy)):
        pi = count / total
        analytic = pi / (pi + 0.5)
        print(f"{horizon:>3} {name:>5} {pi:>10.4f} {analytic:>11.4f} "
              f"{cm.f1:>11.4f} {abs(cm.f1 - analytic):>9.1e}")
print(f"({time.perf_counter() - started:.2f}s for 4 x 2500 trials)")
print()

# ---------------------------------------------------------------------------
# Delta = model F1 minus fair-coin F1 is the "signal above noise" a
# classifier must show. With a made-up model column, positive means it
# beats the coin.
print("example delta table against a hypothetical model:")
MODEL_F1 = {3: (0.425, 0.583), 6: (0.393, 0.621), 9: (0.406, 0.621), 12: (0.462, 0.592)}
print(f"{'T':>3} {'class':>5} {'f1':>7} {'f1_rand':>8} {'delta':>8}")
for horizon, (sell_f1, buy_f1) in MODEL_F1.items():
    rand_sell, rand_buy = rand_by_horizon[horizon]
    model_rows = [
        ClassMetrics(class_id=0, f1=sell_f1, precision=0, recall=0, support=0),
        ClassMetrics(class_id=1, f1=buy_f1, precision=0, recall=0, support=0),
    ]
    for row in delta_report(model_rows, [rand_sell, rand_buy]):
        name = "sell" if row.class_id == 0 else "buy"
        print(f"{horizon:>3} {name:>5} {row.f1:>7.3f} {row.f1_rand:>8.3f} "
              f"{row.delta:>+8.3f}")
