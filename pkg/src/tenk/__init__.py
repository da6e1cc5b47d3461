"""10-K narrative text to long-horizon stock-direction experiments.

The pipeline runs in file-backed stages: ingest filings into a local
cache, extract the four narrative items, summarize them under a token
budget, label each filing with buy/sell directions at 3/6/9/12 month
horizons from adjusted-close prices, assemble company-partitioned folds,
train or import classifiers, and evaluate against a fair-coin
Monte-Carlo baseline with sector cross-sections.

Submodules:
  edgar      filing download, cache, company universe
  items      markup stripping and item section extraction
  summarize  bounded-length summaries of extracted items
  labels     direction labels from adjusted-close series
  dataset    example assembly, fold plans, oversampling
  model      baseline classifier and the prediction exchange format
  metrics    per-class metrics, aggregation, random baseline, sectors
  pipeline   stage orchestration over file artifacts
  synthetic  deterministic offline corpus generator

See the demos/ directory for narrative walkthroughs of each capability.
"""

from . import dataset, edgar, items, labels, metrics, model, pipeline, summarize, synthetic

__version__ = "0.1.0"

__all__ = [
    "dataset", "edgar", "items", "labels", "metrics", "model",
    "pipeline", "summarize", "synthetic", "__version__",
]
