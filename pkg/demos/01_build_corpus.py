#!/usr/bin/env python3
"""Build the synthetic offline corpus and look around it.

Everything downstream (parsing, labeling, folds, training, reports) can
run against this corpus with no network access. The same seed always
reproduces the same bytes.
"""

import json
from pathlib import Path

from tenk.synthetic import build_corpus

WORKSPACE = Path("demo_workspace")

paths = build_corpus(WORKSPACE, n_companies=20, seed=7)
print(f"corpus written under {paths.root}/")
print()

# ---------------------------------------------------------------------------
# The company universe: a frozen CSV snapshot, one row per company.
print("universe.csv (first 6 rows):")
for line in paths.universe_path.read_text().splitlines()[:6]:
    print("  " + line)
print()

# ---------------------------------------------------------------------------
# The filing cache: documents plus a JSON manifest that makes every
# document attributable (accession id, source URL, sha256, path).
manifest = json.loads((paths.cache_dir / "manifest.json").read_text())
print(f"cache manifest: {len(manifest)} filings")
entry = manifest[0]
for key in ("cik", "accession_id", "filing_date", "fiscal_year", "sha256"):
    print(f"  {key}: {entry[key]}")
print()

# ---------------------------------------------------------------------------
# Raw documents are messy on purpose: TOC, entities, tables, varied
# heading styles.
doc = (paths.cache_dir / entry["path"]).read_text()
print("document head:")
for line in doc.splitlines()[:8]:
    print("  " + line[:100])
print()

# ---------------------------------------------------------------------------
# Price files: one CSV per ticker with adjusted closes on trading days.
price_file = sorted(paths.price_dir.iterdir())[0]
print(f"{price_file.name} (first 4 rows):")
for line in price_file.read_text().splitlines()[:4]:
    print("  " + line)
