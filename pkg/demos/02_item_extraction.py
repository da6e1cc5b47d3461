#!/usr/bin/env python3
"""Extract Item 1A / 3 / 7 / 7A narrative text from raw filing markup.

Shows the two passes: markup flattening, then heading location with
table-of-contents rejection and the longest-span rule.
"""

import json
from datetime import date
from pathlib import Path

from tenk.edgar import Filing
from tenk.items import extract_items, locate_items, strip_markup
from tenk.synthetic import build_corpus

WORKSPACE = Path("demo_workspace")
paths = build_corpus(WORKSPACE, seed=7)

manifest = json.loads((paths.cache_dir / "manifest.json").read_text())
entry = manifest[0]
document = (paths.cache_dir / entry["path"]).read_text()

# ---------------------------------------------------------------------------
# Pass 1: flatten markup. Tags and entities go away, each block element
# becomes one line, table rows flatten to space-separated runs.
plain = strip_markup(document)
print(f"raw markup: {len(document)} chars -> plain text: {len(plain)} chars")
print("plain text head:")
for line in plain.splitlines()[:6]:
    print("  " + line[:100])
print()

# ---------------------------------------------------------------------------
# Pass 2: locate the items. Note the table of contents at the top also
# says "Item 1A." etc; those candidates are rejected because almost no
# text follows them before the next heading.
spans = locate_items(plain)
print("located spans (item, start, end):")
for item_id, start, end in spans:
    preview = plain[start:end].strip().replace("\n", " ")[:70]
    print(f"  {item_id:>2}: [{start:6d}, {end:6d})  {preview}...")
print()

# ---------------------------------------------------------------------------
# The composed extraction, with per-item status flags. A span shorter
# than the configured minimum or wider than 40% of the document is
# flagged suspect instead of found.
filing = Filing(cik=entry["cik"], accession_id=entry["accession_id"],
                filing_date=date.fromisoformat(entry["filing_date"]),
                fiscal_year=entry["fiscal_year"], document=document,
                source_url=entry["source_url"])
item_set = extract_items(filing)
print("extraction flags:", item_set.extraction_flags)
print(f"item 7 text ({len(item_set.item_7)} chars):")
print("  " + item_set.item_7[:180].replace("\n", " ") + "...")
