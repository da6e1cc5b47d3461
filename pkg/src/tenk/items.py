"""Extract Item 1A / 3 / 7 / 7A narrative text from raw filing markup.

Filings arrive as heterogeneous HTML/SGML: tags, entities, nested
tables, inline styles, tables of contents that repeat every heading.
Extraction runs in two passes: ``strip_markup`` flattens the document to
plain text with one line per block element, then ``locate_items`` finds
item headings on that text and resolves each target item to a character
span. Everything here is a pure function of its input, so re-running on
the same document is bit-identical.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, field

from .edgar import Filing
from .errors import UnparseableFilingError

TARGET_ITEMS = ("1A", "3", "7", "7A")

# Any of these ids terminates the preceding item's span.
_BOUNDARY_IDS = {
    "1", "1A", "1B", "2", "3", "4", "5", "6", "7", "7A", "8",
    "9", "9A", "9B", "9C", "10", "11", "12", "13", "14", "15", "16",
}

# A heading is TOC-like when fewer than this many characters separate it
# from the next candidate heading. Sections genuinely shorter than this
# are indistinguishable from TOC entries and resolve to missing.
TOC_MIN_GAP = 200

DEFAULT_MIN_ITEM_CHARS = 200
SUSPECT_SPAN_FRACTION = 0.40

ITEM_TITLES = {
    "1A": "Risk Factors",
    "3": "Legal Proceedings",
    "7": "Management's Discussion and Analysis of Financial Condition and Results of Operations",
    "7A": "Quantitative and Qualitative Disclosures About Market Risk",
}


@dataclass
class ItemSet:
    """Extracted narrative text of the four target items of one filing."""

    cik: str
    fiscal_year: int
    item_1a: str = ""
    item_3: str = ""
    item_7: str = ""
    item_7a: str = ""
    extraction_flags: dict[str, str] = field(default_factory=dict)

    _FIELDS = {"1A": "item_1a", "3": "item_3", "7": "item_7", "7A": "item_7a"}

    def text_for(self, item_id: str) -> str:
        return getattr(self, self._FIELDS[item_id])

    def set_text(self, item_id: str, text: str) -> None:
        setattr(self, self._FIELDS[item_id], text)

    def found_items(self) -> list[str]:
        return [i for i in TARGET_ITEMS if self.extraction_flags.get(i) == "found"]


_SCRIPT_RE = re.compile(r"(?is)<(script|style)\b.*?</\1\s*>")
_COMMENT_RE = re.compile(r"(?s)<!--.*?-->")
# Block-level elements become line breaks; table cells become spaces so a
# row flattens to one space-separated run.
_BLOCK_RE = re.compile(
    r"(?i)</?(p|div|tr|table|thead|tbody|li|ul|ol|h[1-6]|blockquote|section|article|hr|title)\b[^>]*>|<br\s*/?>"
)
_CELL_RE = re.compile(r"(?i)</?(td|th)\b[^>]*>")
_TAG_RE = re.compile(r"<[^>]+>")


def strip_markup(document: str) -> str:
    """Flatten raw filing markup to plain text.

    Tags, scripts, style blocks, comments, and image references are
    removed; entity references are decoded after tag removal so encoded
    angle brackets cannot resurrect tags; table cells flatten to
    space-separated runs with one table row per line. Horizontal
    whitespace collapses to single spaces and blank-line runs collapse,
    leaving one line per block as the paragraph structure. Never raises;
    a document of only markup yields the empty string.
    """
    text = _SCRIPT_RE.sub(" ", document)
    text = _COMMENT_RE.sub(" ", text)
    text = _BLOCK_RE.sub("\n", text)
    text = _CELL_RE.sub(" ", text)
    text = _TAG_RE.sub("", text)
    text = html.unescape(text)
    text = text.replace("\xa0", " ").replace("\r", "\n").replace("\t", " ")
    lines = [re.sub(r" {2,}", " ", ln).strip() for ln in text.split("\n")]
    return "\n".join(ln for ln in lines if ln)


_HEADING_RE = re.compile(
    r"(?im)^[ ]*item[ ]+(\d{1,2}[ab]?)\b[ ]*[.:–—-]?[ ]*"
)

_TITLE_RES = {
    "1A": re.compile(r"(?im)^[ ]*risk[ ]+factors[ ]*\.?[ ]*$"),
    "3": re.compile(r"(?im)^[ ]*legal[ ]+proceedings[ ]*\.?[ ]*$"),
    "7": re.compile(
        r"(?im)^[ ]*management[’']?s[ ]+discussion[ ]+and[ ]+analysis\b[^\n]{0,80}$"
    ),
    "7A": re.compile(
        r"(?im)^[ ]*quantitative[ ]+and[ ]+qualitative[ ]+disclosures?[ ]+about[ ]+market[ ]+risk[ ]*\.?[ ]*$"
    ),
}


@dataclass(frozen=True)
class _Candidate:
    item_id: str
    start: int
    end: int  # end of the heading token, where the body would begin


def _candidates(plain: str) -> list[_Candidate]:
    found = [
        _Candidate(m.group(1).upper(), m.start(), m.end())
        for m in _HEADING_RE.finditer(plain)
        if m.group(1).upper() in _BOUNDARY_IDS
    ]
    numbered_ids = {c.item_id for c in found}
    # Title-pattern fallback for target items whose numbered heading is
    # absent entirely (some filings label the section by title alone).
    for item_id, pattern in _TITLE_RES.items():
        if item_id in numbered_ids:
            continue
        for m in pattern.finditer(plain):
            found.append(_Candidate(item_id, m.start(), m.end()))
    found.sort(key=lambda c: c.start)
    return found


def locate_items(plain: str) -> list[tuple[str, int, int]]:
    """Resolve each target item to a half-open character span of ``plain``.

    Candidate headings closer than ``TOC_MIN_GAP`` characters to the next
    candidate are rejected as table-of-contents entries. When an item id
    survives at more than one position, the occurrence with the longest
    following span wins (ties break to the earliest offset). Spans run
    from the end of the chosen heading to the next surviving heading of
    any item id, or to end-of-document; they never overlap and are
    returned in document order.

    Raises UnparseableFilingError when no target item can be located.
    """
    cands = _candidates(plain)
    surviving: list[_Candidate] = []
    for i, cand in enumerate(cands):
        next_start = cands[i + 1].start if i + 1 < len(cands) else len(plain)
        if next_start - cand.end >= TOC_MIN_GAP:
            surviving.append(cand)

    def span_end(cand: _Candidate) -> int:
        for other in surviving:
            if other.start > cand.start:
                return other.start
        return len(plain)

    chosen: dict[str, _Candidate] = {}
    for item_id in TARGET_ITEMS:
        best: _Candidate | None = None
        best_len = -1
        for cand in surviving:
            if cand.item_id != item_id:
                continue
            length = span_end(cand) - cand.end
            if length > best_len:
                best, best_len = cand, length
        if best is not None:
            chosen[item_id] = best

    if not chosen:
        raise UnparseableFilingError("no target item headings located")

    spans = [(item_id, c.end, span_end(c)) for item_id, c in chosen.items()]
    spans.sort(key=lambda s: s[1])
    return spans


def extract_items(filing: Filing, min_item_chars: int = DEFAULT_MIN_ITEM_CHARS) -> ItemSet:
    """Extract the four target items from one filing.

    Per-item status is ``found`` when a span of acceptable length was
    located, ``suspect`` when the span is shorter than ``min_item_chars``
    or wider than 40% of the whole document, and ``missing`` otherwise.
    Suspect text is still returned, flagged for downstream judgement.

    Raises UnparseableFilingError when the document is empty or no item
    reaches ``found`` status; such filings are excluded and counted
    toward corpus attrition.
    """
    if not filing.document.strip():
        raise UnparseableFilingError(f"{filing.accession_id}: empty document")
    plain = strip_markup(filing.document)
    if not plain:
        raise UnparseableFilingError(f"{filing.accession_id}: no text after markup removal")
    spans = locate_items(plain)

    result = ItemSet(cik=filing.cik, fiscal_year=filing.fiscal_year)
    located = {item_id: plain[start:end].strip() for item_id, start, end in spans}
    for item_id in TARGET_ITEMS:
        if item_id not in located:
            result.extraction_flags[item_id] = "missing"
            continue
        text = located[item_id]
        if len(text) < min_item_chars or len(text) > SUSPECT_SPAN_FRACTION * len(plain):
            result.extraction_flags[item_id] = "suspect"
        else:
            result.extraction_flags[item_id] = "found"
        result.set_text(item_id, text)

    if not result.found_items():
        raise UnparseableFilingError(
            f"{filing.accession_id}: no item passed extraction checks"
        )
    return result
