"""Download and cache SEC 10-K filings for a fixed company universe.

The universe is a frozen CSV snapshot (cik,ticker,sector). Filings are
found through each company's EDGAR submissions index and the documents
are served from the standard archive URL shape. Every response is cached
on disk under a JSON manifest so repeat runs are offline and
byte-identical. A single shared rate limiter gates all outbound
requests; the SEC requires a contact User-Agent on every call.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Callable, Iterable

import requests

from .errors import ConfigError, CorruptDocumentError, TransientFetchError, UniverseError

logger = logging.getLogger(__name__)

# The 11 top-level GICS sector names. Universe rows must use one of these.
GICS_SECTORS = (
    "Communication Services",
    "Consumer Discretionary",
    "Consumer Staples",
    "Energy",
    "Financials",
    "Health Care",
    "Industrials",
    "Information Technology",
    "Materials",
    "Real Estate",
    "Utilities",
)

SUBMISSIONS_URL = "https://data.sec.gov/submissions/{name}"
ARCHIVE_URL = "https://www.sec.gov/Archives/edgar/data/{cik_int}/{accession_nodash}/{doc}"

_UNIVERSE_COLUMNS = ("cik", "ticker", "sector")


@dataclass(frozen=True)
class CompanyRecord:
    """One company in the study universe."""

    cik: str  # zero-padded 10-digit SEC identifier
    ticker: str
    sector: str
    index_as_of: date | None = None


@dataclass(frozen=True)
class FilingRef:
    """Pointer to one 10-K accession, resolvable to a document."""

    cik: str
    accession_id: str
    filing_date: date
    fiscal_year: int
    form: str
    source_url: str


@dataclass
class Filing:
    """One company-year 10-K document."""

    cik: str
    accession_id: str
    filing_date: date
    fiscal_year: int
    document: str
    source_url: str


@dataclass
class FetchPolicy:
    """Politeness and persistence settings for EDGAR access."""

    user_agent: str
    cache_dir: Path
    max_requests_per_second: float = 8.0
    retry_limit: int = 3
    timeout_seconds: float = 30.0

    def __post_init__(self):
        self.cache_dir = Path(self.cache_dir)
        if not self.user_agent.strip():
            raise ConfigError("FetchPolicy.user_agent must identify a contact")
        if not 0 < self.max_requests_per_second <= 10:
            raise ConfigError(
                "FetchPolicy.max_requests_per_second must be in (0, 10], got "
                f"{self.max_requests_per_second}"
            )


def load_universe(path) -> list[CompanyRecord]:
    """Load and validate the frozen universe CSV.

    The file must carry the header ``cik,ticker,sector`` (an optional
    ``index_as_of`` column is accepted). CIKs are zero-padded to 10
    digits. Any malformed row or duplicate CIK rejects the whole file,
    naming the offending row numbers.
    """
    path = Path(path)
    records: list[CompanyRecord] = []
    seen: dict[str, int] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        names = tuple(reader.fieldnames or ())
        if names[:3] != _UNIVERSE_COLUMNS or set(names) - {*_UNIVERSE_COLUMNS, "index_as_of"}:
            raise UniverseError(
                f"{path}: expected header cik,ticker,sector, got {','.join(names)}"
            )
        for row_no, row in enumerate(reader, start=2):
            cik_raw = (row.get("cik") or "").strip()
            ticker = (row.get("ticker") or "").strip()
            sector = (row.get("sector") or "").strip()
            if not cik_raw.isdigit() or len(cik_raw) > 10:
                raise UniverseError(f"{path}: row {row_no}: bad cik {cik_raw!r}")
            if not ticker:
                raise UniverseError(f"{path}: row {row_no}: empty ticker")
            if sector not in GICS_SECTORS:
                raise UniverseError(f"{path}: row {row_no}: unknown sector {sector!r}")
            cik = cik_raw.zfill(10)
            if cik in seen:
                raise UniverseError(
                    f"{path}: duplicate cik {cik} at rows {seen[cik]} and {row_no}"
                )
            seen[cik] = row_no
            as_of = row.get("index_as_of")
            records.append(
                CompanyRecord(
                    cik=cik,
                    ticker=ticker,
                    sector=sector,
                    index_as_of=date.fromisoformat(as_of) if as_of else None,
                )
            )
    logger.info("loaded universe %s: %d companies", path, len(records))
    return records


class RateLimiter:
    """Sliding-window limiter shared by all outbound requests.

    Guarantees that no window of ``capacity / rate`` seconds ever holds
    more than ``capacity`` acquisitions, so the observed rate never
    exceeds ``rate`` per second. Requests are delayed, never dropped.
    Clock hooks exist so tests can drive a fake clock.
    """

    def __init__(
        self,
        rate: float,
        time_fn: Callable[[], float] = time.monotonic,
        sleep_fn: Callable[[float], None] = time.sleep,
    ):
        if rate <= 0:
            raise ConfigError(f"rate must be positive, got {rate}")
        self.capacity = max(1, int(rate))
        self.window = self.capacity / rate
        self._time = time_fn
        self._sleep = sleep_fn
        self._stamps: list[float] = []
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            while True:
                now = self._time()
                cutoff = now - self.window
                self._stamps = [t for t in self._stamps if t > cutoff]
                if len(self._stamps) < self.capacity:
                    self._stamps.append(now)
                    return
                self._sleep(self._stamps[0] + self.window - now)


class HttpTransport:
    """requests-backed byte fetcher with retries and the shared limiter."""

    def __init__(self, policy: FetchPolicy, limiter: RateLimiter | None = None,
                 sleep_fn: Callable[[float], None] = time.sleep):
        self.policy = policy
        self.limiter = limiter or RateLimiter(policy.max_requests_per_second)
        self._sleep = sleep_fn
        self._session = requests.Session()
        self._session.headers.update({"User-Agent": policy.user_agent})

    def get(self, url: str) -> bytes:
        last_err: Exception | None = None
        for attempt in range(self.policy.retry_limit + 1):
            self.limiter.acquire()
            try:
                resp = self._session.get(url, timeout=self.policy.timeout_seconds)
                if resp.status_code == 200:
                    return resp.content
                last_err = TransientFetchError(f"HTTP {resp.status_code} for {url}")
            except requests.RequestException as exc:
                last_err = exc
            self._sleep(0.5 * 2**attempt)
        raise TransientFetchError(f"{url} failed after {self.policy.retry_limit + 1} tries: {last_err}")


class FilingCache:
    """Content cache keyed by accession id, with a JSON manifest.

    Layout under the cache directory:
      manifest.json       list of entries, sorted by (cik, accession_id)
      documents/<acc>.htm raw document bytes
      index/<name>        raw submissions-index responses

    All writes go through a temp-file-then-rename so concurrent readers
    never observe partial files.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.documents = self.root / "documents"
        self.index_dir = self.root / "index"
        self.manifest_path = self.root / "manifest.json"

    def load_manifest(self) -> list[dict]:
        if not self.manifest_path.exists():
            return []
        return json.loads(self.manifest_path.read_text(encoding="utf-8"))

    def entry_for(self, accession_id: str) -> dict | None:
        for entry in self.load_manifest():
            if entry["accession_id"] == accession_id:
                return entry
        return None

    def document_path(self, accession_id: str) -> Path:
        return self.documents / f"{accession_id}.htm"

    def read_document(self, accession_id: str) -> bytes:
        return self.document_path(accession_id).read_bytes()

    def store_document(self, ref: FilingRef, body: bytes) -> dict:
        self.documents.mkdir(parents=True, exist_ok=True)
        doc_path = self.document_path(ref.accession_id)
        _atomic_write_bytes(doc_path, body)
        entry = {
            "cik": ref.cik,
            "accession_id": ref.accession_id,
            "filing_date": ref.filing_date.isoformat(),
            "fiscal_year": ref.fiscal_year,
            "source_url": ref.source_url,
            "sha256": hashlib.sha256(body).hexdigest(),
            "path": str(doc_path.relative_to(self.root)),
        }
        manifest = [e for e in self.load_manifest() if e["accession_id"] != ref.accession_id]
        manifest.append(entry)
        manifest.sort(key=lambda e: (e["cik"], e["accession_id"]))
        _atomic_write_bytes(
            self.manifest_path, json.dumps(manifest, indent=2).encode("utf-8") + b"\n"
        )
        return entry

    def index_path(self, name: str) -> Path:
        return self.index_dir / name

    def read_index(self, name: str) -> bytes | None:
        p = self.index_path(name)
        return p.read_bytes() if p.exists() else None

    def store_index(self, name: str, body: bytes) -> None:
        self.index_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write_bytes(self.index_path(name), body)


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _index_json(cache: FilingCache, name: str, transport) -> dict:
    body = cache.read_index(name)
    if body is None:
        transport = _require_transport(transport)
        body = transport.get(SUBMISSIONS_URL.format(name=name))
        cache.store_index(name, body)
    return json.loads(body)


def _require_transport(transport):
    if transport is None:
        raise TransientFetchError("no transport configured and response not cached")
    return transport


def fetch_filing_index(
    company: CompanyRecord,
    years: tuple[int, int],
    policy: FetchPolicy,
    transport=None,
    include_amendments: bool = False,
) -> list[FilingRef]:
    """List the company's 10-K accessions filed within the year range.

    The submissions index response is cached byte-identically, so repeat
    calls hit no network. 10-K/A amendments are excluded unless
    requested. One reference survives per (cik, fiscal_year); when a
    year was filed twice the earliest filing wins. An empty result is
    not an error.
    """
    cache = FilingCache(policy.cache_dir)
    forms = {"10-K", "10-K/A"} if include_amendments else {"10-K"}
    try:
        data = _index_json(cache, f"CIK{company.cik}.json", transport)
        pages = [data.get("filings", {}).get("recent", {})]
        for extra in data.get("filings", {}).get("files", []):
            pages.append(
                _index_json(cache, extra["name"], transport).get("filings", {}).get("recent", {})
            )
    except TransientFetchError as exc:
        raise TransientFetchError(str(exc), cik=company.cik) from exc

    refs: list[FilingRef] = []
    for page in pages:
        rows = zip(
            page.get("form", []),
            page.get("filingDate", []),
            page.get("accessionNumber", []),
            page.get("primaryDocument", []),
            page.get("reportDate", []) or [""] * len(page.get("form", [])),
        )
        for form, filed, accession, primary, report in rows:
            if form not in forms:
                continue
            filing_date = date.fromisoformat(filed)
            if not years[0] <= filing_date.year <= years[1]:
                continue
            fiscal_year = (
                date.fromisoformat(report).year if report else filing_date.year - 1
            )
            url = ARCHIVE_URL.format(
                cik_int=int(company.cik),
                accession_nodash=accession.replace("-", ""),
                doc=primary,
            )
            refs.append(
                FilingRef(
                    cik=company.cik,
                    accession_id=accession,
                    filing_date=filing_date,
                    fiscal_year=fiscal_year,
                    form=form,
                    source_url=url,
                )
            )
    refs.sort(key=lambda r: (r.filing_date, r.accession_id))
    deduped: dict[int, FilingRef] = {}
    for ref in refs:
        deduped.setdefault(ref.fiscal_year, ref)
    return sorted(deduped.values(), key=lambda r: (r.filing_date, r.accession_id))


def fetch_document(ref: FilingRef, policy: FetchPolicy, transport=None) -> Filing:
    """Fetch one filing document, serving from cache when present."""
    cache = FilingCache(policy.cache_dir)
    entry = cache.entry_for(ref.accession_id)
    if entry is not None:
        body = cache.read_document(ref.accession_id)
    else:
        transport = _require_transport(transport)
        body = transport.get(ref.source_url)
        if not body.strip():
            raise CorruptDocumentError(ref.accession_id, f"empty body for accession {ref.accession_id}")
        cache.store_document(ref, body)
    return Filing(
        cik=ref.cik,
        accession_id=ref.accession_id,
        filing_date=ref.filing_date,
        fiscal_year=ref.fiscal_year,
        document=body.decode("utf-8", errors="replace"),
        source_url=ref.source_url,
    )


def ingest_universe(
    universe: Iterable[CompanyRecord],
    years: tuple[int, int],
    policy: FetchPolicy,
    transport=None,
    include_amendments: bool = False,
) -> tuple[list[Filing], dict[str, str]]:
    """Fetch every filing for every company; drop companies that yield none.

    Returns the fetched filings plus a map of dropped cik -> reason.
    Dropping mirrors real-world attrition: indexes that cannot be read,
    or companies whose every document fetch failed.
    """
    filings: list[Filing] = []
    dropped: dict[str, str] = {}
    for company in universe:
        try:
            refs = fetch_filing_index(
                company, years, policy, transport=transport,
                include_amendments=include_amendments,
            )
        except TransientFetchError as exc:
            dropped[company.cik] = f"index fetch failed: {exc}"
            logger.warning("dropping %s: %s", company.cik, exc)
            continue
        if not refs:
            dropped[company.cik] = "no 10-K filings in range"
            logger.info("no filings in range for %s", company.cik)
            continue
        got = 0
        for ref in refs:
            try:
                filings.append(fetch_document(ref, policy, transport=transport))
                got += 1
            except (TransientFetchError, CorruptDocumentError) as exc:
                logger.warning("failed %s %s: %s", company.cik, ref.accession_id, exc)
        if got == 0:
            dropped[company.cik] = "all document fetches failed"
    logger.info(
        "ingest complete: %d filings, %d companies dropped", len(filings), len(dropped)
    )
    return filings, dropped
