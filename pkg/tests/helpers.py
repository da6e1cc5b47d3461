"""Shared test doubles: fake clock, fake transport, submissions builders."""

from __future__ import annotations

import json

from tenk.errors import TransientFetchError


class FakeClock:
    """Manual clock whose sleep() advances time instead of waiting."""

    def __init__(self, start: float = 1000.0):
        self.now = start

    def time(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        self.now += max(seconds, 0.0)


class FakeTransport:
    """In-memory URL -> bytes map that records every request."""

    def __init__(self, responses: dict[str, bytes], clock: FakeClock | None = None):
        self.responses = dict(responses)
        self.clock = clock
        self.requests: list[tuple[float, str]] = []

    def get(self, url: str) -> bytes:
        when = self.clock.time() if self.clock else 0.0
        self.requests.append((when, url))
        if url not in self.responses:
            raise TransientFetchError(f"no fixture response for {url}")
        return self.responses[url]

    @property
    def calls(self) -> int:
        return len(self.requests)


def submissions_json(rows: list[dict]) -> bytes:
    """EDGAR-shaped submissions index from row dicts.

    Each row: form, filingDate, accessionNumber, primaryDocument,
    reportDate (optional).
    """
    recent = {
        "form": [r["form"] for r in rows],
        "filingDate": [r["filingDate"] for r in rows],
        "accessionNumber": [r["accessionNumber"] for r in rows],
        "primaryDocument": [r["primaryDocument"] for r in rows],
        "reportDate": [r.get("reportDate", "") for r in rows],
    }
    return json.dumps({"filings": {"recent": recent, "files": []}}).encode("utf-8")
