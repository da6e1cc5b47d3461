"""Deterministic synthetic corpus: filings, prices, universe, config.

Everything the pipeline consumes can be generated offline from a seed:
a 20-company universe across all 11 sectors, one filing per company per
fiscal year (HTML with a table of contents, varied heading styles,
entities, the occasional table), and weekday adjusted-close series per
ticker. Tests and the demo scripts run entirely on this corpus; the same
seed always reproduces the same bytes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

from .edgar import GICS_SECTORS, CompanyRecord, FilingCache, FilingRef

_GENERAL = (
    "the company continued to operate across its principal markets and segments "
    "during the period under review while management evaluated demand trends "
    "pricing conditions supply commitments capital allocation priorities "
    "customer concentration seasonal effects and competitive positioning"
).split()

_TOPIC = {
    "1A": (
        "adverse conditions could materially affect results competition regulation "
        "cybersecurity litigation liquidity covenants disruption concentration "
        "volatility impairment inflation rates sanctions weather pandemic talent "
        "retention suppliers outages counterparties defaults"
    ).split(),
    "3": (
        "proceedings claims litigation matters settlement courts disputes "
        "indemnification counsel damages ordinary course outcomes reserves "
        "environmental patent jurisdiction appeal"
    ).split(),
    "7": (
        "revenue margin operating income expenses cash flows liquidity capital "
        "expenditures segment growth decline outlook backlog orders currency "
        "guidance comparative period drivers efficiency restructuring"
    ).split(),
    "7A": (
        "interest rate exposure hedging derivatives notional foreign exchange "
        "commodity sensitivity portfolio duration fair value counterparty "
        "instruments swaps basis points"
    ).split(),
}

_BULLISH = "expansion momentum record strength demand growth improving".split()
_BEARISH = "impairment decline headwinds weakness pressure contraction softness".split()

_HOLIDAYS_MD = {(1, 1), (7, 4), (12, 25)}


def _sentence(rng: random.Random, bank: list[str]) -> str:
    words = [rng.choice(bank) for _ in range(rng.randint(9, 18))]
    return words[0].capitalize() + " " + " ".join(words[1:]) + "."


def _paragraph(rng: random.Random, bank: list[str], sentences: int) -> str:
    return " ".join(_sentence(rng, bank) for _ in range(sentences))


def _item_body(rng: random.Random, item_id: str, tilt: list[str]) -> str:
    bank = _GENERAL + _TOPIC[item_id] * 2 + tilt
    paras = [
        f"<p>{_paragraph(rng, bank, rng.randint(4, 7))}</p>"
        for _ in range(rng.randint(2, 3))
    ]
    if item_id == "7" and rng.random() < 0.5:
        paras.append(
            "<table><tr><th>Segment</th><th>Revenue</th></tr>"
            f"<tr><td>North</td><td>{rng.randint(100, 900)}</td></tr>"
            f"<tr><td>South</td><td>{rng.randint(100, 900)}</td></tr></table>"
        )
    return "\n".join(paras)


_HEADING_STYLES = (
    "<p><b>Item {iid}. {title}</b></p>",
    "<p><b>ITEM {iid}. {upper}</b></p>",
    "<p><b>Item {iid}: {title}</b></p>",
    "<p><b>Item {iid} &#8212; {title}</b></p>",
)

_SECTION_TITLES = {
    "1": "Business",
    "1A": "Risk Factors",
    "2": "Properties",
    "3": "Legal Proceedings",
    "5": "Market for Registrant&#8217;s Common Equity",
    "7": "Management&#8217;s Discussion and Analysis of Financial Condition and Results of Operations",
    "7A": "Quantitative and Qualitative Disclosures About Market Risk",
    "8": "Financial Statements and Supplementary Data",
}


def synth_filing_html(cik: str, ticker: str, fiscal_year: int, rng: random.Random,
                      drift: float) -> str:
    """One synthetic 10-K style document with a TOC and eight sections."""
    tilt = _BULLISH if drift > 0 else _BEARISH
    toc_rows = "".join(
        f"<tr><td>Item {iid}.</td><td>{title}</td><td>{3 + 7 * n}</td></tr>"
        for n, (iid, title) in enumerate(_SECTION_TITLES.items())
    )
    chunks = [
        "<html><head><title>Form 10-K</title>",
        "<style>p { margin: 2px; }</style></head><body>",
        f"<p>Annual report of {ticker} for fiscal year {fiscal_year}.</p>",
        "<p>TABLE OF CONTENTS</p>",
        f"<table>{toc_rows}</table>",
    ]
    for iid, title in _SECTION_TITLES.items():
        style = rng.choice(_HEADING_STYLES)
        chunks.append(style.format(iid=iid, title=title, upper=title.upper()))
        chunks.append(_item_body(rng, iid, tilt) if iid in _TOPIC else
                      f"<p>{_paragraph(rng, _GENERAL, 4)}</p>")
    chunks.append(f"<p>Signed on behalf of the registrant, CIK {cik}.</p>")
    chunks.append("</body></html>")
    return "\n".join(chunks)


def synth_universe(n_companies: int = 20) -> list[CompanyRecord]:
    return [
        CompanyRecord(
            cik=str(101 + i).zfill(10),
            ticker=f"SYN{i:02d}",
            sector=GICS_SECTORS[i % len(GICS_SECTORS)],
            index_as_of=date(2024, 4, 30),
        )
        for i in range(n_companies)
    ]


def trading_days(start: date, end: date) -> list[date]:
    """Weekdays between start and end inclusive, minus fixed holidays."""
    out, d = [], start
    while d <= end:
        if d.weekday() < 5 and (d.month, d.day) not in _HOLIDAYS_MD:
            out.append(d)
        d += timedelta(days=1)
    return out


def synth_price_rows(ticker: str, start: date, end: date, seed,
                     drift: float) -> list[tuple[date, float]]:
    # Seeding Random with a string is deterministic across processes;
    # builtin hash() is not.
    rng = random.Random(str(seed))
    price = rng.uniform(25.0, 280.0)
    rows = []
    for d in trading_days(start, end):
        price *= 1.0 + drift + rng.gauss(0.0, 0.015)
        price = max(price, 0.5)
        rows.append((d, round(price, 4)))
    return rows


@dataclass
class CorpusPaths:
    root: Path
    universe_path: Path
    cache_dir: Path
    price_dir: Path
    config_path: Path


def build_corpus(
    root,
    n_companies: int = 20,
    fiscal_years=(2018, 2019, 2020, 2021),
    seed: int = 7,
    trimmed_company: int = 3,
) -> CorpusPaths:
    """Write a complete offline corpus under ``root``.

    ``trimmed_company`` selects one company whose price series stops
    about eight months after its last filing, so its longest horizons
    cannot resolve; pass None to disable.
    """
    root = Path(root)
    universe = synth_universe(n_companies)
    universe_path = root / "universe.csv"
    universe_path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["cik,ticker,sector"]
    lines += [f"{c.cik},{c.ticker},{c.sector}" for c in universe]
    universe_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    cache = FilingCache(root / "cache")
    price_dir = root / "prices"
    price_dir.mkdir(parents=True, exist_ok=True)

    for idx, company in enumerate(universe):
        company_rng = random.Random((seed, company.cik).__repr__())
        drift = company_rng.uniform(-0.0006, 0.0010)
        filing_dates = []
        for fy in fiscal_years:
            filing_date = date(fy + 1, company_rng.randint(2, 4), company_rng.randint(1, 28))
            filing_dates.append(filing_date)
            accession = f"{company.cik}-{str(fy + 1)[2:]}-{fy - min(fiscal_years) + 1:06d}"
            ref = FilingRef(
                cik=company.cik,
                accession_id=accession,
                filing_date=filing_date,
                fiscal_year=fy,
                form="10-K",
                source_url=f"synthetic://edgar/{company.cik}/{accession}",
            )
            doc_rng = random.Random((seed, company.cik, fy).__repr__())
            html = synth_filing_html(company.cik, company.ticker, fy, doc_rng, drift)
            cache.store_document(ref, html.encode("utf-8"))

        start = min(filing_dates) - timedelta(days=40)
        tail = 250 if idx == trimmed_company else 420
        end = max(filing_dates) + timedelta(days=tail)
        rows = synth_price_rows(company.ticker, start, end,
                                seed=f"{seed}:{company.ticker}", drift=drift)
        csv_lines = ["date,adjusted_close"]
        csv_lines += [f"{d.isoformat()},{p}" for d, p in rows]
        (price_dir / f"{company.ticker}.csv").write_text(
            "\n".join(csv_lines) + "\n", encoding="utf-8"
        )

    config_path = write_config(root, fiscal_years)
    return CorpusPaths(
        root=root,
        universe_path=universe_path,
        cache_dir=root / "cache",
        price_dir=price_dir,
        config_path=config_path,
    )


def write_config(root: Path, fiscal_years, **overrides) -> Path:
    """Write a pipeline config pointing at a corpus built under ``root``.

    Defaults are scaled for fast offline runs (2 trials, 400 Monte-Carlo
    draws, 256-token summaries); override any key.
    """
    import json

    config = {
        "universe_path": "universe.csv",
        "cache_dir": "cache",
        "price_dir": "prices",
        "artifacts_dir": "artifacts",
        "study_years": [min(fiscal_years) + 1, max(fiscal_years) + 1],
        "horizons": [3, 6, 9, 12],
        "fold_count": 10,
        "trials": 2,
        "mc_trials": 400,
        "seeds": {"fold_plan": 13, "training": 2024, "mc": 7},
        "summarizer": {"strategy": "extractive", "budget_tokens": 256},
        "baseline": {"learning_rate": 0.2, "epochs": 60, "l2_penalty": 1e-4,
                     "min_token_count": 5},
        "max_slip_days": 5,
        "min_item_chars": 200,
    }
    config.update(overrides)
    config_path = Path(root) / "config.json"
    config_path.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")
    return config_path
