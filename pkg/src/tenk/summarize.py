"""Reduce extracted item texts to a bounded-length classifier input.

Two strategies sit behind one interface: a deterministic extractive
summarizer (term-frequency salience, built in, no dependencies) and an
optional external HTTP endpoint for model-based summarization. The
external path degrades to the extractive one on any endpoint failure,
with the downgrade recorded on the result.

Token budgets use a fixed counting rule throughout the pipeline:
whitespace-delimited word count times 1.3, rounded up. The rule is
deliberately model-agnostic and conservative.
"""

from __future__ import annotations

import hashlib
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field

import requests

from .errors import ConfigError, DataError
from .items import ItemSet, TARGET_ITEMS

logger = logging.getLogger(__name__)

TOKENS_PER_WORD = 1.3
MIN_BUDGET_TOKENS = 128

ITEM_NAMES = {
    "1A": "Risk Factors",
    "3": "Legal Proceedings",
    "7": "Management's Discussion and Analysis",
    "7A": "Market Risk Disclosures",
}


def token_estimate(text: str) -> int:
    """Pipeline-wide token count: ceil(word count * 1.3)."""
    return math.ceil(len(text.split()) * TOKENS_PER_WORD)


def truncate_to_budget(text: str, budget_tokens: int) -> str:
    """Keep the longest word prefix whose token estimate fits the budget."""
    max_words = int(budget_tokens / TOKENS_PER_WORD)
    words = text.split()
    return text if len(words) <= max_words else " ".join(words[:max_words])


@dataclass
class SummaryRequest:
    items: ItemSet
    budget_tokens: int = 2048
    strategy: str = "extractive"  # or "external"

    def __post_init__(self):
        if self.budget_tokens < MIN_BUDGET_TOKENS:
            raise ConfigError(
                f"budget_tokens must be >= {MIN_BUDGET_TOKENS}, got {self.budget_tokens}"
            )
        if self.strategy not in ("extractive", "external"):
            raise ConfigError(f"unknown summarizer strategy {self.strategy!r}")


@dataclass
class Summary:
    cik: str
    fiscal_year: int
    text: str
    strategy_used: str
    source_char_counts: dict[str, int] = field(default_factory=dict)
    downgraded: bool = False


@dataclass
class EndpointConfig:
    """External summarizer endpoint descriptor.

    The endpoint receives POST {"model": model_name, "prompt": <rendered
    template>} and must answer 200 with JSON {"text": "..."}. The prompt
    template may reference {item_name} and {item_text}.
    """

    base_url: str
    model_name: str
    prompt_template: str = "Summarize the {item_name} section:\n\n{item_text}"
    timeout_seconds: float = 60.0


_SENT_SPLIT = re.compile(r"(?<=[.!?])\s+")
_WORD_RE = re.compile(r"[a-z0-9]+")


def _sentences(text: str) -> list[str]:
    out = []
    for para in text.split("\n"):
        out.extend(s.strip() for s in _SENT_SPLIT.split(para) if s.strip())
    return out


def _source_items(items: ItemSet) -> list[tuple[str, str]]:
    pairs = []
    for item_id in TARGET_ITEMS:
        status = items.extraction_flags.get(item_id)
        text = items.text_for(item_id)
        if status in ("found", "suspect") and text.strip():
            pairs.append((item_id, text))
    return pairs


def _proportional_budgets(lengths: list[int], budget: int) -> list[int]:
    # Largest-remainder apportionment over item character lengths.
    total = sum(lengths)
    raw = [budget * n / total for n in lengths]
    floors = [int(x) for x in raw]
    leftover = budget - sum(floors)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - floors[i]), i))
    for i in order[:leftover]:
        floors[i] += 1
    return floors


def summarize_extractive(req: SummaryRequest) -> Summary:
    """Deterministic extractive summary of the found items.

    Sentences are scored by mean normalized term frequency over the
    whole filing, the per-item token budget is proportional to item
    length, and the selected sentences are re-emitted in their original
    order, items concatenated in 1A, 3, 7, 7A order.
    """
    sources = _source_items(req.items)
    if not sources:
        raise DataError(
            f"{req.items.cik} FY{req.items.fiscal_year}: no item text to summarize"
        )

    tf = Counter()
    for _, text in sources:
        tf.update(_WORD_RE.findall(text.lower()))
    peak = max(tf.values()) if tf else 1

    budgets = _proportional_budgets([len(t) for _, t in sources], req.budget_tokens)
    parts: list[str] = []
    for (item_id, text), item_budget in zip(sources, budgets):
        sentences = _sentences(text)
        scored = []
        for idx, sent in enumerate(sentences):
            words = _WORD_RE.findall(sent.lower())
            score = sum(tf[w] / peak for w in words) / len(words) if words else 0.0
            scored.append((idx, sent, score))
        scored.sort(key=lambda t: (-t[2], t[0]))

        allowed_words = int(item_budget / TOKENS_PER_WORD)
        used = 0
        picked: list[int] = []
        for idx, sent, _ in scored:
            n = len(sent.split())
            if used + n <= allowed_words:
                picked.append(idx)
                used += n
        if picked:
            picked.sort()
            parts.append(" ".join(sentences[i] for i in picked))

    text = "\n\n".join(parts)
    if not text:
        # Budget was too tight for any whole sentence anywhere; keep the
        # head of the largest item so the summary is never empty.
        biggest = max(sources, key=lambda p: len(p[1]))[1]
        text = truncate_to_budget(biggest, req.budget_tokens)

    counts = {i: len(req.items.text_for(i)) for i in TARGET_ITEMS}
    return Summary(
        cik=req.items.cik,
        fiscal_year=req.items.fiscal_year,
        text=text,
        strategy_used="extractive",
        source_char_counts=counts,
    )


def _http_post(endpoint: EndpointConfig, prompt: str) -> str:
    resp = requests.post(
        endpoint.base_url,
        json={"model": endpoint.model_name, "prompt": prompt},
        timeout=endpoint.timeout_seconds,
    )
    resp.raise_for_status()
    return resp.json()["text"]


def summarize_external(req: SummaryRequest, endpoint: EndpointConfig, post=None) -> Summary:
    """Summarize through an external model endpoint, one call per item.

    The prompt and model identifier are logged so a run can be
    reproduced. Any endpoint failure falls back to the extractive
    strategy with ``downgraded`` set; the downgrade flag is set exactly
    when the external call path failed.
    """
    post = post or _http_post
    sources = _source_items(req.items)
    if not sources:
        raise DataError(
            f"{req.items.cik} FY{req.items.fiscal_year}: no item text to summarize"
        )
    try:
        parts = []
        for item_id, text in sources:
            prompt = endpoint.prompt_template.format(
                item_name=ITEM_NAMES[item_id], item_text=text
            )
            logger.info(
                "external summarize %s FY%d item %s model=%s prompt_sha=%s",
                req.items.cik, req.items.fiscal_year, item_id, endpoint.model_name,
                hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:12],
            )
            parts.append(post(endpoint, prompt))
    except Exception as exc:
        logger.warning(
            "external summarizer failed (%s); downgrading to extractive", exc
        )
        summary = summarize_extractive(req)
        summary.downgraded = True
        return summary

    text = truncate_to_budget("\n\n".join(p.strip() for p in parts if p.strip()), req.budget_tokens)
    counts = {i: len(req.items.text_for(i)) for i in TARGET_ITEMS}
    return Summary(
        cik=req.items.cik,
        fiscal_year=req.items.fiscal_year,
        text=text,
        strategy_used="external",
        source_char_counts=counts,
    )


def summarize(req: SummaryRequest, endpoint: EndpointConfig | None = None, post=None) -> Summary:
    """Dispatch on the requested strategy."""
    if req.strategy == "external":
        if endpoint is None:
            raise ConfigError("external strategy requested but no endpoint configured")
        return summarize_external(req, endpoint, post=post)
    return summarize_extractive(req)
