"""Stage orchestration over file artifacts, plus report rendering.

Each stage reads upstream files, writes its own outputs atomically, and
records itself in a run manifest (config hash, input/output hashes,
seeds, timings). A stage whose config and inputs are unchanged and whose
outputs still match is skipped as up to date. Artifacts are plain files
on purpose: external models join the experiment by reading dataset files
and writing prediction files, nothing more.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Callable

from . import dataset as ds
from . import edgar, items, labels, metrics, model, summarize
from .errors import ConfigError, DataError, MissingDependencyError, UnparseableFilingError, UnresolvableDateError

logger = logging.getLogger(__name__)

STAGES = (
    "ingest", "parse", "summarize", "label", "dataset",
    "train", "predict", "evaluate", "report",
)

PROTOCOL_FOLD_COUNT = 10
PROTOCOL_HORIZONS = (3, 6, 9, 12)


@dataclass
class SummarizerSettings:
    strategy: str = "extractive"
    budget_tokens: int = 2048
    endpoint: summarize.EndpointConfig | None = None


@dataclass
class PipelineConfig:
    universe_path: Path
    cache_dir: Path
    price_dir: Path
    artifacts_dir: Path
    study_years: tuple[int, int] = (2015, 2024)
    horizons: tuple[int, ...] = PROTOCOL_HORIZONS
    fold_count: int = PROTOCOL_FOLD_COUNT
    trials: int = 10
    mc_trials: int = 2500
    seeds: dict[str, int] = field(
        default_factory=lambda: {"fold_plan": 13, "training": 2024, "mc": 7}
    )
    summarizer: SummarizerSettings = field(default_factory=SummarizerSettings)
    baseline: model.Hyperparameters = field(default_factory=model.Hyperparameters)
    max_slip_days: int = 5
    min_item_chars: int = 200
    user_agent: str = ""
    max_requests_per_second: float = 8.0
    retry_limit: int = 3
    include_amendments: bool = False
    allow_protocol_override: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.allow_protocol_override:
            if self.fold_count != PROTOCOL_FOLD_COUNT:
                raise ConfigError(
                    f"fold_count must be {PROTOCOL_FOLD_COUNT} (set "
                    "allow_protocol_override to experiment)"
                )
            if not set(self.horizons) <= set(PROTOCOL_HORIZONS):
                raise ConfigError(
                    f"horizons must be a subset of {PROTOCOL_HORIZONS}, got {self.horizons}"
                )
        if not self.horizons:
            raise ConfigError("at least one horizon is required")
        if self.trials < 1 or self.mc_trials < 1:
            raise ConfigError("trials and mc_trials must be positive")
        if self.summarizer.budget_tokens < summarize.MIN_BUDGET_TOKENS:
            raise ConfigError(
                f"summarizer.budget_tokens must be >= {summarize.MIN_BUDGET_TOKENS}"
            )
        for key in ("fold_plan", "training", "mc"):
            self.seeds.setdefault(key, 0)

    # -- paths ------------------------------------------------------------
    @property
    def items_path(self) -> Path:
        return self.artifacts_dir / "items.jsonl"

    @property
    def summaries_path(self) -> Path:
        return self.artifacts_dir / "summaries.jsonl"

    @property
    def labels_path(self) -> Path:
        return self.artifacts_dir / "labels.jsonl"

    @property
    def dataset_path(self) -> Path:
        return self.artifacts_dir / "dataset.jsonl"

    @property
    def fold_plan_path(self) -> Path:
        return self.artifacts_dir / "fold_plan.json"

    @property
    def models_dir(self) -> Path:
        return self.artifacts_dir / "models"

    @property
    def predictions_dir(self) -> Path:
        return self.artifacts_dir / "predictions"

    @property
    def metrics_path(self) -> Path:
        return self.artifacts_dir / "metrics.json"

    @property
    def reports_dir(self) -> Path:
        return self.artifacts_dir / "reports"

    @property
    def manifest_path(self) -> Path:
        return self.artifacts_dir / "run_manifest.json"

    def cache_manifest_path(self) -> Path:
        return self.cache_dir / "manifest.json"

    def to_dict(self) -> dict:
        endpoint = self.summarizer.endpoint
        return {
            "universe_path": str(self.universe_path),
            "cache_dir": str(self.cache_dir),
            "price_dir": str(self.price_dir),
            "artifacts_dir": str(self.artifacts_dir),
            "study_years": list(self.study_years),
            "horizons": list(self.horizons),
            "fold_count": self.fold_count,
            "trials": self.trials,
            "mc_trials": self.mc_trials,
            "seeds": dict(sorted(self.seeds.items())),
            "summarizer": {
                "strategy": self.summarizer.strategy,
                "budget_tokens": self.summarizer.budget_tokens,
                "endpoint": None if endpoint is None else {
                    "base_url": endpoint.base_url,
                    "model_name": endpoint.model_name,
                    "prompt_template": endpoint.prompt_template,
                    "timeout_seconds": endpoint.timeout_seconds,
                },
            },
            "baseline": {
                "learning_rate": self.baseline.learning_rate,
                "epochs": self.baseline.epochs,
                "l2_penalty": self.baseline.l2_penalty,
                "min_token_count": self.baseline.min_token_count,
            },
            "max_slip_days": self.max_slip_days,
            "min_item_chars": self.min_item_chars,
            "user_agent": self.user_agent,
            "max_requests_per_second": self.max_requests_per_second,
            "retry_limit": self.retry_limit,
            "include_amendments": self.include_amendments,
            "allow_protocol_override": self.allow_protocol_override,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    """Parse a config JSON file. Relative paths resolve against its directory."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(raw, base_dir=path.parent)


def config_from_dict(raw: dict, base_dir) -> PipelineConfig:
    base_dir = Path(base_dir)

    def _path(key: str, default: str | None = None) -> Path:
        value = raw.get(key, default)
        if value is None:
            raise ConfigError(f"config is missing required key {key!r}")
        p = Path(value)
        return p if p.is_absolute() else base_dir / p

    try:
        sm = raw.get("summarizer", {})
        endpoint = None
        if sm.get("endpoint"):
            endpoint = summarize.EndpointConfig(**sm["endpoint"])
        summarizer = SummarizerSettings(
            strategy=sm.get("strategy", "extractive"),
            budget_tokens=int(sm.get("budget_tokens", 2048)),
            endpoint=endpoint,
        )
        baseline = model.Hyperparameters(**raw.get("baseline", {}))
        return PipelineConfig(
            universe_path=_path("universe_path"),
            cache_dir=_path("cache_dir"),
            price_dir=_path("price_dir"),
            artifacts_dir=_path("artifacts_dir", "artifacts"),
            study_years=tuple(raw.get("study_years", (2015, 2024))),
            horizons=labels.validate_horizons(raw.get("horizons", PROTOCOL_HORIZONS))
            if not raw.get("allow_protocol_override")
            else tuple(int(h) for h in raw.get("horizons", PROTOCOL_HORIZONS)),
            fold_count=int(raw.get("fold_count", PROTOCOL_FOLD_COUNT)),
            trials=int(raw.get("trials", 10)),
            mc_trials=int(raw.get("mc_trials", 2500)),
            seeds={k: int(v) for k, v in raw.get("seeds", {}).items()},
            summarizer=summarizer,
            baseline=baseline,
            max_slip_days=int(raw.get("max_slip_days", 5)),
            min_item_chars=int(raw.get("min_item_chars", 200)),
            user_agent=raw.get("user_agent", ""),
            max_requests_per_second=float(raw.get("max_requests_per_second", 8.0)),
            retry_limit=int(raw.get("retry_limit", 3)),
            include_amendments=bool(raw.get("include_amendments", False)),
            allow_protocol_override=bool(raw.get("allow_protocol_override", False)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, DataError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


# ---------------------------------------------------------------------------
# Run manifest and the up-to-date check.

def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _hash_paths(paths: list[Path]) -> dict[str, str]:
    return {str(p): _sha256_file(p) for p in sorted(paths, key=str) if p.is_file()}


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _load_manifest(config: PipelineConfig) -> dict:
    if config.manifest_path.exists():
        return json.loads(config.manifest_path.read_text(encoding="utf-8"))
    return {"config": config.to_dict(), "config_hash": config.config_hash(), "stages": {}}


def _record_stage(config, manifest: dict, stage: str, scope: str,
                  inputs: dict, outputs: dict, seeds: dict, elapsed: float) -> None:
    manifest["config"] = config.to_dict()
    manifest["config_hash"] = config.config_hash()
    manifest["stages"][stage] = {
        "scope": scope,
        "inputs": inputs,
        "outputs": outputs,
        "seeds": seeds,
        "elapsed_seconds": round(elapsed, 6),
    }
    _atomic_write_text(config.manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _up_to_date(config, manifest: dict, stage: str, scope: str, inputs: dict) -> bool:
    record = manifest.get("stages", {}).get(stage)
    if not record or record.get("scope") != scope:
        return False
    if manifest.get("config_hash") != config.config_hash():
        return False
    if record.get("inputs") != inputs:
        return False
    for path_str, digest in record.get("outputs", {}).items():
        p = Path(path_str)
        if not p.is_file() or _sha256_file(p) != digest:
            return False
    return True


@dataclass
class StageResult:
    stage: str
    status: str  # "ok" or "up-to-date"
    outputs: list[str]
    elapsed_seconds: float = 0.0


def _require(path: Path, producing_stage: str) -> Path:
    if not path.exists():
        raise MissingDependencyError(path, producing_stage)
    return path


def _require_input(path: Path, what: str) -> Path:
    if not path.exists():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _jsonl_rows(path: Path) -> list[dict]:
    return [json.loads(ln) for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    _atomic_write_text(path, "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))


# ---------------------------------------------------------------------------
# Stage bodies. Each returns (input paths, output paths, seeds used).

def _stage_ingest(config: PipelineConfig, transport=None):
    universe = edgar.load_universe(_require_input(config.universe_path, "universe file"))
    policy = edgar.FetchPolicy(
        user_agent=config.user_agent or "tenk pipeline (configure user_agent)",
        cache_dir=config.cache_dir,
        max_requests_per_second=config.max_requests_per_second,
        retry_limit=config.retry_limit,
    )
    if transport is None and not edgar.FilingCache(config.cache_dir).load_manifest():
        transport = edgar.HttpTransport(policy)
    filings, dropped = edgar.ingest_universe(
        universe, config.study_years, policy, transport=transport,
        include_amendments=config.include_amendments,
    )
    report = {
        "companies": len(universe),
        "filings": len(filings),
        "dropped": dict(sorted(dropped.items())),
    }
    _atomic_write_text(
        config.artifacts_dir / "ingest_report.json",
        json.dumps(report, indent=2, sort_keys=True) + "\n",
    )
    return ([config.universe_path],
            [config.cache_manifest_path(), config.artifacts_dir / "ingest_report.json"],
            {})


def _stage_parse(config: PipelineConfig, out: Path | None = None):
    cache = edgar.FilingCache(config.cache_dir)
    _require(config.cache_manifest_path(), "ingest")
    out = out or config.items_path
    rows, failed = [], []
    entries = sorted(cache.load_manifest(), key=lambda e: (e["cik"], e["accession_id"]))
    for entry in entries:
        filing = edgar.Filing(
            cik=entry["cik"],
            accession_id=entry["accession_id"],
            filing_date=date.fromisoformat(entry["filing_date"]),
            fiscal_year=int(entry["fiscal_year"]),
            document=cache.read_document(entry["accession_id"]).decode("utf-8", errors="replace"),
            source_url=entry["source_url"],
        )
        try:
            item_set = items.extract_items(filing, min_item_chars=config.min_item_chars)
        except UnparseableFilingError as exc:
            failed.append({"accession_id": entry["accession_id"], "reason": str(exc)})
            continue
        rows.append({
            "cik": item_set.cik,
            "fiscal_year": item_set.fiscal_year,
            "accession_id": entry["accession_id"],
            "item_1a": item_set.item_1a,
            "item_3": item_set.item_3,
            "item_7": item_set.item_7,
            "item_7a": item_set.item_7a,
            "extraction_flags": item_set.extraction_flags,
        })
    _write_jsonl(out, rows)
    parse_report = {
        "documents": len(entries),
        "parsed": len(rows),
        "failed": failed,
        "parse_rate": (len(rows) / len(entries)) if entries else 0.0,
    }
    _atomic_write_text(
        config.artifacts_dir / "parse_report.json",
        json.dumps(parse_report, indent=2, sort_keys=True) + "\n",
    )
    logger.info("parsed %d/%d filings", len(rows), len(entries))
    return ([config.cache_manifest_path()],
            [out, config.artifacts_dir / "parse_report.json"],
            {})


def _stage_summarize(config: PipelineConfig, out: Path | None = None):
    _require(config.items_path, "parse")
    out = out or config.summaries_path
    rows = []
    for row in _jsonl_rows(config.items_path):
        item_set = items.ItemSet(
            cik=row["cik"],
            fiscal_year=int(row["fiscal_year"]),
            item_1a=row["item_1a"],
            item_3=row["item_3"],
            item_7=row["item_7"],
            item_7a=row["item_7a"],
            extraction_flags=row["extraction_flags"],
        )
        req = summarize.SummaryRequest(
            items=item_set,
            budget_tokens=config.summarizer.budget_tokens,
            strategy=config.summarizer.strategy,
        )
        summary = summarize.summarize(req, endpoint=config.summarizer.endpoint)
        rows.append({
            "cik": summary.cik,
            "fiscal_year": summary.fiscal_year,
            "text": summary.text,
            "strategy_used": summary.strategy_used,
            "downgraded": summary.downgraded,
            "source_char_counts": summary.source_char_counts,
        })
    _write_jsonl(out, rows)
    return ([config.items_path], [out], {})


def _stage_label(config: PipelineConfig, out: Path | None = None):
    _require(config.cache_manifest_path(), "ingest")
    _require_input(config.price_dir, "price directory")
    universe = edgar.load_universe(_require_input(config.universe_path, "universe file"))
    ticker_of = {c.cik: c.ticker for c in universe}
    out = out or config.labels_path
    series_cache: dict[str, labels.PriceSeries] = {}
    rows, excluded = [], []
    entries = sorted(
        edgar.FilingCache(config.cache_dir).load_manifest(),
        key=lambda e: (e["cik"], e["accession_id"]),
    )
    for entry in entries:
        cik = entry["cik"]
        ticker = ticker_of.get(cik)
        if ticker is None:
            excluded.append({"cik": cik, "fiscal_year": entry["fiscal_year"],
                             "reason": "cik not in universe"})
            continue
        if ticker not in series_cache:
            price_path = config.price_dir / f"{ticker}.csv"
            if not price_path.exists():
                excluded.append({"cik": cik, "fiscal_year": entry["fiscal_year"],
                                 "reason": f"no price file {price_path.name}"})
                continue
            series_cache[ticker] = labels.load_price_csv(price_path, ticker=ticker)
        series = series_cache[ticker]
        filing_date = date.fromisoformat(entry["filing_date"])
        try:
            result = labels.label_filing(
                series, filing_date, horizons=config.horizons,
                max_slip_days=config.max_slip_days,
            )
        except UnresolvableDateError as exc:
            excluded.append({"cik": cik, "fiscal_year": entry["fiscal_year"],
                             "reason": f"base price unresolvable: {exc}"})
            continue
        if not result.labels:
            excluded.append({"cik": cik, "fiscal_year": entry["fiscal_year"],
                             "reason": "no horizon resolved"})
            continue
        rows.append({
            "cik": cik,
            "fiscal_year": int(entry["fiscal_year"]),
            "filing_date": entry["filing_date"],
            "labels": {str(lb.horizon): lb.value for lb in result.labels},
            "provenance": {
                str(lb.horizon): {
                    "base_price": lb.base_price,
                    "base_date": lb.base_date.isoformat(),
                    "target_price": lb.target_price,
                    "target_date": lb.target_date.isoformat(),
                }
                for lb in result.labels
            },
            "skipped": {str(h): reason for h, reason in sorted(result.skipped.items())},
        })
    _write_jsonl(out, rows)
    _atomic_write_text(
        config.artifacts_dir / "label_report.json",
        json.dumps({"labeled": len(rows), "excluded": excluded}, indent=2, sort_keys=True) + "\n",
    )
    price_files = sorted(config.price_dir.glob("*.csv"))
    return ([config.cache_manifest_path(), config.universe_path, *price_files],
            [out, config.artifacts_dir / "label_report.json"],
            {})


def _stage_dataset(config: PipelineConfig, seed: int | None = None):
    _require(config.summaries_path, "summarize")
    _require(config.labels_path, "label")
    universe = edgar.load_universe(_require_input(config.universe_path, "universe file"))
    summaries = [
        summarize.Summary(
            cik=r["cik"], fiscal_year=int(r["fiscal_year"]), text=r["text"],
            strategy_used=r["strategy_used"], source_char_counts=r["source_char_counts"],
            downgraded=r.get("downgraded", False),
        )
        for r in _jsonl_rows(config.summaries_path)
    ]
    label_records = {
        (r["cik"], int(r["fiscal_year"])): ds.LabelRecord(
            cik=r["cik"],
            fiscal_year=int(r["fiscal_year"]),
            filing_date=date.fromisoformat(r["filing_date"]),
            labels={int(h): int(v) for h, v in r["labels"].items()},
        )
        for r in _jsonl_rows(config.labels_path)
    }
    examples, drops = ds.build_examples(summaries, label_records, universe)
    fold_seed = config.seeds["fold_plan"] if seed is None else seed
    plan = ds.make_fold_plan(universe, seed=fold_seed, fold_count=config.fold_count)

    tmp = config.dataset_path.with_name(config.dataset_path.name + ".tmp")
    ds.write_dataset(examples, tmp)
    os.replace(tmp, config.dataset_path)
    tmp = config.fold_plan_path.with_name(config.fold_plan_path.name + ".tmp")
    ds.write_fold_plan(plan, tmp)
    os.replace(tmp, config.fold_plan_path)
    _atomic_write_text(
        config.artifacts_dir / "dataset_report.json",
        json.dumps({"examples": len(examples), "drops": dict(sorted(drops.items()))},
                   indent=2, sort_keys=True) + "\n",
    )
    return ([config.summaries_path, config.labels_path, config.universe_path],
            [config.dataset_path, config.fold_plan_path,
             config.artifacts_dir / "dataset_report.json"],
            {"fold_plan": fold_seed})


def _grid(config: PipelineConfig, fold: int | None, horizon: int | None):
    folds = [fold] if fold is not None else list(range(config.fold_count))
    horizons = [horizon] if horizon is not None else list(config.horizons)
    for f in folds:
        for t in range(config.trials):
            for h in horizons:
                yield f, t, h


def _stage_train(config: PipelineConfig, fold=None, horizon=None, seed=None):
    _require(config.dataset_path, "dataset")
    _require(config.fold_plan_path, "dataset")
    examples = ds.read_dataset(config.dataset_path)
    plan = ds.read_fold_plan(config.fold_plan_path)
    base_seed = config.seeds["training"] if seed is None else seed
    config.models_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for f, t, h in _grid(config, fold, horizon):
        split = ds.split_for_fold(plan, f, examples)
        cell_seed = model.derive_seed(base_seed, f, t, h)
        balanced = ds.oversample_minority(split.train, h, seed=model.derive_seed(cell_seed, "oversample"))
        fitted = model.train_baseline(
            balanced, h, config.baseline, seed=model.derive_seed(cell_seed, "init")
        )
        out_path = config.models_dir / f"model_f{f}_t{t}_h{h}.json"
        tmp = out_path.with_name(out_path.name + ".tmp")
        model.save_model(fitted, tmp)
        os.replace(tmp, out_path)
        outputs.append(out_path)
    return ([config.dataset_path, config.fold_plan_path], outputs, {"training": base_seed})


def _stage_predict(config: PipelineConfig, fold=None, horizon=None):
    _require(config.dataset_path, "dataset")
    _require(config.fold_plan_path, "dataset")
    examples = ds.read_dataset(config.dataset_path)
    plan = ds.read_fold_plan(config.fold_plan_path)
    config.predictions_dir.mkdir(parents=True, exist_ok=True)
    inputs, outputs = [config.dataset_path, config.fold_plan_path], []
    for f, t, h in _grid(config, fold, horizon):
        model_path = _require(config.models_dir / f"model_f{f}_t{t}_h{h}.json", "train")
        inputs.append(model_path)
        fitted = model.load_model(model_path)
        split = ds.split_for_fold(plan, f, examples)
        scoreable = [e for e in split.test if h in e.labels]
        preds = model.predict(fitted, scoreable, h)
        out_path = config.predictions_dir / f"predictions_f{f}_t{t}_h{h}.jsonl"
        tmp = out_path.with_name(out_path.name + ".tmp")
        model.write_predictions(preds, tmp)
        os.replace(tmp, out_path)
        outputs.append(out_path)
    return (inputs, outputs, {})


def _stage_evaluate(config: PipelineConfig, horizon=None, predictions_dir=None, seed=None):
    _require(config.dataset_path, "dataset")
    _require(config.fold_plan_path, "dataset")
    examples = ds.read_dataset(config.dataset_path)
    plan = ds.read_fold_plan(config.fold_plan_path)
    ex_by_id = {e.example_id: e for e in examples}
    labels_by_id = {e.example_id: e.labels for e in examples}
    preds_dir = Path(predictions_dir) if predictions_dir else config.predictions_dir
    mc_seed = config.seeds["mc"] if seed is None else seed
    horizons = [horizon] if horizon is not None else list(config.horizons)

    report = metrics.MetricsReport()
    inputs = [config.dataset_path, config.fold_plan_path]
    for h in sorted(horizons):
        trial_results: list[metrics.TrialResult] = []
        sector_f1s: dict[str, list[float]] = {}
        sector_fold_support: dict[tuple[str, int], int] = {}
        for f in range(config.fold_count):
            expected_ids = {
                e.example_id for e in examples
                if plan.fold_of(e.cik) == f and h in e.labels
            }
            for t in range(config.trials):
                pred_path = _require(
                    preds_dir / f"predictions_f{f}_t{t}_h{h}.jsonl", "predict"
                )
                inputs.append(pred_path)
                preds = model.load_external_predictions(pred_path, known_example_ids=set(ex_by_id))
                off_horizon = [p for p in preds if p.horizon != h]
                if off_horizon:
                    raise DataError(
                        f"{pred_path}: contains predictions for horizon "
                        f"{off_horizon[0].horizon}, expected {h}"
                    )
                got_ids = {p.example_id for p in preds}
                if got_ids != expected_ids:
                    missing = sorted(expected_ids - got_ids)[:5]
                    extra = sorted(got_ids - expected_ids)[:5]
                    raise DataError(
                        f"{pred_path}: test-fold coverage mismatch "
                        f"(missing {missing}, extra {extra})"
                    )
                if not preds:
                    continue  # fold has no examples at this horizon
                sell, buy = metrics.class_metrics(metrics.confusion(preds, labels_by_id, h))
                trial_results.append(metrics.TrialResult(fold=f, trial=t, horizon=h,
                                                         sell=sell, buy=buy))
                for cell in metrics.sector_crosssection(
                    preds, labels_by_id, [ex_by_id[i] for i in sorted(got_ids)], h
                ):
                    sector_f1s.setdefault(cell.sector, []).append(cell.f1_macro)
                    key = (cell.sector, f)
                    prev = sector_fold_support.setdefault(key, cell.support)
                    if prev != cell.support:
                        raise DataError(f"sector support changed across trials for {key}")
        if not trial_results:
            raise DataError(f"no scoreable predictions at horizon {h}")
        agg = metrics.aggregate(trial_results)

        pooled = [
            e.labels[h]
            for e in sorted(examples, key=lambda e: e.example_id)
            if h in e.labels
        ]
        rand_sell, rand_buy = metrics.random_baseline(
            pooled, h, trials=config.mc_trials, seed=model.derive_seed(mc_seed, h)
        )
        baseline_rows = metrics.delta_report([agg.sell, agg.buy], [rand_sell, rand_buy])

        sector_cells = []
        for sector in sorted(sector_f1s):
            support = sum(
                sup for (s, _), sup in sector_fold_support.items() if s == sector
            )
            f1s = sector_f1s[sector]
            sector_cells.append(metrics.SectorCell(
                sector=sector, horizon=h, f1_macro=float(sum(f1s) / len(f1s)),
                support=support, low_support=support < metrics.LOW_SUPPORT_THRESHOLD,
            ))
        report.per_horizon[h] = metrics.HorizonReport(
            aggregate=agg, baseline=baseline_rows, sectors=sector_cells
        )

    _atomic_write_text(
        config.metrics_path,
        json.dumps(metrics.report_to_dict(report), indent=2, sort_keys=True) + "\n",
    )
    return (inputs, [config.metrics_path], {"mc": mc_seed})


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def render_reports(report: metrics.MetricsReport, horizons, out_dir: Path) -> list[Path]:
    """Render aggregate.csv, baseline.csv, sectors.csv, and summary.txt.

    All numbers carry three decimal places. Sector cells without data
    render as NA; low-support cells are listed in the low_support
    column of sectors.csv.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    horizons = sorted(h for h in horizons if h in report.per_horizon)
    class_names = {0: "sell", 1: "buy"}

    agg_lines = ["horizon,class,f1,precision,recall,support"]
    for h in horizons:
        a = report.per_horizon[h].aggregate
        for cm in (a.sell, a.buy):
            agg_lines.append(
                f"{h},{class_names[cm.class_id]},{_fmt(cm.f1)},{_fmt(cm.precision)},"
                f"{_fmt(cm.recall)},{cm.support}"
            )
    aggregate_csv = out_dir / "aggregate.csv"
    _atomic_write_text(aggregate_csv, "\n".join(agg_lines) + "\n")

    base_lines = ["horizon,class,f1,f1_rand,delta"]
    for h in horizons:
        for row in report.per_horizon[h].baseline:
            base_lines.append(
                f"{h},{class_names[row.class_id]},{_fmt(row.f1)},{_fmt(row.f1_rand)},"
                f"{_fmt(row.delta)}"
            )
    baseline_csv = out_dir / "baseline.csv"
    _atomic_write_text(baseline_csv, "\n".join(base_lines) + "\n")

    cells: dict[tuple[str, int], metrics.SectorCell] = {}
    sectors_seen = set()
    for h in horizons:
        for cell in report.per_horizon[h].sectors:
            cells[(cell.sector, h)] = cell
            sectors_seen.add(cell.sector)
    header = "sector," + ",".join(f"f1_{h}" for h in horizons) + ",low_support"
    sector_lines = [header]
    for sector in sorted(sectors_seen):
        values, low = [], []
        for h in horizons:
            cell = cells.get((sector, h))
            values.append(_fmt(cell.f1_macro) if cell else "NA")
            if cell and cell.low_support:
                low.append(str(h))
        sector_lines.append(f"{sector}," + ",".join(values) + "," + ";".join(low))
    avg_values = []
    for h in horizons:
        col = [cells[(s, h)].f1_macro for s in sorted(sectors_seen) if (s, h) in cells]
        avg_values.append(_fmt(sum(col) / len(col)) if col else "NA")
    sector_lines.append("AVG.," + ",".join(avg_values) + ",")
    sectors_csv = out_dir / "sectors.csv"
    _atomic_write_text(sectors_csv, "\n".join(sector_lines) + "\n")

    lines = ["Aggregate results over folds and trials"]
    for h in horizons:
        a = report.per_horizon[h].aggregate
        lines.append(
            f"  {h:>2} mo: sell F1 {_fmt(a.sell.f1)} | buy F1 {_fmt(a.buy.f1)} | "
            f"macro {_fmt(a.f1_macro)}"
        )
    best_buy = max(horizons, key=lambda h: report.per_horizon[h].aggregate.buy.f1)
    best_sell = max(horizons, key=lambda h: report.per_horizon[h].aggregate.sell.f1)
    lines.append(f"Best buy F1: {best_buy} mo "
                 f"({_fmt(report.per_horizon[best_buy].aggregate.buy.f1)})")
    lines.append(f"Best sell F1: {best_sell} mo "
                 f"({_fmt(report.per_horizon[best_sell].aggregate.sell.f1)})")
    lines.append("Signal over the fair-coin baseline (delta = F1 - F1_rand)")
    for h in horizons:
        row = {r.class_id: r for r in report.per_horizon[h].baseline}
        lines.append(
            f"  {h:>2} mo: sell {row[0].delta:+.3f} | buy {row[1].delta:+.3f}"
        )
    lines.append("Best sector per horizon")
    for h in horizons:
        sector_rows = report.per_horizon[h].sectors
        if sector_rows:
            top = max(sector_rows, key=lambda c: (c.f1_macro, c.sector))
            flag = " (low support)" if top.low_support else ""
            lines.append(f"  {h:>2} mo: {top.sector} ({_fmt(top.f1_macro)}){flag}")
        else:
            lines.append(f"  {h:>2} mo: NA")
    summary_txt = out_dir / "summary.txt"
    _atomic_write_text(summary_txt, "\n".join(lines) + "\n")
    return [aggregate_csv, baseline_csv, sectors_csv, summary_txt]


def _stage_report(config: PipelineConfig):
    _require(config.metrics_path, "evaluate")
    report = metrics.report_from_dict(
        json.loads(config.metrics_path.read_text(encoding="utf-8"))
    )
    outputs = render_reports(report, config.horizons, config.reports_dir)
    return ([config.metrics_path], outputs, {})


def _declared_inputs(stage: str, config: PipelineConfig, predictions: str | None) -> list[Path]:
    """Input paths a stage depends on, computable without running it."""
    preds_dir = Path(predictions) if predictions else config.predictions_dir
    table = {
        "ingest": lambda: [config.universe_path],
        "parse": lambda: [config.cache_manifest_path()],
        "summarize": lambda: [config.items_path],
        "label": lambda: [config.cache_manifest_path(), config.universe_path,
                          *sorted(config.price_dir.glob("*.csv"))],
        "dataset": lambda: [config.summaries_path, config.labels_path, config.universe_path],
        "train": lambda: [config.dataset_path, config.fold_plan_path],
        "predict": lambda: [config.dataset_path, config.fold_plan_path,
                            *sorted(config.models_dir.glob("model_*.json"))],
        "evaluate": lambda: [config.dataset_path, config.fold_plan_path,
                             *sorted(preds_dir.glob("predictions_*.jsonl"))],
        "report": lambda: [config.metrics_path],
    }
    return table[stage]()


def run_stage(
    stage: str,
    config: PipelineConfig,
    fold: int | None = None,
    horizon: int | None = None,
    seed: int | None = None,
    predictions: str | None = None,
    out: str | None = None,
    transport=None,
) -> StageResult:
    """Run one pipeline stage, honoring the up-to-date skip.

    ``fold``/``horizon`` restrict train and predict to a grid slice;
    ``seed`` overrides the stage's configured seed; ``predictions``
    points evaluate at an external prediction directory; ``out``
    overrides the primary output path where a stage has one.
    """
    if stage not in STAGES:
        raise ConfigError(f"unknown stage {stage!r}; expected one of {', '.join(STAGES)}")
    config.artifacts_dir.mkdir(parents=True, exist_ok=True)
    manifest = _load_manifest(config)
    scope = json.dumps({
        "fold": fold, "horizon": horizon, "seed": seed,
        "predictions": predictions, "out": out,
    }, sort_keys=True)

    input_hashes = _hash_paths(_declared_inputs(stage, config, predictions))
    if _up_to_date(config, manifest, stage, scope, input_hashes):
        record = manifest["stages"][stage]
        logger.info("stage %s is up to date", stage)
        return StageResult(stage=stage, status="up-to-date",
                           outputs=sorted(record["outputs"]))

    runners: dict[str, Callable[[], tuple]] = {
        "ingest": lambda: _stage_ingest(config, transport=transport),
        "parse": lambda: _stage_parse(config, out=Path(out) if out else None),
        "summarize": lambda: _stage_summarize(config, out=Path(out) if out else None),
        "label": lambda: _stage_label(config, out=Path(out) if out else None),
        "dataset": lambda: _stage_dataset(config, seed=seed),
        "train": lambda: _stage_train(config, fold=fold, horizon=horizon, seed=seed),
        "predict": lambda: _stage_predict(config, fold=fold, horizon=horizon),
        "evaluate": lambda: _stage_evaluate(config, horizon=horizon,
                                            predictions_dir=predictions, seed=seed),
        "report": lambda: _stage_report(config),
    }

    started = time.perf_counter()
    inputs, outputs, seeds = runners[stage]()
    elapsed = time.perf_counter() - started
    # Hash the inputs the stage actually consumed (ingest populates the
    # cache it depends on, so the declared set may have been incomplete).
    input_hashes = _hash_paths(list(inputs))
    _record_stage(config, manifest, stage, scope, input_hashes,
                  _hash_paths(list(outputs)), seeds, elapsed)
    return StageResult(stage=stage, status="ok",
                       outputs=[str(p) for p in outputs], elapsed_seconds=elapsed)
