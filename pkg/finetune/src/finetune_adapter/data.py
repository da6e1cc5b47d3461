"""File-contract parsing: dataset.jsonl, fold plan JSON, splits, tokens.

These readers re-implement the documented file formats on purpose; the
adapter must stay honest about consuming only the external interfaces,
not the producing library's internals.
"""

from __future__ import annotations

import hashlib
import json
import random
from pathlib import Path

HORIZONS = (3, 6, 9, 12)

_REQUIRED_KEYS = {"example_id", "cik", "ticker", "sector", "filing_date", "text", "labels"}

PAD_ID = 0
_RESERVED_IDS = 1  # bucket 0 is padding


class DatasetSchemaError(ValueError):
    """dataset.jsonl or fold plan violates the documented schema."""


def read_dataset_rows(path) -> list[dict]:
    """Parse and validate dataset.jsonl; reject before any training."""
    path = Path(path)
    rows = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetSchemaError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        missing = _REQUIRED_KEYS - set(obj)
        if missing:
            raise DatasetSchemaError(f"{path}:{line_no}: missing keys {sorted(missing)}")
        if not isinstance(obj["text"], str) or not obj["text"]:
            raise DatasetSchemaError(f"{path}:{line_no}: text must be a non-empty string")
        labels = {}
        if not isinstance(obj["labels"], dict):
            raise DatasetSchemaError(f"{path}:{line_no}: labels must be an object")
        for key, value in obj["labels"].items():
            try:
                horizon = int(key)
            except ValueError:
                raise DatasetSchemaError(f"{path}:{line_no}: bad horizon key {key!r}") from None
            if horizon not in HORIZONS or value not in (0, 1):
                raise DatasetSchemaError(
                    f"{path}:{line_no}: label {key!r}: {value!r} outside the contract"
                )
            labels[horizon] = int(value)
        rows.append({**obj, "labels": labels})
    if not rows:
        raise DatasetSchemaError(f"{path}: empty dataset")
    return rows


def read_fold_plan(path) -> dict:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetSchemaError(f"{path}: invalid JSON: {exc}") from exc
    if "assignment" not in obj or "seed" not in obj:
        raise DatasetSchemaError(f"{path}: fold plan needs seed and assignment")
    fold_count = int(obj.get("fold_count", 10))
    assignment = {str(k): int(v) for k, v in obj["assignment"].items()}
    bad = {v for v in assignment.values() if not 0 <= v < fold_count}
    if bad:
        raise DatasetSchemaError(f"{path}: fold indexes {sorted(bad)} out of range")
    return {"seed": int(obj["seed"]), "fold_count": fold_count, "assignment": assignment}


def split_rows(rows: list[dict], plan: dict, fold: int) -> tuple[list, list, list]:
    """(train, validation, test) under the documented rotation.

    Test is the fold itself, validation the next fold modulo the count,
    train the rest. Assignment is by company, so the id sets are
    disjoint by construction.
    """
    fold_count = plan["fold_count"]
    if not 0 <= fold < fold_count:
        raise DatasetSchemaError(f"fold {fold} outside 0..{fold_count - 1}")
    val_fold = (fold + 1) % fold_count
    train, validation, test = [], [], []
    for row in rows:
        cik = row["cik"]
        if cik not in plan["assignment"]:
            raise DatasetSchemaError(f"cik {cik} missing from the fold plan")
        f = plan["assignment"][cik]
        (test if f == fold else validation if f == val_fold else train).append(row)
    return train, validation, test


def oversample(rows: list[dict], horizon: int, seed: int) -> list[dict]:
    """Duplicate minority-class rows to parity; seed-deterministic order."""
    usable = [r for r in rows if horizon in r["labels"]]
    sells = [r for r in usable if r["labels"][horizon] == 0]
    buys = [r for r in usable if r["labels"][horizon] == 1]
    if not sells or not buys:
        raise DatasetSchemaError(
            f"horizon {horizon}: training rows contain a single class"
        )
    minority, majority = (sells, buys) if len(sells) < len(buys) else (buys, sells)
    rng = random.Random(seed)
    out = usable + rng.choices(minority, k=len(majority) - len(minority))
    rng.shuffle(out)
    return out


def token_ids(text: str, vocab_buckets: int, max_tokens: int) -> list[int]:
    """Stable hash-bucket token ids; no learned vocabulary required."""
    ids = []
    for token in text.lower().split():
        token = "".join(ch for ch in token if ch.isalnum())
        if not token:
            continue
        digest = hashlib.md5(token.encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:4], "big") % (vocab_buckets - _RESERVED_IDS)
        ids.append(bucket + _RESERVED_IDS)
        if len(ids) == max_tokens:
            break
    return ids
