"""Classifier contract: built-in baseline plus the prediction exchange file.

Any model can participate in the experiment by emitting the JSONL
prediction format; the built-in baseline is a bag-of-words logistic
classifier trained by full-batch gradient descent, which keeps the
pipeline self-contained and deterministic. External models (for example
a fine-tuned language model) plug in through prediction files validated
by ``load_external_predictions``.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import LabeledExample
from .errors import (
    DataError,
    DegenerateTrainingError,
    PredictionSchemaError,
    TrainingFailureError,
)
from .labels import HORIZONS_MONTHS

DECISION_THRESHOLD = 0.5

_TOKEN_RE = re.compile(r"[0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase tokens; punctuation is treated as whitespace."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Prediction:
    example_id: str
    horizon: int
    decision: int
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise PredictionSchemaError(f"score {self.score} outside [0, 1]")
        expected = 1 if self.score >= DECISION_THRESHOLD else 0
        if self.decision != expected:
            raise PredictionSchemaError(
                f"decision {self.decision} inconsistent with score {self.score}"
            )


@dataclass
class Hyperparameters:
    learning_rate: float = 0.1
    epochs: int = 100
    l2_penalty: float = 1e-4
    min_token_count: int = 5


@dataclass
class BaselineModel:
    vocabulary: dict[str, int]
    weights: np.ndarray  # len(vocabulary) + 1, bias last
    hyperparameters: Hyperparameters
    horizon: int
    seed: int

    def __post_init__(self):
        if len(self.weights) != len(self.vocabulary) + 1:
            raise DataError("weight vector length must be vocabulary size + 1")
        if not np.all(np.isfinite(self.weights)):
            raise DataError("model weights must be finite")


@dataclass(frozen=True)
class TrialSpec:
    """One cell of the fold x trial x horizon experiment grid."""

    fold: int
    trial: int
    horizon: int
    seed: int

    @classmethod
    def derive(cls, fold: int, trial: int, horizon: int, base_seed: int) -> "TrialSpec":
        return cls(fold=fold, trial=trial, horizon=horizon,
                   seed=derive_seed(base_seed, fold, trial, horizon))


def derive_seed(*parts) -> int:
    """Stable 31-bit seed from arbitrary labels; distinct parts, distinct seeds."""
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") & 0x7FFFFFFF


def build_vocabulary(examples: Iterable[LabeledExample], min_token_count: int) -> dict[str, int]:
    counts = Counter()
    for ex in examples:
        counts.update(tokenize(ex.text))
    kept = sorted(t for t, n in counts.items() if n >= min_token_count)
    return {tok: i for i, tok in enumerate(kept)}


def _design_matrix(examples: Sequence[LabeledExample], vocabulary: dict[str, int]) -> np.ndarray:
    X = np.zeros((len(examples), len(vocabulary) + 1))
    for row, ex in enumerate(examples):
        for tok in tokenize(ex.text):
            col = vocabulary.get(tok)
            if col is not None:
                X[row, col] += 1.0
        X[row, -1] = 1.0  # bias
    return X


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))


def loss_and_gradient(
    weights: np.ndarray, X: np.ndarray, y: np.ndarray, l2_penalty: float
) -> tuple[float, np.ndarray]:
    """Mean logistic loss with L2 on the non-bias weights, and its gradient."""
    z = X @ weights
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    penalized = weights.copy()
    penalized[-1] = 0.0  # bias is not regularized
    loss += 0.5 * l2_penalty * float(penalized @ penalized)
    grad = X.T @ (_sigmoid(z) - y) / len(y) + l2_penalty * penalized
    return loss, grad


def train_baseline(
    train: Sequence[LabeledExample],
    horizon: int,
    hyper: Hyperparameters,
    seed: int,
) -> BaselineModel:
    """Fit the logistic baseline for one horizon.

    Weights restart from a small seeded random draw every call, so
    repeated trials are honest re-trainings rather than warm starts.
    Divergence (non-finite loss) aborts with the offending epoch.
    """
    usable = [e for e in train if horizon in e.labels]
    y = np.array([e.labels[horizon] for e in usable], dtype=float)
    if len(usable) == 0 or y.min() == y.max():
        raise DegenerateTrainingError(
            f"horizon {horizon}: training data must contain both classes"
        )
    vocabulary = build_vocabulary(usable, hyper.min_token_count)
    X = _design_matrix(usable, vocabulary)
    rng = np.random.default_rng(seed)
    weights = rng.normal(0.0, 0.01, size=X.shape[1])
    for epoch in range(hyper.epochs):
        loss, grad = loss_and_gradient(weights, X, y, hyper.l2_penalty)
        if not np.isfinite(loss):
            raise TrainingFailureError(epoch)
        weights -= hyper.learning_rate * grad
    if not np.all(np.isfinite(weights)):
        raise TrainingFailureError(hyper.epochs)
    return BaselineModel(
        vocabulary=vocabulary,
        weights=weights,
        hyperparameters=hyper,
        horizon=horizon,
        seed=seed,
    )


def predict(
    model: BaselineModel, examples: Sequence[LabeledExample], horizon: int
) -> list[Prediction]:
    """Score examples; decision is score >= 0.5 (threshold inclusive)."""
    if horizon != model.horizon:
        raise DataError(
            f"model trained for horizon {model.horizon}, asked to predict {horizon}"
        )
    if not examples:
        return []
    X = _design_matrix(examples, model.vocabulary)
    scores = _sigmoid(X @ model.weights)
    return [
        Prediction(
            example_id=ex.example_id,
            horizon=horizon,
            decision=1 if s >= DECISION_THRESHOLD else 0,
            score=float(s),
        )
        for ex, s in zip(examples, scores)
    ]


# ---------------------------------------------------------------------------
# Artifact files: model JSON and the prediction JSONL exchange format.

def save_model(model: BaselineModel, path) -> None:
    payload = {
        "vocabulary": model.vocabulary,
        "weights": [float(w) for w in model.weights],
        "hyperparameters": {
            "learning_rate": model.hyperparameters.learning_rate,
            "epochs": model.hyperparameters.epochs,
            "l2_penalty": model.hyperparameters.l2_penalty,
            "min_token_count": model.hyperparameters.min_token_count,
        },
        "horizon": model.horizon,
        "seed": model.seed,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path) -> BaselineModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return BaselineModel(
        vocabulary={k: int(v) for k, v in obj["vocabulary"].items()},
        weights=np.array(obj["weights"], dtype=float),
        hyperparameters=Hyperparameters(**obj["hyperparameters"]),
        horizon=int(obj["horizon"]),
        seed=int(obj["seed"]),
    )


def write_predictions(predictions: Iterable[Prediction], path) -> None:
    lines = [
        json.dumps(
            {
                "example_id": p.example_id,
                "horizon": p.horizon,
                "decision": p.decision,
                "score": p.score,
            }
        )
        for p in predictions
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_external_predictions(path, known_example_ids=None) -> list[Prediction]:
    """Load and validate a prediction file from any model.

    Rejects, naming the line or id: malformed JSON, missing or
    mistyped fields, horizons outside the study set, scores outside
    [0, 1], decisions inconsistent with their score, duplicates of
    (example_id, horizon), and (when ``known_example_ids`` is given)
    ids that are not part of the dataset.
    """
    path = Path(path)
    known = set(known_example_ids) if known_example_ids is not None else None
    out: list[Prediction] = []
    seen: set[tuple[str, int]] = set()
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PredictionSchemaError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        try:
            example_id = str(obj["example_id"])
            horizon = int(obj["horizon"])
            decision = int(obj["decision"])
            score = float(obj["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise PredictionSchemaError(f"{path}:{line_no}: bad record: {exc}") from exc
        if horizon not in HORIZONS_MONTHS:
            raise PredictionSchemaError(f"{path}:{line_no}: unknown horizon {horizon}")
        if decision not in (0, 1):
            raise PredictionSchemaError(f"{path}:{line_no}: decision must be 0 or 1")
        try:
            pred = Prediction(example_id=example_id, horizon=horizon,
                              decision=decision, score=score)
        except PredictionSchemaError as exc:
            raise PredictionSchemaError(f"{path}:{line_no}: {exc}") from exc
        if known is not None and example_id not in known:
            raise PredictionSchemaError(f"{path}:{line_no}: unknown example_id {example_id}")
        key = (example_id, horizon)
        if key in seen:
            raise PredictionSchemaError(
                f"{path}:{line_no}: duplicate prediction for {example_id} horizon {horizon}"
            )
        seen.add(key)
        out.append(pred)
    return out
