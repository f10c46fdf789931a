"""Reference knowledge scores learned from peer-reviewed assessments.

Characterizations become fixed-layout one-hot vectors; a small supervised
model (nearest-neighbour or ridge-regularized linear) trained on previously
peer-reviewed examples predicts an initial score for new candidates. Model
selection runs ten-fold cross-validation with a deterministic fold split so
retraining on the same data always picks the same model.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .model import Characterization, Questionnaire, validate_characterization

__all__ = [
    "LayoutMismatch",
    "OneHotVector",
    "TrainingExample",
    "KnnFit",
    "LinearFit",
    "ReferenceModel",
    "questionnaire_layout_id",
    "encode_one_hot",
    "similarity",
    "train_reference_model",
    "predict_reference_lok",
    "model_metadata",
    "training_set_to_jsonl",
    "training_set_from_jsonl",
]

CV_FOLDS = 10
MIN_EXAMPLES_FOR_SELECTION = 10


class LayoutMismatch(ValueError):
    """Vectors from different questionnaire layouts cannot be combined."""


def questionnaire_layout_id(q: Questionnaire) -> str:
    """Stable fingerprint of the question/option order that fixes the layout."""
    canonical = [[question.id, list(question.option_ids())] for question in q.questions]
    digest = hashlib.sha256(
        json.dumps(canonical, separators=(",", ":")).encode()
    ).hexdigest()
    return digest[:12]


@dataclass(frozen=True)
class OneHotVector:
    """Bit vector over all options of a questionnaire, in question order.

    An unanswered question is an all-zero block; the encoder guarantees at
    most one set bit per block. layout_id ties the vector to the exact
    questionnaire version it was encoded against.
    """

    layout_id: str
    bits: tuple[int, ...]

    def __post_init__(self):
        clean = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in clean):
            raise ValueError("one-hot bits must be 0 or 1")
        object.__setattr__(self, "bits", clean)


def encode_one_hot(c: Characterization, q: Questionnaire) -> OneHotVector:
    """Deterministic one-hot encoding of a characterization's answers."""
    problems = validate_characterization(c, q)
    if problems:
        raise ValueError(
            "characterization %r does not fit questionnaire %r: %s"
            % (c.id, q.id, "; ".join(v.message for v in problems))
        )
    bits = []
    for question in q.questions:
        chosen = c.answers.get(question.id)
        for oid in question.option_ids():
            bits.append(1 if oid == chosen else 0)
    return OneHotVector(layout_id=questionnaire_layout_id(q), bits=tuple(bits))


def _check_same_layout(a: OneHotVector, b: OneHotVector) -> None:
    if a.layout_id != b.layout_id or len(a.bits) != len(b.bits):
        raise LayoutMismatch(
            "layouts differ (%s/%d bits vs %s/%d bits)"
            % (a.layout_id, len(a.bits), b.layout_id, len(b.bits))
        )


def _hamming(a: OneHotVector, b: OneHotVector) -> int:
    return sum(1 for x, y in zip(a.bits, b.bits) if x != y)


def similarity(a: OneHotVector, b: OneHotVector) -> float:
    """Normalized Hamming similarity: 1 - differing positions / length."""
    _check_same_layout(a, b)
    if not a.bits:
        return 1.0
    return 1.0 - _hamming(a, b) / len(a.bits)


@dataclass(frozen=True)
class TrainingExample:
    """One peer-reviewed assessment: encoded characterization plus its score.

    Callers are responsible for feeding only peer-reviewed records in here;
    the workspace layer filters by status before training.
    """

    characterization_id: str
    vector: OneHotVector
    lok: float

    def __post_init__(self):
        if not self.characterization_id:
            raise ValueError("training example needs a characterization id")
        if not (0.0 <= self.lok <= 1.0):
            raise ValueError(
                "lok must be in [0, 1], got %r for %r"
                % (self.lok, self.characterization_id)
            )


@dataclass(frozen=True)
class KnnFit:
    examples: tuple[TrainingExample, ...]


@dataclass(frozen=True)
class LinearFit:
    weights: tuple[float, ...]
    intercept: float


@dataclass(frozen=True)
class ReferenceModel:
    """Selected and fitted predictor, immutable once trained.

    selection is "cross_validated" when ten-fold CV picked the model and
    "unselected" for the small-data fallback, whose cv_loss is None.
    """

    kind: str  # "knn" | "linear"
    hyperparameters: dict
    layout_id: str
    cv_loss: Optional[float]
    selection: str
    fit: Union[KnnFit, LinearFit]


def _candidates() -> list[tuple[str, dict]]:
    out: list[tuple[str, dict]] = []
    for k in (1, 3, 5):
        for weighting in ("uniform", "distance"):
            out.append(("knn", {"k": k, "weighting": weighting}))
    for ridge in (1e-6, 1e-3, 0.1):
        out.append(("linear", {"ridge": ridge}))
    return out


def _fold_assignment(ids: Iterable[str]) -> dict[str, int]:
    """Deterministic 10-fold split: hash-ranked ids dealt round-robin."""
    ranked = sorted(ids, key=lambda i: (hashlib.sha256(i.encode()).hexdigest(), i))
    return {eid: pos % CV_FOLDS for pos, eid in enumerate(ranked)}


def _fit_candidate(kind: str, hp: dict, examples: tuple[TrainingExample, ...]):
    if kind == "knn":
        ordered = tuple(sorted(examples, key=lambda e: e.characterization_id))
        return KnnFit(examples=ordered)
    return _fit_linear(examples, hp["ridge"])


def _fit_linear(examples: tuple[TrainingExample, ...], ridge: float) -> LinearFit:
    X = np.array([e.vector.bits for e in examples], dtype=float)
    y = np.array([e.lok for e in examples], dtype=float)
    # center so the intercept escapes the ridge penalty
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    width = X.shape[1]
    weights = np.linalg.solve(Xc.T @ Xc + ridge * np.eye(width), Xc.T @ (y - y_mean))
    intercept = float(y_mean - x_mean @ weights)
    return LinearFit(weights=tuple(float(w) for w in weights), intercept=intercept)


def _predict_fit(kind: str, hp: dict, fit, v: OneHotVector) -> float:
    if kind == "knn":
        return _predict_knn(fit.examples, hp["k"], hp["weighting"], v)
    raw = sum(w * b for w, b in zip(fit.weights, v.bits)) + fit.intercept
    return min(1.0, max(0.0, raw))


def _predict_knn(
    examples: tuple[TrainingExample, ...], k: int, weighting: str, v: OneHotVector
) -> float:
    ranked = sorted(
        ((_hamming(e.vector, v), e.characterization_id, e.lok) for e in examples)
    )
    chosen = ranked[: min(k, len(ranked))]
    if weighting == "distance":
        exact = [lok for d, _, lok in chosen if d == 0]
        if exact:
            # a zero distance would dominate every weight anyway
            return sum(exact) / len(exact)
        total = sum(1.0 / d for d, _, _ in chosen)
        return sum(lok / d for d, _, lok in chosen) / total
    return sum(lok for _, _, lok in chosen) / len(chosen)


def _cv_mae(
    kind: str,
    hp: dict,
    examples: tuple[TrainingExample, ...],
    folds: dict[str, int],
) -> float:
    total = 0.0
    for f in range(CV_FOLDS):
        train = tuple(e for e in examples if folds[e.characterization_id] != f)
        held = [e for e in examples if folds[e.characterization_id] == f]
        if not held:
            continue
        fit = _fit_candidate(kind, hp, train)
        for e in held:
            total += abs(_predict_fit(kind, hp, fit, e.vector) - e.lok)
    return total / len(examples)


def train_reference_model(examples: Iterable[TrainingExample]) -> ReferenceModel:
    """Pick the best candidate by ten-fold CV mean absolute error and refit.

    Candidates in fixed order: knn (k in 1/3/5, uniform then distance
    weighted), then linear with ridge 1e-6, 1e-3, 0.1; ties keep the
    earliest. Fewer than 10 examples skip selection and fall back to a
    1-nearest-neighbour model marked "unselected". No examples is an error.
    """
    examples = tuple(sorted(examples, key=lambda e: e.characterization_id))
    if not examples:
        raise ValueError("cannot train a reference model without examples")
    ids = [e.characterization_id for e in examples]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate characterization ids in training set")
    layouts = {e.vector.layout_id for e in examples}
    widths = {len(e.vector.bits) for e in examples}
    if len(layouts) > 1 or len(widths) > 1:
        raise LayoutMismatch("training examples span multiple layouts")
    layout_id = examples[0].vector.layout_id

    if len(examples) < MIN_EXAMPLES_FOR_SELECTION:
        hp = {"k": 1, "weighting": "uniform"}
        return ReferenceModel(
            kind="knn",
            hyperparameters=hp,
            layout_id=layout_id,
            cv_loss=None,
            selection="unselected",
            fit=_fit_candidate("knn", hp, examples),
        )

    folds = _fold_assignment(ids)
    best: Optional[tuple[float, str, dict]] = None
    for kind, hp in _candidates():
        mae = _cv_mae(kind, hp, examples, folds)
        if best is None or mae < best[0]:
            best = (mae, kind, hp)
    cv_loss, kind, hp = best
    return ReferenceModel(
        kind=kind,
        hyperparameters=hp,
        layout_id=layout_id,
        cv_loss=cv_loss,
        selection="cross_validated",
        fit=_fit_candidate(kind, hp, examples),
    )


def predict_reference_lok(m: ReferenceModel, v: OneHotVector) -> float:
    """Score in [0, 1] for a vector from the model's own layout."""
    if v.layout_id != m.layout_id:
        raise LayoutMismatch(
            "vector layout %s does not match model layout %s" % (v.layout_id, m.layout_id)
        )
    return _predict_fit(m.kind, m.hyperparameters, m.fit, v)


def model_metadata(m: ReferenceModel) -> dict:
    """The JSON-facing summary: kind, hyperparameters, cv_loss."""
    return {
        "kind": m.kind,
        "hyperparameters": dict(m.hyperparameters),
        "cv_loss": m.cv_loss,
    }


def training_set_to_jsonl(examples: Iterable[TrainingExample]) -> str:
    """One JSON object per line: {characterization_id, vector, lok}."""
    lines = []
    for e in examples:
        lines.append(
            json.dumps(
                {
                    "characterization_id": e.characterization_id,
                    "vector": list(e.vector.bits),
                    "lok": e.lok,
                },
                separators=(",", ":"),
            )
        )
    return "".join(line + "\n" for line in lines)


def training_set_from_jsonl(text: str, layout_id: str) -> list[TrainingExample]:
    """Parse an exported training set back against a known layout."""
    out: list[TrainingExample] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            out.append(
                TrainingExample(
                    characterization_id=row["characterization_id"],
                    vector=OneHotVector(layout_id=layout_id, bits=tuple(row["vector"])),
                    lok=float(row["lok"]),
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError("bad training-set line %d: %s" % (lineno, exc)) from exc
    return out
