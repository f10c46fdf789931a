"""Core domain types: prospects, risk factors, questionnaires and assessments.

Everything here is a plain immutable value object. The richer machinery
(comparison graphs, calibration, consensus) lives in sibling modules and
only ever consumes these types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

CharacterizationStatus = ("draft", "assessed", "peer_reviewed")


@dataclass(frozen=True)
class Question:
    """A single multiple-choice question. Option order is meaningful."""

    id: str
    text: str
    options: tuple[tuple[str, str], ...]  # (option_id, label), ordered

    def __post_init__(self):
        if len(self.options) < 2:
            raise ValueError(f"question {self.id!r} needs at least 2 options")
        seen = set()
        for oid, _ in self.options:
            if oid in seen:
                raise ValueError(f"duplicate option id {oid!r} in question {self.id!r}")
            seen.add(oid)

    def option_ids(self) -> tuple[str, ...]:
        return tuple(oid for oid, _ in self.options)


@dataclass(frozen=True)
class Questionnaire:
    """Ordered questions for one risk factor; the order fixes the one-hot layout."""

    id: str
    risk_factor_id: str
    questions: tuple[Question, ...]

    def __post_init__(self):
        seen = set()
        for q in self.questions:
            if q.id in seen:
                raise ValueError(f"duplicate question id {q.id!r}")
            seen.add(q.id)

    def question(self, question_id: str) -> Question:
        for q in self.questions:
            if q.id == question_id:
                return q
        raise KeyError(question_id)

    @property
    def width(self) -> int:
        """Total option count = one-hot vector length."""
        return sum(len(q.options) for q in self.questions)


@dataclass(frozen=True)
class RiskFactor:
    id: str
    name: str
    questionnaire_id: str


@dataclass(frozen=True)
class Expert:
    id: str
    display_name: str


@dataclass(frozen=True)
class Characterization:
    """An expert's questionnaire answers for one risk factor of a prospect.

    Answers may be partial; unanswered questions encode as an all-zero block.
    """

    id: str
    prospect_id: str
    risk_factor_id: str
    answers: dict[str, str] = field(default_factory=dict)  # question_id -> option_id
    status: str = "draft"

    def __post_init__(self):
        if self.status not in CharacterizationStatus:
            raise ValueError(f"unknown status {self.status!r}")

    def with_status(self, status: str) -> "Characterization":
        """Advance along draft -> assessed -> peer_reviewed. No going back."""
        order = CharacterizationStatus
        if order.index(status) < order.index(self.status):
            raise ValueError(
                f"status cannot move backwards ({self.status !r} -> {status!r})"
            )
        return replace(self, status=status)


@dataclass(frozen=True)
class AssessmentRecord:
    """Scores accumulated for one characterization across the workflow."""

    characterization_id: str
    expert_lok: dict[str, float] = field(default_factory=dict)
    global_lok: Optional[float] = None
    expert_pos: dict[str, float] = field(default_factory=dict)
    consensus_pos: Optional[float] = None

    def __post_init__(self):
        for name, scores in (("expert_lok", self.expert_lok), ("expert_pos", self.expert_pos)):
            for eid, s in scores.items():
                _check_score(s, f"{name}[{eid}]")
        if self.global_lok is not None:
            _check_score(self.global_lok, "global_lok")
        if self.consensus_pos is not None:
            _check_score(self.consensus_pos, "consensus_pos")
            if self.global_lok is None:
                raise ValueError("consensus_pos requires a global_lok")


def _check_score(value: float, name: str) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ValueError(f"{name} must be a finite score in [0, 1], got {value!r}")


@dataclass(frozen=True)
class Violation:
    """One problem found while validating a characterization."""

    question_id: str
    option_id: Optional[str]
    message: str


def validate_characterization(c: Characterization, q: Questionnaire) -> list[Violation]:
    """Report-style validation of answers against the questionnaire.

    Empty report iff every answered question exists and every chosen option
    belongs to its question. Partial (even empty) answer maps are valid.
    """
    if c.risk_factor_id != q.risk_factor_id:
        return [
            Violation(
                question_id="",
                option_id=None,
                message=(
                    f"characterization {c.id!r} targets risk factor "
                    f"{c.risk_factor_id!r}, questionnaire {q.id!r} targets "
                    f"{q.risk_factor_id!r}"
                ),
            )
        ]
    known = {question.id: question for question in q.questions}
    report: list[Violation] = []
    for qid, oid in c.answers.items():
        question = known.get(qid)
        if question is None:
            report.append(
                Violation(qid, oid, f"unknown question {qid!r}")
            )
        elif oid not in question.option_ids():
            report.append(
                Violation(qid, oid, f"question {qid!r} has no option {oid!r}")
            )
    return report


def combine_prospect_pos(factor_pos: list[float]) -> float:
    """Combine independent per-factor POS values into a prospect POS (product)."""
    if not factor_pos:
        raise ValueError("need at least one factor POS")
    product = 1.0
    for p in factor_pos:
        _check_score(p, "factor POS")
        product *= p
    return product
