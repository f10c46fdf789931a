"""Assessment pipelines over a workspace store.

This is where the pieces meet: reference models trained from peer-reviewed
history feed calibration, expert comparison closures feed both calibration
and the consensus solve, and the POS layer reads its likelihood bounds off
whichever scale applies. Everything here is a pure function of one
workspace snapshot; results are cached keyed by the version they were
computed from, so any commit invalidates them and an unchanged workspace
never recomputes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .calibration import CalibrationProblem, LokScale, calibrate
from .comparisons import ComparisonGraph
from .config import Config
from .consensus import (
    ConsensusRelations,
    PairWeights,
    aggregate_weights,
    consensus_to_gt_eq,
    solve_consensus,
)
from .pos import (
    PosValidation,
    allowed_intervals,
    consensus_pos,
    rank_similar,
    region_polygons,
    validate_pos,
)
from .reference import (
    ReferenceModel,
    TrainingExample,
    encode_one_hot,
    predict_reference_lok,
    train_reference_model,
)
from .store import Workspace, WorkspaceStore, graph_for

__all__ = [
    "AssessmentService",
    "GlobalOutcome",
    "PosConsensusResult",
    "SimilarAssessment",
    "NothingToSolve",
    "UnknownEntity",
    "NEUTRAL_REFERENCE_LOK",
]

# Mid-scale stand-in before any peer-reviewed history exists; calibration
# then orders characterizations purely by the comparison constraints.
NEUTRAL_REFERENCE_LOK = 0.5


class UnknownEntity(KeyError):
    """A referenced workspace object (expert, characterization) is missing."""


class NothingToSolve(ValueError):
    """The request is well-formed but the workspace holds no data for it."""


@dataclass(frozen=True)
class GlobalOutcome:
    """Consensus ordering plus the global scale calibrated against it.

    gt and eq are the calibration constraints actually applied: consensus
    relations restricted to informed pairs.
    """

    version: int
    weights: PairWeights
    consensus: ConsensusRelations
    scale: LokScale
    gt: frozenset = frozenset()
    eq: frozenset = frozenset()


@dataclass(frozen=True)
class PosConsensusResult:
    characterization_id: str
    pos: float
    global_lok: float
    entry_count: int
    expert_ids: tuple[str, ...]


@dataclass(frozen=True)
class SimilarAssessment:
    characterization_id: str
    similarity: float
    status: str
    global_lok: Optional[float]
    consensus_pos: Optional[float]


class AssessmentService:
    def __init__(self, store: WorkspaceStore, config: Optional[Config] = None):
        self.store = store
        self.config = config or Config()
        self._model_cache: dict[tuple[str, str], tuple[object, Optional[ReferenceModel]]] = {}
        self._reference_cache: dict[str, tuple[int, dict[str, float]]] = {}
        self._expert_cache: dict[tuple[str, str], tuple[int, LokScale]] = {}
        self._global_cache: dict[str, tuple[int, GlobalOutcome]] = {}

    # --- reference model -----------------------------------------------------

    def training_examples(self, ws: Workspace, risk_factor_id: str) -> tuple[TrainingExample, ...]:
        """Peer-reviewed characterizations of that risk factor with a confirmed LOK."""
        questionnaire = ws.questionnaire_for(risk_factor_id)
        if questionnaire is None:
            return ()
        out = []
        for c in ws.characterizations:
            if c.risk_factor_id != risk_factor_id or c.status != "peer_reviewed":
                continue
            record = ws.records.get(c.id)
            if record is None or record.global_lok is None:
                continue
            out.append(
                TrainingExample(
                    characterization_id=c.id,
                    vector=encode_one_hot(c, questionnaire),
                    lok=record.global_lok,
                )
            )
        return tuple(out)

    def reference_model(self, ws: Workspace, risk_factor_id: str) -> Optional[ReferenceModel]:
        examples = self.training_examples(ws, risk_factor_id)
        if not examples:
            return None
        # keyed by the actual training inputs: only a new peer-reviewed
        # record (or questionnaire change) forces a retrain
        key = tuple((e.characterization_id, e.vector, e.lok) for e in examples)
        cached = self._model_cache.get((ws.id, risk_factor_id))
        if cached is not None and cached[0] == key:
            return cached[1]
        model = train_reference_model(examples)
        self._model_cache[(ws.id, risk_factor_id)] = (key, model)
        return model

    def reference_scores(self, ws: Workspace) -> dict[str, float]:
        """Reference LOK per characterization; neutral where no model exists."""
        cached = self._reference_cache.get(ws.id)
        if cached is not None and cached[0] == ws.version:
            return dict(cached[1])
        scores: dict[str, float] = {}
        models: dict[str, Optional[ReferenceModel]] = {}
        for c in ws.characterizations:
            if c.risk_factor_id not in models:
                models[c.risk_factor_id] = self.reference_model(ws, c.risk_factor_id)
            model = models[c.risk_factor_id]
            if model is None:
                scores[c.id] = NEUTRAL_REFERENCE_LOK
                continue
            questionnaire = ws.questionnaire_for(c.risk_factor_id)
            vector = encode_one_hot(c, questionnaire)
            scores[c.id] = predict_reference_lok(model, vector)
        self._reference_cache[ws.id] = (ws.version, dict(scores))
        return scores

    # --- lok scales ----------------------------------------------------------

    def expert_scale(self, workspace_id: str, expert_id: str) -> LokScale:
        ws = self.store.get(workspace_id)
        try:
            ws.expert(expert_id)
        except KeyError:
            raise UnknownEntity("unknown expert %r" % expert_id) from None
        cached = self._expert_cache.get((workspace_id, expert_id))
        if cached is not None and cached[0] == ws.version:
            return cached[1]
        graph = graph_for(ws, expert_id)
        gt, eqs = graph.extract_gt_eq()
        scale = self._calibrated(ws, gt, eqs, kind="expert", expert_id=expert_id)
        self._expert_cache[(workspace_id, expert_id)] = (ws.version, scale)
        return scale

    def _calibrated(self, ws, gt, eqs, *, kind, expert_id=None) -> LokScale:
        refs = self.reference_scores(ws)
        problem = CalibrationProblem(
            ids=tuple(sorted(refs)),
            reference=refs,
            gt=frozenset(gt),
            eq=frozenset(eqs),
            t=self.config.threshold,
        )
        return calibrate(problem, kind=kind, expert_id=expert_id)

    def consensus_weights(self, ws: Workspace) -> PairWeights:
        """Pair tallies over the ids some expert actually related.

        Untouched characterizations stay out, which preserves the
        exact-solve budget for the ids carrying information.
        """
        graphs = [graph_for(ws, e.id) for e in ws.experts]
        ids = sorted(
            {node for g in graphs for r in g.closure() for node in r.endpoints()}
        )
        return aggregate_weights(graphs, ids)

    def global_outcome(self, workspace_id: str) -> GlobalOutcome:
        """Consensus over all expert closures, then a calibrated global scale.

        Calibration constraints are restricted to informed pairs (those at
        least one expert related); the solver's level assignment on pairs
        nobody compared is a tie-breaking artifact, not expert opinion. With
        a single expert this makes the global scale coincide with that
        expert's scale.
        """
        ws = self.store.get(workspace_id)
        if not ws.characterizations:
            raise NothingToSolve("workspace has no characterizations")
        cached = self._global_cache.get(workspace_id)
        if cached is not None and cached[0] == ws.version:
            return cached[1]
        weights = self.consensus_weights(ws)
        relations = solve_consensus(weights, exact_bound=self.config.exact_bound)
        gt_all, eq_all = consensus_to_gt_eq(relations)
        informed = set(weights.counts)
        gt = {(g, l) for g, l in gt_all if (min(g, l), max(g, l)) in informed}
        eqs = {p for p in eq_all if tuple(sorted(p)) in informed}
        scale = self._calibrated(ws, gt, eqs, kind="global")
        outcome = GlobalOutcome(
            version=ws.version,
            weights=weights,
            consensus=relations,
            scale=scale,
            gt=frozenset(gt),
            eq=frozenset(eqs),
        )
        self._global_cache[workspace_id] = (ws.version, outcome)
        return outcome

    def global_scale(self, workspace_id: str) -> LokScale:
        return self.global_outcome(workspace_id).scale

    # --- pos -----------------------------------------------------------------

    def pos_intervals(self, workspace_id: str, lok: float):
        ws = self.store.get(workspace_id)
        return allowed_intervals(ws.region, lok)

    def pos_validate(self, workspace_id: str, lok: float, pos: float) -> PosValidation:
        ws = self.store.get(workspace_id)
        return validate_pos(ws.region, lok, pos)

    def pos_consensus(self, workspace_id: str, characterization_id: str) -> PosConsensusResult:
        ws = self.store.get(workspace_id)
        try:
            ws.characterization(characterization_id)
        except KeyError:
            raise UnknownEntity(
                "unknown characterization %r" % characterization_id
            ) from None
        entries = tuple(
            e for e in ws.pos_entries if e.characterization_id == characterization_id
        )
        if not entries:
            raise NothingToSolve(
                "no POS entries for characterization %r" % characterization_id
            )
        lok = self.global_scale(workspace_id).scores[characterization_id]
        pos = consensus_pos(entries, ws.region, lok)
        return PosConsensusResult(
            characterization_id=characterization_id,
            pos=pos,
            global_lok=lok,
            entry_count=len(entries),
            expert_ids=tuple(sorted(e.expert_id for e in entries)),
        )

    # --- similarity and plotting ---------------------------------------------

    def similar_assessments(
        self, workspace_id: str, characterization_id: str, k: int = 5
    ) -> list[SimilarAssessment]:
        """Closest peer-reviewed characterizations of the same risk factor."""
        ws = self.store.get(workspace_id)
        try:
            target = ws.characterization(characterization_id)
        except KeyError:
            raise UnknownEntity(
                "unknown characterization %r" % characterization_id
            ) from None
        questionnaire = ws.questionnaire_for(target.risk_factor_id)
        target_bits = encode_one_hot(target, questionnaire).bits
        candidates = []
        by_id = {}
        for c in ws.characterizations:
            if c.risk_factor_id != target.risk_factor_id or c.status != "peer_reviewed":
                continue
            candidates.append((c.id, encode_one_hot(c, questionnaire).bits))
            by_id[c.id] = c
        ranked = rank_similar(characterization_id, target_bits, candidates, k)
        out = []
        for cid, score in ranked:
            record = ws.records.get(cid)
            out.append(
                SimilarAssessment(
                    characterization_id=cid,
                    similarity=score,
                    status=by_id[cid].status,
                    global_lok=record.global_lok if record else None,
                    consensus_pos=record.consensus_pos if record else None,
                )
            )
        return out

    def plot_data(self, workspace_id: str, characterization_id: str, k: int = 5) -> dict:
        """Region polygons plus nearby assessed points, ready to draw."""
        ws = self.store.get(workspace_id)
        left, right = region_polygons(ws.region)
        points = [
            {
                "characterization_id": s.characterization_id,
                "similarity": s.similarity,
                "pos": s.consensus_pos,
                "lok": s.global_lok,
            }
            for s in self.similar_assessments(workspace_id, characterization_id, k)
            if s.consensus_pos is not None and s.global_lok is not None
        ]
        return {"region": {"left": left, "right": right}, "points": points}
