"""Versioned workspace persistence: snapshots, mutations and optimistic locking.

A workspace is an immutable value; every change goes through a typed
mutation applied by ``commit`` under an expected version (optimistic
concurrency). Snapshots are single JSON documents, and each accepted
mutation is also appended to a JSON-lines log next to the snapshot, so a
workspace's history stays diffable. Derived artifacts (reference models,
scales, consensus solutions) are never stored; services recompute them
keyed by the version.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .comparisons import ComparisonGraph, Relation
from .model import (
    AssessmentRecord,
    Characterization,
    Expert,
    Question,
    Questionnaire,
    RiskFactor,
    validate_characterization,
)
from .pos import DEFAULT_REGION, LikelihoodRegion, PosEntry, region_from_config, region_to_config, validate_pos

__all__ = [
    "SCHEMA_VERSION",
    "Workspace",
    "WorkspaceStore",
    "VersionConflict",
    "ValidationFailed",
    "StoreCorrupt",
    "UnknownWorkspace",
    "AddRiskFactor",
    "SetQuestionnaire",
    "AddExpert",
    "AddCharacterization",
    "SetCharacterizationStatus",
    "AddComparison",
    "RemoveComparison",
    "RecordPosEntry",
    "RecordAssessment",
    "SetRegion",
    "Mutation",
    "apply_mutation",
    "graph_for",
    "workspace_to_json",
    "workspace_from_json",
]

SCHEMA_VERSION = 1


class VersionConflict(Exception):
    """The caller's expected version no longer matches the stored one."""

    def __init__(self, workspace_id: str, expected: int, actual: int):
        self.workspace_id = workspace_id
        self.expected = expected
        self.actual = actual
        super().__init__(
            "workspace %r is at version %d, commit expected %d"
            % (workspace_id, actual, expected)
        )


class ValidationFailed(ValueError):
    """The mutation references unknown objects or breaks an invariant."""


class StoreCorrupt(ValueError):
    """A stored workspace file could not be parsed."""

    def __init__(self, path: str, offset: int, detail: str):
        self.path = path
        self.offset = offset
        super().__init__(
            "corrupt workspace file %s at byte offset %d: %s" % (path, offset, detail)
        )


class UnknownWorkspace(KeyError):
    pass


@dataclass(frozen=True)
class Workspace:
    """Durable state of one assessment workspace.

    comparisons maps expert id to an ordered tuple of (comparison_id,
    relation) assertions; everything derived from them (closures, scales)
    is recomputed on demand.
    """

    id: str
    version: int = 0
    risk_factors: tuple[RiskFactor, ...] = ()
    questionnaires: tuple[Questionnaire, ...] = ()
    experts: tuple[Expert, ...] = ()
    characterizations: tuple[Characterization, ...] = ()
    comparisons: dict[str, tuple[tuple[str, Relation], ...]] = field(default_factory=dict)
    pos_entries: tuple[PosEntry, ...] = ()
    records: dict[str, AssessmentRecord] = field(default_factory=dict)
    region: LikelihoodRegion = DEFAULT_REGION
    comparison_seq: int = 0

    def questionnaire_for(self, risk_factor_id: str) -> Optional[Questionnaire]:
        for q in self.questionnaires:
            if q.risk_factor_id == risk_factor_id:
                return q
        return None

    def characterization(self, characterization_id: str) -> Characterization:
        for c in self.characterizations:
            if c.id == characterization_id:
                return c
        raise KeyError(characterization_id)

    def expert(self, expert_id: str) -> Expert:
        for e in self.experts:
            if e.id == expert_id:
                return e
        raise KeyError(expert_id)


def graph_for(ws: Workspace, expert_id: str) -> ComparisonGraph:
    """That expert's comparison graph over all characterization ids."""
    nodes = frozenset(c.id for c in ws.characterizations)
    asserted = tuple(rel for _, rel in ws.comparisons.get(expert_id, ()))
    return ComparisonGraph(nodes=nodes, asserted=asserted)


# --- mutations ---------------------------------------------------------------


@dataclass(frozen=True)
class AddRiskFactor:
    risk_factor: RiskFactor


@dataclass(frozen=True)
class SetQuestionnaire:
    """Create or replace the questionnaire with the same id."""

    questionnaire: Questionnaire


@dataclass(frozen=True)
class AddExpert:
    expert: Expert


@dataclass(frozen=True)
class AddCharacterization:
    characterization: Characterization


@dataclass(frozen=True)
class SetCharacterizationStatus:
    characterization_id: str
    status: str


@dataclass(frozen=True)
class AddComparison:
    """Assert one pairwise relation for an expert.

    An already-implied relation commits as a no-op: nothing is recorded and
    ``applied_comparison_id`` stays None in the commit result.
    """

    expert_id: str
    relation: Relation


@dataclass(frozen=True)
class RemoveComparison:
    expert_id: str
    comparison_id: str


@dataclass(frozen=True)
class RecordPosEntry:
    """Store or replace an expert's POS entry for a characterization."""

    entry: PosEntry


@dataclass(frozen=True)
class RecordAssessment:
    """Confirm the peer-review outcome for a characterization."""

    characterization_id: str
    global_lok: float
    consensus_pos: Optional[float] = None


@dataclass(frozen=True)
class SetRegion:
    region: LikelihoodRegion


Mutation = Union[
    AddRiskFactor,
    SetQuestionnaire,
    AddExpert,
    AddCharacterization,
    SetCharacterizationStatus,
    AddComparison,
    RemoveComparison,
    RecordPosEntry,
    RecordAssessment,
    SetRegion,
]


@dataclass(frozen=True)
class Applied:
    """Result of applying one mutation (before the version bump)."""

    workspace: Workspace
    comparison_id: Optional[str] = None
    implied: bool = False


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValidationFailed(message)


def apply_mutation(ws: Workspace, mutation: Mutation) -> Applied:
    """Pure mutation application; raises ValidationFailed on bad input.

    Contradictory comparisons raise ContradictionError untouched so the
    caller can show the witness chain.
    """
    if isinstance(mutation, AddRiskFactor):
        rf = mutation.risk_factor
        _require(
            all(x.id != rf.id for x in ws.risk_factors),
            "risk factor %r already exists" % rf.id,
        )
        return Applied(replace(ws, risk_factors=ws.risk_factors + (rf,)))

    if isinstance(mutation, SetQuestionnaire):
        q = mutation.questionnaire
        _require(
            any(rf.id == q.risk_factor_id for rf in ws.risk_factors),
            "questionnaire %r references unknown risk factor %r"
            % (q.id, q.risk_factor_id),
        )
        for c in ws.characterizations:
            if c.risk_factor_id == q.risk_factor_id:
                problems = validate_characterization(c, q)
                _require(
                    not problems,
                    "characterization %r would become invalid: %s"
                    % (c.id, problems[0].message),
                )
        kept = tuple(x for x in ws.questionnaires if x.id != q.id)
        _require(
            all(x.risk_factor_id != q.risk_factor_id for x in kept),
            "risk factor %r already has a different questionnaire" % q.risk_factor_id,
        )
        return Applied(replace(ws, questionnaires=kept + (q,)))

    if isinstance(mutation, AddExpert):
        e = mutation.expert
        _require(
            all(x.id != e.id for x in ws.experts), "expert %r already exists" % e.id
        )
        return Applied(replace(ws, experts=ws.experts + (e,)))

    if isinstance(mutation, AddCharacterization):
        c = mutation.characterization
        _require(
            all(x.id != c.id for x in ws.characterizations),
            "characterization %r already exists" % c.id,
        )
        q = ws.questionnaire_for(c.risk_factor_id)
        _require(q is not None, "no questionnaire for risk factor %r" % c.risk_factor_id)
        problems = validate_characterization(c, q)
        _require(not problems, "invalid characterization: %s" % (problems[0].message if problems else ""))
        return Applied(replace(ws, characterizations=ws.characterizations + (c,)))

    if isinstance(mutation, SetCharacterizationStatus):
        try:
            current = ws.characterization(mutation.characterization_id)
        except KeyError:
            raise ValidationFailed(
                "unknown characterization %r" % mutation.characterization_id
            ) from None
        try:
            updated = current.with_status(mutation.status)
        except ValueError as exc:
            raise ValidationFailed(str(exc)) from exc
        out = tuple(updated if c.id == current.id else c for c in ws.characterizations)
        return Applied(replace(ws, characterizations=out))

    if isinstance(mutation, AddComparison):
        _require(
            any(e.id == mutation.expert_id for e in ws.experts),
            "unknown expert %r" % mutation.expert_id,
        )
        graph = graph_for(ws, mutation.expert_id)
        known = graph.nodes
        for endpoint in mutation.relation.endpoints():
            _require(endpoint in known, "unknown characterization %r" % endpoint)
        updated = graph.add(mutation.relation)  # ContradictionError propagates
        if updated is graph:
            return Applied(ws, implied=True)
        cmp_id = "cmp-%d" % (ws.comparison_seq + 1)
        per_expert = dict(ws.comparisons)
        per_expert[mutation.expert_id] = per_expert.get(mutation.expert_id, ()) + (
            (cmp_id, mutation.relation),
        )
        return Applied(
            replace(ws, comparisons=per_expert, comparison_seq=ws.comparison_seq + 1),
            comparison_id=cmp_id,
        )

    if isinstance(mutation, RemoveComparison):
        rows = ws.comparisons.get(mutation.expert_id, ())
        kept = tuple(row for row in rows if row[0] != mutation.comparison_id)
        _require(
            len(kept) != len(rows),
            "expert %r has no comparison %r" % (mutation.expert_id, mutation.comparison_id),
        )
        per_expert = dict(ws.comparisons)
        per_expert[mutation.expert_id] = kept
        return Applied(replace(ws, comparisons=per_expert))

    if isinstance(mutation, RecordPosEntry):
        entry = mutation.entry
        _require(
            any(e.id == entry.expert_id for e in ws.experts),
            "unknown expert %r" % entry.expert_id,
        )
        _require(
            any(c.id == entry.characterization_id for c in ws.characterizations),
            "unknown characterization %r" % entry.characterization_id,
        )
        verdict = validate_pos(ws.region, entry.lok_used, entry.pos)
        _require(
            verdict.accepted,
            "pos %g is outside the allowed region at lok %g (nearest allowed %g)"
            % (entry.pos, entry.lok_used, verdict.nearest),
        )
        kept = tuple(
            e
            for e in ws.pos_entries
            if not (
                e.expert_id == entry.expert_id
                and e.characterization_id == entry.characterization_id
            )
        )
        return Applied(replace(ws, pos_entries=kept + (entry,)))

    if isinstance(mutation, RecordAssessment):
        cid = mutation.characterization_id
        try:
            current = ws.characterization(cid)
        except KeyError:
            raise ValidationFailed("unknown characterization %r" % cid) from None
        _require(
            current.status != "peer_reviewed" or cid not in ws.records,
            "peer-reviewed assessment of %r is immutable" % cid,
        )
        if mutation.consensus_pos is not None:
            verdict = validate_pos(ws.region, mutation.global_lok, mutation.consensus_pos)
            _require(
                verdict.accepted,
                "consensus pos %g is outside the region at global lok %g"
                % (mutation.consensus_pos, mutation.global_lok),
            )
        try:
            record = AssessmentRecord(
                characterization_id=cid,
                global_lok=mutation.global_lok,
                consensus_pos=mutation.consensus_pos,
            )
        except ValueError as exc:
            raise ValidationFailed(str(exc)) from exc
        records = dict(ws.records)
        records[cid] = record
        return Applied(replace(ws, records=records))

    if isinstance(mutation, SetRegion):
        return Applied(replace(ws, region=mutation.region))

    raise ValidationFailed("unknown mutation type %r" % type(mutation).__name__)


# --- serialization -----------------------------------------------------------


def _question_to_json(q: Question) -> dict:
    return {"id": q.id, "text": q.text, "options": [[oid, label] for oid, label in q.options]}


def _questionnaire_to_json(q: Questionnaire) -> dict:
    return {
        "id": q.id,
        "risk_factor_id": q.risk_factor_id,
        "questions": [_question_to_json(x) for x in q.questions],
    }


def _questionnaire_from_json(data: dict) -> Questionnaire:
    return Questionnaire(
        id=data["id"],
        risk_factor_id=data["risk_factor_id"],
        questions=tuple(
            Question(
                id=x["id"],
                text=x["text"],
                options=tuple((oid, label) for oid, label in x["options"]),
            )
            for x in data["questions"]
        ),
    )


def _relation_to_json(r: Relation) -> dict:
    return {"kind": r.kind, "a": r.a, "b": r.b}


def _relation_from_json(data: dict) -> Relation:
    return Relation(kind=data["kind"], a=data["a"], b=data["b"])


def workspace_to_json(ws: Workspace) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": ws.id,
        "version": ws.version,
        "risk_factors": [
            {"id": rf.id, "name": rf.name, "questionnaire_id": rf.questionnaire_id}
            for rf in ws.risk_factors
        ],
        "questionnaires": [_questionnaire_to_json(q) for q in ws.questionnaires],
        "experts": [{"id": e.id, "display_name": e.display_name} for e in ws.experts],
        "characterizations": [
            {
                "id": c.id,
                "prospect_id": c.prospect_id,
                "risk_factor_id": c.risk_factor_id,
                "answers": dict(c.answers),
                "status": c.status,
            }
            for c in ws.characterizations
        ],
        "comparisons": {
            expert_id: [[cmp_id, _relation_to_json(rel)] for cmp_id, rel in rows]
            for expert_id, rows in sorted(ws.comparisons.items())
        },
        "pos_entries": [
            {
                "expert_id": e.expert_id,
                "characterization_id": e.characterization_id,
                "pos": e.pos,
                "lok_used": e.lok_used,
                "scale_kind": e.scale_kind,
            }
            for e in ws.pos_entries
        ],
        "records": {
            cid: {
                "global_lok": rec.global_lok,
                "consensus_pos": rec.consensus_pos,
            }
            for cid, rec in sorted(ws.records.items())
        },
        "region": region_to_config(ws.region),
        "comparison_seq": ws.comparison_seq,
    }


def workspace_from_json(data: dict) -> Workspace:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(
            "unsupported schema_version %r (expected %d)"
            % (data.get("schema_version"), SCHEMA_VERSION)
        )
    return Workspace(
        id=data["id"],
        version=data["version"],
        risk_factors=tuple(
            RiskFactor(id=x["id"], name=x["name"], questionnaire_id=x["questionnaire_id"])
            for x in data["risk_factors"]
        ),
        questionnaires=tuple(_questionnaire_from_json(x) for x in data["questionnaires"]),
        experts=tuple(
            Expert(id=x["id"], display_name=x["display_name"]) for x in data["experts"]
        ),
        characterizations=tuple(
            Characterization(
                id=x["id"],
                prospect_id=x["prospect_id"],
                risk_factor_id=x["risk_factor_id"],
                answers=dict(x["answers"]),
                status=x["status"],
            )
            for x in data["characterizations"]
        ),
        comparisons={
            expert_id: tuple((cmp_id, _relation_from_json(rel)) for cmp_id, rel in rows)
            for expert_id, rows in data["comparisons"].items()
        },
        pos_entries=tuple(
            PosEntry(
                expert_id=x["expert_id"],
                characterization_id=x["characterization_id"],
                pos=x["pos"],
                lok_used=x["lok_used"],
                scale_kind=x["scale_kind"],
            )
            for x in data["pos_entries"]
        ),
        records={
            cid: AssessmentRecord(
                characterization_id=cid,
                global_lok=x["global_lok"],
                consensus_pos=x["consensus_pos"],
            )
            for cid, x in data["records"].items()
        },
        region=region_from_config(data["region"]),
        comparison_seq=data["comparison_seq"],
    )


# --- file-backed store -------------------------------------------------------


class WorkspaceStore:
    """All workspaces under one directory, one snapshot + one log each.

    In-memory copies are authoritative within a process; the snapshot file
    is rewritten atomically on every commit. Not safe for concurrent
    writers from separate processes; the optimistic version check protects
    interleaved writers sharing one store object.
    """

    def __init__(self, root: Optional[str] = None):
        self.root = root
        if root is not None:
            os.makedirs(root, exist_ok=True)
        self._cache: dict[str, Workspace] = {}
        self._lock = threading.Lock()

    def _snapshot_path(self, workspace_id: str) -> Optional[str]:
        if self.root is None:
            return None
        return os.path.join(self.root, "%s.json" % workspace_id)

    def _log_path(self, workspace_id: str) -> Optional[str]:
        if self.root is None:
            return None
        return os.path.join(self.root, "%s.log.jsonl" % workspace_id)

    def list_ids(self) -> list[str]:
        ids = set(self._cache)
        if self.root is not None:
            for name in os.listdir(self.root):
                if name.endswith(".json"):
                    ids.add(name[: -len(".json")])
        return sorted(ids)

    def create(
        self, workspace_id: str, region: Optional[LikelihoodRegion] = None
    ) -> Workspace:
        if workspace_id in self.list_ids():
            raise ValidationFailed("workspace %r already exists" % workspace_id)
        if not workspace_id or "/" in workspace_id:
            raise ValidationFailed("workspace id must be a non-empty path-safe name")
        ws = Workspace(id=workspace_id, region=region or DEFAULT_REGION)
        self._cache[workspace_id] = ws
        self._write_snapshot(ws)
        return ws

    def get(self, workspace_id: str) -> Workspace:
        if workspace_id in self._cache:
            return self._cache[workspace_id]
        path = self._snapshot_path(workspace_id)
        if path is None or not os.path.exists(path):
            raise UnknownWorkspace(workspace_id)
        ws = self._load(path)
        self._cache[workspace_id] = ws
        return ws

    def _load(self, path: str) -> Workspace:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StoreCorrupt(path, exc.pos, exc.msg) from exc
        try:
            return workspace_from_json(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise StoreCorrupt(path, 0, "invalid workspace document: %s" % exc) from exc

    def commit(
        self, workspace_id: str, expected_version: int, mutation: Mutation
    ) -> Applied:
        """Apply one mutation at the expected version; returns the new state."""
        with self._lock:
            current = self.get(workspace_id)
            if current.version != expected_version:
                raise VersionConflict(workspace_id, expected_version, current.version)
            applied = apply_mutation(current, mutation)
            bumped = replace(applied.workspace, version=current.version + 1)
            result = Applied(
                workspace=bumped,
                comparison_id=applied.comparison_id,
                implied=applied.implied,
            )
            self._cache[workspace_id] = bumped
            self._write_snapshot(bumped)
            self._append_log(workspace_id, bumped.version, mutation)
            return result

    def _write_snapshot(self, ws: Workspace) -> None:
        path = self._snapshot_path(ws.id)
        if path is None:
            return
        payload = json.dumps(workspace_to_json(ws), indent=2, sort_keys=True)
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".%s." % ws.id)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload + "\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def _append_log(self, workspace_id: str, version: int, mutation: Mutation) -> None:
        path = self._log_path(workspace_id)
        if path is None:
            return
        row = {"version": version, "mutation": _mutation_to_json(mutation)}
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _mutation_to_json(m: Mutation) -> dict:
    if isinstance(m, AddRiskFactor):
        rf = m.risk_factor
        return {
            "type": "add_risk_factor",
            "risk_factor": {"id": rf.id, "name": rf.name, "questionnaire_id": rf.questionnaire_id},
        }
    if isinstance(m, SetQuestionnaire):
        return {"type": "set_questionnaire", "questionnaire": _questionnaire_to_json(m.questionnaire)}
    if isinstance(m, AddExpert):
        return {
            "type": "add_expert",
            "expert": {"id": m.expert.id, "display_name": m.expert.display_name},
        }
    if isinstance(m, AddCharacterization):
        c = m.characterization
        return {
            "type": "add_characterization",
            "characterization": {
                "id": c.id,
                "prospect_id": c.prospect_id,
                "risk_factor_id": c.risk_factor_id,
                "answers": dict(c.answers),
                "status": c.status,
            },
        }
    if isinstance(m, SetCharacterizationStatus):
        return {
            "type": "set_characterization_status",
            "characterization_id": m.characterization_id,
            "status": m.status,
        }
    if isinstance(m, AddComparison):
        return {
            "type": "add_comparison",
            "expert_id": m.expert_id,
            "relation": _relation_to_json(m.relation),
        }
    if isinstance(m, RemoveComparison):
        return {
            "type": "remove_comparison",
            "expert_id": m.expert_id,
            "comparison_id": m.comparison_id,
        }
    if isinstance(m, RecordPosEntry):
        e = m.entry
        return {
            "type": "record_pos_entry",
            "entry": {
                "expert_id": e.expert_id,
                "characterization_id": e.characterization_id,
                "pos": e.pos,
                "lok_used": e.lok_used,
                "scale_kind": e.scale_kind,
            },
        }
    if isinstance(m, RecordAssessment):
        return {
            "type": "record_assessment",
            "characterization_id": m.characterization_id,
            "global_lok": m.global_lok,
            "consensus_pos": m.consensus_pos,
        }
    if isinstance(m, SetRegion):
        return {"type": "set_region", "region": region_to_config(m.region)}
    raise ValueError("unserializable mutation %r" % type(m).__name__)
