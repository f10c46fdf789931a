"""HTTP surface over the assessment service.

Every handler is a thin translation layer: parse the request, call one
service or store operation, shape the result as JSON. All domain rules
live below this module, so responses are pure functions of the workspace
version and can be cached against it. Errors use one envelope:
``{"error": {"code": ..., "message": ..., "details": {...}}}``.

Writes that act on behalf of an expert (comparisons, POS entries) must
carry the expert's id in the ``X-Expert-Id`` header; that static header is
the entire authentication model, matching the trusted-workshop setting
this runs in.
"""

from __future__ import annotations

from typing import Optional

from fastapi import Body, FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .calibration import LokScale
from .comparisons import Relation
from .config import Config
from .errors import DOMAIN_ERRORS, describe, relation_json as _relation_json
from .model import Characterization, Expert, Question, Questionnaire, RiskFactor
from .pos import PosEntry, allowed_intervals, region_to_config
from .service import AssessmentService, UnknownEntity
from .store import (
    AddCharacterization,
    AddComparison,
    AddExpert,
    AddRiskFactor,
    RecordAssessment,
    RecordPosEntry,
    RemoveComparison,
    SetCharacterizationStatus,
    SetQuestionnaire,
    ValidationFailed,
    Workspace,
    WorkspaceStore,
    graph_for,
)

__all__ = ["create_app", "app"]


class AuthRejected(Exception):
    """Caller's X-Expert-Id header is missing or names a different expert."""


def _error(status: int, code: str, message: str, details: Optional[dict] = None):
    payload = {"error": {"code": code, "message": message, "details": details or {}}}
    return JSONResponse(status_code=status, content=payload)


def _parse_relation(data: dict) -> Relation:
    try:
        return Relation(kind=data["kind"], a=data["a"], b=data["b"])
    except KeyError as exc:
        raise ValidationFailed("relation needs kind, a and b") from exc


def _scale_json(scale: LokScale, version: int, reference: dict) -> dict:
    return {
        "kind": scale.kind,
        "expert_id": scale.expert_id,
        "scores": scale.scores,
        "objective": scale.objective,
        "threshold": scale.t,
        "reference": reference,
        "version": version,
    }


def _workspace_json(ws: Workspace) -> dict:
    return {
        "id": ws.id,
        "version": ws.version,
        "risk_factors": [
            {"id": rf.id, "name": rf.name, "questionnaire_id": rf.questionnaire_id}
            for rf in ws.risk_factors
        ],
        "questionnaires": [
            {
                "id": q.id,
                "risk_factor_id": q.risk_factor_id,
                "questions": [
                    {
                        "id": question.id,
                        "text": question.text,
                        "options": [
                            {"id": oid, "label": label} for oid, label in question.options
                        ],
                    }
                    for question in q.questions
                ],
            }
            for q in ws.questionnaires
        ],
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
        "records": {
            cid: {"global_lok": r.global_lok, "consensus_pos": r.consensus_pos}
            for cid, r in sorted(ws.records.items())
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
        "comparisons": {
            expert_id: [
                {"comparison_id": cmp_id, **_relation_json(rel)} for cmp_id, rel in rows
            ]
            for expert_id, rows in sorted(ws.comparisons.items())
        },
        "region": region_to_config(ws.region),
    }


def _parse_questionnaire(data: dict) -> Questionnaire:
    return Questionnaire(
        id=data["id"],
        risk_factor_id=data["risk_factor_id"],
        questions=tuple(
            Question(
                id=q["id"],
                text=q.get("text", q["id"]),
                options=tuple((o["id"], o.get("label", o["id"])) for o in q["options"]),
            )
            for q in data["questions"]
        ),
    )


def _parse_characterization(data: dict) -> Characterization:
    return Characterization(
        id=data["id"],
        prospect_id=data["prospect_id"],
        risk_factor_id=data["risk_factor_id"],
        answers=dict(data.get("answers", {})),
        status=data.get("status", "draft"),
    )


def create_app(config: Optional[Config] = None, store: Optional[WorkspaceStore] = None) -> FastAPI:
    config = config or Config()
    store = store or WorkspaceStore(config.storage_path)
    service = AssessmentService(store, config)
    app = FastAPI(title="riskkit", docs_url=None, redoc_url=None)
    app.state.service = service
    app.state.store = store
    app.state.config = config

    if config.cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    # --- error envelope ------------------------------------------------------

    async def _domain_error(request: Request, exc: BaseException):
        status, code, message, details = describe(exc)
        return _error(status, code, message, details)

    for exc_type in DOMAIN_ERRORS:
        app.add_exception_handler(exc_type, _domain_error)

    @app.exception_handler(AuthRejected)
    async def _forbidden(request: Request, exc: AuthRejected):
        return _error(403, "forbidden", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        return _error(422, "validation", "malformed request", {"errors": exc.errors()})

    # --- helpers -------------------------------------------------------------

    def commit(workspace_id: str, mutation, expected: Optional[int]):
        current = store.get(workspace_id)
        version = current.version if expected is None else expected
        return store.commit(workspace_id, version, mutation)

    def require_expert_header(header: Optional[str], expert_id: str) -> None:
        if header is None:
            raise AuthRejected("X-Expert-Id header is required for expert writes")
        if header != expert_id:
            raise AuthRejected(
                "X-Expert-Id %r does not match the addressed expert %r"
                % (header, expert_id)
            )

    # --- workspaces ----------------------------------------------------------

    @app.get("/workspaces")
    def list_workspaces():
        return {"workspaces": store.list_ids()}

    @app.post("/workspaces", status_code=201)
    def create_workspace(payload: dict = Body(...)):
        workspace_id = payload.get("id")
        if not workspace_id:
            raise ValidationFailed("workspace id is required")
        ws = store.create(workspace_id, region=config.region)
        return _workspace_json(ws)

    @app.get("/workspaces/{workspace_id}")
    def get_workspace(workspace_id: str):
        return _workspace_json(store.get(workspace_id))

    @app.put("/workspaces/{workspace_id}/questionnaire")
    def put_questionnaire(workspace_id: str, payload: dict = Body(...)):
        expected = payload.get("expected_version")
        ws = store.get(workspace_id)
        if "risk_factor" in payload:
            rf = payload["risk_factor"]
            if all(x.id != rf["id"] for x in ws.risk_factors):
                result = commit(
                    workspace_id,
                    AddRiskFactor(
                        RiskFactor(
                            id=rf["id"],
                            name=rf.get("name", rf["id"]),
                            questionnaire_id=rf["questionnaire_id"],
                        )
                    ),
                    expected,
                )
                expected = result.workspace.version
        questionnaire = _parse_questionnaire(payload["questionnaire"])
        result = commit(workspace_id, SetQuestionnaire(questionnaire), expected)
        return {"version": result.workspace.version, "questionnaire_id": questionnaire.id}

    @app.post("/workspaces/{workspace_id}/experts", status_code=201)
    def add_expert(workspace_id: str, payload: dict = Body(...)):
        expert = Expert(
            id=payload["id"], display_name=payload.get("display_name", payload["id"])
        )
        result = commit(workspace_id, AddExpert(expert), payload.get("expected_version"))
        return {"version": result.workspace.version, "expert_id": expert.id}

    @app.post("/workspaces/{workspace_id}/characterizations", status_code=201)
    def add_characterizations(workspace_id: str, payload: dict = Body(...)):
        items = payload["items"] if "items" in payload else [payload]
        expected = payload.get("expected_version") if "items" in payload else None
        stored = []
        for item in items:
            c = _parse_characterization(item)
            result = commit(workspace_id, AddCharacterization(c), expected)
            expected = result.workspace.version
            stored.append(c.id)
        return {"version": store.get(workspace_id).version, "characterization_ids": stored}

    @app.post("/workspaces/{workspace_id}/characterizations/{characterization_id}/status")
    def set_status(workspace_id: str, characterization_id: str, payload: dict = Body(...)):
        result = commit(
            workspace_id,
            SetCharacterizationStatus(characterization_id, payload["status"]),
            payload.get("expected_version"),
        )
        return {"version": result.workspace.version, "status": payload["status"]}

    @app.post("/workspaces/{workspace_id}/assessments")
    def record_assessment(workspace_id: str, payload: dict = Body(...)):
        result = commit(
            workspace_id,
            RecordAssessment(
                characterization_id=payload["characterization_id"],
                global_lok=payload["global_lok"],
                consensus_pos=payload.get("consensus_pos"),
            ),
            payload.get("expected_version"),
        )
        return {"version": result.workspace.version}

    # --- comparisons ---------------------------------------------------------

    @app.get("/workspaces/{workspace_id}/experts/{expert_id}/comparisons")
    def list_comparisons(workspace_id: str, expert_id: str):
        ws = store.get(workspace_id)
        try:
            ws.expert(expert_id)
        except KeyError:
            raise UnknownEntity("unknown expert %r" % expert_id) from None
        rows = ws.comparisons.get(expert_id, ())
        return {
            "version": ws.version,
            "comparisons": [
                {"comparison_id": cmp_id, **_relation_json(rel)} for cmp_id, rel in rows
            ],
            "closure": graph_for(ws, expert_id).adjacency(),
        }

    @app.post(
        "/workspaces/{workspace_id}/experts/{expert_id}/comparisons", status_code=201
    )
    def add_comparison(
        workspace_id: str,
        expert_id: str,
        payload: dict = Body(...),
        x_expert_id: Optional[str] = Header(default=None),
    ):
        require_expert_header(x_expert_id, expert_id)
        relation = _parse_relation(payload)
        result = commit(
            workspace_id,
            AddComparison(expert_id, relation),
            payload.get("expected_version"),
        )
        return {
            "version": result.workspace.version,
            "comparison_id": result.comparison_id,
            "implied": result.implied,
        }

    @app.delete("/workspaces/{workspace_id}/experts/{expert_id}/comparisons/{comparison_id}")
    def delete_comparison(
        workspace_id: str,
        expert_id: str,
        comparison_id: str,
        expected_version: Optional[int] = Query(default=None),
        x_expert_id: Optional[str] = Header(default=None),
    ):
        require_expert_header(x_expert_id, expert_id)
        result = commit(
            workspace_id, RemoveComparison(expert_id, comparison_id), expected_version
        )
        return {"version": result.workspace.version}

    # --- scales and consensus ------------------------------------------------

    @app.get("/workspaces/{workspace_id}/experts/{expert_id}/lok-scale")
    def expert_lok_scale(workspace_id: str, expert_id: str):
        ws = store.get(workspace_id)
        scale = service.expert_scale(workspace_id, expert_id)
        return _scale_json(scale, ws.version, service.reference_scores(ws))

    @app.post("/workspaces/{workspace_id}/consensus/solve")
    def solve_consensus_endpoint(workspace_id: str):
        outcome = service.global_outcome(workspace_id)
        stats = outcome.consensus.stats
        return {
            "version": outcome.version,
            "levels": outcome.consensus.level,
            "objective": outcome.consensus.objective,
            "pair_weights": {
                "%s|%s" % pair: list(tally)
                for pair, tally in sorted(outcome.weights.counts.items())
            },
            "stats": None
            if stats is None
            else {"nodes": stats.nodes, "runtime_ms": stats.runtime_ms},
        }

    @app.get("/workspaces/{workspace_id}/global-lok-scale")
    def global_lok_scale(workspace_id: str):
        ws = store.get(workspace_id)
        outcome = service.global_outcome(workspace_id)
        payload = _scale_json(outcome.scale, ws.version, service.reference_scores(ws))
        payload["consensus_levels"] = outcome.consensus.level
        payload["consensus_objective"] = outcome.consensus.objective
        return payload

    # --- pos -----------------------------------------------------------------

    @app.get("/workspaces/{workspace_id}/pos/region")
    def pos_region(workspace_id: str, lok: float = Query(...)):
        ws = store.get(workspace_id)
        intervals = allowed_intervals(ws.region, lok)
        return {
            "version": ws.version,
            "lok": lok,
            "intervals": [[lo, hi] for lo, hi in intervals],
        }

    @app.post("/workspaces/{workspace_id}/pos/validate")
    def pos_validate(workspace_id: str, payload: dict = Body(...)):
        verdict = service.pos_validate(workspace_id, payload["lok"], payload["pos"])
        return {
            "version": store.get(workspace_id).version,
            "accepted": verdict.accepted,
            "nearest": verdict.nearest,
        }

    @app.post("/workspaces/{workspace_id}/pos/entries", status_code=201)
    def add_pos_entry(
        workspace_id: str,
        payload: dict = Body(...),
        x_expert_id: Optional[str] = Header(default=None),
    ):
        require_expert_header(x_expert_id, payload.get("expert_id", ""))
        entry = PosEntry(
            expert_id=payload["expert_id"],
            characterization_id=payload["characterization_id"],
            pos=payload["pos"],
            lok_used=payload["lok_used"],
            scale_kind=payload.get("scale_kind", "expert"),
        )
        result = commit(
            workspace_id, RecordPosEntry(entry), payload.get("expected_version")
        )
        return {"version": result.workspace.version}

    @app.post("/workspaces/{workspace_id}/pos/consensus")
    def pos_consensus(workspace_id: str, payload: dict = Body(...)):
        result = service.pos_consensus(workspace_id, payload["characterization_id"])
        return {
            "version": store.get(workspace_id).version,
            "characterization_id": result.characterization_id,
            "pos": result.pos,
            "global_lok": result.global_lok,
            "entry_count": result.entry_count,
            "expert_ids": list(result.expert_ids),
        }

    # --- similarity ----------------------------------------------------------

    @app.get("/workspaces/{workspace_id}/characterizations/{characterization_id}/similar")
    def similar(workspace_id: str, characterization_id: str, k: int = Query(default=5)):
        rows = service.similar_assessments(workspace_id, characterization_id, k)
        return {
            "version": store.get(workspace_id).version,
            "similar": [
                {
                    "characterization_id": r.characterization_id,
                    "similarity": r.similarity,
                    "status": r.status,
                    "global_lok": r.global_lok,
                    "consensus_pos": r.consensus_pos,
                }
                for r in rows
            ],
        }

    @app.get("/workspaces/{workspace_id}/characterizations/{characterization_id}/plot-data")
    def plot_data(workspace_id: str, characterization_id: str, k: int = Query(default=5)):
        data = service.plot_data(workspace_id, characterization_id, k)
        data["version"] = store.get(workspace_id).version
        return data

    return app


# uvicorn entry point (riskkit.api:app): configuration from the environment,
# built lazily via module __getattr__ so plain imports stay side-effect free
def _default_app() -> FastAPI:
    import os

    from .config import load_config

    path = os.environ.get("RISKKIT_CONFIG")
    return create_app(load_config(path))


def __getattr__(name: str):
    if name == "app":
        return _default_app()
    raise AttributeError(name)
