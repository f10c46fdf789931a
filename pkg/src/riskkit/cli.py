"""Command-line interface.

Every command prints one JSON document to stdout and exits 0, or prints
the standard error envelope and exits 1, so shell pipelines can treat the
output uniformly. State lives in the file-backed workspace store named by
the configuration (``storage_path``, or the RISKKIT_STORAGE variable);
consecutive invocations see each other's commits through the snapshots.

The ``oracle`` subcommands recompute results with the slow reference
algorithms (full enumeration, grid search) so a workshop operator can
cross-check a live solve without trusting the fast path.
"""

from __future__ import annotations

import functools
import json
import sys
from typing import Optional

import click

from .calibration import CalibrationProblem, grid_best_objective
from .comparisons import Relation
from .config import Config, load_config
from .consensus import brute_force_consensus, solve_consensus
from .errors import DOMAIN_ERRORS, describe, envelope
from .model import Characterization, Expert, Question, Questionnaire, RiskFactor
from .pos import PosEntry
from .service import AssessmentService
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
    WorkspaceStore,
    graph_for,
    workspace_to_json,
)

DEFAULT_STORAGE = "riskkit-data"


class CliState:
    def __init__(self, config: Config, workspace_id: str):
        self.config = config
        self.workspace_id = workspace_id
        self.store = WorkspaceStore(config.storage_path or DEFAULT_STORAGE)
        self.service = AssessmentService(self.store, config)

    def workspace(self):
        return self.store.get(self.workspace_id)

    def commit(self, mutation):
        current = self.workspace()
        return self.store.commit(self.workspace_id, current.version, mutation)


pass_state = click.make_pass_decorator(CliState)


def emit(data) -> None:
    click.echo(json.dumps(data, indent=2, sort_keys=True))


def guarded(fn):
    """Print the command's dict result, or the error envelope and exit 1."""

    @functools.wraps(fn)
    def inner(*args, **kwargs):
        try:
            emit(fn(*args, **kwargs))
        except DOMAIN_ERRORS as exc:
            described = describe(exc)
            if described is None:
                raise
            _, code, message, details = described
            emit(envelope(code, message, details))
            sys.exit(1)

    return inner


@click.group()
@click.option(
    "--config",
    "config_path",
    envvar="RISKKIT_CONFIG",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON config file; RISKKIT_PORT and RISKKIT_STORAGE still override it.",
)
@click.option(
    "--workspace",
    "-w",
    envvar="RISKKIT_WORKSPACE",
    default="default",
    show_default=True,
    help="Workspace id the command operates on.",
)
@click.pass_context
def main(ctx, config_path: Optional[str], workspace: str):
    """Expert-in-the-loop risk assessment toolkit."""
    ctx.obj = CliState(load_config(config_path), workspace)


@main.command()
@pass_state
@guarded
def init(state: CliState):
    """Create the workspace."""
    ws = state.store.create(state.workspace_id, region=state.config.region)
    return {"workspace": ws.id, "version": ws.version}


@main.command()
@pass_state
@guarded
def show(state: CliState):
    """Print the workspace snapshot document."""
    return workspace_to_json(state.workspace())


def _import_section(data, key, handler) -> int:
    count = 0
    for item in data.get(key, []):
        handler(item)
        count += 1
    return count


@main.command("import")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@pass_state
@guarded
def import_(state: CliState, path: str):
    """Load catalog data, comparisons and assessments from one JSON file.

    Sections are applied in dependency order: risk_factors, questionnaires,
    experts, characterizations, comparisons, pos_entries, assessments.
    """
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)

    counts = {}
    counts["risk_factors"] = _import_section(
        data,
        "risk_factors",
        lambda x: state.commit(
            AddRiskFactor(
                RiskFactor(
                    id=x["id"],
                    name=x.get("name", x["id"]),
                    questionnaire_id=x["questionnaire_id"],
                )
            )
        ),
    )
    counts["questionnaires"] = _import_section(
        data,
        "questionnaires",
        lambda x: state.commit(
            SetQuestionnaire(
                Questionnaire(
                    id=x["id"],
                    risk_factor_id=x["risk_factor_id"],
                    questions=tuple(
                        Question(
                            id=q["id"],
                            text=q.get("text", q["id"]),
                            options=tuple(
                                (o["id"], o.get("label", o["id"]))
                                for o in q["options"]
                            ),
                        )
                        for q in x["questions"]
                    ),
                )
            )
        ),
    )
    counts["experts"] = _import_section(
        data,
        "experts",
        lambda x: state.commit(
            AddExpert(Expert(id=x["id"], display_name=x.get("display_name", x["id"])))
        ),
    )
    counts["characterizations"] = _import_section(
        data,
        "characterizations",
        lambda x: state.commit(
            AddCharacterization(
                Characterization(
                    id=x["id"],
                    prospect_id=x["prospect_id"],
                    risk_factor_id=x["risk_factor_id"],
                    answers=dict(x.get("answers", {})),
                    status=x.get("status", "draft"),
                )
            )
        ),
    )
    counts["comparisons"] = _import_section(
        data,
        "comparisons",
        lambda x: state.commit(
            AddComparison(x["expert_id"], Relation(kind=x["kind"], a=x["a"], b=x["b"]))
        ),
    )
    counts["pos_entries"] = _import_section(
        data,
        "pos_entries",
        lambda x: state.commit(
            RecordPosEntry(
                PosEntry(
                    expert_id=x["expert_id"],
                    characterization_id=x["characterization_id"],
                    pos=x["pos"],
                    lok_used=x["lok_used"],
                    scale_kind=x.get("scale_kind", "expert"),
                )
            )
        ),
    )
    counts["assessments"] = _import_section(
        data,
        "assessments",
        lambda x: state.commit(
            RecordAssessment(
                characterization_id=x["characterization_id"],
                global_lok=x["global_lok"],
                consensus_pos=x.get("consensus_pos"),
            )
        ),
    )
    return {"version": state.workspace().version, "imported": counts}


@main.command()
@click.argument("kind", type=click.Choice(["lt", "eq"]))
@click.argument("a")
@click.argument("b")
@click.option("--expert", "-e", "expert_id", required=True)
@pass_state
@guarded
def compare(state: CliState, kind: str, a: str, b: str, expert_id: str):
    """Assert that A is less (lt) or equally (eq) knowable compared to B."""
    result = state.commit(AddComparison(expert_id, Relation(kind=kind, a=a, b=b)))
    return {
        "version": result.workspace.version,
        "comparison_id": result.comparison_id,
        "implied": result.implied,
    }


@main.command("remove-comparison")
@click.argument("comparison_id")
@click.option("--expert", "-e", "expert_id", required=True)
@pass_state
@guarded
def remove_comparison(state: CliState, comparison_id: str, expert_id: str):
    """Retract a previously asserted comparison."""
    result = state.commit(RemoveComparison(expert_id, comparison_id))
    return {"version": result.workspace.version}


@main.command()
@click.argument("characterization_id")
@click.argument("status", type=click.Choice(["draft", "assessed", "peer_reviewed"]))
@pass_state
@guarded
def status(state: CliState, characterization_id: str, status: str):
    """Advance a characterization's review status."""
    result = state.commit(SetCharacterizationStatus(characterization_id, status))
    return {"version": result.workspace.version, "status": status}


@main.command()
@click.argument("characterization_id")
@click.option("--global-lok", type=float, required=True)
@click.option("--consensus-pos", type=float, default=None)
@pass_state
@guarded
def assess(state: CliState, characterization_id: str, global_lok: float, consensus_pos):
    """Record the confirmed assessment outcome for a characterization."""
    result = state.commit(
        RecordAssessment(
            characterization_id=characterization_id,
            global_lok=global_lok,
            consensus_pos=consensus_pos,
        )
    )
    return {"version": result.workspace.version}


@main.group()
def lok():
    """Level-of-knowledge scales."""


def _scale_payload(state: CliState, scale) -> dict:
    ws = state.workspace()
    return {
        "kind": scale.kind,
        "expert_id": scale.expert_id,
        "scores": scale.scores,
        "objective": scale.objective,
        "threshold": scale.t,
        "reference": state.service.reference_scores(ws),
        "version": ws.version,
    }


@lok.command("expert")
@click.argument("expert_id")
@pass_state
@guarded
def lok_expert(state: CliState, expert_id: str):
    """Calibrated scale for one expert's comparisons."""
    scale = state.service.expert_scale(state.workspace_id, expert_id)
    return _scale_payload(state, scale)


@lok.command("global")
@pass_state
@guarded
def lok_global(state: CliState):
    """Consensus-constrained global scale."""
    outcome = state.service.global_outcome(state.workspace_id)
    payload = _scale_payload(state, outcome.scale)
    payload["consensus_levels"] = outcome.consensus.level
    payload["consensus_objective"] = outcome.consensus.objective
    return payload


@main.group()
def pos():
    """Probability-of-success entry and consensus."""


@pos.command("region")
@click.option("--lok", type=float, required=True)
@pass_state
@guarded
def pos_region(state: CliState, lok: float):
    """Allowed POS intervals at a level of knowledge."""
    intervals = state.service.pos_intervals(state.workspace_id, lok)
    return {"lok": lok, "intervals": [[lo, hi] for lo, hi in intervals]}


@pos.command("validate")
@click.option("--lok", type=float, required=True)
@click.option("--pos", "pos_value", type=float, required=True)
@pass_state
@guarded
def pos_validate(state: CliState, lok: float, pos_value: float):
    """Check a POS value against the region; reports the nearest allowed."""
    verdict = state.service.pos_validate(state.workspace_id, lok, pos_value)
    return {
        "lok": lok,
        "pos": pos_value,
        "accepted": verdict.accepted,
        "nearest": verdict.nearest,
    }


@pos.command("entry")
@click.argument("characterization_id")
@click.option("--expert", "-e", "expert_id", required=True)
@click.option("--pos", "pos_value", type=float, required=True)
@click.option("--lok", type=float, required=True)
@click.option(
    "--scale-kind", type=click.Choice(["expert", "global"]), default="expert",
    show_default=True,
)
@pass_state
@guarded
def pos_entry(state, characterization_id, expert_id, pos_value, lok, scale_kind):
    """Store one expert's POS judgement for a characterization."""
    result = state.commit(
        RecordPosEntry(
            PosEntry(
                expert_id=expert_id,
                characterization_id=characterization_id,
                pos=pos_value,
                lok_used=lok,
                scale_kind=scale_kind,
            )
        )
    )
    return {"version": result.workspace.version}


@pos.command("consensus")
@click.argument("characterization_id")
@pass_state
@guarded
def pos_consensus(state: CliState, characterization_id: str):
    """Median of the experts' POS entries, projected into the region."""
    result = state.service.pos_consensus(state.workspace_id, characterization_id)
    return {
        "characterization_id": result.characterization_id,
        "pos": result.pos,
        "global_lok": result.global_lok,
        "entry_count": result.entry_count,
        "expert_ids": list(result.expert_ids),
    }


@main.command()
@click.argument("characterization_id")
@click.option("-k", "k", type=int, default=5, show_default=True)
@pass_state
@guarded
def similar(state: CliState, characterization_id: str, k: int):
    """Closest peer-reviewed characterizations by answer similarity."""
    rows = state.service.similar_assessments(state.workspace_id, characterization_id, k)
    return {
        "similar": [
            {
                "characterization_id": r.characterization_id,
                "similarity": r.similarity,
                "status": r.status,
                "global_lok": r.global_lok,
                "consensus_pos": r.consensus_pos,
            }
            for r in rows
        ]
    }


@main.group()
def oracle():
    """Slow reference recomputations for cross-checking live results."""


@oracle.command("consensus")
@click.option("--max", "max_ids", type=int, default=5, show_default=True)
@pass_state
@guarded
def oracle_consensus(state: CliState, max_ids: int):
    """Re-solve the consensus by full enumeration and compare."""
    ws = state.workspace()
    weights = state.service.consensus_weights(ws)
    if len(weights.ids) > max_ids:
        raise ValueError(
            "enumeration refused: %d ids exceed --max %d"
            % (len(weights.ids), max_ids)
        )
    reference = brute_force_consensus(weights)  # hard cap of 5 ids inside
    solved = solve_consensus(weights, exact_bound=state.config.exact_bound)
    return {
        "objective": reference.objective,
        "levels": reference.level,
        "solver_objective": solved.objective,
        "solver_levels": solved.level,
        "agreement": reference.level == solved.level
        and reference.objective == solved.objective,
    }


@oracle.command("calibrate")
@click.option("--expert", "-e", "expert_id", default=None, help="Expert scale; global when omitted.")
@click.option("--step", type=float, default=0.001, show_default=True)
@pass_state
@guarded
def oracle_calibrate(state: CliState, expert_id: Optional[str], step: float):
    """Grid-search the calibration objective and compare it with the LP."""
    ws = state.workspace()
    refs = state.service.reference_scores(ws)
    if expert_id is None:
        outcome = state.service.global_outcome(state.workspace_id)
        scale = outcome.scale
        gt, eqs = outcome.gt, outcome.eq
    else:
        scale = state.service.expert_scale(state.workspace_id, expert_id)
        gt, eqs = graph_for(ws, expert_id).extract_gt_eq()
    problem = CalibrationProblem(
        ids=tuple(sorted(refs)),
        reference=refs,
        gt=frozenset(gt),
        eq=frozenset(eqs),
        t=state.config.threshold,
    )
    grid = grid_best_objective(problem, step=step)
    tolerance = 2 * len(problem.ids) * step + 1e-12
    return {
        "lp_objective": scale.objective,
        "grid_objective": grid,
        "within_tolerance": grid is not None
        and grid - tolerance <= scale.objective <= grid + 1e-12,
    }


@main.command()
@click.option("--port", type=int, default=None, help="Overrides the configured port.")
@click.option("--host", default="127.0.0.1", show_default=True)
@pass_state
def serve(state: CliState, port: Optional[int], host: str):
    """Run the HTTP API server."""
    import uvicorn

    from .api import create_app

    app = create_app(state.config, state.store)
    uvicorn.run(app, host=host, port=port or state.config.port, log_level="warning")


if __name__ == "__main__":
    main()
