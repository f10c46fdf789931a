"""The whole assessment loop in one pass, against the real store and service.

History first: two characterizations were peer reviewed in earlier rounds,
so the reference model has something to learn from. Then two experts
compare the new ones, the consensus is solved, the global scale is
calibrated, and the experts' POS entries are merged at the global LOK.

Everything here is the same code path the HTTP API and CLI use.
"""

from riskkit import Characterization, Expert, Question, Questionnaire, RiskFactor, lt
from riskkit.config import Config
from riskkit.service import AssessmentService
from riskkit.store import (
    AddCharacterization,
    AddComparison,
    AddExpert,
    AddRiskFactor,
    PosEntry,
    RecordAssessment,
    RecordPosEntry,
    SetCharacterizationStatus,
    SetQuestionnaire,
    WorkspaceStore,
)

QUESTIONNAIRE = Questionnaire(
    id="q-seal",
    risk_factor_id="rf-seal",
    questions=(
        Question("coverage", "Mapping coverage", (("full", "Full"), ("partial", "Partial"))),
        Question("analogue", "Known analogue", (("yes", "Yes"), ("no", "No"))),
    ),
)


def char(cid, coverage, analogue, status="draft"):
    return Characterization(
        id=cid,
        prospect_id="prospect-%s" % cid,
        risk_factor_id="rf-seal",
        answers={"coverage": coverage, "analogue": analogue},
        status=status,
    )


def main():
    store = WorkspaceStore()  # in-memory; pass a directory for persistence
    service = AssessmentService(store, Config())
    store.create("demo")

    def commit(mutation):
        return store.commit("demo", store.get("demo").version, mutation)

    commit(AddRiskFactor(RiskFactor("rf-seal", "Seal quality", "q-seal")))
    commit(SetQuestionnaire(QUESTIONNAIRE))
    for eid in ("alice", "bob"):
        commit(AddExpert(Expert(eid, eid.title())))

    # two rounds of history the reference model can learn from
    commit(AddCharacterization(char("char-old1", "full", "yes", "peer_reviewed")))
    commit(AddCharacterization(char("char-old2", "partial", "no", "peer_reviewed")))
    commit(RecordAssessment("char-old1", global_lok=0.85, consensus_pos=0.15))
    commit(RecordAssessment("char-old2", global_lok=0.35, consensus_pos=0.45))

    # the current round
    commit(AddCharacterization(char("char-new1", "full", "no")))
    commit(AddCharacterization(char("char-new2", "partial", "no")))

    ws = store.get("demo")
    print("Reference LOK from history:")
    for cid, score in sorted(service.reference_scores(ws).items()):
        print("  %-10s %.3f" % (cid, score))

    commit(AddComparison("alice", lt("char-new2", "char-new1")))
    commit(AddComparison("bob", lt("char-new2", "char-new1")))

    outcome = service.global_outcome("demo")
    print()
    print("Global scale after consensus (new2 held below new1):")
    for cid, score in sorted(outcome.scale.scores.items()):
        print("  %-10s %.4f" % (cid, score))
    print("  consensus disagreement cost: %d" % outcome.consensus.objective)

    lok = outcome.scale.scores["char-new1"]
    commit(RecordPosEntry(PosEntry("alice", "char-new1", 0.10, lok, "global")))
    commit(RecordPosEntry(PosEntry("bob", "char-new1", 0.15, lok, "global")))
    result = service.pos_consensus("demo", "char-new1")
    print()
    print("Peer-reviewed POS for char-new1: %.4f at global lok %.4f (%d entries)"
          % (result.pos, result.global_lok, result.entry_count))

    commit(SetCharacterizationStatus("char-new1", "assessed"))
    commit(RecordAssessment("char-new1", global_lok=lok, consensus_pos=result.pos))
    commit(SetCharacterizationStatus("char-new1", "peer_reviewed"))
    print()
    print("char-new1 is now history for the next round; workspace version %d."
          % store.get("demo").version)


if __name__ == "__main__":
    main()
