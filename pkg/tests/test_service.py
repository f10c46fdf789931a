"""Service pipelines: reference scoring, scales, consensus, POS, similarity."""

import pytest

from fixtures import prospect_characterization, seed_trap_workspace
from riskkit.calibration import InfeasibleComparisonChain
from riskkit.comparisons import eq, lt
from riskkit.config import Config
from riskkit.consensus import SizeLimitExceeded
from riskkit.pos import PosEntry
from riskkit.service import (
    NEUTRAL_REFERENCE_LOK,
    AssessmentService,
    NothingToSolve,
    UnknownEntity,
)
from riskkit.store import (
    AddComparison,
    RecordAssessment,
    RecordPosEntry,
    SetCharacterizationStatus,
    WorkspaceStore,
)

CHARS = ["char-%s" % c for c in "abcde"]


def make_service(config=None, experts=("alice", "bob")):
    store = WorkspaceStore()
    commit = seed_trap_workspace(store, experts=experts)
    return AssessmentService(store, config), commit


def review(commit, label, lok, pos=None):
    """Walk one characterization through to a peer-reviewed record."""
    cid = "char-%s" % label.lower()
    commit(SetCharacterizationStatus(cid, "assessed"))
    commit(RecordAssessment(cid, global_lok=lok, consensus_pos=pos))
    commit(SetCharacterizationStatus(cid, "peer_reviewed"))


class TestReferenceScores:
    def test_no_history_gives_neutral_scores(self):
        service, commit = make_service()
        ws = service.store.get("ws-1")
        scores = service.reference_scores(ws)
        assert scores == {cid: NEUTRAL_REFERENCE_LOK for cid in CHARS}

    def test_history_feeds_nearest_neighbour_predictions(self):
        service, commit = make_service()
        review(commit, "B", 0.9)
        review(commit, "C", 0.7)
        review(commit, "D", 0.6)
        ws = service.store.get("ws-1")
        scores = service.reference_scores(ws)
        # training members reproduce their own confirmed lok (exact match)
        assert scores["char-b"] == pytest.approx(0.9)
        assert scores["char-c"] == pytest.approx(0.7)
        assert scores["char-d"] == pytest.approx(0.6)
        # char-a ties B, C and D at similarity 0.5; smallest id wins
        assert scores["char-a"] == pytest.approx(0.9)
        assert all(0.0 <= s <= 1.0 for s in scores.values())

    def test_model_survives_unrelated_commits(self):
        service, commit = make_service()
        review(commit, "B", 0.9)
        review(commit, "C", 0.7)
        ws = service.store.get("ws-1")
        first = service.reference_model(ws, "rf-trap-structure")
        commit(AddComparison("alice", lt("char-a", "char-b")))
        second = service.reference_model(service.store.get("ws-1"), "rf-trap-structure")
        assert second is first

    def test_new_peer_review_retrains(self):
        service, commit = make_service()
        review(commit, "B", 0.9)
        ws = service.store.get("ws-1")
        first = service.reference_model(ws, "rf-trap-structure")
        review(commit, "C", 0.7)
        second = service.reference_model(service.store.get("ws-1"), "rf-trap-structure")
        assert second is not first

    def test_no_examples_means_no_model(self):
        service, commit = make_service()
        ws = service.store.get("ws-1")
        assert service.reference_model(ws, "rf-trap-structure") is None


class TestExpertScale:
    def test_unknown_expert(self):
        service, commit = make_service()
        with pytest.raises(UnknownEntity):
            service.expert_scale("ws-1", "mallory")

    def test_without_comparisons_scale_equals_reference(self):
        service, commit = make_service()
        scale = service.expert_scale("ws-1", "alice")
        assert scale.kind == "expert"
        assert scale.expert_id == "alice"
        assert scale.objective == 0.0
        assert scale.scores == {cid: NEUTRAL_REFERENCE_LOK for cid in CHARS}

    def test_single_comparison_splits_around_reference(self):
        service, commit = make_service()
        commit(AddComparison("alice", lt("char-a", "char-b")))
        scale = service.expert_scale("ws-1", "alice")
        assert scale.scores["char-a"] == pytest.approx(0.475)
        assert scale.scores["char-b"] == pytest.approx(0.525)
        assert scale.objective == pytest.approx(0.05)
        # bob never compared anything, his scale stays at reference
        assert service.expert_scale("ws-1", "bob").objective == 0.0

    def test_scale_is_cached_per_version(self):
        service, commit = make_service()
        commit(AddComparison("alice", lt("char-a", "char-b")))
        first = service.expert_scale("ws-1", "alice")
        assert service.expert_scale("ws-1", "alice") is first
        commit(AddComparison("alice", lt("char-b", "char-c")))
        assert service.expert_scale("ws-1", "alice") is not first

    def test_overlong_chain_reports_infeasible(self):
        service, commit = make_service(Config(threshold=0.3))
        for a, b in zip(CHARS, CHARS[1:]):
            commit(AddComparison("alice", lt(a, b)))
        with pytest.raises(InfeasibleComparisonChain) as info:
            service.expert_scale("ws-1", "alice")
        assert info.value.chain == list(reversed(CHARS))


class TestGlobalScale:
    def test_no_characterizations_is_a_miss(self):
        store = WorkspaceStore()
        store.create("empty")
        service = AssessmentService(store)
        with pytest.raises(NothingToSolve):
            service.global_outcome("empty")

    def test_without_comparisons_global_is_reference(self):
        service, commit = make_service()
        outcome = service.global_outcome("ws-1")
        assert outcome.consensus.ids == ()
        assert outcome.consensus.objective == 0
        assert outcome.scale.scores == {cid: NEUTRAL_REFERENCE_LOK for cid in CHARS}

    def test_single_expert_global_matches_expert_scale(self):
        service, commit = make_service(experts=("alice",))
        commit(AddComparison("alice", lt("char-a", "char-b")))
        commit(AddComparison("alice", eq("char-b", "char-c")))
        commit(AddComparison("alice", lt("char-c", "char-d")))
        expert = service.expert_scale("ws-1", "alice")
        outcome = service.global_outcome("ws-1")
        assert outcome.scale.scores == expert.scores
        assert outcome.scale.objective == expert.objective
        assert outcome.scale.kind == "global"

    def test_two_against_one_takes_the_majority(self):
        service, commit = make_service(experts=("alice", "bob", "carol"))
        commit(AddComparison("alice", lt("char-a", "char-b")))
        commit(AddComparison("bob", lt("char-a", "char-b")))
        commit(AddComparison("carol", lt("char-b", "char-a")))
        outcome = service.global_outcome("ws-1")
        assert outcome.consensus.objective == 1
        assert outcome.consensus.level["char-a"] < outcome.consensus.level["char-b"]
        scores = outcome.scale.scores
        assert scores["char-b"] - scores["char-a"] >= 0.05 - 1e-12

    def test_uncompared_characterizations_keep_reference_scores(self):
        service, commit = make_service()
        commit(AddComparison("alice", lt("char-a", "char-b")))
        scores = service.global_outcome("ws-1").scale.scores
        for cid in ("char-c", "char-d", "char-e"):
            assert scores[cid] == NEUTRAL_REFERENCE_LOK

    def test_consensus_covers_only_compared_ids(self):
        service, commit = make_service()
        commit(AddComparison("alice", lt("char-a", "char-b")))
        outcome = service.global_outcome("ws-1")
        assert outcome.consensus.ids == ("char-a", "char-b")

    def test_exact_bound_is_enforced(self):
        service, commit = make_service(Config(exact_bound=2))
        commit(AddComparison("alice", lt("char-a", "char-b")))
        commit(AddComparison("alice", lt("char-b", "char-c")))
        with pytest.raises(SizeLimitExceeded):
            service.global_outcome("ws-1")

    def test_outcome_is_cached_per_version(self):
        service, commit = make_service()
        commit(AddComparison("alice", lt("char-a", "char-b")))
        first = service.global_outcome("ws-1")
        assert service.global_outcome("ws-1") is first
        commit(AddComparison("bob", lt("char-b", "char-c")))
        assert service.global_outcome("ws-1") is not first


class TestPosPipeline:
    def test_intervals_and_validation_passthrough(self):
        service, commit = make_service()
        assert service.pos_intervals("ws-1", 0.0) == ((0.45, 0.55),)
        verdict = service.pos_validate("ws-1", 1.0, 0.5)
        assert not verdict.accepted
        assert verdict.nearest == pytest.approx(0.05)

    def test_consensus_is_the_projected_median(self):
        service, commit = make_service()
        commit(RecordPosEntry(PosEntry("alice", "char-a", 0.4, 0.3, "expert")))
        commit(RecordPosEntry(PosEntry("bob", "char-a", 0.6, 0.3, "expert")))
        result = service.pos_consensus("ws-1", "char-a")
        assert result.pos == pytest.approx(0.5)
        assert result.global_lok == pytest.approx(0.5)
        assert result.entry_count == 2
        assert result.expert_ids == ("alice", "bob")

    def test_median_outside_region_gets_projected(self):
        service, commit = make_service()
        # push char-a's global lok above 0.5 so the centre band closes
        commit(AddComparison("alice", lt("char-b", "char-a")))
        commit(RecordPosEntry(PosEntry("alice", "char-a", 0.49, 0.3, "expert")))
        commit(RecordPosEntry(PosEntry("bob", "char-a", 0.51, 0.3, "expert")))
        result = service.pos_consensus("ws-1", "char-a")
        assert result.global_lok == pytest.approx(0.525)
        # median 0.5 is equidistant from both band edges; the lower one wins
        assert result.pos == pytest.approx(0.4775, abs=1e-9)

    def test_missing_entries_and_unknown_characterization(self):
        service, commit = make_service()
        with pytest.raises(NothingToSolve):
            service.pos_consensus("ws-1", "char-a")
        with pytest.raises(UnknownEntity):
            service.pos_consensus("ws-1", "char-z")


class TestSimilarity:
    def seeded(self):
        service, commit = make_service()
        review(commit, "B", 0.9, 0.1)
        review(commit, "C", 0.7, 0.25)
        review(commit, "D", 0.6, 0.3)
        return service, commit

    def test_ranked_peer_reviewed_neighbours(self):
        service, commit = self.seeded()
        rows = service.similar_assessments("ws-1", "char-a", k=5)
        assert [r.characterization_id for r in rows] == ["char-b", "char-c", "char-d"]
        assert all(r.similarity == pytest.approx(0.5) for r in rows)
        assert rows[0].global_lok == 0.9
        assert rows[0].consensus_pos == 0.1
        assert rows[0].status == "peer_reviewed"

    def test_draft_characterizations_are_not_candidates(self):
        service, commit = self.seeded()
        rows = service.similar_assessments("ws-1", "char-b", k=5)
        assert "char-a" not in [r.characterization_id for r in rows]
        assert "char-b" not in [r.characterization_id for r in rows]

    def test_k_truncates(self):
        service, commit = self.seeded()
        assert len(service.similar_assessments("ws-1", "char-a", k=1)) == 1

    def test_unknown_target(self):
        service, commit = self.seeded()
        with pytest.raises(UnknownEntity):
            service.similar_assessments("ws-1", "char-z")

    def test_plot_data_combines_region_and_points(self):
        service, commit = self.seeded()
        data = service.plot_data("ws-1", "char-a")
        assert set(data) == {"region", "points"}
        assert data["region"]["left"] and data["region"]["right"]
        assert len(data["points"]) == 3
        for p in data["points"]:
            assert p["pos"] is not None and p["lok"] is not None
