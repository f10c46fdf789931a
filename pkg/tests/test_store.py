"""Workspace store: mutations, optimistic locking, snapshots and logs."""

import json
import random

import pytest

from fixtures import (
    TRAP_QUESTIONNAIRE,
    TRAP_RISK_FACTOR,
    prospect_characterization,
    seed_trap_workspace,
)
from riskkit.comparisons import ContradictionError, eq, lt
from riskkit.model import Expert
from riskkit.pos import LikelihoodRegion, PosEntry
from riskkit.store import (
    AddCharacterization,
    AddComparison,
    AddExpert,
    AddRiskFactor,
    RecordAssessment,
    RecordPosEntry,
    RemoveComparison,
    SetCharacterizationStatus,
    SetQuestionnaire,
    SetRegion,
    StoreCorrupt,
    UnknownWorkspace,
    ValidationFailed,
    VersionConflict,
    Workspace,
    WorkspaceStore,
    apply_mutation,
    graph_for,
    workspace_from_json,
    workspace_to_json,
)

TRAP_RF = TRAP_RISK_FACTOR


def seeded_store(root=None):
    """A store holding ws-1 with the trap questionnaire, two experts, chars a-e."""
    store = WorkspaceStore(root)
    commit = seed_trap_workspace(store)
    return store, commit


class TestCommitBasics:
    def test_version_increments_by_one_per_commit(self):
        store = WorkspaceStore()
        store.create("ws-1")
        assert store.get("ws-1").version == 0
        res = store.commit("ws-1", 0, AddRiskFactor(TRAP_RF))
        assert res.workspace.version == 1
        res = store.commit("ws-1", 1, SetQuestionnaire(TRAP_QUESTIONNAIRE))
        assert res.workspace.version == 2
        assert store.get("ws-1").version == 2

    def test_stale_expected_version_conflicts(self):
        store, commit = seeded_store()
        current = store.get("ws-1").version
        with pytest.raises(VersionConflict) as info:
            store.commit("ws-1", current - 1, AddExpert(Expert(id="x", display_name="X")))
        assert info.value.expected == current - 1
        assert info.value.actual == current

    def test_failed_mutation_leaves_state_untouched(self):
        store, commit = seeded_store()
        before = store.get("ws-1")
        with pytest.raises(ValidationFailed):
            commit(AddExpert(Expert(id="alice", display_name="Alice again")))
        assert store.get("ws-1") == before

    def test_unknown_workspace(self):
        store = WorkspaceStore()
        with pytest.raises(UnknownWorkspace):
            store.get("nope")

    def test_duplicate_workspace_id_rejected(self):
        store = WorkspaceStore()
        store.create("ws-1")
        with pytest.raises(ValidationFailed):
            store.create("ws-1")

    def test_path_unsafe_workspace_id_rejected(self):
        store = WorkspaceStore()
        with pytest.raises(ValidationFailed):
            store.create("../escape")


class TestCatalogMutations:
    def test_duplicate_risk_factor_rejected(self):
        store, commit = seeded_store()
        with pytest.raises(ValidationFailed, match="already exists"):
            commit(AddRiskFactor(TRAP_RF))

    def test_questionnaire_requires_known_risk_factor(self):
        store = WorkspaceStore()
        store.create("ws-1")
        with pytest.raises(ValidationFailed, match="unknown risk factor"):
            store.commit("ws-1", 0, SetQuestionnaire(TRAP_QUESTIONNAIRE))

    def test_questionnaire_replacement_must_keep_characterizations_valid(self):
        store, commit = seeded_store()
        import dataclasses

        # drop every question: existing answers then reference unknown questions
        gutted = dataclasses.replace(
            TRAP_QUESTIONNAIRE, questions=TRAP_QUESTIONNAIRE.questions[:2]
        )
        with pytest.raises(ValidationFailed, match="would become invalid"):
            commit(SetQuestionnaire(gutted))

    def test_characterization_requires_questionnaire(self):
        store = WorkspaceStore()
        store.create("ws-1")
        store.commit("ws-1", 0, AddRiskFactor(TRAP_RF))
        with pytest.raises(ValidationFailed, match="no questionnaire"):
            store.commit(
                "ws-1", 1, AddCharacterization(prospect_characterization("A"))
            )

    def test_invalid_answers_rejected(self):
        store, commit = seeded_store()
        bad = prospect_characterization("A")
        bad = type(bad)(
            id="char-bad",
            prospect_id=bad.prospect_id,
            risk_factor_id=bad.risk_factor_id,
            answers={**bad.answers, "quality": "excellent"},
            status="draft",
        )
        with pytest.raises(ValidationFailed, match="invalid characterization"):
            commit(AddCharacterization(bad))

    def test_status_moves_forward_only(self):
        store, commit = seeded_store()
        commit(SetCharacterizationStatus("char-a", "assessed"))
        assert store.get("ws-1").characterization("char-a").status == "assessed"
        with pytest.raises(ValidationFailed):
            commit(SetCharacterizationStatus("char-a", "draft"))


class TestComparisonMutations:
    def test_ids_are_assigned_sequentially(self):
        store, commit = seeded_store()
        r1 = commit(AddComparison("alice", lt("char-a", "char-b")))
        r2 = commit(AddComparison("alice", eq("char-b", "char-c")))
        assert r1.comparison_id == "cmp-1"
        assert r2.comparison_id == "cmp-2"
        graph = graph_for(store.get("ws-1"), "alice")
        assert graph.implies(lt("char-a", "char-c"))

    def test_implied_relation_is_a_recorded_noop(self):
        store, commit = seeded_store()
        commit(AddComparison("alice", lt("char-a", "char-b")))
        commit(AddComparison("alice", lt("char-b", "char-c")))
        res = commit(AddComparison("alice", lt("char-a", "char-c")))
        assert res.implied
        assert res.comparison_id is None
        assert len(store.get("ws-1").comparisons["alice"]) == 2

    def test_contradiction_propagates_and_state_survives(self):
        store, commit = seeded_store()
        commit(AddComparison("alice", lt("char-a", "char-b")))
        commit(AddComparison("alice", lt("char-b", "char-c")))
        before = store.get("ws-1")
        with pytest.raises(ContradictionError) as info:
            commit(AddComparison("alice", lt("char-c", "char-a")))
        assert info.value.witness
        assert store.get("ws-1") == before

    def test_unknown_expert_or_node_rejected(self):
        store, commit = seeded_store()
        with pytest.raises(ValidationFailed, match="unknown expert"):
            commit(AddComparison("mallory", lt("char-a", "char-b")))
        with pytest.raises(ValidationFailed, match="unknown characterization"):
            commit(AddComparison("alice", lt("char-a", "char-z")))

    def test_remove_reopens_the_relation(self):
        store, commit = seeded_store()
        res = commit(AddComparison("alice", lt("char-a", "char-b")))
        commit(RemoveComparison("alice", res.comparison_id))
        graph = graph_for(store.get("ws-1"), "alice")
        assert not graph.implies(lt("char-a", "char-b"))

    def test_remove_missing_id_rejected(self):
        store, commit = seeded_store()
        with pytest.raises(ValidationFailed, match="no comparison"):
            commit(RemoveComparison("alice", "cmp-99"))

    def test_experts_have_independent_graphs(self):
        store, commit = seeded_store()
        commit(AddComparison("alice", lt("char-a", "char-b")))
        commit(AddComparison("bob", lt("char-b", "char-a")))
        ws = store.get("ws-1")
        assert graph_for(ws, "alice").implies(lt("char-a", "char-b"))
        assert graph_for(ws, "bob").implies(lt("char-b", "char-a"))


class TestPosMutations:
    def test_entry_inside_region_is_stored(self):
        store, commit = seeded_store()
        entry = PosEntry(
            expert_id="alice",
            characterization_id="char-a",
            pos=0.5,
            lok_used=0.3,
            scale_kind="expert",
        )
        commit(RecordPosEntry(entry))
        assert store.get("ws-1").pos_entries == (entry,)

    def test_entry_outside_region_rejected_with_nearest(self):
        store, commit = seeded_store()
        entry = PosEntry(
            expert_id="alice",
            characterization_id="char-a",
            pos=0.5,
            lok_used=1.0,
            scale_kind="expert",
        )
        with pytest.raises(ValidationFailed, match="nearest allowed 0.05"):
            commit(RecordPosEntry(entry))

    def test_same_expert_and_characterization_upserts(self):
        store, commit = seeded_store()
        first = PosEntry("alice", "char-a", 0.5, 0.3, "expert")
        second = PosEntry("alice", "char-a", 0.4, 0.3, "expert")
        other = PosEntry("bob", "char-a", 0.6, 0.3, "expert")
        commit(RecordPosEntry(first))
        commit(RecordPosEntry(other))
        commit(RecordPosEntry(second))
        entries = store.get("ws-1").pos_entries
        assert entries == (other, second)

    def test_region_change_applies_to_later_entries(self):
        store, commit = seeded_store()
        loose = LikelihoodRegion(
            inner=((0.0, 0.0), (1.0, 0.0)), outer=((0.0, 0.5), (1.0, 0.5))
        )
        commit(SetRegion(loose))
        entry = PosEntry("alice", "char-a", 0.9, 1.0, "expert")
        commit(RecordPosEntry(entry))
        assert store.get("ws-1").region == loose


class TestAssessmentRecords:
    def test_record_then_peer_review_locks_it(self):
        store, commit = seeded_store()
        commit(SetCharacterizationStatus("char-a", "assessed"))
        commit(RecordAssessment("char-a", global_lok=0.7, consensus_pos=0.3))
        commit(RecordAssessment("char-a", global_lok=0.8, consensus_pos=0.2))
        commit(SetCharacterizationStatus("char-a", "peer_reviewed"))
        with pytest.raises(ValidationFailed, match="immutable"):
            commit(RecordAssessment("char-a", global_lok=0.1))
        rec = store.get("ws-1").records["char-a"]
        assert rec.global_lok == 0.8
        assert rec.consensus_pos == 0.2

    def test_imported_peer_reviewed_can_get_its_first_record(self):
        # import order: characterization arrives peer_reviewed, lok comes after
        store, commit = seeded_store()
        commit(SetCharacterizationStatus("char-b", "assessed"))
        commit(SetCharacterizationStatus("char-b", "peer_reviewed"))
        commit(RecordAssessment("char-b", global_lok=0.9))
        assert store.get("ws-1").records["char-b"].global_lok == 0.9

    def test_consensus_pos_must_fit_region_at_global_lok(self):
        store, commit = seeded_store()
        with pytest.raises(ValidationFailed, match="outside the region"):
            commit(RecordAssessment("char-a", global_lok=1.0, consensus_pos=0.5))

    def test_unknown_characterization_rejected(self):
        store, commit = seeded_store()
        with pytest.raises(ValidationFailed, match="unknown characterization"):
            commit(RecordAssessment("char-z", global_lok=0.5))


def populate_everything(commit):
    commit(AddComparison("alice", lt("char-a", "char-b")))
    commit(AddComparison("alice", eq("char-b", "char-c")))
    commit(AddComparison("bob", lt("char-c", "char-a")))
    commit(RecordPosEntry(PosEntry("alice", "char-a", 0.5, 0.3, "expert")))
    commit(RecordPosEntry(PosEntry("bob", "char-a", 0.6, 0.3, "global")))
    commit(SetCharacterizationStatus("char-a", "assessed"))
    commit(RecordAssessment("char-a", global_lok=0.7, consensus_pos=0.3))
    commit(SetCharacterizationStatus("char-a", "peer_reviewed"))


class TestSerialization:
    def test_round_trip_preserves_everything(self):
        store, commit = seeded_store()
        populate_everything(commit)
        ws = store.get("ws-1")
        data = workspace_to_json(ws)
        again = workspace_from_json(json.loads(json.dumps(data)))
        assert again == ws
        assert again.version == ws.version
        assert workspace_to_json(again) == data

    def test_schema_version_is_checked(self):
        ws = Workspace(id="ws-1")
        data = workspace_to_json(ws)
        data["schema_version"] = 99
        with pytest.raises(ValueError, match="schema_version"):
            workspace_from_json(data)

    def test_random_mutation_sequences_round_trip(self):
        rng = random.Random(7)
        for _ in range(15):
            store, commit = seeded_store()
            chars = ["char-%s" % c for c in "abcde"]
            for _ in range(rng.randrange(20)):
                kind = rng.randrange(4)
                try:
                    if kind == 0:
                        a, b = rng.sample(chars, 2)
                        rel = lt(a, b) if rng.random() < 0.7 else eq(a, b)
                        commit(AddComparison(rng.choice(["alice", "bob"]), rel))
                    elif kind == 1:
                        commit(
                            RecordPosEntry(
                                PosEntry(
                                    rng.choice(["alice", "bob"]),
                                    rng.choice(chars),
                                    round(rng.uniform(0.45, 0.55), 3),
                                    round(rng.uniform(0.0, 0.4), 3),
                                    "expert",
                                )
                            )
                        )
                    elif kind == 2:
                        commit(
                            RecordAssessment(
                                rng.choice(chars),
                                global_lok=round(rng.uniform(0.0, 0.4), 3),
                                consensus_pos=round(rng.uniform(0.46, 0.54), 3),
                            )
                        )
                    else:
                        commit(SetCharacterizationStatus(rng.choice(chars), "assessed"))
                except (ContradictionError, ValidationFailed):
                    pass
            ws = store.get("ws-1")
            again = workspace_from_json(json.loads(json.dumps(workspace_to_json(ws))))
            assert again == ws


class TestFileBackedStore:
    def test_snapshot_reloads_identically(self, tmp_path):
        store, commit = seeded_store(str(tmp_path))
        populate_everything(commit)
        ws = store.get("ws-1")

        fresh = WorkspaceStore(str(tmp_path))
        assert fresh.list_ids() == ["ws-1"]
        assert fresh.get("ws-1") == ws

    def test_snapshot_file_is_canonical_json(self, tmp_path):
        store, commit = seeded_store(str(tmp_path))
        text = (tmp_path / "ws-1.json").read_text()
        data = json.loads(text)
        assert json.dumps(data, indent=2, sort_keys=True) + "\n" == text

    def test_mutation_log_versions_are_sequential(self, tmp_path):
        store, commit = seeded_store(str(tmp_path))
        populate_everything(commit)
        rows = [
            json.loads(line)
            for line in (tmp_path / "ws-1.log.jsonl").read_text().splitlines()
        ]
        assert [r["version"] for r in rows] == list(range(1, len(rows) + 1))
        assert rows[0]["mutation"]["type"] == "add_risk_factor"
        assert rows[-1]["mutation"]["type"] == "set_characterization_status"

    def test_truncated_snapshot_reports_byte_offset(self, tmp_path):
        store, commit = seeded_store(str(tmp_path))
        path = tmp_path / "ws-1.json"
        text = path.read_text()
        path.write_text(text[: len(text) // 2])
        fresh = WorkspaceStore(str(tmp_path))
        with pytest.raises(StoreCorrupt, match="byte offset") as info:
            fresh.get("ws-1")
        assert info.value.offset > 0
        assert str(path) in str(info.value)

    def test_garbage_snapshot_reports_offset_zero(self, tmp_path):
        store, commit = seeded_store(str(tmp_path))
        (tmp_path / "ws-1.json").write_text("definitely not json")
        fresh = WorkspaceStore(str(tmp_path))
        with pytest.raises(StoreCorrupt) as info:
            fresh.get("ws-1")
        assert info.value.offset == 0

    def test_wrong_schema_version_is_corrupt(self, tmp_path):
        store, commit = seeded_store(str(tmp_path))
        path = tmp_path / "ws-1.json"
        data = json.loads(path.read_text())
        data["schema_version"] = 99
        path.write_text(json.dumps(data))
        fresh = WorkspaceStore(str(tmp_path))
        with pytest.raises(StoreCorrupt, match="schema_version"):
            fresh.get("ws-1")


class TestApplyMutationIsPure:
    def test_input_workspace_is_never_mutated(self):
        store, commit = seeded_store()
        ws = store.get("ws-1")
        snapshot = workspace_to_json(ws)
        apply_mutation(ws, AddComparison("alice", lt("char-a", "char-b")))
        apply_mutation(ws, RecordPosEntry(PosEntry("alice", "char-a", 0.5, 0.3, "expert")))
        assert workspace_to_json(ws) == snapshot
