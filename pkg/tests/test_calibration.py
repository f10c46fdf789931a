import random
from fractions import Fraction

import pytest

from riskkit import (
    CalibrationProblem,
    InfeasibleComparisonChain,
    MalformedProblem,
    calibrate,
    grid_best_objective,
    longest_strict_chain,
)
from riskkit.calibration import solve_standard_form, to_standard_form
from oracles import literal_grid_best, random_calibration_problem

EPS = 1e-9


def problem(ids, reference, gt=(), eq=(), t=0.05):
    return CalibrationProblem(
        ids=tuple(ids),
        reference=reference,
        gt=frozenset(gt),
        eq=frozenset(frozenset(p) for p in eq),
        t=t,
    )


class TestValidation:
    def test_missing_reference(self):
        with pytest.raises(MalformedProblem):
            problem("ab", {"a": 0.5})

    def test_reference_out_of_range(self):
        with pytest.raises(MalformedProblem):
            problem("a", {"a": 1.5})

    def test_unknown_gt_id(self):
        with pytest.raises(MalformedProblem):
            problem("ab", {"a": 0.5, "b": 0.5}, gt=[("a", "x")])

    def test_self_gt(self):
        with pytest.raises(MalformedProblem):
            problem("ab", {"a": 0.5, "b": 0.5}, gt=[("a", "a")])

    def test_bad_threshold(self):
        with pytest.raises(MalformedProblem):
            problem("a", {"a": 0.5}, t=0.0)

    def test_gt_inside_equality_class(self):
        p = problem(
            "abc",
            {"a": 0.5, "b": 0.5, "c": 0.5},
            gt=[("a", "b")],
            eq=[("a", "c"), ("c", "b")],
        )
        with pytest.raises(MalformedProblem):
            calibrate(p)

    def test_gt_cycle(self):
        p = problem(
            "abc",
            {"a": 0.5, "b": 0.5, "c": 0.5},
            gt=[("a", "b"), ("b", "c"), ("c", "a")],
        )
        with pytest.raises(MalformedProblem):
            calibrate(p)


class TestChains:
    def test_plain_chain(self):
        assert longest_strict_chain({("a", "b"), ("b", "c")}) == (2, ["a", "b", "c"])

    def test_contracted_chain(self):
        length, path = longest_strict_chain(
            {("a", "b"), ("c", "d")}, [frozenset(("b", "c"))]
        )
        assert length == 2
        assert path == ["a", "b", "d"]

    def test_empty(self):
        assert longest_strict_chain(set()) == (0, [])

    def test_infeasible_chain_names_ids(self):
        ids = ["n%02d" % k for k in range(12)]
        gt = {(ids[k], ids[k + 1]) for k in range(11)}
        p = problem(ids, {i: 0.5 for i in ids}, gt=gt, t=0.1)
        with pytest.raises(InfeasibleComparisonChain) as exc:
            calibrate(p)
        assert exc.value.chain == ids
        assert "does not fit" in str(exc.value)

    def test_chain_of_twenty_fits_at_default_t(self):
        ids = ["c%02d" % k for k in range(21)]
        gt = {(ids[k], ids[k + 1]) for k in range(20)}
        p = problem(ids, {i: 0.0 for i in ids}, gt=gt, t=0.05)
        scale = calibrate(p)
        assert scale.scores[ids[0]] == 1.0
        assert scale.scores[ids[-1]] == 0.0


class TestCalibrate:
    def test_symmetric_tie_break(self):
        p = problem("ab", {"a": 0.5, "b": 0.5}, gt=[("a", "b")], t=0.1)
        scale = calibrate(p)
        assert scale.scores == {"a": 0.55, "b": 0.45}
        assert abs(scale.objective - 0.1) < EPS
        assert scale.scores_exact == {
            "a": Fraction(11, 20),
            "b": Fraction(9, 20),
        }

    def test_no_comparisons_returns_reference(self):
        p = problem("ab", {"a": 0.3, "b": 0.8})
        scale = calibrate(p)
        assert scale.scores == {"a": 0.3, "b": 0.8}
        assert scale.objective == 0.0

    def test_empty_problem(self):
        p = problem("", {})
        assert calibrate(p).scores == {}

    def test_satisfied_constraints_cost_nothing(self):
        p = problem("ab", {"a": 0.9, "b": 0.1}, gt=[("a", "b")], t=0.1)
        scale = calibrate(p)
        assert scale.objective == 0.0
        assert scale.scores == {"a": 0.9, "b": 0.1}

    def test_equality_pulls_to_midpoint(self):
        p = problem("ab", {"a": 0.2, "b": 0.6}, eq=[("a", "b")])
        scale = calibrate(p)
        # any value in [0.2, 0.6] is optimal; the quadratic pass picks the middle
        assert scale.scores["a"] == scale.scores["b"] == pytest.approx(0.4)
        assert abs(scale.objective - 0.4) < EPS

    def test_boundary_never_exceeded(self):
        p = problem("ab", {"a": 1.0, "b": 1.0}, gt=[("a", "b")], t=0.1)
        scale = calibrate(p)
        assert scale.scores == {"a": 1.0, "b": 0.9}

    def test_kind_and_expert_id_carried(self):
        p = problem("a", {"a": 0.5})
        scale = calibrate(p, kind="expert", expert_id="e1")
        assert scale.kind == "expert"
        assert scale.expert_id == "e1"


class TestStandardForm:
    def test_shape_counts(self):
        p = problem(
            "abc",
            {"a": 0.5, "b": 0.5, "c": 0.5},
            gt=[("a", "b")],
            eq=[("b", "c")],
        )
        sf = to_standard_form(p)
        assert len(sf.variables) == 9  # 3n
        assert len(sf.gt_rows) == 1
        assert len(sf.eq_rows) == 1
        assert len(sf.link_rows) == 3

    def test_round_trip_objective(self):
        p = problem("ab", {"a": 0.5, "b": 0.5}, gt=[("a", "b")], t=0.1)
        values, objective = solve_standard_form(to_standard_form(p))
        total = sum(abs(values["L_%s" % i] - Fraction(p.reference[i])) for i in p.ids)
        assert total == objective
        assert objective == calibrate(p).objective_exact

    def test_unconstrained_optimum_is_reference(self):
        p = problem("ab", {"a": 0.25, "b": 0.75})
        values, objective = solve_standard_form(to_standard_form(p))
        assert objective == 0
        assert values == {"L_a": Fraction(1, 4), "L_b": Fraction(3, 4)}


def check_scale_invariants(p, scale):
    t = Fraction(str(p.t))
    for i, s in scale.scores.items():
        assert -EPS <= s <= 1 + EPS
    for a, b in p.gt:
        assert scale.scores[a] - scale.scores[b] >= float(t) - EPS
    for pair in p.eq:
        x, y = sorted(pair)
        assert abs(scale.scores[x] - scale.scores[y]) <= EPS


class TestAgainstGrid:
    def test_random_instances_match_grid(self):
        rng = random.Random(424242)
        for _ in range(40):
            p = random_calibration_problem(rng)
            scale = calibrate(p)
            check_scale_invariants(p, scale)
            grid = grid_best_objective(p, step=0.001)
            assert grid is not None
            slack = 2 * len(p.ids) * 0.001
            assert grid - slack - EPS <= scale.objective <= grid + EPS

    def test_fast_grid_matches_literal_enumeration(self):
        rng = random.Random(99)
        for _ in range(25):
            p = random_calibration_problem(rng)
            step = 0.05 if len(p.ids) == 4 else 0.02
            fast = grid_best_objective(p, step=step)
            slow = literal_grid_best(p, step=step)
            if slow is None:
                assert fast is None
            else:
                assert fast == pytest.approx(slow, abs=1e-12)

    def test_monotonic_refinement(self):
        # adding a comparison already implied leaves the optimum unchanged
        p = problem(
            "abc",
            {"a": 0.2, "b": 0.5, "c": 0.9},
            gt=[("c", "b"), ("b", "a")],
            t=0.05,
        )
        base = calibrate(p)
        refined = calibrate(
            problem(
                "abc",
                {"a": 0.2, "b": 0.5, "c": 0.9},
                gt=[("c", "b"), ("b", "a"), ("c", "a")],
                t=0.05,
            )
        )
        assert refined.objective == base.objective
        assert refined.scores == base.scores
