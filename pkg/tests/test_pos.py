import random

import pytest

from riskkit.pos import (
    DEFAULT_REGION,
    LikelihoodRegion,
    PosEntry,
    allowed_intervals,
    consensus_pos,
    project_to_allowed,
    rank_similar,
    region_from_config,
    region_polygons,
    region_to_config,
    validate_pos,
)
from fixtures import EXPECTED_BITS

UNCONSTRAINED = LikelihoodRegion(
    inner=((0.0, 0.0), (1.0, 0.0)),
    outer=((0.0, 0.5), (1.0, 0.5)),
)

RING = LikelihoodRegion(  # constant band: allowed pos 0.2-0.4 and 0.6-0.8
    inner=((0.0, 0.1), (1.0, 0.1)),
    outer=((0.0, 0.3), (1.0, 0.3)),
)


def random_region(rng, knot_count=4):
    """Valid random region: shared knots, inner <= outer by construction."""
    inner_loks = sorted(rng.uniform(0.05, 0.95) for _ in range(knot_count - 2))
    loks = [0.0] + inner_loks + [1.0]
    inner, outer, lo, hi = [], [], 0.0, 0.0
    for l in loks:
        lo = min(0.5, lo + rng.uniform(0, 0.15))
        hi = min(0.5, max(lo, hi + rng.uniform(0, 0.2)))
        inner.append((l, lo))
        outer.append((l, hi))
    return LikelihoodRegion(inner=tuple(inner), outer=tuple(outer))


class TestRegionValidation:
    def test_needs_two_breakpoints(self):
        with pytest.raises(ValueError, match="two breakpoints"):
            LikelihoodRegion(inner=((0.0, 0.0),), outer=((0.0, 0.5), (1.0, 0.5)))

    def test_must_span_zero_to_one(self):
        with pytest.raises(ValueError, match="start at lok 0"):
            LikelihoodRegion(
                inner=((0.1, 0.0), (1.0, 0.0)), outer=((0.0, 0.5), (1.0, 0.5))
            )

    def test_loks_strictly_increasing(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            LikelihoodRegion(
                inner=((0.0, 0.0), (0.5, 0.0), (0.5, 0.1), (1.0, 0.2)),
                outer=((0.0, 0.5), (1.0, 0.5)),
            )

    def test_values_bounded_by_half(self):
        with pytest.raises(ValueError, match=r"\[0, 0.5\]"):
            LikelihoodRegion(
                inner=((0.0, 0.0), (1.0, 0.6)), outer=((0.0, 0.5), (1.0, 0.5))
            )

    def test_values_non_decreasing(self):
        with pytest.raises(ValueError, match="non-decreasing"):
            LikelihoodRegion(
                inner=((0.0, 0.2), (1.0, 0.1)), outer=((0.0, 0.5), (1.0, 0.5))
            )

    def test_inner_may_not_exceed_outer(self):
        with pytest.raises(ValueError, match="inner exceeds outer"):
            LikelihoodRegion(
                inner=((0.0, 0.0), (1.0, 0.5)), outer=((0.0, 0.0), (1.0, 0.1))
            )


class TestAllowedIntervals:
    def test_low_knowledge_pins_near_half(self):
        assert allowed_intervals(DEFAULT_REGION, 0.0) == ((0.45, 0.55),)

    def test_full_knowledge_forces_commitment(self):
        got = allowed_intervals(DEFAULT_REGION, 1.0)
        assert got == ((0.0, 0.05), (0.95, 1.0))

    def test_default_region_midpoint(self):
        (lo, hi), = allowed_intervals(DEFAULT_REGION, 0.5)
        assert lo == pytest.approx(0.225)
        assert hi == pytest.approx(0.775)

    def test_default_region_three_quarters(self):
        low, high = allowed_intervals(DEFAULT_REGION, 0.75)
        assert low == (pytest.approx(0.1125), pytest.approx(0.275))
        assert high == (pytest.approx(0.725), pytest.approx(0.8875))

    def test_unconstrained_region_allows_everything(self):
        for lok in (0.0, 0.3, 1.0):
            assert allowed_intervals(UNCONSTRAINED, lok) == ((0.0, 1.0),)

    def test_half_is_allowed_up_to_mid_knowledge(self):
        for lok in (0.0, 0.2, 0.5):
            assert any(
                lo <= 0.5 <= hi for lo, hi in allowed_intervals(DEFAULT_REGION, lok)
            )

    def test_half_is_excluded_at_full_knowledge(self):
        assert not any(
            lo <= 0.5 <= hi for lo, hi in allowed_intervals(DEFAULT_REGION, 1.0)
        )

    def test_intervals_stay_inside_unit_range(self):
        rng = random.Random(4)
        for _ in range(200):
            r = random_region(rng)
            lok = rng.random()
            for lo, hi in allowed_intervals(r, lok):
                assert 0.0 <= lo <= hi <= 1.0

    def test_lok_out_of_range(self):
        with pytest.raises(ValueError, match="lok"):
            allowed_intervals(DEFAULT_REGION, 1.5)


class TestValidatePos:
    def test_low_lok_half_accepted(self):
        got = validate_pos(DEFAULT_REGION, 0.0, 0.5)
        assert got.accepted
        assert got.nearest == 0.5

    def test_full_lok_half_rejected_toward_low_interval(self):
        got = validate_pos(DEFAULT_REGION, 1.0, 0.5)
        assert not got.accepted
        assert got.nearest == pytest.approx(0.05)

    def test_unconstrained_accepts_anything(self):
        rng = random.Random(1)
        for _ in range(50):
            got = validate_pos(UNCONSTRAINED, rng.random(), rng.random())
            assert got.accepted

    def test_acceptance_matches_interval_membership(self):
        rng = random.Random(8)
        for _ in range(500):
            r = random_region(rng)
            lok, pos = rng.random(), rng.random()
            member = any(lo <= pos <= hi for lo, hi in allowed_intervals(r, lok))
            assert validate_pos(r, lok, pos).accepted == member

    def test_pos_out_of_range(self):
        with pytest.raises(ValueError, match="pos"):
            validate_pos(DEFAULT_REGION, 0.5, 1.2)


class TestProjection:
    def test_idempotent_on_allowed_values(self):
        rng = random.Random(12)
        for _ in range(300):
            r = random_region(rng)
            lok = rng.random()
            projected = project_to_allowed(r, lok, rng.random())
            assert project_to_allowed(r, lok, projected) == projected
            assert validate_pos(r, lok, projected).accepted

    def test_equidistant_tie_goes_to_lower_value(self):
        # 0.5 sits exactly between the band's two lobes
        assert project_to_allowed(RING, 0.3, 0.5) == pytest.approx(0.4)

    def test_nearer_lobe_wins(self):
        assert project_to_allowed(RING, 0.3, 0.45) == pytest.approx(0.4)
        assert project_to_allowed(RING, 0.3, 0.55) == pytest.approx(0.6)
        assert project_to_allowed(RING, 0.3, 0.05) == pytest.approx(0.2)


class TestConsensus:
    def entry(self, pos, eid="e1"):
        return PosEntry(
            expert_id=eid,
            characterization_id="c1",
            pos=pos,
            lok_used=0.4,
            scale_kind="expert",
        )

    def test_single_entry_already_allowed(self):
        got = consensus_pos([self.entry(0.5)], DEFAULT_REGION, 0.0)
        assert got == 0.5

    def test_median_then_projection(self):
        entries = [self.entry(p, "e%d" % i) for i, p in enumerate([0.1, 0.2, 0.9])]
        got = consensus_pos(entries, DEFAULT_REGION, 1.0)
        assert got == pytest.approx(0.05)

    def test_even_count_uses_midpoint_median(self):
        entries = [self.entry(0.2, "e1"), self.entry(0.4, "e2")]
        assert consensus_pos(entries, UNCONSTRAINED, 0.5) == pytest.approx(0.3)

    def test_identity_on_unconstrained(self):
        entries = [self.entry(0.5, "e1"), self.entry(0.5, "e2")]
        assert consensus_pos(entries, UNCONSTRAINED, 0.9) == 0.5

    def test_empty_entries_error(self):
        with pytest.raises(ValueError, match="at least one"):
            consensus_pos([], DEFAULT_REGION, 0.5)

    def test_entry_validation(self):
        with pytest.raises(ValueError, match="scale_kind"):
            PosEntry("e", "c", 0.5, 0.5, "reference")
        with pytest.raises(ValueError, match="pos"):
            PosEntry("e", "c", 1.5, 0.5, "expert")


class TestRankSimilar:
    def candidates(self):
        return [("char-%s" % k.lower(), bits) for k, bits in sorted(EXPECTED_BITS.items())]

    def test_published_neighbour_ordering(self):
        got = rank_similar("char-a", EXPECTED_BITS["A"], self.candidates(), k=4)
        assert got[0] == ("char-e", 0.75)
        assert {cid for cid, _ in got[1:]} == {"char-b", "char-c", "char-d"}
        assert all(s == 0.5 for _, s in got[1:])

    def test_self_excluded_and_truncated(self):
        got = rank_similar("char-a", EXPECTED_BITS["A"], self.candidates(), k=1)
        assert got == [("char-e", 0.75)]
        everything = rank_similar("char-a", EXPECTED_BITS["A"], self.candidates(), k=99)
        assert len(everything) == 4

    def test_score_ties_order_by_id(self):
        got = rank_similar("char-a", EXPECTED_BITS["A"], self.candidates(), k=4)
        assert [cid for cid, _ in got[1:]] == ["char-b", "char-c", "char-d"]

    def test_k_zero(self):
        assert rank_similar("char-a", EXPECTED_BITS["A"], self.candidates(), k=0) == []

    def test_width_mismatch_rejected(self):
        with pytest.raises(ValueError, match="bits"):
            rank_similar("t", (0, 1), [("other", (0, 1, 0))], k=1)


class TestRegionSerialization:
    def test_config_round_trip(self):
        config = region_to_config(DEFAULT_REGION)
        assert region_from_config(config) == DEFAULT_REGION
        assert config["inner"] == [[0.0, 0.0], [0.5, 0.0], [1.0, 0.45]]

    def test_malformed_config(self):
        with pytest.raises(ValueError, match="inner/outer"):
            region_from_config({"inner": [[0, 0], [1, 0]]})


class TestRegionPolygons:
    def test_default_region_shape(self):
        left, right = region_polygons(DEFAULT_REGION)
        assert (0.5, 0.0) in left and (0.05, 1.0) in left
        assert (0.5, 0.0) in right and (0.95, 1.0) in right
        for poly in (left, right):
            for x, y in poly:
                assert 0.0 <= x <= 1.0 and 0.0 <= y <= 1.0

    def test_lobes_mirror_each_other(self):
        left, right = region_polygons(DEFAULT_REGION)
        assert len(left) == len(right)
        for (lx, ly), (rx, ry) in zip(left, right):
            assert rx == pytest.approx(1.0 - lx)
            assert ry == ly
