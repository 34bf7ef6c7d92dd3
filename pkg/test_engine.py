# test_engine.py
"""
Exact enumeration, conditioning, FKG, the Markov property for blocking
sets and mixing coefficients.

Run:
    pytest test_engine.py
"""

from fractions import Fraction

import numpy as np
import pytest

from operators.engine import (
    Distribution,
    bounded_energy,
    check_blockable,
    check_fkg_dominance,
    check_fkg_lattice,
    check_markov_all,
    check_markov_blocking,
    condition,
    enumerate_distribution,
    marginal,
    probability,
    ratio_mixing_coefficient,
    tv_distance,
    weak_mixing_coefficient,
    weak_mixing_tv,
)
from operators.errors import EnumerationCapError, ZeroProbabilityError
from operators.events import connect, open_bond
from operators.lattice import BlockingPartition, Region, build_rectangle
from operators.models import FREE, WIRED, BoundaryCondition, FkParams

LEFT_ARC = [((-1, 0), (-1, 1)), ((-1, 1), (-1, 2)), ((-1, 0), (0, 0)), ((-1, 2), (0, 2))]
RIGHT_ARC = [((2, 0), (2, 1)), ((2, 1), (2, 2)), ((1, 0), (2, 0)), ((1, 2), (2, 2))]
ARCH = [((0, 0), (0, 1)), ((0, 1), (1, 1)), ((1, 1), (2, 1)), ((2, 1), (2, 0))]


@pytest.fixture
def ladder() -> Region:
    """Two unit squares stacked: seven bonds."""
    return build_rectangle((0, 0), (1, 2))


def _bottom_top_split(region: Region) -> BlockingPartition:
    bottom, top = ((0, 0), (1, 0)), ((0, 2), (1, 2))
    middle = [b for b in region.bonds if b not in (bottom, top)]
    return BlockingPartition.of([bottom], middle, [top])


# =============================================================================
# Enumeration
# =============================================================================

class TestEnumeration:
    def test_normalised(self, square, half_q2):
        dist = enumerate_distribution(half_q2, square, WIRED)
        assert dist.total() == pytest.approx(1.0)

    def test_bernoulli_product(self, square):
        dist = enumerate_distribution(FkParams(p=0.25, q=1), square, FREE)
        e = square.bonds[0]
        assert probability(dist, open_bond(e)) == pytest.approx(0.25)

    def test_exact_mode_gives_fractions(self, two_bonds):
        dist = enumerate_distribution(FkParams(p=Fraction(1, 3), q=2), two_bonds, FREE, exact=True)
        assert all(isinstance(p, Fraction) for p in dist.probabilities)
        assert sum(dist.probabilities, Fraction(0)) == 1

    def test_cap(self, square, half_q2):
        with pytest.raises(EnumerationCapError):
            enumerate_distribution(half_q2, square, FREE, cap=3)

    def test_table_size_checked(self, square):
        with pytest.raises(ValueError):
            Distribution(square, np.ones(3) / 3)

    def test_threads_give_the_same_table(self, half_q2):
        region = build_rectangle((0, 0), (2, 2))
        one = enumerate_distribution(half_q2, region, FREE)
        two = enumerate_distribution(half_q2, region, FREE, threads=2)
        assert np.allclose(one.probabilities, two.probabilities)

    def test_rows_bitstrings(self, two_bonds, half_q2):
        rows = list(enumerate_distribution(half_q2, two_bonds, FREE).rows())
        assert [bits for _, bits, _ in rows] == ["00", "10", "01", "11"]


class TestConditioning:
    def test_condition_on_a_bond(self, square):
        dist = enumerate_distribution(FkParams(p=0.4, q=1), square, FREE)
        e, f = square.bonds[:2]
        cond = condition(dist, {e: 1})
        assert probability(cond, open_bond(e)) == pytest.approx(1.0)
        assert probability(cond, open_bond(f)) == pytest.approx(0.4)

    def test_condition_on_null_event(self):
        region = Region([((0, 0), (1, 0))])
        dist = enumerate_distribution(FkParams(p=1.0, q=1), region, FREE)
        with pytest.raises(ZeroProbabilityError):
            condition(dist, {region.bonds[0]: 0})

    def test_marginal_of_bernoulli(self, square):
        dist = enumerate_distribution(FkParams(p=0.3, q=1), square, FREE)
        m = marginal(dist, [square.bonds[2]])
        assert m.n_variables == 1
        assert m.probabilities[1] == pytest.approx(0.3)

    def test_tv_distance(self):
        region = Region([((0, 0), (1, 0))])
        a = enumerate_distribution(FkParams(p=0.5, q=1), region, FREE)
        b = enumerate_distribution(FkParams(p=0.7, q=1), region, FREE)
        assert tv_distance(a, b) == pytest.approx(0.2)

    def test_tv_needs_same_region(self, square, two_bonds, half_q2):
        with pytest.raises(ValueError):
            tv_distance(
                enumerate_distribution(half_q2, square, FREE),
                enumerate_distribution(half_q2, two_bonds, FREE),
            )

    def test_connection_probability_q2(self, two_bonds, half_q2):
        # weights: 00 -> q^3/4, 10 and 01 -> q^2/4, 11 -> q/4
        dist = enumerate_distribution(half_q2, two_bonds, FREE)
        assert probability(dist, connect((0, 0), (2, 0))) == pytest.approx(2 / (8 + 4 + 4 + 2))


# =============================================================================
# FKG
# =============================================================================

class TestFkg:
    @pytest.mark.parametrize("q", [1, 2, 4])
    def test_lattice_condition_holds(self, square, q):
        dist = enumerate_distribution(FkParams(p=0.5, q=q), square, WIRED)
        assert check_fkg_lattice(dist).holds

    def test_lattice_condition_fails_below_one(self, two_bonds):
        # the arch joins (0,0) and (2,0) outside R
        dist = enumerate_distribution(FkParams(p=0.5, q=0.5), two_bonds, BoundaryCondition.bond(ARCH))
        report = check_fkg_lattice(dist)
        assert not report.holds
        assert report.gap > 0

    def test_pairwise_check_agrees(self, square):
        dist = enumerate_distribution(FkParams(p=0.5, q=2), square, FREE)
        assert check_fkg_lattice(dist, exhaustive_cap=0).holds

    def test_wired_dominates_free(self, square, half_q2):
        wired = enumerate_distribution(half_q2, square, WIRED)
        free = enumerate_distribution(half_q2, square, FREE)
        assert check_fkg_dominance(wired, free)
        assert not check_fkg_dominance(free, wired)

    def test_larger_p_dominates(self, square):
        high = enumerate_distribution(FkParams(p=0.7, q=2), square, FREE)
        low = enumerate_distribution(FkParams(p=0.3, q=2), square, FREE)
        assert check_fkg_dominance(high, low)

    def test_exact_dominance_sees_tiny_gaps(self, square):
        half = Fraction(1, 2)
        base = enumerate_distribution(FkParams(p=half, q=1), square, FREE, exact=True)
        nudged = enumerate_distribution(FkParams(p=half + Fraction(1, 10**30), q=1), square, FREE, exact=True)
        assert check_fkg_dominance(nudged, base)
        assert check_fkg_dominance(base, base)
        assert not check_fkg_dominance(base, nudged)

    def test_float_dominance_rejects_gaps_above_tolerance(self, square):
        base = enumerate_distribution(FkParams(p=0.5, q=1), square, FREE)
        nudged = enumerate_distribution(FkParams(p=0.5 + 1e-9, q=1), square, FREE)
        assert check_fkg_dominance(nudged, base)
        assert not check_fkg_dominance(base, nudged)

    @pytest.mark.slow
    def test_exact_dominance_on_twelve_bonds(self):
        region = build_rectangle((0, 0), (2, 2))
        assert len(region) == 12
        half = Fraction(1, 2)
        base = enumerate_distribution(FkParams(p=half, q=1), region, FREE, exact=True)
        nudged = enumerate_distribution(FkParams(p=half + Fraction(1, 10**9), q=1), region, FREE, exact=True)
        assert not check_fkg_dominance(base, nudged)
        assert check_fkg_dominance(nudged, base)


# =============================================================================
# Markov Property
# =============================================================================

class TestMarkov:
    @pytest.mark.parametrize("boundary", [
        FREE,
        WIRED,
        BoundaryCondition.bond(LEFT_ARC),
        BoundaryCondition.bond(LEFT_ARC, infinite_cluster=True),
    ])
    def test_single_boundary_cluster(self, ladder, half_q2, boundary):
        dist = enumerate_distribution(half_q2, ladder, boundary)
        report = check_markov_all(dist)
        assert report.holds
        assert report.checked > 0

    def test_two_boundary_clusters_break_it(self, ladder, half_q2):
        dist = enumerate_distribution(half_q2, ladder, BoundaryCondition.bond(LEFT_ARC + RIGHT_ARC))
        report = check_markov_blocking(dist, _bottom_top_split(ladder))
        assert not report.holds
        assert report.gap > 1e-6
        assert report.witness is not None

    def test_same_partition_holds_with_one_cluster(self, ladder, half_q2):
        dist = enumerate_distribution(half_q2, ladder, BoundaryCondition.bond(LEFT_ARC))
        assert check_markov_blocking(dist, _bottom_top_split(ladder)).holds

    def test_non_blocking_partition_rejected(self, ladder, half_q2):
        dist = enumerate_distribution(half_q2, ladder, FREE)
        bonds = ladder.bonds
        with pytest.raises(ValueError):
            check_markov_blocking(dist, BlockingPartition.of(bonds[:1], [], bonds[1:]))

    def test_blockable_with_free_boundary(self, ladder, half_q2):
        dist = enumerate_distribution(half_q2, ladder, FREE)
        target = [((0, 0), (1, 0))]
        assert check_blockable(dist, target, ladder.bonds).holds


# =============================================================================
# Mixing and Diagnostics
# =============================================================================

class TestMixing:
    def test_independent_bonds_do_not_mix(self, strip):
        dist = enumerate_distribution(FkParams(p=0.4, q=1), strip, FREE)
        report = ratio_mixing_coefficient(dist, strip.bonds[:1], strip.bonds[-1:], decay_rate=1.0)
        assert report.max_ratio_deviation == pytest.approx(0.0, abs=1e-12)
        assert report.weak_mixing == pytest.approx(0.0, abs=1e-12)
        assert report.exponential_sum > 0

    def test_q2_correlates(self, square, half_q2):
        # a free path is a tree, so correlation needs the cycle of the square
        dist = enumerate_distribution(half_q2, square, FREE)
        report = ratio_mixing_coefficient(dist, square.bonds[:1], square.bonds[1:2])
        assert report.max_ratio_deviation > 0

    def test_weak_mixing_coefficient(self, square, half_q2):
        dist = enumerate_distribution(half_q2, square, FREE)
        report = weak_mixing_coefficient(dist, square.bonds[:1], square.bonds[-1:])
        assert 0 < report.weak_mixing <= report.max_ratio_deviation

    def test_weak_mixing_vanishes_at_q1(self, square):
        assert weak_mixing_tv(FkParams(p=0.5, q=1), square, square.bonds[:1]) == pytest.approx(0.0, abs=1e-12)

    def test_boundary_moves_a_q2_bond(self, square, half_q2):
        assert weak_mixing_tv(half_q2, square, square.bonds[:1]) > 0

    def test_bounded_energy_at_q1(self, square):
        report = bounded_energy(enumerate_distribution(FkParams(p=0.35, q=1), square, FREE))
        assert report.minimum == pytest.approx(0.35)
        assert report.maximum == pytest.approx(0.35)

    def test_bounded_energy_range_q2(self, square, half_q2):
        report = bounded_energy(enumerate_distribution(half_q2, square, FREE))
        # p / (p + q(1-p)) when the bond merges clusters, p when it closes a loop
        assert report.minimum == pytest.approx(1 / 3)
        assert report.maximum == pytest.approx(0.5)
