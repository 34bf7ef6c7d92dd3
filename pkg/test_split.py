# test_split.py
"""
Split measures, couplings, the C_ij lattice, induction steps, the RSM
coupling and connection-inducing regions.

Run:
    pytest test_split.py
"""

from fractions import Fraction

import numpy as np
import pytest

from operators.engine import enumerate_distribution, probability
from operators.errors import DominanceError
from operators.events import closed_bond, connect, open_bond, sep
from operators.lattice import Configuration, SiteRegion
from operators.models import FREE, WIRED, BoundaryCondition, FkParams, IsingParams
from operators.split import (
    Quintuple,
    agrees_outside_cluster,
    build_se_joint,
    cij_classify,
    cluster_revealing_coupling,
    connection_inducing,
    diagonal_coupling,
    exclusion_zone,
    fkg_coupling,
    product_coupling,
    rsm_coupling,
    run_filling_iteration,
    split,
    split_occurrence,
    verify_induction_step,
    zone_radius,
)

LEFT = ((0, 0), (0, 1))
BOTTOM = ((0, 0), (1, 0))
TOP = ((0, 1), (1, 1))
RIGHT = ((1, 0), (1, 1))


@pytest.fixture
def square_q2(square, half_q2):
    return enumerate_distribution(half_q2, square, FREE)


@pytest.fixture
def sides():
    """Left and right sides of the unit square, one bond apart."""
    return connect((0, 0), (0, 1)), connect((1, 0), (1, 1))


# =============================================================================
# Split Measures
# =============================================================================

class TestSplit:
    def test_layers_keep_the_base_law(self, square_q2):
        sd = split(square_q2, [LEFT, TOP])
        first, second = sd.layer_marginals()
        assert np.allclose(first, square_q2.probabilities)
        assert np.allclose(second, square_q2.probabilities)

    def test_full_split_is_a_product(self, square_q2, square):
        sd = split(square_q2, square.bonds)
        assert sd.table.shape[0] == 1
        assert np.allclose(sd.table[0], np.outer(square_q2.probabilities, square_q2.probabilities))

    def test_empty_split_is_the_base_measure(self, square_q2, sides):
        a, b = sides
        assert split(square_q2, []).occurrence_probability(a, b, 1) == pytest.approx(
            probability(square_q2, sep(a, b, 1))
        )

    def test_split_occurrence_uses_both_layers(self, square):
        top = Configuration.from_open_bonds(square, [LEFT])
        tilde = Configuration.from_open_bonds(square, [RIGHT])
        a, b = open_bond(LEFT), open_bond(RIGHT)
        assert split_occurrence(a, b, (top, tilde), 1, [LEFT, RIGHT])
        with pytest.raises(ValueError):
            split_occurrence(a, b, (top, tilde), 1, [LEFT])


# =============================================================================
# Couplings
# =============================================================================

class TestCouplings:
    def test_fkg_coupling_is_ordered(self, square):
        high = enumerate_distribution(FkParams(p=0.7, q=2), square, FREE)
        low = enumerate_distribution(FkParams(p=0.3, q=2), square, FREE)
        coupling = fkg_coupling(high, low)
        assert coupling.is_ordered()
        assert coupling.marginal_error() == pytest.approx(0.0, abs=1e-9)

    def test_exact_fkg_coupling_keeps_fractions(self, square):
        high = enumerate_distribution(FkParams(p=Fraction(2, 3), q=2), square, WIRED, exact=True)
        low = enumerate_distribution(FkParams(p=Fraction(1, 3), q=2), square, FREE, exact=True)
        coupling = fkg_coupling(high, low)
        assert coupling.is_ordered()
        assert coupling.marginal_error() == 0
        assert all(isinstance(mass, Fraction) for mass in coupling.joint.values())

    def test_reversed_order_rejected(self, square):
        high = enumerate_distribution(FkParams(p=0.7, q=2), square, FREE)
        low = enumerate_distribution(FkParams(p=0.3, q=2), square, FREE)
        with pytest.raises(DominanceError):
            fkg_coupling(low, high)

    def test_diagonal_and_product(self, square_q2):
        assert diagonal_coupling(square_q2).marginal_error() == pytest.approx(0.0, abs=1e-12)
        assert product_coupling(square_q2, square_q2).marginal_error() == pytest.approx(0.0, abs=1e-12)

    def test_cluster_revealing_agrees_off_the_cluster(self, square_q2):
        s_set, e = [BOTTOM, RIGHT], LEFT
        for zeta in (0, 1):
            coupling = cluster_revealing_coupling(square_q2, s_set, e, zeta)
            assert coupling.is_ordered()
            assert coupling.marginal_error() == pytest.approx(0.0, abs=1e-9)
            assert agrees_outside_cluster(square_q2, s_set, e, zeta, coupling)


# =============================================================================
# The Joint Measure
# =============================================================================

class TestSeJoint:
    @pytest.mark.parametrize("family", ["fkg", "cluster_revealing"])
    def test_pushforwards_are_the_split_measures(self, square_q2, family):
        joint = build_se_joint(square_q2, [BOTTOM], LEFT, family)
        plus_gap, base_gap = joint.identity_gaps
        assert plus_gap == pytest.approx(0.0, abs=1e-12)
        assert base_gap == pytest.approx(0.0, abs=1e-12)
        assert joint.e == LEFT

    def test_empty_split_set(self, square_q2):
        joint = build_se_joint(square_q2, [], TOP)
        assert all(atom.pairs == [(0, 0, pytest.approx(1.0))] for atom in joint.atoms)

    def test_e_inside_split_set(self, square_q2):
        with pytest.raises(ValueError):
            build_se_joint(square_q2, [LEFT], LEFT)

    def test_unknown_family(self, square_q2):
        with pytest.raises(ValueError):
            build_se_joint(square_q2, [BOTTOM], LEFT, "coin_flip")


class TestCij:
    def test_zone_radius(self):
        assert zone_radius(1) == -1
        assert zone_radius(3) == 0
        assert zone_radius(5) == 1
        assert zone_radius(6) == 2

    def test_empty_zone_for_small_r(self, square):
        assert exclusion_zone(square, LEFT, 1) == frozenset()
        assert LEFT in exclusion_zone(square, LEFT, 3)

    def test_chain_holds_on_the_support(self, square_q2, sides):
        a, b = sides
        joint = build_se_joint(square_q2, [BOTTOM], TOP)
        for atom, a_pair, b_pair, _ in joint.quintuples():
            q = Quintuple(atom.u_code, *a_pair, *b_pair)
            flags = cij_classify(square_q2, a, b, 1, [BOTTOM], TOP, q)
            assert flags.chain_holds
            assert flags.split_holds

    @pytest.mark.parametrize("q", [1, 2])
    def test_fkg_joint_has_no_unordered_pairs(self, square, q):
        # conditionals that agree up to rounding must not leak mass onto (0, 1)
        dist = enumerate_distribution(FkParams(p=0.5, q=q), square, FREE)
        joint = build_se_joint(dist, [BOTTOM], TOP, "fkg")
        for atom in joint.atoms:
            assert all(not bottom & ~top for top, bottom, _ in atom.pairs)

    @pytest.mark.parametrize("q", [1, 2])
    def test_chain_holds_for_bottom_and_top_connections(self, square, q):
        dist = enumerate_distribution(FkParams(p=0.5, q=q), square, FREE)
        a, b = connect((0, 0), (1, 0)), connect((0, 1), (1, 1))
        for r in (1, 2):
            joint = build_se_joint(dist, [BOTTOM], TOP, "fkg")
            for atom, a_pair, b_pair, _ in joint.quintuples():
                flags = cij_classify(dist, a, b, r, [BOTTOM], TOP, Quintuple(atom.u_code, *a_pair, *b_pair))
                assert flags.chain_holds, (q, r, atom.u_code, a_pair, b_pair)

    def test_needs_increasing_events(self, square_q2):
        with pytest.raises(ValueError):
            cij_classify(square_q2, closed_bond(LEFT), open_bond(RIGHT), 1, [], TOP, Quintuple(0, 0, 0, 0, 0))


# =============================================================================
# Induction
# =============================================================================

class TestInduction:
    @pytest.mark.parametrize("family", ["fkg", "cluster_revealing"])
    def test_single_step(self, square_q2, sides, family):
        a, b = sides
        report = verify_induction_step(square_q2, a, b, 1, [BOTTOM], TOP, family)
        assert report.holds
        assert report.chain_violations == 0
        assert report.uncovered == pytest.approx(0.0, abs=1e-12)

    def test_decreasing_events_are_flipped(self, square_q2):
        report = verify_induction_step(square_q2, closed_bond(LEFT), closed_bond(RIGHT), 1, [], TOP)
        assert report.flipped
        assert report.holds

    def test_mixed_events_rejected(self, square_q2):
        with pytest.raises(ValueError):
            verify_induction_step(square_q2, open_bond(LEFT), closed_bond(RIGHT), 1, [], TOP)

    def test_iteration_over_the_square(self, square_q2, square, sides):
        a, b = sides
        report = run_filling_iteration(square_q2, a, b, 1, square.bonds)
        assert len(report.steps) == 4
        assert report.holds
        assert report.p_sep <= report.p_a * report.p_b + 1e-12

    def test_mixed_monotonicity_is_settled_by_harris(self, square_q2, square):
        report = run_filling_iteration(square_q2, open_bond(LEFT), closed_bond(RIGHT), 1, square.bonds)
        assert report.settled_by == "harris_fkg"
        assert not report.steps
        assert report.holds

    def test_report_json(self, square_q2, sides):
        a, b = sides
        data = verify_induction_step(square_q2, a, b, 1, [], TOP).to_json()
        assert {"lhs", "rhs", "leak_A", "leak_B", "leak_A_top", "leak_B_top"} <= set(data)


# =============================================================================
# RSM Coupling and Connection-inducing Regions
# =============================================================================

@pytest.fixture
def chain3() -> SiteRegion:
    return SiteRegion([(0, 0), (1, 0), (2, 0)])


class TestRsm:
    def test_plus_and_minus_conditionals(self, chain3):
        ising = IsingParams(beta=0.5)
        plus = enumerate_distribution(ising, chain3, BoundaryCondition.constant(chain3, 1))
        minus = enumerate_distribution(ising, chain3, BoundaryCondition.constant(chain3, -1))
        report = rsm_coupling(plus, minus, [(2, 0)])
        assert 0 < report.nu0 < 1
        assert report.bound_holds
        assert report.coupling.marginal_error() == pytest.approx(0.0, abs=1e-9)
        assert report.far_sites == ((2, 0),)

    def test_identical_measures(self, chain3):
        dist = enumerate_distribution(IsingParams(beta=0.5), chain3, FREE)
        report = rsm_coupling(dist, dist, [(0, 0)])
        assert report.nu0 == 1.0
        assert not report.disagreement.any()

    def test_needs_the_same_sites(self, chain3, pair_sites):
        ising = IsingParams(beta=0.5)
        with pytest.raises(ValueError):
            rsm_coupling(
                enumerate_distribution(ising, chain3, FREE),
                enumerate_distribution(ising, pair_sites, FREE),
                [(0, 0)],
            )


class TestConnectionInducing:
    def test_markov_inequality_on_a_path(self, strip, half_q2):
        dist = enumerate_distribution(half_q2, strip, FREE)
        report = connection_inducing(dist, (0, 0), 1, c_const=1.0, lambda_const=1.0)
        assert len(report.q_bonds) == 3
        assert set(np.unique(report.phi)) <= {0.0, 1.0}
        # on a free path every bond is open with probability p / (p + q(1-p))
        assert report.p_inducing == pytest.approx(1 / 3)
        assert report.holds
