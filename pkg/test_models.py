# test_models.py
"""
FK weights, boundary conditions, cluster counting, the Ising model and
the Edwards-Sokal constructions.

Run:
    pytest test_models.py
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from operators.engine import enumerate_distribution
from operators.lattice import Configuration, Region, SiteRegion, build_rectangle
from operators.models import (
    FREE,
    WIRED,
    BoundaryCondition,
    FkModel,
    FkParams,
    IsingParams,
    SpinConfiguration,
    cluster_labeling,
    count_clusters,
    critical_point,
    dump_model_spec,
    fk_weight,
    ising_weight,
    labeling_law,
    load_model_spec,
    percolation_construction,
    percolation_law,
)
from operators.sampler import make_rng


# =============================================================================
# Parameters and Boundaries
# =============================================================================

class TestParams:
    def test_p_out_of_range(self):
        with pytest.raises(ValueError):
            FkParams(p=1.5, q=2)

    def test_q_must_be_positive(self):
        with pytest.raises(ValueError):
            FkParams(p=0.5, q=0)

    def test_fields_need_integer_q(self):
        with pytest.raises(ValueError):
            FkParams(p=0.5, q=2.5, fields=(0.0, -1.0))

    def test_fields_must_be_nonincreasing(self):
        with pytest.raises(ValueError):
            FkParams(p=0.5, q=2, fields=(0.0, 1.0))

    def test_from_ising(self):
        params = FkParams.from_ising(IsingParams(beta=0.8, h=0.3))
        assert params.p == pytest.approx(1 - math.exp(-0.8))
        assert params.q == 2
        assert params.fields == (0.0, -0.6)
        assert params.beta == pytest.approx(0.8)

    def test_negative_field_flips_stable_spin(self):
        assert FkParams.from_ising(IsingParams(beta=1.0, h=-0.5)).stable_spin == -1

    def test_species_weight_shrinks_with_cluster_size(self):
        # species i contributes (1-p)^(-h_i s) with h_i <= 0
        params = FkParams(p=0.5, q=2, fields=(0.0, -1.0))
        assert np.allclose(np.exp(params.species_log_terms(3)), [1.0, 0.5 ** 3])
        factors = [params.cluster_log_factor(s) for s in (1, 2, 3)]
        assert factors == sorted(factors, reverse=True)
        assert factors[0] < math.log(2)


class TestBoundary:
    def test_bond_data_on_free_rejected(self):
        with pytest.raises(ValueError):
            BoundaryCondition("free", rho=frozenset({((0, 0), (1, 0))}))

    def test_rho_inside_region_rejected(self, square):
        bc = BoundaryCondition.bond([((0, 0), (1, 0))])
        with pytest.raises(ValueError):
            bc.validate(square)

    def test_infinite_cluster_must_be_connected(self, square):
        bc = BoundaryCondition.bond([((-1, 0), (0, 0)), ((2, 0), (3, 0))], infinite_cluster=True)
        with pytest.raises(ValueError):
            bc.validate(square)

    def test_eta_must_cover_boundary(self, pair_sites):
        with pytest.raises(ValueError):
            BoundaryCondition.site({(-1, 0): 1}).validate(pair_sites)

    def test_json_round_trip(self):
        bc = BoundaryCondition.bond([((-1, 0), (0, 0))], infinite_cluster=True)
        assert BoundaryCondition.from_json(bc.to_json()) == bc


# =============================================================================
# Cluster Counting and Weights
# =============================================================================

class TestClusters:
    def test_free_counts_singletons(self, two_bonds):
        stats = count_clusters(Configuration.all_closed(two_bonds), FREE)
        assert stats.count == 3

    def test_free_open_path_is_one_cluster(self, two_bonds):
        assert count_clusters(Configuration.all_open(two_bonds), FREE).count == 1

    def test_clusters_carry_their_open_bonds(self, two_bonds):
        config = Configuration.from_open_bonds(two_bonds, [((1, 0), (2, 0))])
        stats = count_clusters(config, FREE)
        assert {(c.sites, c.bonds, c.size) for c in stats.clusters} == {
            (frozenset({(0, 0)}), 0, 1),
            (frozenset({(1, 0), (2, 0)}), 1, 2),
        }

    def test_wired_skips_boundary_clusters(self, square):
        # every vertex of the unit square touches the outside
        assert count_clusters(Configuration.all_closed(square), WIRED).count == 0

    def test_wired_interior_vertex(self):
        region = build_rectangle((0, 0), (2, 2))
        # only the centre is not a boundary vertex
        assert count_clusters(Configuration.all_closed(region), WIRED).count == 1

    def test_bond_boundary_merges_through_rho(self, two_bonds):
        rho = [((0, 0), (0, 1)), ((0, 1), (1, 1)), ((1, 1), (2, 1)), ((2, 1), (2, 0))]
        bc = BoundaryCondition.bond(rho)
        # (0,0) and (2,0) are joined outside R
        assert count_clusters(Configuration.all_closed(two_bonds), bc).count == 2


class TestFkWeights:
    def test_single_bond_probability(self):
        region = Region([((0, 0), (1, 0))])
        dist = enumerate_distribution(FkParams(p=0.5, q=2), region, FREE)
        assert dist.probabilities[1] == pytest.approx(1 / 3)

    def test_single_bond_exact(self):
        region = Region([((0, 0), (1, 0))])
        dist = enumerate_distribution(FkParams(p=Fraction(1, 2), q=2), region, FREE, exact=True)
        assert dist.probabilities[1] == Fraction(1, 3)
        assert sum(dist.probabilities) == 1

    def test_q1_is_bernoulli(self, square):
        dist = enumerate_distribution(FkParams(p=0.3, q=1), square, FREE)
        for i in range(dist.size):
            k = bin(i).count("1")
            assert dist.probabilities[i] == pytest.approx(0.3 ** k * 0.7 ** (4 - k))

    def test_fk_weight_matches_model(self, two_bonds, half_q2):
        config = Configuration.all_open(two_bonds)
        assert fk_weight(config, half_q2) == pytest.approx(0.25 * 2)

    def test_flip_log_odds_matches_weights(self, square, half_q2):
        model = FkModel(half_q2, square, WIRED)
        for mask in range(1 << len(square)):
            for bond in range(len(square)):
                up, down = mask | (1 << bond), mask & ~(1 << bond)
                expected = model.log_weight(up) - model.log_weight(down)
                assert model.flip_log_odds(mask, bond) == pytest.approx(expected)

    def test_field_weights_reduce_to_ising(self, pair_sites):
        ising = IsingParams(beta=0.7, h=0.4)
        fk = enumerate_distribution(FkParams.from_ising(ising), pair_sites, FREE)
        assert fk.total() == pytest.approx(1.0)
        assert np.all(fk.probabilities >= 0)


class TestCriticalPoint:
    def test_bernoulli(self):
        assert critical_point(1) == pytest.approx(0.5)

    def test_ising(self):
        assert critical_point(2) == pytest.approx(0.585786, abs=1e-6)

    def test_unknown_q(self):
        assert critical_point(3) is None

    def test_large_q(self):
        assert critical_point(36) == pytest.approx(6 / 7)

    def test_other_dimension(self):
        assert critical_point(2, d=3) is None


# =============================================================================
# Ising and Edwards-Sokal
# =============================================================================

class TestIsing:
    def test_two_site_agreement(self, pair_sites):
        beta = 0.9
        dist = enumerate_distribution(IsingParams(beta=beta), pair_sites, FREE)
        agree = dist.probabilities[0] + dist.probabilities[3]
        assert agree == pytest.approx(math.exp(beta) / (math.exp(beta) + 1))

    def test_weight_matches_energy(self, pair_sites):
        spins = SpinConfiguration.from_spins(pair_sites, {(0, 0): 1, (1, 0): 1})
        assert ising_weight(spins, IsingParams(beta=0.5)) == pytest.approx(math.exp(0.5))

    def test_wired_means_plus(self):
        site = SiteRegion([(0, 0)])
        dist = enumerate_distribution(IsingParams(beta=1.0), site, WIRED)
        # four + neighbours
        assert dist.probabilities[1] == pytest.approx(math.exp(4) / (math.exp(4) + 1))


def _fk_through_labels(ising: IsingParams, sites: SiteRegion, boundary) -> np.ndarray:
    fk = enumerate_distribution(FkParams.from_ising(ising), sites, boundary)
    out = np.zeros(1 << len(sites))
    for i in fk.support():
        for mask, prob in labeling_law(fk.configuration(i), sites, boundary, ising).items():
            out[mask] += fk.probabilities[i] * prob
    return out


class TestEdwardsSokal:
    @pytest.mark.parametrize("beta", [0.2, 0.8, 1.5])
    @pytest.mark.parametrize("h", [0.0, 0.4])
    def test_labels_give_ising_free(self, beta, h):
        sites = SiteRegion([(0, 0), (1, 0), (2, 0)])
        ising = IsingParams(beta=beta, h=h)
        expected = enumerate_distribution(ising, sites, FREE).probabilities
        assert np.allclose(_fk_through_labels(ising, sites, FREE), expected, atol=1e-12)

    def test_labels_give_ising_plus(self, pair_sites):
        ising = IsingParams(beta=0.8)
        plus = BoundaryCondition.constant(pair_sites, 1)
        expected = enumerate_distribution(ising, pair_sites, plus).probabilities
        assert np.allclose(_fk_through_labels(ising, pair_sites, plus), expected, atol=1e-12)

    def test_percolation_gives_fk(self, pair_sites):
        ising = IsingParams(beta=0.8)
        spins = enumerate_distribution(ising, pair_sites, FREE)
        fk = enumerate_distribution(FkParams.from_ising(ising), pair_sites, FREE)
        out = np.zeros(fk.size)
        for i in spins.support():
            for mask, prob in percolation_law(SpinConfiguration(pair_sites, int(i)), ising.p, FREE).items():
                out[mask] += spins.probabilities[i] * prob
        assert np.allclose(out, fk.probabilities, atol=1e-12)

    def test_boundary_clusters_inherit_eta(self, pair_sites):
        minus = BoundaryCondition.constant(pair_sites, -1)
        region = FkModel(FkParams(p=0.5, q=2), pair_sites, minus).region
        law = labeling_law(Configuration.all_open(region), pair_sites, minus)
        assert law == {0: 1.0}

    def test_samplers_follow_their_laws(self, pair_sites):
        ising = IsingParams(beta=0.8)
        rng = make_rng(7)
        fk_region = FkModel(FkParams.from_ising(ising), pair_sites, FREE).region
        bonds = Configuration.all_open(fk_region)
        spins = cluster_labeling(bonds, pair_sites, FREE, rng, ising)
        assert spins.spin((0, 0)) == spins.spin((1, 0))
        again = percolation_construction(spins, 1.0, FREE, rng)
        assert again.bits == bonds.bits


class TestModelSpec:
    def test_round_trip(self):
        params = FkParams(p=0.3, q=2)
        bc = BoundaryCondition.bond([((-1, 0), (0, 0))])
        loaded, boundary = load_model_spec(dump_model_spec(params, bc))
        assert loaded == params
        assert boundary == bc

    def test_ising_round_trip(self):
        params = IsingParams(beta=0.4, h=0.1)
        loaded, boundary = load_model_spec(dump_model_spec(params, FREE))
        assert loaded == params
        assert boundary.kind == "free"
