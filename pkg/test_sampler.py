# test_sampler.py
"""
Seeded chains, heat-bath and Swendsen-Wang updates, batch-means
estimates, decay fits, separated-occurrence ratios and sample dumps.

Run:
    pytest test_sampler.py
    pytest test_sampler.py -m "not slow"
"""

import math

import numpy as np
import pytest

from operators.engine import enumerate_distribution, probability
from operators.events import all_open, connect, open_bond
from operators.lattice import Region, SiteRegion, build_rectangle
from operators.models import FREE, WIRED, FkModel, FkParams, IsingParams
from operators.sampler import (
    ChainSpec,
    RatioRow,
    dump_samples,
    estimate_event,
    estimate_events,
    estimate_phi,
    fit_decay,
    heat_bath_probability,
    load_samples,
    make_rng,
    run_chain,
    sep_occ_ladder,
    sep_occ_ratio,
    trends_toward_one,
)

FIRST = ((0, 0), (1, 0))
LAST = ((4, 0), (5, 0))


# =============================================================================
# Chain Specs and Streams
# =============================================================================

class TestChainSpec:
    def test_unknown_algorithm(self, square, half_q2):
        with pytest.raises(ValueError):
            ChainSpec(half_q2, square, algorithm="metropolis")

    def test_zero_sweeps(self, square, half_q2):
        with pytest.raises(ValueError):
            ChainSpec(half_q2, square, sweeps=0)

    def test_swendsen_wang_needs_sites(self, square, half_q2):
        with pytest.raises(ValueError):
            ChainSpec(half_q2, square, algorithm="swendsen_wang")

    def test_swendsen_wang_needs_q2(self, pair_sites):
        with pytest.raises(ValueError):
            ChainSpec(FkParams(p=0.5, q=3), pair_sites, algorithm="swendsen_wang")

    def test_heat_bath_rejects_ising(self, pair_sites):
        with pytest.raises(ValueError):
            ChainSpec(IsingParams(beta=0.5), pair_sites)

    def test_ising_params_from_fields(self, pair_sites):
        spec = ChainSpec(FkParams.from_ising(IsingParams(beta=0.8, h=-0.3)), pair_sites, algorithm="swendsen_wang")
        assert spec.ising_params.beta == pytest.approx(0.8)
        assert spec.ising_params.h == pytest.approx(-0.3)


class TestStreams:
    def test_same_seed_same_stream(self):
        assert np.array_equal(make_rng(5, 2).random(8), make_rng(5, 2).random(8))

    def test_chains_get_different_streams(self):
        assert not np.array_equal(make_rng(5, 0).random(8), make_rng(5, 1).random(8))

    def test_seeded_chain_is_reproducible(self, square, half_q2):
        spec = ChainSpec(half_q2, square, sweeps=200, burn_in=10, seed=11)
        first = [c.bits for c in run_chain(spec)]
        again = [c.bits for c in run_chain(spec)]
        assert first == again
        assert len(first) == 200

    def test_thinning(self, square, half_q2):
        spec = ChainSpec(half_q2, square, sweeps=100, burn_in=0, thinning=10)
        assert len(list(run_chain(spec))) == 10


# =============================================================================
# Updates
# =============================================================================

class TestHeatBath:
    def test_conditional_is_exact(self, square, half_q2):
        model = FkModel(half_q2, square, WIRED)
        dist = enumerate_distribution(half_q2, square, WIRED)
        for mask in range(1 << len(square)):
            for bond in range(len(square)):
                up, down = mask | (1 << bond), mask & ~(1 << bond)
                expected = dist.probabilities[up] / (dist.probabilities[up] + dist.probabilities[down])
                assert heat_bath_probability(model, mask, bond) == pytest.approx(expected)

    def test_frozen_bonds_stay_put(self, square, half_q2):
        spec = ChainSpec(half_q2, square, sweeps=50, burn_in=0, frozen=((FIRST, 1),))
        assert all(c.is_open(FIRST) for c in run_chain(spec))

    def test_frozen_bond_outside_region(self, square, half_q2):
        spec = ChainSpec(half_q2, square, sweeps=5, frozen=((((5, 5), (6, 5)), 0),))
        with pytest.raises(ValueError):
            list(run_chain(spec))


# =============================================================================
# Estimates
# =============================================================================

class TestEstimates:
    def test_single_bond_probability(self):
        region = Region([FIRST])
        spec = ChainSpec(FkParams(p=0.5, q=2), region, sweeps=6400, burn_in=0, seed=3)
        estimate = estimate_event(spec, open_bond(FIRST))
        assert abs(estimate.mean - 1 / 3) < 0.03
        assert estimate.ci_lo < estimate.mean < estimate.ci_hi
        assert estimate.batches == 32

    def test_swendsen_wang_agreement(self, pair_sites):
        beta = 0.8
        spec = ChainSpec(IsingParams(beta=beta), pair_sites, sweeps=6400, burn_in=50, seed=1, algorithm="swendsen_wang")
        estimate = estimate_event(spec, lambda s: s.spin((0, 0)) == s.spin((1, 0)), observe="spins")
        assert abs(estimate.mean - math.exp(beta) / (math.exp(beta) + 1)) < 0.04

    def test_too_few_samples_for_batches(self, square, half_q2):
        spec = ChainSpec(half_q2, square, sweeps=10, burn_in=0)
        with pytest.raises(ValueError):
            estimate_event(spec, open_bond(FIRST))

    def test_threads_do_not_change_the_estimate(self, square, half_q2):
        spec = ChainSpec(half_q2, square, sweeps=320, burn_in=0, chains=2, seed=4)
        one = estimate_event(spec, open_bond(FIRST))
        two = estimate_event(spec, open_bond(FIRST), threads=2)
        assert one.mean == two.mean
        assert one.n == 640


def _row(r: float, ratio: float, half: float, flagged: bool = False) -> RatioRow:
    return RatioRow(r, ratio, half / 2, ratio - half, ratio + half, 0.1, 0.3, 0.3, flagged)


class TestRatios:
    def test_separation_ladder_on_a_path(self, strip):
        spec = ChainSpec(FkParams(p=0.5, q=1), strip, sweeps=3200, burn_in=0, seed=2)
        rows = sep_occ_ratio(spec, open_bond(FIRST), open_bond(LAST), [0, 3, 4])
        assert [row.r for row in rows] == [0, 3, 4]
        assert rows[0].ratio == rows[1].ratio
        assert rows[0].ratio == pytest.approx(1.0, abs=0.15)
        assert rows[2].ratio == 0.0
        assert not any(row.flagged for row in rows)

    def test_rungs_carry_their_own_events(self, strip):
        near, far = open_bond(((2, 0), (3, 0))), open_bond(LAST)
        spec = ChainSpec(FkParams(p=0.5, q=1), strip, sweeps=3200, burn_in=0, seed=4)
        rows = sep_occ_ladder(spec, [(1, open_bond(FIRST), near), (3, open_bond(FIRST), far), (4, open_bond(FIRST), far)])
        assert [row.r for row in rows] == [1, 3, 4]
        # one sample set feeds every rung
        assert rows[0].p_a == rows[1].p_a == rows[2].p_a
        assert rows[1].p_b == rows[2].p_b
        # independent bonds exactly r apart
        assert rows[0].ratio == pytest.approx(1.0, abs=0.15)
        assert rows[1].ratio == pytest.approx(1.0, abs=0.15)
        # the far bond is only 3 away
        assert rows[2].ratio == 0.0
        assert not trends_toward_one(rows)

    def test_deviation_bounds(self):
        assert _row(1, 1.1, 0.2).deviation_bounds() == (0.0, pytest.approx(0.3))
        assert _row(1, 1.5, 0.2).deviation_bounds() == (pytest.approx(0.3), pytest.approx(0.7))
        assert _row(1, 0.0, 0.0).deviation_bounds() == (1.0, 1.0)

    def test_converging_ladder_trends_toward_one(self):
        rows = [_row(1, 1.6, 0.2), _row(2, 1.3, 0.2), _row(3, 1.05, 0.2), _row(4, 0.98, 0.3)]
        assert trends_toward_one(rows)
        assert trends_toward_one(list(reversed(rows)))

    def test_drift_away_from_one_fails(self):
        assert not trends_toward_one([_row(1, 1.05, 0.1), _row(2, 1.6, 0.1)])

    def test_collapsed_rung_fails(self):
        # p_sep = 0 on a late rung gives ratio 0 with a zero-width interval
        assert not trends_toward_one([_row(1, 1.2, 0.25), _row(2, 1.1, 0.25), _row(5, 0.0, 0.0)])

    def test_flagged_rows_fail(self):
        assert not trends_toward_one([_row(1, 1.0, 0.1), _row(2, math.nan, math.nan, flagged=True)])


class TestNestedSampling:
    def test_frozen_first_bond_decides_the_reach(self, strip):
        spec = ChainSpec(FkParams(p=0.5, q=2), strip, sweeps=64, burn_in=0, seed=6)
        assert estimate_phi(spec, (0, 0), 1, {FIRST: 1}).mean == 1.0
        assert estimate_phi(spec, (0, 0), 1, {FIRST: 0}).mean == 0.0


@pytest.mark.slow
class TestDecay:
    def test_bernoulli_decay_rate(self):
        strip = build_rectangle((0, 0), (6, 0))
        spec = ChainSpec(FkParams(p=0.25, q=1), strip, sweeps=20000, burn_in=100, seed=0)
        fit = fit_decay(spec, (0, 0), [(1, 0), (2, 0), (3, 0)])
        assert fit.fitted_lambda == pytest.approx(math.log(4), abs=0.15)
        assert fit.distances == [1, 2, 3]
        assert not fit.dropped

    def test_unreachable_targets_are_flagged(self, strip):
        spec = ChainSpec(FkParams(p=0.0, q=1), strip, sweeps=320, burn_in=0)
        fit = fit_decay(spec, (0, 0), [(1, 0), (2, 0)])
        assert math.isnan(fit.fitted_lambda)
        assert fit.flags


# =============================================================================
# Agreement with Exact Tables
# =============================================================================

def _within(estimate, exact: float, sigmas: float = 4.0) -> bool:
    return abs(estimate.mean - float(exact)) <= sigmas * estimate.stderr + 1e-9


@pytest.mark.slow
class TestAgreementWithEnumeration:
    @pytest.mark.parametrize("params, boundary", [
        (FkParams(p=0.5, q=2), FREE),
        (FkParams(p=0.4, q=2), WIRED),
        (FkParams(p=0.6, q=0.5), FREE),
    ])
    def test_heat_bath_marginals_and_pairs(self, params, boundary):
        region = build_rectangle((0, 0), (1, 2))
        assert len(region) <= 8
        dist = enumerate_distribution(params, region, boundary)
        singles = [open_bond(b) for b in region.bonds]
        pairs = [all_open([e, f]) for e, f in zip(region.bonds, region.bonds[1:])]
        spec = ChainSpec(params, region, boundary, sweeps=12_800, burn_in=200, seed=21, chains=2)
        estimates = estimate_events(spec, singles + pairs)
        for event, estimate in zip(singles + pairs, estimates):
            assert _within(estimate, probability(dist, event)), event

    def test_swendsen_wang_with_a_field(self):
        box = SiteRegion([(0, 0), (1, 0), (0, 1), (1, 1)])
        ising = IsingParams(beta=0.4, h=0.3)
        dist = enumerate_distribution(ising, box, FREE)
        events = [
            lambda s: s.spin((0, 0)) == 1,
            lambda s: s.spin((1, 1)) == 1,
            lambda s: s.spin((0, 0)) == s.spin((1, 1)),
            lambda s: s.spin((0, 0)) == s.spin((1, 0)) == 1,
        ]
        spec = ChainSpec(ising, box, sweeps=12_800, burn_in=100, seed=8, algorithm="swendsen_wang")
        estimates = estimate_events(spec, events, observe="spins")
        for event, estimate in zip(events, estimates):
            assert _within(estimate, probability(dist, event))
        # the field favours plus
        assert estimates[0].mean > 0.5

    def test_two_seeds_agree(self, square, half_q2):
        event = connect((0, 0), (1, 1))
        first, second = (
            estimate_event(ChainSpec(half_q2, square, sweeps=6400, burn_in=100, seed=seed), event)
            for seed in (0, 1)
        )
        assert abs(first.mean - second.mean) <= 4 * math.hypot(first.stderr, second.stderr)


# =============================================================================
# Sample Dumps
# =============================================================================

class TestDumps:
    def test_dump_and_load(self, tmp_path, square, half_q2):
        spec = ChainSpec(half_q2, square, sweeps=40, burn_in=0, seed=9)
        samples = list(run_chain(spec))
        path = tmp_path / "chain.fksp"
        assert dump_samples(path, samples, len(square)) == 40
        n_bits, masks = load_samples(path)
        assert n_bits == 4
        assert masks == [c.bits for c in samples]

    def test_not_a_dump(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"nope" + bytes(20))
        with pytest.raises(ValueError):
            load_samples(path)


def test_free_boundary_default(square, half_q2):
    assert ChainSpec(half_q2, square).boundary == FREE
