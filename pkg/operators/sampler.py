# operators/sampler.py
"""
MCMC Sampler - fk-separation

Markov chains for regions beyond the enumeration cap:

    heat_bath        single-bond heat-bath for any FK model (fields and
                     all boundary kinds included)
    swendsen_wang    percolate-then-label sweeps for q = 2 through the
                     Edwards-Sokal constructions

and the estimators built on them: event probabilities with batch-means
error bars, exponential-decay fits and separated-occurrence ratio ladders.

RNG streams come from Philox keyed by SeedSequence([seed, chain_id]),
so every chain is reproducible and chains never share a stream.

Usage:
    from operators.sampler import ChainSpec, estimate_event

    spec = ChainSpec(FkParams(0.25, 1.0), strip, sweeps=20_000, seed=7)
    estimate_event(spec, connect((0, 0), (3, 0)))
"""

import logging
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence, Union

import numpy as np
from scipy import stats
from scipy.special import expit

from config.settings import BATCH_COUNT
from operators.events import (
    Event,
    _witness_pairs,
    cluster_reaches,
    connect,
    connect_dual,
)
from operators.lattice import Configuration, Region, SiteRegion, ball, distance, make_bond, make_site
from operators.models import (
    FREE,
    BoundaryCondition,
    FkModel,
    FkParams,
    IsingModel,
    IsingParams,
    SpinConfiguration,
    cluster_labeling,
    percolation_construction,
)

logger = logging.getLogger(__name__)

ALGORITHMS = ("heat_bath", "swendsen_wang")

# Sweeps between DEBUG progress lines
_PROGRESS_EVERY = 10_000

_DUMP_MAGIC = b"FKSP"
_DUMP_VERSION = 1


# =============================================================================
# Chain Specification
# =============================================================================

@dataclass(frozen=True)
class ChainSpec:
    """
    One reproducible sampling run.

    params is FkParams (heat-bath, or Swendsen-Wang with q = 2) or
    IsingParams (Swendsen-Wang). Swendsen-Wang takes a site region Λ.
    frozen pins bonds to fixed values for the heat-bath.
    """

    params: Union[FkParams, IsingParams]
    region: Union[Region, SiteRegion]
    boundary: BoundaryCondition = FREE
    sweeps: int = 10_000
    burn_in: int = 1_000
    thinning: int = 1
    seed: int = 0
    algorithm: str = "heat_bath"
    chains: int = 1
    frozen: tuple = ()

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"Unknown algorithm '{self.algorithm}' (expected one of {ALGORITHMS})")
        if self.sweeps < 1 or self.burn_in < 0 or self.thinning < 1 or self.chains < 1:
            raise ValueError(
                f"Invalid chain lengths: sweeps={self.sweeps}, burn_in={self.burn_in}, "
                f"thinning={self.thinning}, chains={self.chains}"
            )
        object.__setattr__(self, "frozen", tuple(sorted((make_bond(*b), int(v)) for b, v in self.frozen)))
        if self.algorithm == "swendsen_wang":
            if not isinstance(self.region, SiteRegion):
                raise ValueError("Swendsen-Wang runs on a site region Λ")
            if self.frozen:
                raise ValueError("Frozen bonds are only supported by the heat-bath")
            if isinstance(self.params, FkParams) and float(self.params.q) != 2:
                raise ValueError(f"Swendsen-Wang needs q = 2, got q = {self.params.q}")
        elif isinstance(self.params, IsingParams):
            raise ValueError("The heat-bath samples FK models; pass FkParams.from_ising(...)")

    @property
    def ising_params(self) -> IsingParams:
        """Ising parameters paired with the FK model (Swendsen-Wang only)."""
        if isinstance(self.params, IsingParams):
            return self.params
        if float(self.params.q) != 2:
            raise ValueError(f"Swendsen-Wang needs q = 2, got q = {self.params.q}")
        h = 0.0
        if self.params.has_fields:
            # fields are (0, -2|h|)
            h = self.params.stable_spin * (-self.params.fields[1] / 2)
        return IsingParams(beta=self.params.beta, h=h)

    @property
    def fk_params(self) -> FkParams:
        if isinstance(self.params, FkParams):
            return self.params
        return FkParams.from_ising(self.params)

    def model(self) -> Union[FkModel, IsingModel]:
        if self.algorithm == "swendsen_wang":
            return IsingModel(self.ising_params, self.region, self.boundary)
        return FkModel(self.params, self.region, self.boundary)

    def to_json(self) -> dict:
        return {
            "model": self.model().to_json(),
            "sweeps": self.sweeps,
            "burn_in": self.burn_in,
            "thinning": self.thinning,
            "seed": self.seed,
            "algorithm": self.algorithm,
            "chains": self.chains,
            "frozen": [[[list(s) for s in b], v] for b, v in self.frozen],
        }


def make_rng(seed: int, chain_id: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(chain_id)])))


# =============================================================================
# Single Steps
# =============================================================================

def heat_bath_probability(model: FkModel, mask: int, bond: int) -> float:
    """P(ω_e = 1 | ω off e): the logistic of the exact weight log-ratio."""
    return float(expit(model.flip_log_odds(mask, bond)))


def heat_bath_step(model: FkModel, mask: int, bond: int, rng: np.random.Generator) -> int:
    """Resample one bond from its exact conditional."""
    if rng.random() < heat_bath_probability(model, mask, bond):
        return mask | (1 << bond)
    return mask & ~(1 << bond)


def heat_bath_sweep(model: FkModel, mask: int, rng: np.random.Generator, movable: Sequence[int]) -> int:
    for bond in movable:
        mask = heat_bath_step(model, mask, bond, rng)
    return mask


def swendsen_wang_step(
    spins: SpinConfiguration,
    params: IsingParams,
    boundary: BoundaryCondition,
    rng: np.random.Generator,
) -> tuple[SpinConfiguration, Configuration]:
    """
    Percolate the agreement bonds, then relabel the clusters.

    Returns the new spins and the bond configuration they were labelled from.
    """
    bonds = percolation_construction(spins, params.p, boundary, rng)
    return cluster_labeling(bonds, spins.site_region, boundary, rng, params), bonds


# =============================================================================
# Chains
# =============================================================================

def _frozen_masks(spec: ChainSpec, region: Region) -> tuple[int, int]:
    care = value = 0
    for bond, bit in spec.frozen:
        if bond not in region.index:
            raise ValueError(f"Frozen bond {bond} is not in the region")
        care |= 1 << region.index[bond]
        if bit:
            value |= 1 << region.index[bond]
    return care, value


def run_chain(spec: ChainSpec, chain_id: int = 0, observe: str = "bonds") -> Iterator:
    """
    Post-burn-in, thinned samples of one chain.

    observe="bonds" yields Configurations; observe="spins" yields
    SpinConfigurations (Swendsen-Wang only).
    """
    if observe not in ("bonds", "spins"):
        raise ValueError(f"observe must be 'bonds' or 'spins', got {observe!r}")
    rng = make_rng(spec.seed, chain_id)
    total = spec.burn_in + spec.sweeps

    if spec.algorithm == "heat_bath":
        if observe == "spins":
            raise ValueError("The heat-bath has no spins to observe")
        model = spec.model()
        region = model.region
        care, value = _frozen_masks(spec, region)
        movable = [i for i in range(len(region)) if not care >> i & 1]
        mask = value
        for sweep in range(total):
            mask = heat_bath_sweep(model, mask, rng, movable)
            if sweep and sweep % _PROGRESS_EVERY == 0:
                logger.debug(f"[CHAIN] chain {chain_id}: sweep {sweep}/{total}")
            if sweep >= spec.burn_in and (sweep - spec.burn_in) % spec.thinning == 0:
                yield Configuration(region, mask)
        return

    params = spec.ising_params
    spins = SpinConfiguration(spec.region, 0)
    for sweep in range(total):
        spins, bonds = swendsen_wang_step(spins, params, spec.boundary, rng)
        if sweep and sweep % _PROGRESS_EVERY == 0:
            logger.debug(f"[CHAIN] chain {chain_id}: sweep {sweep}/{total}")
        if sweep >= spec.burn_in and (sweep - spec.burn_in) % spec.thinning == 0:
            yield bonds if observe == "bonds" else spins


def _map_chains(spec: ChainSpec, fn: Callable[[int], object], threads: int = 1) -> list:
    if threads <= 1 or spec.chains == 1:
        return [fn(c) for c in range(spec.chains)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(spec.chains)))


# =============================================================================
# Estimates
# =============================================================================

@dataclass
class Estimate:
    """Mean with batch-means standard error and a 95% Student-t interval."""

    mean: float
    stderr: float
    ci_lo: float
    ci_hi: float
    n: int
    batches: int = BATCH_COUNT

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
            "n": self.n,
            "batches": self.batches,
        }


def _batch_means(series: np.ndarray, batches: int = BATCH_COUNT) -> np.ndarray:
    """Means over `batches` contiguous blocks; columns are observables."""
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    usable = (len(series) // batches) * batches
    if usable == 0:
        raise ValueError(f"Need at least {batches} samples for batch means, got {len(series)}")
    return series[:usable].reshape(batches, usable // batches, -1).mean(axis=1)


def estimate_from_batches(means: np.ndarray, n: int) -> Estimate:
    b = len(means)
    mean = float(means.mean())
    stderr = float(means.std(ddof=1) / math.sqrt(b)) if b > 1 else 0.0
    half = float(stats.t.ppf(0.975, b - 1)) * stderr if b > 1 else 0.0
    return Estimate(mean, stderr, mean - half, mean + half, n, b)


def _event_series(spec: ChainSpec, observables: Sequence[Callable], chain_id: int, observe: str) -> np.ndarray:
    rows = [[float(bool(f(sample))) for f in observables] for sample in run_chain(spec, chain_id, observe)]
    return np.array(rows, dtype=float).reshape(-1, len(observables))


def estimate_events(
    spec: ChainSpec,
    events: Sequence[Callable],
    threads: int = 1,
    observe: str = "bonds",
    batches: int = BATCH_COUNT,
) -> list[Estimate]:
    """Probabilities of several events from the same samples."""
    series = _map_chains(spec, lambda c: _event_series(spec, events, c, observe), threads)
    means = np.vstack([_batch_means(s, batches) for s in series])
    n = sum(len(s) for s in series)
    return [estimate_from_batches(means[:, j], n) for j in range(len(events))]


def estimate_event(spec: ChainSpec, event: Callable, threads: int = 1, observe: str = "bonds") -> Estimate:
    """P(event) with batch-means error bars (32 batches per chain)."""
    estimate = estimate_events(spec, [event], threads, observe)[0]
    name = getattr(event, "name", "event")
    logger.info(f"[CHAIN] {name}: {estimate.mean:.6g} ± {estimate.stderr:.2g} ({estimate.n} samples)")
    return estimate


def estimate_phi(
    spec: ChainSpec,
    x: Sequence[int],
    m: int,
    rho_q: dict,
) -> Estimate:
    """
    Nested-sampling value of φ_x(ρ): P(x reaches distance m | ω_𝒬 = ρ, open outside the 3m-ball).

    rho_q maps the bonds of 𝒬_x to 0/1; every other bond outside the
    ball is frozen open.
    """
    region = spec.model().region
    inside = set(ball(region, x, 3 * m))
    frozen = {make_bond(*b): int(v) for b, v in rho_q.items()}
    for b in region.bonds:
        if b not in inside:
            frozen.setdefault(b, 1)
    nested = replace(spec, frozen=tuple(frozen.items()), algorithm="heat_bath")
    return estimate_event(nested, cluster_reaches(x, m))


# =============================================================================
# Decay Fits
# =============================================================================

@dataclass
class DecayFit:
    """
    log P̂(x ↔ y) ≈ log C - λ d(x, y), fitted by weighted least squares
    on the strictly positive estimates.
    """

    distances: list
    estimates: list
    fitted_lambda: float
    fitted_c: float
    ci: tuple
    dropped: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    binomial_ci: list = field(default_factory=list)

    def rows(self):
        """(distance, estimate, stderr, ci_lo, ci_hi) for CSV tables."""
        for d, est in zip(self.distances, self.estimates):
            yield d, est.mean, est.stderr, est.ci_lo, est.ci_hi

    def to_json(self) -> dict:
        return {
            "distances": list(self.distances),
            "estimates": [e.to_json() for e in self.estimates],
            "binomial_ci": [list(c) for c in self.binomial_ci],
            "lambda": self.fitted_lambda,
            "C": self.fitted_c,
            "lambda_ci": list(self.ci),
            "dropped": list(self.dropped),
            "flags": list(self.flags),
        }


def _weighted_line(x: np.ndarray, y: np.ndarray, sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (intercept, slope) and their covariance for known errors sigma."""
    design = np.column_stack([np.ones_like(x), x])
    w = 1.0 / sigma ** 2
    normal = design.T @ (design * w[:, None])
    cov = np.linalg.inv(normal)
    coef = cov @ (design.T @ (w * y))
    return coef, cov


def fit_decay(
    spec: ChainSpec,
    source: Sequence[int],
    targets: Sequence[Sequence[int]],
    dual: bool = False,
    threads: int = 1,
) -> DecayFit:
    """
    Estimate P(x ↔ y) for each target and fit the exponential decay rate.

    dual=True estimates connections by open dual paths (d = 2), measured
    in the L1 distance between dual sites.
    """
    source = make_site(source)
    targets = [make_site(t) for t in targets]
    region = spec.model().region
    if dual:
        if len(source) != 2:
            raise ValueError("Dual connections need d = 2")
        events = [connect_dual(source, t) for t in targets]
        dists = [sum(abs(a - b) for a, b in zip(source, t)) for t in targets]
    else:
        events = [connect(source, t) for t in targets]
        dists = [region.site_distance(source, t) for t in targets]

    estimates = estimate_events(spec, events, threads)
    n = estimates[0].n if estimates else 0
    binomial = []
    for est in estimates:
        hits = int(round(est.mean * n))
        ci = stats.binomtest(hits, n).proportion_ci(confidence_level=0.95) if n else None
        binomial.append((ci.low, ci.high) if ci else (0.0, 1.0))

    kept, dropped = [], []
    for d, est in zip(dists, estimates):
        (kept if est.mean > 0 else dropped).append((d, est))
    flags = [f"zero estimate at distance {d}" for d, _ in dropped]
    if len({d for d, _ in kept}) < 2:
        flags.append("fewer than two distances with positive estimates")
        return DecayFit(dists, estimates, math.nan, math.nan, (math.nan, math.nan), [d for d, _ in dropped], flags, binomial)

    x = np.array([d for d, _ in kept], dtype=float)
    p = np.array([e.mean for _, e in kept])
    se = np.array([e.stderr if e.stderr > 0 else math.sqrt(e.mean * (1 - e.mean) / max(e.n, 1)) for _, e in kept])
    sigma = np.maximum(se / p, 1e-12)
    coef, cov = _weighted_line(x, np.log(p), sigma)
    lam = float(-coef[1])
    half = float(stats.norm.ppf(0.975)) * math.sqrt(max(cov[1, 1], 0.0))
    if lam <= 0:
        flags.append("nonpositive decay rate")
    fit = DecayFit(dists, estimates, lam, float(math.exp(coef[0])), (lam - half, lam + half), [d for d, _ in dropped], flags, binomial)
    logger.info(f"[CHAIN] decay fit from {source}: λ = {lam:.4g} ± {half:.2g}")
    return fit


# =============================================================================
# Separated-occurrence Ratios
# =============================================================================

@dataclass
class RatioRow:
    r: float
    ratio: float
    stderr: float
    ci_lo: float
    ci_hi: float
    p_sep: float
    p_a: float
    p_b: float
    flagged: bool = False

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("r", "ratio", "stderr", "ci_lo", "ci_hi", "p_sep", "p_a", "p_b", "flagged")}

    def deviation_bounds(self) -> tuple[float, float]:
        """Smallest and largest |ratio - 1| compatible with the CI."""
        lo, hi = abs(self.ci_lo - 1), abs(self.ci_hi - 1)
        nearest = 0.0 if self.ci_lo <= 1 <= self.ci_hi else min(lo, hi)
        return nearest, max(lo, hi)


def trends_toward_one(rows: Sequence[RatioRow]) -> bool:
    """
    |ratio - 1| nonincreasing in r within the CIs: no later rung is
    significantly farther from 1 than an earlier one. Flagged rows fail.
    """
    if any(row.flagged for row in rows):
        return False
    ordered = sorted(rows, key=lambda row: row.r)
    bounds = [row.deviation_bounds() for row in ordered]
    return all(
        bounds[j][0] <= bounds[i][1]
        for i in range(len(bounds))
        for j in range(i + 1, len(bounds))
    )


def _best_separation(a: Event, b: Event, config: Configuration) -> float:
    """Largest d_R(ℰ, ℱ) over witness pairs; -1 when A or B fails."""
    best = -1.0
    for theta, gamma in _witness_pairs(a, b, config):
        best = max(best, distance(config.region, list(theta), list(gamma)))
        if best == math.inf:
            break
    return best


def _ratio(means: np.ndarray, j: int) -> float:
    """Ratio of rung j; the columns come in (A, B, A∘ᵣB) triples."""
    denom = means[3 * j] * means[3 * j + 1]
    return means[3 * j + 2] / denom if denom > 0 else math.nan


def sep_occ_ladder(
    spec: ChainSpec,
    rungs: Sequence[tuple[float, Event, Event]],
    threads: int = 1,
) -> list[RatioRow]:
    """
    P̂(A∘ᵣB) / (P̂(A) P̂(B)) for each rung (r, A, B), from one set of samples.

    Each rung carries its own pair of events, so B can sit at hop distance
    r from A on every rung. Error bars are jackknife over the batch means;
    rows with a zero denominator are flagged.
    """
    rungs = list(rungs)

    def series(chain_id: int) -> np.ndarray:
        rows = []
        for config in run_chain(spec, chain_id):
            occurs: dict[int, bool] = {}
            separation: dict[tuple[int, int], float] = {}
            row = []
            for r, a, b in rungs:
                for event in (a, b):
                    if id(event) not in occurs:
                        occurs[id(event)] = bool(event(config))
                in_a, in_b = occurs[id(a)], occurs[id(b)]
                key = (id(a), id(b))
                if key not in separation:
                    separation[key] = _best_separation(a, b, config) if in_a and in_b else -1.0
                best = separation[key]
                row += [in_a, in_b, best >= 0 and (r == 0 or best >= r)]
            rows.append(row)
        return np.array(rows, dtype=float)

    per_chain = _map_chains(spec, series, threads)
    batch = np.vstack([_batch_means(s) for s in per_chain])
    overall = batch.mean(axis=0)
    b_count = len(batch)

    out = []
    for j, (r, _, _) in enumerate(rungs):
        p_a, p_b, p_sep = (float(v) for v in overall[3 * j: 3 * j + 3])
        ratio = _ratio(overall, j)
        if math.isnan(ratio):
            out.append(RatioRow(r, math.nan, math.nan, math.nan, math.nan, p_sep, p_a, p_b, True))
            continue
        leave_out = np.array([_ratio((overall * b_count - batch[i]) / (b_count - 1), j) for i in range(b_count)])
        leave_out = leave_out[np.isfinite(leave_out)]
        stderr = float(math.sqrt((len(leave_out) - 1) / len(leave_out) * ((leave_out - leave_out.mean()) ** 2).sum())) if len(leave_out) > 1 else 0.0
        half = float(stats.t.ppf(0.975, max(b_count - 1, 1))) * stderr
        out.append(RatioRow(r, float(ratio), stderr, ratio - half, ratio + half, p_sep, p_a, p_b))
    logger.info(f"[CHAIN] separated-occurrence ratios for r in {[r for r, _, _ in rungs]}: {[round(row.ratio, 4) for row in out]}")
    return out


def sep_occ_ratio(
    spec: ChainSpec,
    a: Event,
    b: Event,
    r_values: Sequence[float],
    threads: int = 1,
) -> list[RatioRow]:
    """The ratio ladder for one fixed pair of events."""
    return sep_occ_ladder(spec, [(r, a, b) for r in r_values], threads)


# =============================================================================
# Sample Dumps
# =============================================================================

def dump_samples(path: Union[str, Path], samples: Iterable, n_bits: int) -> int:
    """
    Write configurations (anything with .bits) as a binary dump:
    b"FKSP", version, n_bits, n_samples, then one packbits row each.
    """
    rows = []
    for sample in samples:
        bits = sample.bits
        rows.append(np.array([bits >> i & 1 for i in range(n_bits)], dtype=np.uint8))
    packed = np.packbits(np.array(rows, dtype=np.uint8).reshape(len(rows), n_bits), axis=1, bitorder="little")
    with open(path, "wb") as f:
        f.write(_DUMP_MAGIC + struct.pack("<HIQ", _DUMP_VERSION, n_bits, len(rows)))
        f.write(packed.tobytes())
    logger.debug(f"[REPORT] wrote {len(rows)} samples to {path}")
    return len(rows)


def load_samples(path: Union[str, Path]) -> tuple[int, list[int]]:
    """(n_bits, masks) from a dump written by dump_samples."""
    data = Path(path).read_bytes()
    if data[:4] != _DUMP_MAGIC:
        raise ValueError(f"{path} is not a sample dump")
    version, n_bits, count = struct.unpack("<HIQ", data[4:18])
    if version != _DUMP_VERSION:
        raise ValueError(f"Unsupported sample dump version {version}")
    width = (n_bits + 7) // 8
    packed = np.frombuffer(data[18:], dtype=np.uint8).reshape(count, width)
    bits = np.unpackbits(packed, axis=1, count=n_bits, bitorder="little")
    masks = [int(sum(int(v) << i for i, v in enumerate(row))) for row in bits]
    return n_bits, masks
