# operators/engine.py
"""
Exact Enumeration Engine - fk-separation

Tabulated probability measures over every configuration of a small
region, and the exact checks run on them: conditioning and marginals,
total variation, the FKG lattice condition, FKG dominance by max-flow,
the Markov property for blocking sets, and mixing coefficients.

Configuration i has variable j set when bit j of i is set (bond j of
the region, or site j of Λ with + as set). Float tables are normalised
in log-space; exact=True keeps Fractions throughout and every
tolerance becomes exact zero.

Usage:
    from operators.engine import enumerate_distribution, probability

    dist = enumerate_distribution(FkParams(0.5, 2.0), region, WIRED)
    probability(dist, connect(x, y))
"""

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Optional, Sequence, Union

import networkx as nx
import numpy as np
from scipy.special import logsumexp

from config.settings import (
    DEFAULT_EXACT_CAP,
    FLOW_SCALE,
    FULL_BOUNDARY_SWEEP_CAP,
    INDEPENDENCE_TOLERANCE,
    PROBABILITY_TOLERANCE,
    RATIONAL_EXACT_CAP,
    WEAK_MIXING_RANDOM_BOUNDARIES,
)
from operators.errors import EnumerationCapError, ZeroProbabilityError
from operators.lattice import (
    BlockingPartition,
    Configuration,
    Region,
    SiteRegion,
    components,
    distance,
    make_bond,
    make_site,
    outer_boundary_bonds,
    verify_blocking,
)
from operators.models import (
    FREE,
    WIRED,
    BoundaryCondition,
    FkParams,
    SpinConfiguration,
    make_model,
)

logger = logging.getLogger(__name__)

# Relative slack for the FKG lattice inequality in float mode
FKG_RELATIVE_TOLERANCE = 1e-9

# Enumerations above this many configurations log progress
_PROGRESS_THRESHOLD = 1 << 16


# =============================================================================
# Distribution
# =============================================================================

@dataclass(frozen=True)
class Distribution:
    """
    An exactly tabulated measure; probabilities[i] is the mass of configuration i.

    probabilities is a float array, or an object array of Fractions when exact.
    """

    region: Union[Region, SiteRegion]
    probabilities: np.ndarray
    partition_function: Any = 1.0
    exact: bool = False
    model: Any = None

    def __post_init__(self):
        expected = 1 << self.n_variables
        if len(self.probabilities) != expected:
            raise ValueError(f"Table has {len(self.probabilities)} entries, expected {expected}")

    @property
    def variables(self) -> tuple:
        return self.region.bonds if isinstance(self.region, Region) else self.region.sites

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def size(self) -> int:
        return len(self.probabilities)

    def index_of(self, variable) -> int:
        if isinstance(self.region, Region):
            return self.region.index[make_bond(*variable)]
        return self.region.index[make_site(variable)]

    def mask_of(self, variables: Iterable) -> int:
        return sum(1 << self.index_of(v) for v in variables)

    def configuration(self, i: int):
        if isinstance(self.region, Region):
            return Configuration(self.region, int(i))
        return SpinConfiguration(self.region, int(i))

    def tolerance(self, default: float = PROBABILITY_TOLERANCE):
        return 0 if self.exact else default

    def total(self):
        return self.probabilities.sum()

    def support(self) -> np.ndarray:
        return np.nonzero(self.probabilities > 0)[0]

    def rows(self):
        """(index, bitstring, probability) for CSV dumps."""
        n = self.n_variables
        for i, prob in enumerate(self.probabilities):
            bits = "".join("1" if i >> j & 1 else "0" for j in range(n))
            yield i, bits, prob

    def __repr__(self) -> str:
        mode = "exact" if self.exact else "float"
        return f"Distribution({self.n_variables} variables, {mode})"


def _log_weight_chunk(model, start: int, stop: int) -> np.ndarray:
    return np.fromiter((model.log_weight(i) for i in range(start, stop)), dtype=float, count=stop - start)


def enumerate_distribution(
    model_or_params,
    region: Union[Region, SiteRegion, None] = None,
    boundary: BoundaryCondition = FREE,
    exact: bool = False,
    cap: Optional[int] = None,
    threads: int = 1,
) -> Distribution:
    """
    Tabulate the normalised measure of a model over every configuration.

    Args:
        model_or_params: FkModel / IsingModel, or FkParams / IsingParams with region
        region: Bond region (FK) or site region Λ (Ising, FK with site boundary)
        boundary: Boundary condition
        exact: Fraction arithmetic (field-free FK with rational p, q)
        cap: Largest variable count allowed (defaults from config.settings)
        threads: Worker processes for the float enumeration

    Returns:
        Distribution

    Raises:
        EnumerationCapError: too many variables for a full table
    """
    if hasattr(model_or_params, "log_weight"):
        model = model_or_params
    else:
        if region is None:
            raise ValueError("A region is required when passing bare parameters")
        model = make_model(model_or_params, region, boundary)

    n = model.n_variables
    limit = cap if cap is not None else (RATIONAL_EXACT_CAP if exact else DEFAULT_EXACT_CAP)
    if n > limit:
        raise EnumerationCapError(n, limit)
    size = 1 << n
    if size > _PROGRESS_THRESHOLD:
        logger.debug(f"[ENUM] {model}: {size} configurations")

    if exact:
        if not hasattr(model, "weight_exact"):
            raise ValueError(f"Rational mode is not available for {model.kind} models")
        weights = np.empty(size, dtype=object)
        for i in range(size):
            weights[i] = model.weight_exact(i)
        z = sum(weights, Fraction(0))
        if z == 0:
            raise ZeroProbabilityError("Model has empty support")
        probs = np.empty(size, dtype=object)
        for i in range(size):
            probs[i] = weights[i] / z
        return Distribution(model.region, probs, partition_function=z, exact=True, model=model)

    if threads > 1 and size >= 1 << 12:
        bounds = np.linspace(0, size, threads + 1, dtype=int)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(_log_weight_chunk, itertools.repeat(model), bounds[:-1], bounds[1:])
            log_w = np.concatenate(list(parts))
    else:
        log_w = _log_weight_chunk(model, 0, size)

    log_z = float(logsumexp(log_w))
    if not np.isfinite(log_z):
        raise ZeroProbabilityError("Model has empty support")
    probs = np.exp(log_w - log_z)
    logger.debug(f"[ENUM] {model}: log Z = {log_z:.6g}")
    return Distribution(model.region, probs, partition_function=math.exp(log_z) if log_z < 700 else math.inf, model=model)


def _with_table(dist: Distribution, probs: np.ndarray, region=None) -> Distribution:
    return Distribution(region if region is not None else dist.region, probs, exact=dist.exact, model=None)


# =============================================================================
# Events, Conditioning and Marginals
# =============================================================================

def indicator(dist: Distribution, event) -> np.ndarray:
    """Boolean array: configuration i lies in the event."""
    if hasattr(event, "indicator"):
        return np.asarray(event.indicator(dist.region), dtype=bool)
    return np.fromiter((bool(event(dist.configuration(i))) for i in range(dist.size)), dtype=bool, count=dist.size)


def probability(dist: Distribution, event):
    """P(event); a Fraction in exact mode."""
    mask = indicator(dist, event)
    return dist.probabilities[mask].sum() if mask.any() else (Fraction(0) if dist.exact else 0.0)


def _constraint_masks(dist: Distribution, constraint) -> tuple[int, int]:
    """(care, value) masks for a partial configuration {variable: 0/1}."""
    care = value = 0
    for var, bit in dict(constraint).items():
        j = dist.index_of(var)
        care |= 1 << j
        if bit:
            value |= 1 << j
    return care, value


def condition(dist: Distribution, constraint) -> Distribution:
    """
    Renormalised restriction to a partial configuration or an event.

    Raises:
        ZeroProbabilityError: the constraint has probability zero
    """
    if isinstance(constraint, dict):
        care, value = _constraint_masks(dist, constraint)
        keep = (np.arange(dist.size) & care) == value
    else:
        keep = indicator(dist, constraint)
    mass = dist.probabilities[keep].sum() if keep.any() else 0
    if mass == 0:
        raise ZeroProbabilityError(f"Conditioning on a null constraint: {constraint}")
    probs = np.where(keep, dist.probabilities, 0) if not dist.exact else _object_where(keep, dist.probabilities)
    return _with_table(dist, probs / mass)


def _object_where(keep: np.ndarray, probs: np.ndarray) -> np.ndarray:
    out = np.empty(len(probs), dtype=object)
    for i, (k, p) in enumerate(zip(keep, probs)):
        out[i] = p if k else Fraction(0)
    return out


def project(dist: Distribution, indices: Sequence[int]) -> np.ndarray:
    """Index of each configuration after keeping the given variable positions."""
    codes = np.arange(dist.size)
    out = np.zeros(dist.size, dtype=np.int64)
    for new, old in enumerate(indices):
        out |= ((codes >> old) & 1) << new
    return out


def _aggregate(keys: np.ndarray, probs: np.ndarray, size: int, exact: bool) -> np.ndarray:
    if not exact:
        return np.bincount(keys, weights=probs, minlength=size)
    out = np.array([Fraction(0)] * size, dtype=object)
    for k, p in zip(keys, probs):
        out[k] += p
    return out


def marginal_table(dist: Distribution, variables: Iterable) -> tuple[list[int], np.ndarray]:
    """Sorted variable positions and the marginal table over them."""
    indices = sorted({dist.index_of(v) for v in variables})
    keys = project(dist, indices)
    return indices, _aggregate(keys, dist.probabilities, 1 << len(indices), dist.exact)


def marginal(dist: Distribution, variables: Iterable) -> Distribution:
    """Law of the configuration restricted to a subset of variables."""
    indices, table = marginal_table(dist, variables)
    picked = [dist.variables[i] for i in indices]
    if isinstance(dist.region, Region):
        sub = dist.region.subregion(picked) if picked else Region([])
    else:
        sub = SiteRegion(picked)
    return _with_table(dist, table, region=sub)


def compose(dist: Distribution, kernel: Callable[[Any], dict], target: Union[Region, SiteRegion]) -> Distribution:
    """
    Push a distribution through an exact Markov kernel.

    kernel maps a configuration of dist to {target index: probability}.
    """
    n = len(target.bonds) if isinstance(target, Region) else len(target.sites)
    out = np.zeros(1 << n)
    for i in dist.support():
        for j, prob in kernel(dist.configuration(i)).items():
            out[j] += float(dist.probabilities[i]) * prob
    return Distribution(target, out)


def tv_distance(d1: Distribution, d2: Distribution):
    """(1/2) Σ |p_i - q_i|."""
    if d1.region != d2.region:
        raise ValueError("Total variation between distributions on different regions")
    return abs(d1.probabilities - d2.probabilities).sum() / 2


# =============================================================================
# FKG
# =============================================================================

@dataclass
class FkgReport:
    holds: bool
    counterexample: Optional[tuple] = None
    gap: float = 0.0
    pairs_checked: int = 0

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "counterexample": list(self.counterexample) if self.counterexample else None,
            "gap": float(self.gap),
            "pairs_checked": self.pairs_checked,
        }


def check_fkg_lattice(dist: Distribution, exhaustive_cap: int = 12) -> FkgReport:
    """
    P(ω ∨ ω')P(ω ∧ ω') >= P(ω)P(ω') over all pairs (up to exhaustive_cap
    variables), otherwise over the single-bond-increment pairs
    (ω with e and f toggled), which is equivalent for positive measures.

    Returns:
        FkgReport with the first violating pair of configuration indices
    """
    probs = dist.probabilities
    codes = np.arange(dist.size)
    exact = dist.exact
    checked = 0

    def violated(lhs, rhs):
        if exact:
            return lhs < rhs
        return lhs < rhs - FKG_RELATIVE_TOLERANCE * rhs

    if dist.n_variables <= exhaustive_cap:
        for w in range(dist.size):
            lhs = probs[codes | w] * probs[codes & w]
            rhs = probs[w] * probs
            bad = np.nonzero(np.asarray(violated(lhs, rhs), dtype=bool))[0]
            checked += dist.size
            if len(bad):
                w2 = int(bad[0])
                return FkgReport(False, (w, w2), rhs[w2] - lhs[w2], checked)
        return FkgReport(True, pairs_checked=checked)

    for e, f in itertools.combinations(range(dist.n_variables), 2):
        base = codes[(codes >> e & 1 == 0) & (codes >> f & 1 == 0)]
        up, down = base | (1 << e) | (1 << f), base
        we, wf = base | (1 << e), base | (1 << f)
        lhs, rhs = probs[up] * probs[down], probs[we] * probs[wf]
        bad = np.nonzero(np.asarray(violated(lhs, rhs), dtype=bool))[0]
        checked += len(base)
        if len(bad):
            k = int(bad[0])
            return FkgReport(False, (int(we[k]), int(wf[k])), rhs[k] - lhs[k], checked)
    return FkgReport(True, pairs_checked=checked)


def flow_scale(*dists: Distribution) -> int:
    """
    Integer scale for handing probabilities to max-flow.

    Exact tables scale by the LCM of their denominators, so every capacity
    is an exact integer. Float tables use FLOW_SCALE.
    """
    if all(d.exact for d in dists):
        return math.lcm(*(Fraction(p).denominator for d in dists for p in d.probabilities))
    return FLOW_SCALE


def flow_capacity(value, scale: int) -> int:
    if isinstance(value, Fraction):
        return int(value * scale)
    return int(round(float(value) * scale))


def dominance_network(upper: Distribution, lower: Distribution, scale: Optional[int] = None) -> nx.DiGraph:
    """
    Flow network: source -> L_w (mass of upper), L_w -> R_w, R_w -> R_(w - bit),
    R_w -> sink (mass of lower). L_w reaches exactly the R_v with v <= w.
    """
    scale = scale or flow_scale(upper, lower)
    graph = nx.DiGraph()
    n = upper.n_variables
    for w in range(upper.size):
        if upper.probabilities[w] > 0:
            graph.add_edge("s", ("L", w), capacity=flow_capacity(upper.probabilities[w], scale))
            graph.add_edge(("L", w), ("R", w))
        if lower.probabilities[w] > 0:
            graph.add_edge(("R", w), "t", capacity=flow_capacity(lower.probabilities[w], scale))
        for j in range(n):
            if w >> j & 1:
                graph.add_edge(("R", w), ("R", w ^ (1 << j)))
    return graph


def check_fkg_dominance(upper: Distribution, lower: Distribution) -> bool:
    """
    True iff upper FKG-dominates lower (a monotone coupling exists).

    Exact tables must route the whole of lower's mass. Float tables may
    fall short by PROBABILITY_TOLERANCE.
    """
    if upper.region != lower.region:
        raise ValueError("Dominance between distributions on different regions")
    scale = flow_scale(upper, lower)
    graph = dominance_network(upper, lower, scale)
    if "s" not in graph or "t" not in graph:
        return False
    demand = sum(flow_capacity(p, scale) for p in lower.probabilities if p > 0)
    flow = nx.maximum_flow_value(graph, "s", "t")
    exact = upper.exact and lower.exact
    slack = 0 if exact else math.ceil(PROBABILITY_TOLERANCE * scale)
    holds = flow >= demand - slack
    logger.debug(f"[ENUM] dominance flow {flow} / {demand} (scale {scale}): {holds}")
    return holds


# =============================================================================
# Markov Property for Blocking Sets
# =============================================================================

@dataclass
class MarkovReport:
    """Conditional independence of ω_X and ω_Z given ω_Y all closed."""

    holds: bool
    partition: Optional[BlockingPartition] = None
    gap: float = 0.0
    witness: Optional[dict] = None
    applicable: bool = True
    closed_mass: float = 1.0
    checked: int = 1

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "applicable": self.applicable,
            "gap": float(self.gap),
            "closed_mass": float(self.closed_mass),
            "partition": self.partition.to_json() if self.partition else None,
            "witness": self.witness,
            "checked": self.checked,
        }


def _markov_gap(dist: Distribution, x_mask: int, y_mask: int, z_mask: int):
    """(gap, closed mass, x atom, z atom) of the X/Z factorisation given Y closed."""
    codes = np.arange(dist.size)
    keep = (codes & y_mask) == 0
    closed = dist.probabilities[keep].sum() if keep.any() else 0
    if closed == 0:
        return None, 0, None, None
    probs = dist.probabilities[keep] / closed
    kept = codes[keep]
    x_idx = [j for j in range(dist.n_variables) if x_mask >> j & 1]
    z_idx = [j for j in range(dist.n_variables) if z_mask >> j & 1]
    x_key = np.zeros(len(kept), dtype=np.int64)
    for new, old in enumerate(x_idx):
        x_key |= ((kept >> old) & 1) << new
    z_key = np.zeros(len(kept), dtype=np.int64)
    for new, old in enumerate(z_idx):
        z_key |= ((kept >> old) & 1) << new
    nx_, nz = 1 << len(x_idx), 1 << len(z_idx)
    joint = _aggregate(x_key * nz + z_key, probs, nx_ * nz, dist.exact).reshape(nx_, nz)
    px, pz = joint.sum(axis=1), joint.sum(axis=0)
    diff = joint - np.outer(px, pz)
    absdiff = np.abs(diff)
    flat = int(np.argmax(absdiff)) if not dist.exact else max(range(absdiff.size), key=lambda k: absdiff.flat[k])
    a, b = divmod(flat, nz)
    return absdiff.flat[flat], closed, (a, x_idx), (b, z_idx)


def _atom_json(dist: Distribution, atom) -> dict:
    value, positions = atom
    return {
        "bonds": [[list(p) for p in dist.variables[j]] for j in positions],
        "values": [value >> k & 1 for k in range(len(positions))],
    }


def check_markov_blocking(
    dist: Distribution,
    partition: BlockingPartition,
    protected: Optional[Iterable] = None,
    tolerance: float = INDEPENDENCE_TOLERANCE,
) -> MarkovReport:
    """
    Exact test that ω_X and ω_Z are conditionally independent given Y all closed.

    With protected given, only partitions with X or Z containing it are
    asserted; others come back with applicable=False.

    Raises:
        ValueError: the partition is not blocking
        ZeroProbabilityError: P(Y all closed) = 0
    """
    region = dist.region
    if not verify_blocking(region, partition):
        raise ValueError("Partition is not blocking: a path joins X to Z avoiding Y")
    if protected is not None:
        target = {make_bond(*b) for b in protected}
        if not (target <= partition.x_part or target <= partition.z_part):
            return MarkovReport(True, partition, applicable=False)
    gap, closed, xa, zb = _markov_gap(
        dist, region.mask_of(partition.x_part), region.mask_of(partition.y_part), region.mask_of(partition.z_part)
    )
    if gap is None:
        raise ZeroProbabilityError("P(Y all closed) = 0")
    tol = dist.tolerance(tolerance)
    holds = gap <= tol
    witness = None
    if not holds:
        witness = {"x_event": _atom_json(dist, xa), "z_event": _atom_json(dist, zb), "product_gap": float(gap)}
    return MarkovReport(holds, partition, gap, witness, closed_mass=closed)


def _partitions_by_blocker(region: Region, protected: Optional[set] = None):
    """Blocking partitions grouped by Y: X is any nonempty proper union of components of R ∖ Y."""
    n = len(region)
    for y_mask in range(1 << n):
        rest = [region.bonds[j] for j in range(n) if not y_mask >> j & 1]
        comps = components(rest)
        if len(comps) < 2:
            continue
        y_part = [region.bonds[j] for j in range(n) if y_mask >> j & 1]
        for choice in itertools.product((0, 1), repeat=len(comps)):
            if 0 not in choice or 1 not in choice or choice[0] == 1:
                continue
            x_part = [b for c, pick in zip(comps, choice) if pick == 0 for b in c]
            z_part = [b for c, pick in zip(comps, choice) if pick == 1 for b in c]
            if protected is not None and not (protected <= set(x_part) or protected <= set(z_part)):
                continue
            yield BlockingPartition.of(x_part, y_part, z_part)


def check_markov_all(dist: Distribution, protected: Optional[Iterable] = None, tolerance: float = INDEPENDENCE_TOLERANCE) -> MarkovReport:
    """
    Sweep every blocking partition (each X/Z split counted once) and
    return the first failure, or a passing report with the largest gap.
    Partitions with P(Y all closed) = 0 are skipped.
    """
    region = dist.region
    target = {make_bond(*b) for b in protected} if protected is not None else None
    worst = MarkovReport(True, gap=0, checked=0)
    checked = 0
    for partition in _partitions_by_blocker(region, target):
        try:
            report = check_markov_blocking(dist, partition, tolerance=tolerance)
        except ZeroProbabilityError:
            continue
        checked += 1
        if not report.holds:
            report.checked = checked
            logger.info(f"[CHECK] Markov property fails after {checked} partitions (gap {float(report.gap):.3g})")
            return report
        if report.gap >= worst.gap:
            worst = report
    worst.checked = checked
    return worst


@dataclass
class BlockableReport:
    holds: bool
    checked: int = 0
    failure: Optional[MarkovReport] = None
    outside: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "checked": self.checked,
            "outside": self.outside,
            "failure": self.failure.to_json() if self.failure else None,
        }


def check_blockable(dist: Distribution, target: Iterable, enclosing: Iterable) -> BlockableReport:
    """
    Markov property for every blocking partition of `enclosing` protecting
    `target`, under the measures with the rest of the region all closed
    and all open.
    """
    region = dist.region
    enclosing = sorted({make_bond(*b) for b in enclosing})
    rest = region.complement(enclosing)
    checked = 0
    for label, value in (("closed", 0), ("open", 1)):
        try:
            cond = condition(dist, {b: value for b in rest}) if rest else dist
        except ZeroProbabilityError:
            continue
        local = marginal(cond, enclosing)
        report = check_markov_all(local, protected=target)
        checked += report.checked
        if not report.holds:
            return BlockableReport(False, checked, report, label)
    return BlockableReport(True, checked)


# =============================================================================
# Mixing
# =============================================================================

@dataclass
class MixingReport:
    e_set: tuple
    f_set: tuple
    max_ratio_deviation: float = 0.0
    max_tv_over_boundaries: Optional[float] = None
    attaining_atoms: Optional[tuple] = None
    weak_mixing: Optional[float] = None
    exponential_sum: Optional[float] = None
    decay_rate: Optional[float] = None

    def to_json(self) -> dict:
        bonds = lambda s: [[list(x), list(y)] for x, y in s]
        return {
            "e_set": bonds(self.e_set),
            "f_set": bonds(self.f_set),
            "max_ratio_deviation": float(self.max_ratio_deviation),
            "max_tv_over_boundaries": None if self.max_tv_over_boundaries is None else float(self.max_tv_over_boundaries),
            "attaining_atoms": list(self.attaining_atoms) if self.attaining_atoms else None,
            "weak_mixing": None if self.weak_mixing is None else float(self.weak_mixing),
            "exponential_sum": self.exponential_sum,
            "decay_rate": self.decay_rate,
        }


def _atom_tables(dist: Distribution, e_set, f_set):
    e_idx = sorted({dist.index_of(b) for b in e_set})
    f_idx = sorted({dist.index_of(b) for b in f_set})
    e_key, f_key = project(dist, e_idx), project(dist, f_idx)
    ne, nf = 1 << len(e_idx), 1 << len(f_idx)
    joint = _aggregate(e_key * nf + f_key, dist.probabilities, ne * nf, dist.exact).reshape(ne, nf)
    return joint, joint.sum(axis=1), joint.sum(axis=0)


def ratio_mixing_coefficient(dist: Distribution, e_set: Iterable, f_set: Iterable, decay_rate: Optional[float] = None) -> MixingReport:
    """
    sup |P(A∩B) / (P(A)P(B)) - 1| over A ∈ 𝒢_E, B ∈ 𝒢_F, and the additive
    sup |P(A|B) - P(A)|.

    The ratio for general A, B is a weighted average of atom ratios with
    weights P(a)P(b) / (P(A)P(B)), so both extremes sit on atoms. The
    additive form is a total variation, convex in P(·|B), so it peaks at
    atoms of F. Atoms of probability zero are excluded.
    """
    e_set = tuple(sorted({make_bond(*b) for b in e_set}))
    f_set = tuple(sorted({make_bond(*b) for b in f_set}))
    joint, pe, pf = _atom_tables(dist, e_set, f_set)
    best, where = 0.0, None
    weak = 0.0
    for b in range(len(pf)):
        if pf[b] == 0:
            continue
        tv = 0
        for a in range(len(pe)):
            if pe[a] == 0:
                continue
            dev = abs(joint[a, b] / (pe[a] * pf[b]) - 1)
            if dev > best or where is None:
                best, where = dev, (a, b)
            tv += abs(joint[a, b] / pf[b] - pe[a])
        weak = max(weak, tv / 2)
    report = MixingReport(e_set, f_set, best, attaining_atoms=where, weak_mixing=weak)
    if decay_rate is not None and isinstance(dist.region, Region):
        report.decay_rate = decay_rate
        report.exponential_sum = exponential_sum(dist.region, e_set, f_set, decay_rate)
    return report


def weak_mixing_coefficient(dist: Distribution, e_set: Iterable, f_set: Iterable) -> MixingReport:
    """Additive mixing sup |P(A|B) - P(A)|, reported in MixingReport.weak_mixing."""
    return ratio_mixing_coefficient(dist, e_set, f_set)


def exponential_sum(region: Region, e_set, f_set, decay_rate: float) -> float:
    """Σ_{x∈V(E), y∈V(F)} e^(-λ d_R(x,y))."""
    ve = sorted({s for b in e_set for s in b})
    vf = sorted({s for b in f_set for s in b})
    total = 0.0
    for x in ve:
        for y in vf:
            d = distance(region, x, y)
            if d != math.inf:
                total += math.exp(-decay_rate * d)
    return total


def boundary_sweep(region: Region, seed: int = 0, sweep_cap: int = FULL_BOUNDARY_SWEEP_CAP, draws: int = WEAK_MIXING_RANDOM_BOUNDARIES) -> list[BoundaryCondition]:
    """Free, wired, and every ρ on the outer bonds when few, else seeded random ρ draws."""
    outer = outer_boundary_bonds(region)
    out = [FREE, WIRED]
    if len(outer) <= sweep_cap:
        for bits in range(1, 1 << len(outer)):
            out.append(BoundaryCondition.bond([b for j, b in enumerate(outer) if bits >> j & 1]))
    else:
        rng = np.random.default_rng(seed)
        for _ in range(draws):
            picks = rng.random(len(outer)) < 0.5
            out.append(BoundaryCondition.bond([b for b, keep in zip(outer, picks) if keep]))
    return out


def weak_mixing_tv(
    params: FkParams,
    region: Region,
    d_set: Iterable,
    boundaries: Optional[Sequence[BoundaryCondition]] = None,
    seed: int = 0,
    cap: Optional[int] = None,
) -> float:
    """Max over boundary pairs of the TV distance between the induced laws on D."""
    d_set = [make_bond(*b) for b in d_set]
    boundaries = list(boundaries) if boundaries is not None else boundary_sweep(region, seed)
    laws = [marginal(enumerate_distribution(params, region, bc, cap=cap), d_set) for bc in boundaries]
    best = 0.0
    pair = None
    for i, j in itertools.combinations(range(len(laws)), 2):
        tv = float(tv_distance(laws[i], laws[j]))
        if tv > best:
            best, pair = tv, (boundaries[i].kind, boundaries[j].kind)
    logger.debug(f"[ENUM] weak mixing TV {best:.6g} over {len(laws)} boundaries (pair {pair})")
    return best


# =============================================================================
# Diagnostics
# =============================================================================

@dataclass
class EnergyReport:
    minimum: float
    maximum: float
    argmin: Optional[tuple] = None
    argmax: Optional[tuple] = None

    def to_json(self) -> dict:
        return {"min": float(self.minimum), "max": float(self.maximum), "argmin": self.argmin, "argmax": self.argmax}


def bounded_energy(dist: Distribution) -> EnergyReport:
    """min / max over bonds and positive-mass environments of P(ω_e = 1 | ω off e)."""
    codes = np.arange(dist.size)
    lo, hi, arg_lo, arg_hi = math.inf, -math.inf, None, None
    for j in range(dist.n_variables):
        env = codes[(codes >> j & 1) == 0]
        p0 = dist.probabilities[env]
        p1 = dist.probabilities[env | (1 << j)]
        tot = p0 + p1
        for k in np.nonzero(tot > 0)[0]:
            value = p1[k] / tot[k]
            if value < lo:
                lo, arg_lo = value, (j, int(env[k]))
            if value > hi:
                hi, arg_hi = value, (j, int(env[k]))
    return EnergyReport(lo, hi, arg_lo, arg_hi)


def ising_conditional(params, site_region: SiteRegion, boundary: BoundaryCondition, delta: Iterable, eta_delta: dict, cap: Optional[int] = None) -> Distribution:
    """The Ising measure on Λ ∖ Δ given spins η_Δ on Δ."""
    delta = [make_site(s) for s in delta]
    dist = enumerate_distribution(params, site_region, boundary, cap=cap)
    pinned = {s: 1 if eta_delta[s] == 1 else 0 for s in delta}
    cond = condition(dist, pinned)
    return marginal(cond, [s for s in site_region.sites if s not in set(delta)])
