# operators/split.py
"""
Split Measures and Couplings - fk-separation

The machinery that compares separated occurrence under a measure with
occurrence under its 𝒮-split version, one filling step at a time:

    split()                     the 𝒮-split measure P_𝒮 on (ω_𝒯, ω_𝒮, ω̃_𝒮)
    fkg_coupling()              monotone coupling of two ordered measures
    cluster_revealing_coupling  FKG coupling agreeing off the top cluster of e
    build_se_joint()            the joint measure 𝕡_{𝒮,e} behind one step
    cij_classify()              the C_ij event lattice of a quintuple
    verify_induction_step()     lhs <= rhs + leak_A + leak_B, exactly
    run_filling_iteration()     the whole chain from 𝒮 = ∅ to 𝒮 = 𝒱
    rsm_coupling()              minimum/residual mixture coupling of Ising conditionals
    connection_inducing()       φ_x classification with its Markov-inequality check

All tables are exact enumerations; float mode compares at 1e-12.

Usage:
    from operators.split import split, verify_induction_step

    report = verify_induction_step(dist, a, b, r=2, s_set=[b1], e=b2)
    report.holds
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

import networkx as nx
import numpy as np

from config.settings import DEFAULT_EXACT_CAP, INDEPENDENCE_TOLERANCE, PROBABILITY_TOLERANCE
from operators.engine import (
    Distribution,
    check_fkg_dominance,
    check_markov_blocking,
    condition,
    flow_capacity,
    flow_scale,
    indicator,
    marginal,
    marginal_table,
    probability,
    project,
)
from operators.errors import (
    DominanceError,
    EnumerationCapError,
    MarkovPropertyError,
    ZeroProbabilityError,
)
from operators.events import Event, cluster_reaches, minimal_witnesses
from operators.lattice import (
    BlockingPartition,
    Bond,
    Configuration,
    Region,
    SiteRegion,
    ball,
    distance,
    make_bond,
    thicken,
)

logger = logging.getLogger(__name__)

# Exclusion zone around e, as a fraction of r, for C_ij^A / C_ij^B
ZONE_FRACTION = 1 / 3

COUPLING_FAMILIES = ("fkg", "cluster_revealing")


# =============================================================================
# Table helpers
# =============================================================================

def _zeros(size, exact: bool) -> np.ndarray:
    if not exact:
        return np.zeros(size)
    out = np.empty(size, dtype=object)
    out.fill(Fraction(0))
    return out


def _expand(code: int, positions: Sequence[int]) -> int:
    """Region mask of a code over the given positions."""
    mask = 0
    for k, j in enumerate(positions):
        if code >> k & 1:
            mask |= 1 << j
    return mask


def _compress(mask: int, positions: Sequence[int]) -> int:
    code = 0
    for k, j in enumerate(positions):
        if mask >> j & 1:
            code |= 1 << k
    return code


def _positions(dist: Distribution, bonds: Iterable) -> list[int]:
    return sorted({dist.index_of(b) for b in bonds})


def _max_abs(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    return float(max((abs(x) for x in diff.flat), default=0))


# =============================================================================
# Split Measure
# =============================================================================

@dataclass(frozen=True)
class SplitDistribution:
    """
    P_𝒮(ω_𝒯, ω_𝒮, ω̃_𝒮) = P(ω_𝒯) P(ω_𝒮 | ω_𝒯) P(ω̃_𝒮 | ω_𝒯).

    table[t, s, s̃] is indexed by codes over the sorted positions of 𝒯 and 𝒮.
    """

    base: Distribution
    split_set: tuple
    t_positions: tuple
    s_positions: tuple
    table: np.ndarray

    @property
    def region(self) -> Region:
        return self.base.region

    def layers(self, t: int, s: int, s_tilde: int) -> tuple[Configuration, Configuration]:
        """(ω_𝒯, ω_𝒮) and (ω_𝒯, ω̃_𝒮) as configurations of R."""
        outside = _expand(t, self.t_positions)
        return (
            Configuration(self.region, outside | _expand(s, self.s_positions)),
            Configuration(self.region, outside | _expand(s_tilde, self.s_positions)),
        )

    def layer_marginals(self) -> tuple[np.ndarray, np.ndarray]:
        """Law of each layer as a table over the configurations of R."""
        first, second = _zeros(self.base.size, self.base.exact), _zeros(self.base.size, self.base.exact)
        n_s = 1 << len(self.s_positions)
        for t in range(self.table.shape[0]):
            outside = _expand(t, self.t_positions)
            for s in range(n_s):
                mask = outside | _expand(s, self.s_positions)
                first[mask] += self.table[t, s, :].sum()
                second[mask] += self.table[t, :, s].sum()
        return first, second

    def atoms(self):
        """(t, s, s̃, mass) for every atom of positive mass."""
        for t, s, s_tilde in zip(*np.nonzero(self.table > 0)):
            yield int(t), int(s), int(s_tilde), self.table[t, s, s_tilde]

    def occurrence_probability(self, a: Event, b: Event, r: float):
        """P_𝒮(A ∘_{r,𝒮} B)."""
        cache = _WitnessCache()
        total = Fraction(0) if self.base.exact else 0.0
        for t, s, s_tilde, mass in self.atoms():
            top, tilde = self.layers(t, s, s_tilde)
            if _separated(cache, a, top, b, tilde, r):
                total += mass
        return total


def split(dist: Distribution, s_set: Iterable[Bond], cap: Optional[int] = None) -> SplitDistribution:
    """
    Build the 𝒮-split measure of dist and verify both layer marginals.

    Raises:
        EnumerationCapError: 2|𝒮| + |R∖𝒮| above the cap
    """
    cap = DEFAULT_EXACT_CAP if cap is None else cap
    s_positions = _positions(dist, s_set)
    t_positions = [j for j in range(dist.n_variables) if j not in s_positions]
    width = 2 * len(s_positions) + len(t_positions)
    if width > cap:
        raise EnumerationCapError(width, cap, what="split measure")

    n_t, n_s = 1 << len(t_positions), 1 << len(s_positions)
    keys = project(dist, t_positions) * n_s + project(dist, s_positions)
    joint = _zeros(n_t * n_s, dist.exact)
    for k, p in zip(keys, dist.probabilities):
        joint[k] += p
    joint = joint.reshape(n_t, n_s)

    table = _zeros((n_t, n_s, n_s), dist.exact)
    for t in range(n_t):
        mass = joint[t].sum()
        if mass > 0:
            table[t] = np.outer(joint[t], joint[t]) / mass

    gap = max(_max_abs(table.sum(axis=2), joint), _max_abs(table.sum(axis=1), joint))
    if gap > dist.tolerance():
        raise RuntimeError(f"Split measure marginals drift by {gap:.3g}")
    split_set = tuple(dist.variables[j] for j in s_positions)
    logger.debug(f"[SPLIT] split over {len(split_set)} bonds, {n_t} outside atoms")
    return SplitDistribution(dist, split_set, tuple(t_positions), tuple(s_positions), table)


# =============================================================================
# Split Occurrence
# =============================================================================

class _WitnessCache:
    """Minimal witnesses per (event, configuration) and distances per witness pair."""

    def __init__(self):
        self._witnesses: dict = {}
        self._distances: dict = {}

    def witnesses(self, event: Event, config: Configuration):
        key = (id(event), config.bits)
        if key not in self._witnesses:
            self._witnesses[key] = tuple(minimal_witnesses(event, config)) if event(config) else None
        return self._witnesses[key]

    def distance(self, region: Region, theta: frozenset, gamma: frozenset):
        key = (theta, gamma)
        if key not in self._distances:
            self._distances[key] = distance(region, list(theta), list(gamma))
        return self._distances[key]


def _pair_flags(cache: _WitnessCache, a: Event, a_config, b: Event, b_config, r: float, zone: frozenset = frozenset()):
    """
    (separated, separated with A's witness off the zone, separated with
    B's witness off the zone) for A in a_config and B in b_config.
    """
    wa = cache.witnesses(a, a_config)
    wb = cache.witnesses(b, b_config)
    if wa is None or wb is None:
        return False, False, False
    region = a_config.region
    found = a_out = b_out = False
    for theta in wa:
        theta_out = not theta & zone
        for gamma in wb:
            if r > 0 and cache.distance(region, theta, gamma) < r:
                continue
            found = True
            a_out = a_out or theta_out
            b_out = b_out or not gamma & zone
            if a_out and b_out:
                return True, True, True
    return found, a_out, b_out


def _separated(cache: _WitnessCache, a: Event, a_config, b: Event, b_config, r: float) -> bool:
    return _pair_flags(cache, a, a_config, b, b_config, r)[0]


def split_occurrence(
    a: Event,
    b: Event,
    split_config: tuple[Configuration, Configuration],
    r: float,
    s_set: Iterable[Bond],
) -> bool:
    """
    A ∘_{r,𝒮} B: A occurs on ℰ in (ω_𝒯, ω_𝒮), B on ℱ in (ω_𝒯, ω̃_𝒮), d_R(ℰ, ℱ) >= r.

    split_config is the pair of layer configurations; they must agree off 𝒮.
    """
    top, tilde = split_config
    if top.region != tilde.region:
        raise ValueError("Split layers live on different regions")
    s_mask = top.region.mask_of(s_set)
    if (top.bits ^ tilde.bits) & ~s_mask:
        raise ValueError("Split layers disagree outside the split set")
    if r < 0:
        raise ValueError(f"Separation must be nonnegative, got {r}")
    return _separated(_WitnessCache(), a, top, b, tilde, r)


# =============================================================================
# Couplings
# =============================================================================

@dataclass
class Coupling:
    """A joint law of (left, right); joint maps (i, j) to the mass of the pair."""

    left: Distribution
    right: Distribution
    joint: dict
    kind: str = "fkg"

    def support(self):
        return [(i, j, p) for (i, j), p in sorted(self.joint.items()) if p > 0]

    def marginal_error(self) -> float:
        left, right = _zeros(self.left.size, self.left.exact), _zeros(self.right.size, self.right.exact)
        for (i, j), p in self.joint.items():
            left[i] += p
            right[j] += p
        return max(_max_abs(left, self.left.probabilities), _max_abs(right, self.right.probabilities))

    def unordered_mass(self):
        """Mass on pairs where left is not >= right."""
        return sum((p for (i, j), p in self.joint.items() if j & ~i), Fraction(0) if self.left.exact else 0.0)

    def is_ordered(self) -> bool:
        return self.unordered_mass() <= self.left.tolerance()

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "marginal_error": self.marginal_error(),
            "ordered": self.is_ordered(),
            "support": [[i, j, float(p)] for i, j, p in self.support()],
        }


def _prefix_masses(probs: np.ndarray, n: int, exact: bool) -> list[np.ndarray]:
    """out[i][c] = mass of configurations whose first i bits equal c."""
    codes = np.arange(len(probs))
    out = []
    for i in range(n + 1):
        table = _zeros(1 << i, exact)
        for c, p in zip(codes & ((1 << i) - 1), probs):
            table[c] += p
        out.append(table)
    return out


def _sequential_coupling(upper: Distribution, lower: Distribution) -> dict:
    """
    Bondwise shared-uniform coupling in canonical order: bit i of each
    side is drawn from its conditional given its own prefix, both from
    the same uniform.
    """
    n = upper.n_variables
    exact = upper.exact
    pu = _prefix_masses(upper.probabilities, n, exact)
    pl = _prefix_masses(lower.probabilities, n, exact)
    tol = upper.tolerance()
    one = Fraction(1) if exact else 1.0
    states = {(0, 0): one}
    for i in range(n):
        bit = 1 << i
        nxt: dict = {}
        for (a, b), mass in states.items():
            p1 = pu[i + 1][a | bit] / pu[i][a]
            p0 = pl[i + 1][b | bit] / pl[i][b]
            if abs(p1 - p0) <= tol:
                # equal up to rounding
                p0 = p1
            for (da, db), w in (
                ((bit, bit), min(p1, p0)),
                ((bit, 0), max(p1 - p0, 0)),
                ((0, bit), max(p0 - p1, 0)),
                ((0, 0), one - max(p1, p0)),
            ):
                if w > 0:
                    key = (a | da, b | db)
                    nxt[key] = nxt.get(key, 0) + mass * w
        states = nxt
    return states


def _flow_coupling(upper: Distribution, lower: Distribution) -> dict:
    """Monotone coupling read off a max-flow from upper atoms to their lower subsets."""
    scale = flow_scale(upper, lower)
    exact = upper.exact and lower.exact
    graph = nx.DiGraph()
    for w in upper.support():
        w = int(w)
        graph.add_edge("s", ("L", w), capacity=flow_capacity(upper.probabilities[w], scale))
        v = w
        while True:
            if lower.probabilities[v] > 0:
                graph.add_edge(("L", w), ("R", v))
            if v == 0:
                break
            v = (v - 1) & w
    for v in lower.support():
        graph.add_edge(("R", int(v)), "t", capacity=flow_capacity(lower.probabilities[v], scale))
    _, flow = nx.maximum_flow(graph, "s", "t")
    joint = {}
    for node, out in flow.items():
        if isinstance(node, tuple) and node[0] == "L":
            for target, units in out.items():
                if units > 0:
                    joint[(node[1], target[1])] = Fraction(units, scale) if exact else units / scale
    return joint


def fkg_coupling(upper: Distribution, lower: Distribution) -> Coupling:
    """
    FKG coupling of upper >= lower.

    Sequential bondwise construction first; a max-flow coupling when the
    sequential one puts mass on unordered pairs. Exact tables get an exact
    flow, with masses as Fractions.

    Raises:
        DominanceError: upper does not FKG-dominate lower
    """
    if not check_fkg_dominance(upper, lower):
        raise DominanceError("Upper measure does not FKG-dominate the lower one")
    coupling = Coupling(upper, lower, _sequential_coupling(upper, lower))
    if coupling.is_ordered():
        return coupling
    logger.debug(f"[SPLIT] sequential coupling leaves {float(coupling.unordered_mass()):.3g} unordered; using max-flow")
    return Coupling(upper, lower, _flow_coupling(upper, lower))


def diagonal_coupling(dist: Distribution) -> Coupling:
    return Coupling(dist, dist, {(int(i), int(i)): dist.probabilities[i] for i in dist.support()}, kind="diagonal")


def product_coupling(left: Distribution, right: Distribution) -> Coupling:
    joint = {
        (int(i), int(j)): left.probabilities[i] * right.probabilities[j]
        for i in left.support()
        for j in right.support()
    }
    return Coupling(left, right, joint, kind="product")


# =============================================================================
# Conditionals on 𝒮 given (ζ_𝒰, ω_e)
# =============================================================================

@dataclass(frozen=True)
class _StepLayout:
    """Positions of 𝒰, 𝒮 and e inside the region."""

    dist: Distribution
    s_positions: tuple
    e_index: int
    u_positions: tuple

    @classmethod
    def of(cls, dist: Distribution, s_set: Iterable[Bond], e: Bond) -> "_StepLayout":
        e_index = dist.index_of(e)
        s_positions = tuple(_positions(dist, s_set))
        if e_index in s_positions:
            raise ValueError(f"Bond {make_bond(*e)} is already in the split set")
        used = set(s_positions) | {e_index}
        u_positions = tuple(j for j in range(dist.n_variables) if j not in used)
        return cls(dist, s_positions, e_index, u_positions)

    @property
    def s_bonds(self) -> tuple:
        return tuple(self.dist.variables[j] for j in self.s_positions)

    def constraint(self, u_code: int, e_value: Optional[int] = None) -> dict:
        out = {self.dist.variables[j]: u_code >> k & 1 for k, j in enumerate(self.u_positions)}
        if e_value is not None:
            out[self.dist.variables[self.e_index]] = e_value
        return out

    def s_law(self, u_code: int, e_value: int) -> Distribution:
        """P(ω_𝒮 ∈ · | ω_𝒰 = ζ_𝒰, ω_e = e_value) over the subregion 𝒮."""
        return marginal(condition(self.dist, self.constraint(u_code, e_value)), self.s_bonds)

    def mask(self, u_code: int, e_value: int, s_code: int) -> int:
        return (
            _expand(u_code, self.u_positions)
            | (e_value << self.e_index)
            | _expand(s_code, self.s_positions)
        )


# =============================================================================
# Cluster-revealing Coupling
# =============================================================================

def _conditional_one(probs: np.ndarray, care: int, value: int, bit: int):
    """P(bit set | the bits in care equal value) for a local table."""
    codes = np.arange(len(probs))
    keep = (codes & care) == value
    return probs[keep & ((codes & bit) != 0)].sum() / probs[keep].sum()


def cluster_revealing_coupling(
    dist: Distribution,
    s_set: Iterable[Bond],
    e: Bond,
    zeta_u: Union[int, dict],
    _checked: Optional[dict] = None,
) -> Coupling:
    """
    FKG coupling of P(ω_𝒮 | ζ_𝒰, ω_e = 1) and P(ω_𝒮 | ζ_𝒰, ω_e = 0)
    whose layers agree on every bond outside the open cluster C_e of the
    top layer.

    The cluster of e is revealed bond by bond in the top layer, each
    revealed bond coupled monotonically; the unrevealed rest is copied
    from the top layer to the bottom. The copy is valid when the Markov
    property holds for the partition (cluster bonds, closed boundary of
    the cluster, rest), which is checked exactly for every leaf.

    Args:
        zeta_u: code over the sorted 𝒰 positions, or {bond: 0/1}

    Raises:
        MarkovPropertyError: a needed blocking partition fails, with the engine witness
        DominanceError: a revealing step is not monotone
    """
    layout = _StepLayout.of(dist, s_set, e)
    region = dist.region
    if isinstance(zeta_u, dict):
        zeta_u = sum(1 << k for k, j in enumerate(layout.u_positions) if zeta_u.get(region.bonds[j], 0))
    upper, lower = layout.s_law(zeta_u, 1), layout.s_law(zeta_u, 0)
    if not layout.s_positions:
        return Coupling(upper, lower, {(0, 0): upper.probabilities[0]}, kind="cluster_revealing")

    s_local = {j: k for k, j in enumerate(layout.s_positions)}
    u_mask = _expand(zeta_u, layout.u_positions)
    tol = dist.tolerance()
    checked = {} if _checked is None else _checked
    joint: dict = {}
    n_s = len(layout.s_positions)
    full_local = (1 << n_s) - 1

    def reached(top_open: int) -> set:
        """Vertices of C_e in (ζ_𝒰, 1, revealed top bits)."""
        open_mask = u_mask | (1 << layout.e_index) | _expand(top_open, layout.s_positions)
        start = region.endpoints[layout.e_index]
        seen = set(start)
        frontier = list(start)
        while frontier:
            v = frontier.pop()
            for i in region.incident[v]:
                if open_mask >> i & 1:
                    for w in region.endpoints[i]:
                        if w not in seen:
                            seen.add(w)
                            frontier.append(w)
        return seen

    def check_partition(vertices: set, care: int, top: int) -> None:
        x_part, y_part = {layout.e_index}, set()
        for v in vertices:
            for i in region.incident[v]:
                if i == layout.e_index:
                    continue
                if i in s_local:
                    if care >> s_local[i] & 1:
                        (x_part if top >> s_local[i] & 1 else y_part).add(i)
                else:
                    (x_part if u_mask >> i & 1 else y_part).add(i)
        z_part = set(range(len(region))) - x_part - y_part
        key = (frozenset(x_part), frozenset(y_part))
        if key in checked:
            return
        partition = BlockingPartition.of(
            [region.bonds[i] for i in x_part], [region.bonds[i] for i in y_part], [region.bonds[i] for i in z_part]
        )
        try:
            report = check_markov_blocking(dist, partition)
        except ZeroProbabilityError:
            checked[key] = True
            return
        checked[key] = report.holds
        if not report.holds:
            raise MarkovPropertyError(
                f"Markov property fails for the cluster of {region.bonds[layout.e_index]} (gap {float(report.gap):.3g})",
                witness=report.witness,
            )

    def leaf(care: int, top: int, bottom: int, mass) -> None:
        rest = full_local & ~care
        if rest:
            check_partition(reached(top), care, top)
        codes = np.arange(1 << n_s)
        keep = (codes & care) == top
        total = upper.probabilities[keep].sum()
        for c in codes[keep]:
            p = upper.probabilities[c]
            if p > 0:
                free = int(c) & rest
                key = (top | free, bottom | free)
                joint[key] = joint.get(key, 0) + mass * p / total

    def explore(care: int, top: int, bottom: int, mass) -> None:
        vertices = reached(top)
        frontier = sorted(
            s_local[i] for v in vertices for i in region.incident[v] if i in s_local and not care >> s_local[i] & 1
        )
        if not frontier:
            leaf(care, top, bottom, mass)
            return
        k = frontier[0]
        bit = 1 << k
        p1 = _conditional_one(upper.probabilities, care, top, bit)
        p0 = _conditional_one(lower.probabilities, care, bottom, bit)
        if p0 > p1 + tol:
            raise DominanceError(f"Revealing {layout.s_bonds[k]} is not monotone ({float(p1):.6g} < {float(p0):.6g})")
        one = Fraction(1) if dist.exact else 1.0
        for (dt, db), w in (
            ((bit, bit), min(p1, p0)),
            ((bit, 0), max(p1 - p0, 0)),
            ((0, 0), one - max(p1, p0)),
        ):
            if w > 0:
                explore(care | bit, top | dt, bottom | db, mass * w)

    explore(0, 0, 0, Fraction(1) if dist.exact else 1.0)
    coupling = Coupling(upper, lower, joint, kind="cluster_revealing")
    error = coupling.marginal_error()
    if error > (0 if dist.exact else INDEPENDENCE_TOLERANCE):
        raise MarkovPropertyError(f"Cluster-revealing coupling misses its bottom marginal by {error:.3g}")
    return coupling


def agrees_outside_cluster(dist: Distribution, s_set: Iterable[Bond], e: Bond, zeta_u: int, coupling: Coupling) -> bool:
    """Every atom's layers differ only on open bonds of C_e in the top layer."""
    layout = _StepLayout.of(dist, s_set, e)
    region = dist.region
    for top, bottom, _ in coupling.support():
        open_mask = layout.mask(zeta_u, 1, top)
        graph = nx.Graph()
        graph.add_edges_from(region.endpoints[i] for i in range(len(region)) if open_mask >> i & 1)
        cluster = nx.node_connected_component(graph, region.endpoints[layout.e_index][0])
        diff = _expand(top ^ bottom, layout.s_positions)
        for i in range(len(region)):
            if diff >> i & 1 and not set(region.endpoints[i]) <= cluster:
                return False
    return True


# =============================================================================
# The Joint Measure 𝕡_{𝒮,e}
# =============================================================================

CouplingFamily = Union[str, Callable[[Distribution, Sequence[Bond], Bond, int], Coupling]]


def _family(coupling_family: CouplingFamily) -> Callable:
    if callable(coupling_family):
        return coupling_family
    if coupling_family == "fkg":
        def build(dist, s_set, e, u_code):
            layout = _StepLayout.of(dist, s_set, e)
            return fkg_coupling(layout.s_law(u_code, 1), layout.s_law(u_code, 0))
        return build
    if coupling_family == "cluster_revealing":
        checked: dict = {}

        def build(dist, s_set, e, u_code):
            return cluster_revealing_coupling(dist, s_set, e, u_code, _checked=checked)
        return build
    raise ValueError(f"Unknown coupling family '{coupling_family}' (expected one of {COUPLING_FAMILIES})")


@dataclass
class SeAtom:
    """One ζ_𝒰 of positive mass: P(ζ_𝒰), P(ω_e = 1 | ζ_𝒰) and the pair coupling."""

    u_code: int
    p_u: object
    p_e: object
    pairs: list  # (top code, bottom code, mass)


@dataclass
class SeJointMeasure:
    """
    𝕡_{𝒮,e}(ζ_𝒰, ζ_e, ζ̃_e, ζ¹, ζ⁰, ζ̃¹, ζ̃⁰) = P(ζ_𝒰) P(ζ_e|ζ_𝒰) P(ζ̃_e|ζ_𝒰)
    P̂_{ζ_𝒰}(ζ¹, ζ⁰) P̂_{ζ_𝒰}(ζ̃¹, ζ̃⁰), held as one SeAtom per ζ_𝒰.
    """

    dist: Distribution
    layout: _StepLayout
    atoms: list
    family: str = "fkg"
    identity_gaps: tuple = (0.0, 0.0)

    @property
    def e(self) -> Bond:
        return self.dist.variables[self.layout.e_index]

    def quintuples(self):
        """(atom, A pair, B pair, mass of the pair coupling product) over the support."""
        for atom in self.atoms:
            for a_top, a_bottom, wa in atom.pairs:
                for b_top, b_bottom, wb in atom.pairs:
                    yield atom, (a_top, a_bottom), (b_top, b_bottom), atom.p_u * wa * wb

    def pushforward_split_plus(self) -> np.ndarray:
        """Law of (ω_𝒰, (ω_e, ω^{ω_e}_𝒮), (ω̃_e, ω̃^{ω̃_e}_𝒮)) in split(dist, 𝒮 ∪ {e}) layout."""
        lay = self.layout
        sp = sorted(lay.s_positions + (lay.e_index,))
        n_u, n_sp = 1 << len(lay.u_positions), 1 << len(sp)
        out = _zeros((n_u, n_sp, n_sp), self.dist.exact)
        for atom, a_pair, b_pair, w in self.quintuples():
            pe = {1: atom.p_e, 0: 1 - atom.p_e}
            for i in (0, 1):
                for j in (0, 1):
                    mass = w * pe[i] * pe[j]
                    if mass == 0:
                        continue
                    a_code = _compress(lay.mask(0, i, a_pair[1 - i]), sp)
                    b_code = _compress(lay.mask(0, j, b_pair[1 - j]), sp)
                    out[atom.u_code, a_code, b_code] += mass
        return out

    def pushforward_split(self) -> np.ndarray:
        """Law of ((ω_𝒰, ω_e), ω^{ω_e}_𝒮, ω̃^{ω_e}_𝒮) in split(dist, 𝒮) layout."""
        lay = self.layout
        tp = sorted(lay.u_positions + (lay.e_index,))
        n_t, n_s = 1 << len(tp), 1 << len(lay.s_positions)
        out = _zeros((n_t, n_s, n_s), self.dist.exact)
        for atom, a_pair, b_pair, w in self.quintuples():
            for i, pe in ((1, atom.p_e), (0, 1 - atom.p_e)):
                if pe == 0:
                    continue
                t_code = _compress(lay.mask(atom.u_code, i, 0), tp)
                out[t_code, a_pair[1 - i], b_pair[1 - i]] += w * pe
        return out


def build_se_joint(
    dist: Distribution,
    s_set: Iterable[Bond],
    e: Bond,
    coupling_family: CouplingFamily = "fkg",
) -> SeJointMeasure:
    """
    Tabulate 𝕡_{𝒮,e} and verify that its two pushforwards are the
    (𝒮∪{e})-split and 𝒮-split measures.

    Raises:
        ValueError: the family returns no coupling for some ζ_𝒰
        RuntimeError: a pushforward identity fails
    """
    s_set = [make_bond(*b) for b in s_set]
    layout = _StepLayout.of(dist, s_set, e)
    family = _family(coupling_family)
    family_name = coupling_family if isinstance(coupling_family, str) else getattr(coupling_family, "__name__", "custom")

    _, u_table = marginal_table(dist, [dist.variables[j] for j in layout.u_positions])
    u_key = project(dist, list(layout.u_positions))
    e_set = (np.arange(dist.size) >> layout.e_index) & 1 == 1

    atoms = []
    for u_code, p_u in enumerate(u_table):
        if p_u == 0:
            continue
        keep = (u_key == u_code) & e_set
        p_e = dist.probabilities[keep].sum() / p_u if keep.any() else (Fraction(0) if dist.exact else 0.0)
        if 0 < p_e < 1:
            coupling = family(dist, s_set, e, u_code)
        else:
            coupling = diagonal_coupling(layout.s_law(u_code, 1 if p_e > 0 else 0))
        if coupling is None:
            raise ValueError(f"Coupling family returned nothing for ζ_𝒰 = {u_code}")
        atoms.append(SeAtom(u_code, p_u, p_e, coupling.support()))

    joint = SeJointMeasure(dist, layout, atoms, family=family_name)
    tol = dist.tolerance()
    plus_gap = _max_abs(joint.pushforward_split_plus(), split(dist, s_set + [make_bond(*e)]).table)
    base_gap = _max_abs(joint.pushforward_split(), split(dist, s_set).table)
    joint.identity_gaps = (plus_gap, base_gap)
    if plus_gap > tol or base_gap > tol:
        raise RuntimeError(f"Pushforward identities fail: {plus_gap:.3g} (𝒮∪{{e}}), {base_gap:.3g} (𝒮)")
    logger.debug(f"[SPLIT] joint for e={make_bond(*e)}: {len(atoms)} outside atoms, family {family_name}")
    return joint


# =============================================================================
# The C_ij Event Lattice
# =============================================================================

def zone_radius(r: float, fraction: float = ZONE_FRACTION) -> float:
    """
    Radius of the exclusion zone {e}^ρ: fraction·r, capped so that two
    witnesses both meeting the zone are closer than r. Negative means
    the zone is empty.
    """
    return min(r * fraction, math.ceil((r - 1) / 2) - 1)


def exclusion_zone(region: Region, e: Bond, r: float, fraction: float = ZONE_FRACTION) -> frozenset:
    rho = zone_radius(r, fraction)
    return frozenset(thicken(region, [e], rho)) if rho >= 0 else frozenset()


@dataclass(frozen=True)
class Quintuple:
    """(ζ_𝒰, ζ¹_𝒮, ζ⁰_𝒮, ζ̃¹_𝒮, ζ̃⁰_𝒮) as codes over the 𝒰 and 𝒮 positions."""

    u: int
    a_top: int
    a_bottom: int
    b_top: int
    b_bottom: int


@dataclass(frozen=True)
class CijFlags:
    c00: bool
    c01: bool
    c10: bool
    c11: bool
    c11_a: bool
    c11_b: bool

    @property
    def chain_holds(self) -> bool:
        """C₀₀ ⊆ C₁₀∩C₀₁ and C₁₀∪C₀₁ ⊆ C₁₁ at this point."""
        return (not self.c00 or (self.c10 and self.c01)) and (not (self.c10 or self.c01) or self.c11)

    @property
    def split_holds(self) -> bool:
        """C₁₁ = C₁₁^A ∪ C₁₁^B at this point."""
        return self.c11 == (self.c11_a or self.c11_b)

    @property
    def top_only(self) -> bool:
        return self.c11 and not (self.c10 or self.c01)

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("c00", "c01", "c10", "c11", "c11_a", "c11_b")}


def _check_monotone_pair(a: Event, b: Event) -> None:
    if not (a.increasing and b.increasing):
        raise ValueError(f"C_ij needs increasing events, got {a.monotonicity} and {b.monotonicity}")


def _classify(layout: _StepLayout, cache: _WitnessCache, a: Event, b: Event, r: float, q: Quintuple, zone: frozenset) -> CijFlags:
    region = layout.dist.region

    def config(i: int, top: int, bottom: int) -> Configuration:
        return Configuration(region, layout.mask(q.u, i, top if i else bottom))

    flags = {}
    for i in (0, 1):
        for j in (0, 1):
            flags[(i, j)] = _pair_flags(
                cache, a, config(i, q.a_top, q.a_bottom), b, config(j, q.b_top, q.b_bottom), r,
                zone if (i, j) == (1, 1) else frozenset(),
            )
    c11, c11_a, c11_b = flags[(1, 1)]
    return CijFlags(flags[(0, 0)][0], flags[(0, 1)][0], flags[(1, 0)][0], c11, c11_a, c11_b)


def cij_classify(
    dist: Distribution,
    a: Event,
    b: Event,
    r: float,
    s_set: Iterable[Bond],
    e: Bond,
    quintuple: Quintuple,
    zone_fraction: float = ZONE_FRACTION,
) -> CijFlags:
    """
    Membership of a quintuple in C₀₀, C₀₁, C₁₀, C₁₁, C₁₁^A, C₁₁^B.

    C_ij: A∘_{r,𝒮∪{e}}B occurs when layer i of the A pair and layer j of
    the B pair are used; the A (B) superscript further asks that A's (B's)
    witness avoid the exclusion zone around e.

    Raises:
        ValueError: a or b is not increasing
    """
    _check_monotone_pair(a, b)
    layout = _StepLayout.of(dist, s_set, e)
    zone = exclusion_zone(dist.region, make_bond(*e), r, zone_fraction)
    return _classify(layout, _WitnessCache(), a, b, r, quintuple, zone)


# =============================================================================
# Induction Step
# =============================================================================

def flip_distribution(dist: Distribution) -> Distribution:
    """Law of the bitwise complement ω ↦ 1 - ω."""
    return Distribution(dist.region, dist.probabilities[::-1].copy(), exact=dist.exact)


def flip_event(event: Event) -> Event:
    """The event read on complemented configurations (decreasing ↔ increasing)."""
    def flipped(config: Configuration) -> Configuration:
        return Configuration(config.region, config.bits ^ config.region.full_mask)

    finder = None
    if event.witness_finder is not None:
        def finder(config):
            return event.witness_finder(flipped(config))
    mono = {"increasing": "decreasing", "decreasing": "increasing"}.get(event.monotonicity, "general")
    return Event(
        lambda c: event(flipped(c)), mono, event.support, f"flip({event.name})", finder,
        key=("flip", event.key) if event.key else None,
    )


@dataclass
class InductionReport:
    """
    One filling step: lhs = P_𝒮(A∘_{r,𝒮}B), rhs = P_{𝒮∪{e}}(A∘_{r,𝒮∪{e}}B).

    leak_A / leak_B are 𝕡(C₁₁^{A,B} ∖ (C₁₀∪C₀₁), ω_e = 1, ω̃_e = 0); the
    *_top variants weigh the same sets by ω_e = ω̃_e = 1.
    """

    k: int
    bond: Bond
    lhs: float
    rhs: float
    leak_a: float
    leak_b: float
    leak_a_top: float = 0.0
    leak_b_top: float = 0.0
    uncovered: float = 0.0
    chain_violations: int = 0
    family: str = "fkg"
    flipped: bool = False

    @property
    def ratio(self) -> float:
        return float(self.lhs) / float(self.rhs) if self.rhs > 0 else math.inf

    @property
    def slack(self) -> float:
        return float(self.rhs + self.leak_a + self.leak_b - self.lhs)

    @property
    def holds(self) -> bool:
        return self.slack >= -PROBABILITY_TOLERANCE

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "bond": [list(s) for s in self.bond],
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "leak_A": float(self.leak_a),
            "leak_B": float(self.leak_b),
            "leak_A_top": float(self.leak_a_top),
            "leak_B_top": float(self.leak_b_top),
            "uncovered": float(self.uncovered),
            "ratio": self.ratio,
            "holds": self.holds,
            "chain_violations": self.chain_violations,
            "family": self.family,
        }


def _orient(dist: Distribution, a: Event, b: Event) -> tuple[Distribution, Event, Event, bool]:
    if a.increasing and b.increasing:
        return dist, a, b, False
    if a.decreasing and b.decreasing:
        return flip_distribution(dist), flip_event(a), flip_event(b), True
    raise ValueError(f"Induction step needs A and B both increasing or both decreasing, got {a.monotonicity}/{b.monotonicity}")


def verify_induction_step(
    dist: Distribution,
    a: Event,
    b: Event,
    r: float,
    s_set: Iterable[Bond],
    e: Bond,
    coupling_family: CouplingFamily = "fkg",
    k: int = 0,
    zone_fraction: float = ZONE_FRACTION,
) -> InductionReport:
    """
    Exact values of both sides of one split step and the two leak masses.

    Per ζ_𝒰, lhs - rhs = p₀p₁(c₀₀ + c₁₁ - c₀₁ - c₁₀) <= p₀p₁ 𝕡(C₁₁ ∖ (C₁₀∪C₀₁))
    under an FKG coupling family, which the two leaks cover.
    """
    dist, a, b, flipped = _orient(dist, a, b)
    s_set = [make_bond(*x) for x in s_set]
    e = make_bond(*e)
    joint = build_se_joint(dist, s_set, e, coupling_family)
    layout = joint.layout
    zone = exclusion_zone(dist.region, e, r, zone_fraction)
    cache = _WitnessCache()

    zero = Fraction(0) if dist.exact else 0.0
    lhs = rhs = leak_a = leak_b = leak_a_top = leak_b_top = uncovered = zero
    violations = 0
    for atom, a_pair, b_pair, w in joint.quintuples():
        q = Quintuple(atom.u_code, a_pair[0], a_pair[1], b_pair[0], b_pair[1])
        flags = _classify(layout, cache, a, b, r, q, zone)
        p1, p0 = atom.p_e, 1 - atom.p_e
        lhs += w * (p0 * flags.c00 + p1 * flags.c11)
        rhs += w * (p0 * p0 * flags.c00 + p0 * p1 * (flags.c01 + flags.c10) + p1 * p1 * flags.c11)
        if not flags.chain_holds:
            violations += 1
        if flags.top_only:
            leak_a += w * p1 * p0 * flags.c11_a
            leak_b += w * p1 * p0 * flags.c11_b
            leak_a_top += w * p1 * p1 * flags.c11_a
            leak_b_top += w * p1 * p1 * flags.c11_b
            if not (flags.c11_a or flags.c11_b):
                uncovered += w * p1 * p1

    report = InductionReport(
        k, e, lhs, rhs, leak_a, leak_b, leak_a_top, leak_b_top, uncovered, violations, joint.family, flipped
    )
    logger.debug(
        f"[SPLIT] step {k} e={e}: lhs {float(lhs):.6g} rhs {float(rhs):.6g} "
        f"leaks {float(leak_a):.3g}/{float(leak_b):.3g}"
    )
    return report


@dataclass
class IterationReport:
    """The telescoped chain P(A∘ᵣB) <= P_𝒱(A∘_{r,𝒱}B) + Σ leaks and the all-split bound."""

    steps: list = field(default_factory=list)
    p_sep: float = 0.0
    p_all_split: Optional[float] = None
    leak_total: float = 0.0
    all_split_bound: Optional[float] = None
    p_a: float = 0.0
    p_b: float = 0.0
    p_a_and_b: Optional[float] = None
    settled_by: str = "induction"

    @property
    def telescoped_holds(self) -> bool:
        if self.settled_by == "harris_fkg":
            return (
                self.p_sep <= self.p_a_and_b + PROBABILITY_TOLERANCE
                and self.p_a_and_b <= self.p_a * self.p_b + PROBABILITY_TOLERANCE
            )
        return self.p_sep <= self.p_all_split + self.leak_total + PROBABILITY_TOLERANCE

    @property
    def bound_holds(self) -> Optional[bool]:
        if self.all_split_bound is None or self.p_all_split is None:
            return None
        return self.p_all_split <= self.all_split_bound + PROBABILITY_TOLERANCE

    @property
    def holds(self) -> bool:
        return all(s.holds for s in self.steps) and self.telescoped_holds and self.bound_holds is not False

    def to_json(self) -> dict:
        return {
            "settled_by": self.settled_by,
            "p_sep": float(self.p_sep),
            "p_all_split": None if self.p_all_split is None else float(self.p_all_split),
            "leak_total": float(self.leak_total),
            "all_split_bound": None if self.all_split_bound is None else float(self.all_split_bound),
            "p_A": float(self.p_a),
            "p_B": float(self.p_b),
            "p_A_and_B": None if self.p_a_and_b is None else float(self.p_a_and_b),
            "telescoped_holds": self.telescoped_holds,
            "bound_holds": self.bound_holds,
            "holds": self.holds,
            "steps": [s.to_json() for s in self.steps],
        }


def separated_probability(dist: Distribution, a: Event, b: Event, r: float):
    """P(A∘ᵣB) under the unsplit measure (the 𝒮 = ∅ split)."""
    return split(dist, []).occurrence_probability(a, b, r)


def _all_split_bound(dist: Distribution, a: Event, b: Event, v_set: Sequence[Bond]) -> Optional[float]:
    """P(A) · max_ρ P(B | ω_{R∖𝒱} = ρ), when B depends on 𝒱 only."""
    if b.support is None or not b.support <= set(v_set):
        return None
    outside = [j for j in range(dist.n_variables) if dist.variables[j] not in set(v_set)]
    keys = project(dist, outside)
    in_b = indicator(dist, b)
    best = 0.0
    for rho in np.unique(keys):
        keep = keys == rho
        mass = dist.probabilities[keep].sum()
        if mass > 0:
            best = max(best, dist.probabilities[keep & in_b].sum() / mass)
    return probability(dist, a) * best


def run_filling_iteration(
    dist: Distribution,
    a: Event,
    b: Event,
    r: float,
    order: Sequence[Bond],
    coupling_family: CouplingFamily = "fkg",
    zone_fraction: float = ZONE_FRACTION,
) -> IterationReport:
    """
    Compose verify_induction_step along a filling order, 𝒮 = ∅ up to 𝒮 = 𝒱,
    and close with the all-split bound.

    One increasing and one decreasing event need none of this:
    P(A∘ᵣB) <= P(A∩B) <= P(A)P(B) by Harris-FKG, reported as such.
    """
    order = [make_bond(*x) for x in order]
    p_sep = separated_probability(dist, a, b, r)
    p_a, p_b = probability(dist, a), probability(dist, b)
    if (a.increasing and b.decreasing) or (a.decreasing and b.increasing):
        both = dist.probabilities[indicator(dist, a) & indicator(dist, b)].sum()
        logger.info(f"[SPLIT] mixed monotonicity: settled by Harris-FKG ({float(both):.6g} <= {float(p_a * p_b):.6g})")
        return IterationReport(p_sep=p_sep, p_a=p_a, p_b=p_b, p_a_and_b=both, settled_by="harris_fkg")

    report = IterationReport(p_sep=p_sep, p_a=p_a, p_b=p_b)
    for k, e in enumerate(order, start=1):
        step = verify_induction_step(dist, a, b, r, order[: k - 1], e, coupling_family, k=k, zone_fraction=zone_fraction)
        report.steps.append(step)
        report.leak_total += step.leak_a + step.leak_b
        if not step.holds:
            logger.warning(f"[SPLIT] step {k} fails by {-step.slack:.3g}")
    report.p_all_split = report.steps[-1].rhs if report.steps else p_sep
    oriented, fa, fb, _ = _orient(dist, a, b)
    report.all_split_bound = _all_split_bound(oriented, fa, fb, order)
    logger.info(
        f"[SPLIT] {len(order)} steps: P(A∘rB) {float(p_sep):.6g} <= {float(report.p_all_split):.6g} "
        f"+ {float(report.leak_total):.3g}"
    )
    return report


# =============================================================================
# RSM Coupling
# =============================================================================

@dataclass
class RsmCoupling:
    """Mixture coupling of two Ising conditionals with far-configuration diagnostics."""

    coupling: Coupling
    far_sites: tuple
    nu: np.ndarray
    nu0: float
    tau: np.ndarray
    tau_prime: np.ndarray
    disagreement: np.ndarray
    bound: np.ndarray
    far_ordered: bool = True

    @property
    def min0_gap(self) -> float:
        return float(np.minimum(self.tau, self.tau_prime).max()) if len(self.tau) else 0.0

    @property
    def bound_holds(self) -> bool:
        return bool(np.all(self.disagreement <= self.bound + PROBABILITY_TOLERANCE))

    def to_json(self) -> dict:
        return {
            "nu0": float(self.nu0),
            "far_sites": [list(s) for s in self.far_sites],
            "min0_gap": self.min0_gap,
            "far_ordered": self.far_ordered,
            "marginal_error": self.coupling.marginal_error(),
            "disagreement": [float(x) for x in self.disagreement],
            "bound": [float(x) for x in self.bound],
            "bound_holds": self.bound_holds,
        }


def _ordered_or_product(upper: Distribution, lower: Distribution) -> tuple[Coupling, bool]:
    try:
        return fkg_coupling(upper, lower), True
    except DominanceError:
        return product_coupling(upper, lower), False


def rsm_coupling(mu_eta: Distribution, mu_eta_prime: Distribution, far_set: Iterable) -> RsmCoupling:
    """
    Couple two measures on the same sites through their far marginals.

    ν = min of the two far marginals; with probability ν₀ both far
    configurations are a common draw from ν/ν₀, otherwise a coupling of
    the residuals τ, τ′. Near configurations are then coupled given the
    far ones.
    """
    if mu_eta.region != mu_eta_prime.region:
        raise ValueError("RSM coupling needs measures on the same sites")
    sites = mu_eta.region
    far_positions, f = marginal_table(mu_eta, far_set)
    _, f_prime = marginal_table(mu_eta_prime, far_set)
    far_sites = tuple(mu_eta.variables[j] for j in far_positions)
    near_positions = [j for j in range(mu_eta.n_variables) if j not in far_positions]
    near_sites = [mu_eta.variables[j] for j in near_positions]
    f, f_prime = np.asarray(f, dtype=float), np.asarray(f_prime, dtype=float)

    nu = np.minimum(f, f_prime)
    nu0 = float(nu.sum())
    if nu0 >= 1 - PROBABILITY_TOLERANCE:
        zeros = np.zeros(len(f))
        return RsmCoupling(diagonal_coupling(mu_eta), far_sites, nu, 1.0, zeros, zeros.copy(), zeros.copy(), zeros.copy())

    tau = (f - nu) / (1 - nu0)
    tau_prime = (f_prime - nu) / (1 - nu0)
    far_region = SiteRegion(far_sites) if far_sites else SiteRegion([])
    residual, far_ordered = _ordered_or_product(
        Distribution(far_region, tau), Distribution(far_region, tau_prime)
    )
    far_joint: dict = {}
    for z in np.nonzero(nu > 0)[0]:
        far_joint[(int(z), int(z))] = nu[z]
    for (z, z_prime), p in residual.joint.items():
        far_joint[(z, z_prime)] = far_joint.get((z, z_prime), 0.0) + (1 - nu0) * p

    joint: dict = {}
    for (z, z_prime), p in far_joint.items():
        if p <= 0:
            continue
        cond = condition(mu_eta, {s: z >> k & 1 for k, s in enumerate(far_sites)})
        cond_prime = condition(mu_eta_prime, {s: z_prime >> k & 1 for k, s in enumerate(far_sites)})
        near, _ = _ordered_or_product(marginal(cond, near_sites), marginal(cond_prime, near_sites))
        far_mask = _expand(z, far_positions)
        far_mask_prime = _expand(z_prime, far_positions)
        for (n1, n2), w in near.joint.items():
            key = (far_mask | _expand(n1, near_positions), far_mask_prime | _expand(n2, near_positions))
            joint[key] = joint.get(key, 0.0) + p * w

    disagreement = np.zeros(len(f))
    for (z, z_prime), p in residual.joint.items():
        if z != z_prime:
            disagreement[z] += (1 - nu0) * p
    with np.errstate(divide="ignore", invalid="ignore"):
        disagreement = np.where(f > 0, disagreement / np.where(f > 0, f, 1), 0.0)
        bound = np.where(nu > 0, (1 - nu0) * tau / np.where(nu > 0, nu, 1), np.inf)

    coupling = Coupling(mu_eta, mu_eta_prime, joint, kind="rsm")
    logger.debug(f"[SPLIT] RSM coupling on {len(sites)} sites: ν₀ = {nu0:.6g}, far ordered {far_ordered}")
    return RsmCoupling(coupling, far_sites, nu, nu0, tau, tau_prime, disagreement, bound, far_ordered)


# =============================================================================
# Connection-inducing Regions
# =============================================================================

@dataclass
class ConnectionReport:
    """φ_x on 𝒬_x = B_R(x, 3m) ∩ 𝒯 and the connection-inducing classification."""

    x: tuple
    m: int
    threshold: float
    q_bonds: tuple
    phi: np.ndarray
    inducing: np.ndarray
    expected_phi: float
    p_inducing: float

    @property
    def markov_bound(self) -> float:
        return self.expected_phi / self.threshold if self.threshold > 0 else math.inf

    @property
    def holds(self) -> bool:
        return self.p_inducing <= self.markov_bound + PROBABILITY_TOLERANCE

    def to_json(self) -> dict:
        return {
            "x": list(self.x),
            "m": self.m,
            "threshold": self.threshold,
            "q_bonds": [[list(s) for s in b] for b in self.q_bonds],
            "phi": [float(v) for v in self.phi],
            "inducing": [int(i) for i in np.nonzero(self.inducing)[0]],
            "expected_phi": self.expected_phi,
            "p_inducing": self.p_inducing,
            "markov_bound": self.markov_bound,
            "holds": self.holds,
        }


def connection_inducing(
    dist: Distribution,
    x: Sequence[int],
    m: int,
    c_const: float,
    lambda_const: float,
    t_set: Optional[Iterable[Bond]] = None,
    outer: Optional[Distribution] = None,
) -> ConnectionReport:
    """
    φ_x(ρ) = P(x ↔ some y with d_R(x, y) >= m | ω_𝒬 = ρ, ω outside the 3m-ball open).

    𝒬_x is connection-inducing in ρ when φ_x(ρ) >= C e^{-λm/2}. Checks
    P_outer(𝒬_x connection-inducing) <= E_w(φ_x) / (C e^{-λm/2}), outer
    defaulting to dist.
    """
    region = dist.region
    x = tuple(int(c) for c in x)
    ball_bonds = set(ball(region, x, 3 * m))
    t_bonds = set(region.bonds) if t_set is None else {make_bond(*b) for b in t_set}
    q_bonds = tuple(b for b in region.bonds if b in ball_bonds and b in t_bonds)
    outside = [b for b in region.bonds if b not in ball_bonds]
    wired = condition(dist, {b: 1 for b in outside}) if outside else dist

    q_positions = _positions(dist, q_bonds)
    keys = project(wired, q_positions)
    n_q = 1 << len(q_positions)
    probs = np.asarray(wired.probabilities, dtype=float)
    hits = indicator(wired, cluster_reaches(x, m))
    den = np.bincount(keys, weights=probs, minlength=n_q)
    num = np.bincount(keys, weights=np.where(hits, probs, 0.0), minlength=n_q)
    phi = np.where(den > 0, num / np.where(den > 0, den, 1), 0.0)

    threshold = c_const * math.exp(-lambda_const * m / 2)
    inducing = phi >= threshold
    outer = dist if outer is None else outer
    if outer.region != region:
        raise ValueError("The outer measure must live on the same region")
    outer_q = np.bincount(project(outer, q_positions), weights=np.asarray(outer.probabilities, dtype=float), minlength=n_q)
    report = ConnectionReport(
        x, m, threshold, q_bonds, phi, inducing, float(num.sum()), float(outer_q[inducing].sum())
    )
    logger.debug(f"[SPLIT] φ at {x}, m={m}: {int(inducing.sum())}/{n_q} connection-inducing")
    return report
