# operators/filling.py
"""
Filling Sequences - fk-separation

Orders in which a target bond set V ⊂ R is "filled" one bond at a time,
together with the per-step certificate that the next bond has a
c-approximate r-neighborhood W which is blockable in S ∪ W.

Two families are supported:
    rectangle  R a minimally fat lattice rectangle, V a lattice rectangle;
               prefixes stay approximate lattice rectangles.
    slc        R circuit-bounded (d = 2), V the boundary closure of a
               d_{Int(R)} ball; prefixes stay simply lattice-connected.

In both families V ∩ Int(R) is filled first and V ∩ Γ_R last, as one
sweep along the outer circuit.

Usage:
    from operators.filling import fill_rectangle, fill_circuit_bounded

    seq = fill_rectangle(build_rectangle((0, 0), (4, 4)), target_bonds)
    seq.certified          # every prefix passed its checks
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from operators.errors import FillingError
from operators.lattice import (
    Bond,
    Region,
    abuts,
    ball,
    bonds_in_box,
    bounding_box,
    components,
    interior,
    is_approximate_rectangle,
    is_circuit_bounded,
    is_connected,
    is_lattice_rectangle,
    is_minimally_fat,
    is_regular,
    is_slc,
    make_bond,
    outer_surface,
)

logger = logging.getLogger(__name__)

FAMILIES = ("rectangle", "slc")
DEFAULT_NEIGHBORHOOD_PARAM = 2.0
DEFAULT_NEIGHBORHOOD_RADIUS = 2

# Node budget for the backtracking fallback when the direct order fails
SEARCH_BUDGET = 20_000


# =============================================================================
# Reports
# =============================================================================

@dataclass
class StepReport:
    """Certificate for appending one bond to a prefix."""

    k: int
    bond: Bond
    ok: bool
    case: Optional[str] = None          # "c'" or "c''"
    witness: tuple = ()                 # the neighborhood W
    radius: Optional[float] = None      # ladder value that produced W
    reason: str = ""
    prefix_checks: dict = field(default_factory=dict)
    blockable: Optional[bool] = None

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "bond": [list(self.bond[0]), list(self.bond[1])],
            "ok": self.ok,
            "case": self.case,
            "witness": [[list(a), list(b)] for a, b in self.witness],
            "radius": self.radius,
            "reason": self.reason,
            "prefix_checks": self.prefix_checks,
            "blockable": self.blockable,
        }


@dataclass
class FillingSequence:
    region: Region
    target: tuple
    order: tuple
    neighborhood_param: float
    family: str
    radius: float = DEFAULT_NEIGHBORHOOD_RADIUS
    steps: list = field(default_factory=list)

    def prefixes(self):
        for k in range(1, len(self.order) + 1):
            yield self.order[:k]

    @property
    def certified(self) -> bool:
        return bool(self.steps) and all(step.ok for step in self.steps)

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "c": self.neighborhood_param,
            "r": self.radius,
            "region": self.region.to_json(),
            "target": [[list(a), list(b)] for a, b in self.target],
            "order": [[list(a), list(b)] for a, b in self.order],
            "steps": [s.to_json() for s in self.steps],
            "certified": self.certified,
        }


# =============================================================================
# Prefix Checks
# =============================================================================

def prefix_checks(region: Region, prefix: Iterable[Bond], family: str) -> dict:
    """Structural properties of a prefix S_k, keyed by check name."""
    s = {make_bond(*b) for b in prefix}
    rest = set(region.bonds) - s
    checks = {"complement_connected": is_connected(rest)}
    if family == "rectangle":
        checks["approximate_rectangle"] = is_approximate_rectangle(s)
        checks["regular"] = is_regular(s)
    if region.dimension == 2:
        checks["slc"] = is_slc(s)
    return checks


def _required_checks(family: str) -> tuple[str, ...]:
    if family == "rectangle":
        return ("approximate_rectangle", "complement_connected")
    return ("slc", "complement_connected")


def _neighborhood_candidates(region: Region, x, c: float, r: float, family: str):
    """
    Yield (ladder value, W) over the radius ladder r/c, r/c + 1, ..., r.

    Each ladder value offers the d_R ball first. The rectangle family then
    tries every lattice box around x whose corners sit within the ladder
    value of x along each axis.
    """
    rho = r / c
    while rho <= r + 1e-9:
        yield rho, ball(region, x, rho)
        if family == "rectangle":
            reach = int(math.floor(rho))
            highs = [range(v, v + reach + 1) for v in x]
            for lo in itertools.product(*[range(v - reach, v + 1) for v in x]):
                for hi in itertools.product(*highs):
                    w = tuple(b for b in bonds_in_box(lo, hi) if b in region.index)
                    if w:
                        yield rho, w
        rho += 1


def _structural_case(region: Region, s: set, w: set, family: str) -> tuple[Optional[str], str]:
    """
    Case c' when R∖(S∪W) is connected. Otherwise W slices R, and case c''
    needs every component of S∖W to abut at most one component of
    R∖(S∪W) and, for rectangles, to be an approximate lattice rectangle.
    """
    rest_comps = components(set(region.bonds) - s - w)
    if len(rest_comps) <= 1:
        return "c'", ""
    for comp in components(s - w):
        touching = sum(1 for rc in rest_comps if abuts(comp, rc))
        if touching > 1:
            return None, f"a component of S∖W abuts {touching} components of R∖(S∪W)"
        if family == "rectangle" and not is_approximate_rectangle(comp):
            return None, "a component of S∖W is not an approximate lattice rectangle"
    return "c''", ""


def verify_filling_step(
    region: Region,
    prefix: Iterable[Bond],
    next_bond: Bond,
    c: float = DEFAULT_NEIGHBORHOOD_PARAM,
    r: float = DEFAULT_NEIGHBORHOOD_RADIUS,
    family: str = "rectangle",
    dist=None,
    k: int = 0,
    blockable_cap: int = 8,
) -> StepReport:
    """
    Search for a c-approximate r-neighborhood W of next_bond that is
    appendable to the prefix.

    The neighborhood is centred at the smaller endpoint of next_bond; for
    rectangles it may be any approximate lattice rectangle. Case c'
    (R∖(S∪W) connected) asks for W∖S blockable, case c'' for W blockable.
    When a Distribution is supplied and S∪W has at most blockable_cap
    bonds, blockability is also checked exactly.

    Returns:
        StepReport; absence of a neighborhood is a failed report, not an error
    """
    if family not in FAMILIES:
        raise ValueError(f"Unknown family '{family}' (expected one of {FAMILIES})")
    s = {make_bond(*b) for b in prefix}
    nxt = make_bond(*next_bond)
    if nxt not in region.index:
        raise ValueError(f"Bond {nxt} is not in the region")
    if nxt in s:
        raise ValueError(f"Bond {nxt} is already in the prefix")

    if family == "rectangle" and s and not (is_approximate_rectangle(s) and is_regular(s)):
        return StepReport(k=k, bond=nxt, ok=False, reason="prefix is not a regular approximate lattice rectangle")
    if family == "slc" and not is_slc(s):
        return StepReport(k=k, bond=nxt, ok=False, reason="prefix is not SLC")

    x = nxt[0]
    inner = set(ball(region, x, math.floor(r / c)))
    outer = set(ball(region, x, r))
    last_reason = "no candidate neighborhood on the radius ladder"
    rejected = None
    for rho, w in _neighborhood_candidates(region, x, c, r, family):
        w_set = set(w)
        if not inner <= w_set <= outer:
            last_reason = f"W at ladder value {rho} is not a {c}-approximate {r}-neighborhood"
            continue
        if family == "rectangle" and not is_approximate_rectangle(w_set):
            last_reason = f"W at ladder value {rho} is not an approximate lattice rectangle"
            continue
        if family == "slc" and not is_slc(w_set):
            last_reason = f"W at ladder value {rho} is not SLC"
            continue
        case, reason = _structural_case(region, s, w_set, family)
        if case is None:
            last_reason = reason
            continue

        report = StepReport(k=k, bond=nxt, ok=True, case=case, witness=tuple(sorted(w_set)), radius=rho)
        if dist is None or len(s | w_set) > blockable_cap:
            return report
        from operators.engine import check_blockable

        target = w_set - s if case == "c'" else w_set
        report.blockable = check_blockable(dist, target, s | w_set).holds
        if report.blockable:
            return report
        # keep looking; report the first blockability failure if nothing else works
        label = "W∖S" if case == "c'" else "W"
        report.ok = False
        report.reason = f"{label} is not blockable in S∪W"
        rejected = rejected or report

    return rejected or StepReport(k=k, bond=nxt, ok=False, reason=last_reason)


def certify(sequence: FillingSequence, dist=None, neighborhoods: bool = True) -> FillingSequence:
    """Run prefix checks (and optionally neighborhood checks) on every step."""
    region, family = sequence.region, sequence.family
    required = _required_checks(family)
    steps = []
    for k, bond in enumerate(sequence.order, start=1):
        prefix = sequence.order[: k - 1]
        if neighborhoods:
            step = verify_filling_step(
                region, prefix, bond, sequence.neighborhood_param, sequence.radius, family, dist=dist, k=k
            )
        else:
            step = StepReport(k=k, bond=bond, ok=True)
        step.prefix_checks = prefix_checks(region, sequence.order[:k], family)
        failed = [name for name in required if not step.prefix_checks.get(name, True)]
        if failed:
            step.ok = False
            step.reason = (step.reason + "; " if step.reason else "") + f"prefix fails {', '.join(failed)}"
        steps.append(step)
    sequence.steps = steps
    bad = sum(1 for s in steps if not s.ok)
    logger.info(f"[FILL] {family} sequence of {len(steps)} steps, {bad} uncertified")
    return sequence


# =============================================================================
# Orders
# =============================================================================

def _step_rule(region: Region, family: str, c: float, r: float, neighborhoods: bool):
    """Acceptance test for appending one bond: the required prefix checks, then the step certificate."""
    required = _required_checks(family)

    def passes(prefix: Sequence[Bond], bond: Bond) -> bool:
        checks = prefix_checks(region, list(prefix) + [bond], family)
        if not all(checks.get(name, True) for name in required):
            return False
        return not neighborhoods or verify_filling_step(region, prefix, bond, c, r, family).ok

    return passes


def _order_passes(start: Sequence[Bond], order: Sequence[Bond], passes) -> bool:
    prefix = list(start)
    for bond in order:
        if not passes(prefix, bond):
            return False
        prefix.append(bond)
    return True


def _search_order(start: Sequence[Bond], todo: Sequence[Bond], key, passes) -> Optional[list]:
    """Backtracking search for an order of todo whose every step passes."""
    budget = [SEARCH_BUDGET]

    def extend(prefix: list, remaining: list) -> Optional[list]:
        if not remaining:
            return prefix
        for bond in sorted(remaining, key=key):
            budget[0] -= 1
            if budget[0] < 0:
                return None
            if passes(prefix, bond):
                found = extend(prefix + [bond], [b for b in remaining if b != bond])
                if found is not None:
                    return found
        return None

    result = extend(list(start), list(todo))
    return None if result is None else result[len(start):]


def _cell_raster_order(bonds: set) -> list:
    """Fill unit cells row by row; each cell contributes bottom, left, right, top."""
    if not bonds:
        return []
    lo, hi = bounding_box(bonds)
    order, seen = [], set()
    if len(lo) == 2:
        for y in range(lo[1], hi[1]):
            for x in range(lo[0], hi[0]):
                cell = (
                    ((x, y), (x + 1, y)),
                    ((x, y), (x, y + 1)),
                    ((x + 1, y), (x + 1, y + 1)),
                    ((x, y + 1), (x + 1, y + 1)),
                )
                for b in cell:
                    if b in bonds and b not in seen:
                        order.append(b)
                        seen.add(b)
    rest = sorted(bonds - seen, key=lambda b: (tuple(reversed(b[0])), b))
    return order + rest


def _circuit_arc_order(region: Region, arc: set, reverse: bool = False) -> list:
    """Order bonds of V ∩ Γ_R along the outer circuit, starting at one end of the arc."""
    if not arc:
        return []
    circuit = is_circuit_bounded(region) if region.dimension == 2 else None
    if circuit is None:
        return sorted(arc, reverse=reverse)
    cycle = list(circuit.bonds)
    if reverse:
        cycle.reverse()
    n = len(cycle)
    starts = [i for i in range(n) if cycle[i] in arc and cycle[i - 1] not in arc]
    if not starts:
        return cycle
    order = []
    for start in starts:
        i = start
        while cycle[i % n] in arc and cycle[i % n] not in order:
            order.append(cycle[i % n])
            i += 1
    return order


def _sweep_boundary(region: Region, start: Sequence[Bond], arc: set, passes) -> Optional[list]:
    """Sweep V ∩ Γ_R in either direction along the circuit, searching when neither sweep passes."""
    forward = _circuit_arc_order(region, arc)
    for order in (forward, _circuit_arc_order(region, arc, reverse=True)):
        if _order_passes(start, order, passes):
            return order
    logger.debug("[FILL] boundary sweep failed both ways, searching")
    position = {b: i for i, b in enumerate(forward)}
    return _search_order(start, forward, position.get, passes)


def _build(region, target, order_inner, order_outer, family, c, r, certify_steps, dist) -> FillingSequence:
    order = tuple(order_inner) + tuple(order_outer)
    sequence = FillingSequence(
        region=region,
        target=tuple(sorted(target)),
        order=order,
        neighborhood_param=c,
        family=family,
        radius=r,
    )
    return certify(sequence, dist=dist, neighborhoods=certify_steps)


# =============================================================================
# Rectangles
# =============================================================================

def admissible_rectangle_targets(region: Region) -> list[tuple]:
    """𝔙_R: lattice rectangles V ⊂ R with |V| >= 2 and R∖V connected."""
    lo, hi = bounding_box(region.bonds)
    axes = [range(a, b + 1) for a, b in zip(lo, hi)]
    targets = []
    corners = list(itertools.product(*axes))
    for a in corners:
        for b in corners:
            if any(u > v for u, v in zip(a, b)):
                continue
            v = bonds_in_box(a, b)
            if len(v) < 2:
                continue
            if is_connected(set(region.bonds) - set(v)):
                targets.append(tuple(v))
    return targets


def fill_rectangle(
    region: Region,
    target: Iterable[Bond],
    c: float = DEFAULT_NEIGHBORHOOD_PARAM,
    r: float = DEFAULT_NEIGHBORHOOD_RADIUS,
    certify_steps: bool = True,
    dist=None,
) -> FillingSequence:
    """
    Fill a lattice rectangle V inside a minimally fat lattice rectangle R.

    Args:
        region: R
        target: V, a lattice rectangle contained in R
        c, r: neighborhood parameters for the per-step certificate
        certify_steps: also run verify_filling_step on every step
        dist: optional Distribution on R for exact blockability checks

    Raises:
        FillingError: R or V outside the admissible families
    """
    bonds = set(region.bonds)
    if not is_lattice_rectangle(bonds):
        raise FillingError("Region is not a lattice rectangle")
    if not is_minimally_fat(bonds):
        raise FillingError("Region is not minimally fat (Int(Γ_R) disconnected)")
    v = {make_bond(*b) for b in target}
    if len(v) < 2:
        raise FillingError(f"Target has {len(v)} bonds; at least 2 are required")
    if not v <= bonds:
        raise FillingError("Target is not contained in the region")
    if not is_lattice_rectangle(v):
        raise FillingError("Target is not a lattice rectangle")
    if not is_connected(bonds - v):
        raise FillingError("R∖V is not connected")

    inner = v & set(interior(bonds))
    outer = v - inner

    passes = _step_rule(region, "rectangle", c, r, certify_steps)

    order_inner = _cell_raster_order(inner)
    if not _order_passes([], order_inner, passes):
        logger.debug("[FILL] raster order failed, searching")
        position = {b: i for i, b in enumerate(order_inner)}
        order_inner = _search_order([], order_inner, position.get, passes)
        if order_inner is None:
            raise FillingError("No admissible order found for V ∩ Int(R)")

    order_outer = _sweep_boundary(region, order_inner, outer, passes)
    if order_outer is None:
        raise FillingError("No admissible order found for V ∩ Γ_R")

    return _build(region, v, order_inner, order_outer, "rectangle", c, r, certify_steps, dist)


# =============================================================================
# Circuit-Bounded Regions
# =============================================================================

def circuit_ball_target(region: Region, center, radius: float) -> tuple:
    """
    Boundary closure of the d_{Int(R)} ball around center.

    When center is not a vertex of Int(R) (e.g. a corner, or a region with
    empty interior) the ball is taken in d_R instead.
    """
    circuit = is_circuit_bounded(region)
    if circuit is None:
        raise FillingError("Region is not circuit-bounded")
    site = tuple(center)
    inner_bonds = interior(region)
    inner_region = Region(inner_bonds)
    if site in inner_region.vertex_index:
        b = set(ball(inner_region, site, radius))
    elif site in region.vertex_index:
        b = set(ball(region, site, radius))
    else:
        raise FillingError(f"Center {site} is not a vertex of the region")
    sites = {s for bond in b for s in bond} | {site}
    closure = {bond for bond in circuit.bonds if bond[0] in sites and bond[1] in sites}
    return tuple(sorted(b | closure))


def fill_circuit_bounded(
    region: Region,
    center,
    radius: float = 1,
    c: float = DEFAULT_NEIGHBORHOOD_PARAM,
    r: float = DEFAULT_NEIGHBORHOOD_RADIUS,
    certify_steps: bool = True,
    dist=None,
) -> FillingSequence:
    """
    Fill the boundary closure of a d_{Int(R)} ball in a circuit-bounded region.

    Interior bonds go in order of increasing distance from the center, ties
    broken to keep every prefix SLC; the Γ_R part is swept last.

    Raises:
        FillingError: region not circuit-bounded, |V| < 2 or R∖V disconnected
    """
    if region.dimension != 2:
        raise FillingError("fill_circuit_bounded requires d = 2")
    target = set(circuit_ball_target(region, center, radius))
    if len(target) < 2:
        raise FillingError(f"Target has {len(target)} bonds; at least 2 are required")
    if not is_connected(set(region.bonds) - target):
        raise FillingError("R∖V is not connected")

    surface = set(outer_surface(region))
    inner = sorted(target - surface)
    outer = target & surface

    site = tuple(center)
    inner_region = Region(interior(region))
    if site in inner_region.vertex_index:
        row = inner_region.metric_row(site)
        dist_of = lambda s: row[inner_region.vertex_index[s]]
    else:
        row = region.metric_row(site)
        dist_of = lambda s: row[region.vertex_index[s]]

    def key(b):
        d0, d1 = dist_of(b[0]), dist_of(b[1])
        return (max(d0, d1), min(d0, d1), b)

    passes = _step_rule(region, "slc", c, r, certify_steps)

    order_inner = _greedy_slc(region, inner, key)
    if order_inner is None or not _order_passes([], order_inner, passes):
        order_inner = _search_order([], inner, key, passes)
        if order_inner is None:
            raise FillingError("No SLC-preserving order found for V ∩ Int(R)")

    order_outer = _sweep_boundary(region, order_inner, outer, passes)
    if order_outer is None:
        raise FillingError("V ∩ Γ_R cannot be swept as one boundary segment")

    return _build(region, target, order_inner, order_outer, "slc", c, r, certify_steps, dist)


def _greedy_slc(region: Region, bonds: list, key) -> Optional[list]:
    """Take the closest remaining bond that keeps the prefix SLC with connected complement."""
    order: list = []
    remaining = sorted(bonds, key=key)
    while remaining:
        for bond in remaining:
            checks = prefix_checks(region, order + [bond], "slc")
            if checks["slc"] and checks["complement_connected"]:
                order.append(bond)
                remaining.remove(bond)
                break
        else:
            return None
    return order
