# operators/events.py
"""
Event Calculus - fk-separation

Events on bond configurations with declared monotonicity, occurrence on a
bond set Θ, minimal witnesses, disjoint occurrence A∘B and occurrence at
separation r, plus a catalog of standard events.

Conventions:
    - A trivially true event has the witness family {∅}; the empty set is
      at distance math.inf from everything.
    - A∘B asks for bond-disjoint witnesses. A∘_r B only asks for
      d_R(ℰ, ℱ) >= r, so r = 0 accepts witnesses sharing vertices or bonds.
    - Witness searches run by increasing size, then canonical bond order,
      and return the first hit.

Usage:
    from operators.events import connect, open_bond, separated_occurrence

    pair = separated_occurrence(connect(x, y), open_bond(e), config, r=3)
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Sequence

import networkx as nx
import numpy as np

from config.settings import (
    EXHAUSTIVE_CHECK_CAP,
    GENERAL_OCCURRENCE_CAP,
    GENERAL_WITNESS_CAP,
    MONOTONICITY_DRAWS,
)
from operators.errors import EnumerationCapError
from operators.lattice import (
    Bond,
    Configuration,
    Region,
    dual_bond,
    distance,
    make_bond,
    make_site,
)

logger = logging.getLogger(__name__)

MONOTONICITY = ("increasing", "decreasing", "general")

_FLIP = {"increasing": "decreasing", "decreasing": "increasing", "general": "general"}


# =============================================================================
# Witness Families
# =============================================================================

@dataclass(frozen=True)
class WitnessFamily:
    """Antichain of bond sets, each certifying occurrence."""

    sets: tuple = ()

    @classmethod
    def minimized(cls, candidates: Iterable[Iterable[Bond]]) -> "WitnessFamily":
        ordered = sorted({frozenset(c) for c in candidates}, key=_witness_key)
        kept: list[frozenset] = []
        for s in ordered:
            if not any(k <= s for k in kept):
                kept.append(s)
        return cls(tuple(kept))

    def __iter__(self) -> Iterator[frozenset]:
        return iter(self.sets)

    def __len__(self) -> int:
        return len(self.sets)

    def __contains__(self, item) -> bool:
        return frozenset(make_bond(*b) for b in item) in self.sets

    def to_json(self) -> list:
        return [[[list(x), list(y)] for x, y in sorted(s)] for s in self.sets]


def _witness_key(s: frozenset) -> tuple:
    return (len(s), sorted(s))


# =============================================================================
# Event
# =============================================================================

class Event:
    """
    A predicate on bond configurations with declared monotonicity.

    support, when given, is a bond set 𝒟 the predicate depends on
    exclusively (the event lies in 𝒢_𝒟). witness_finder, when given,
    returns candidate witness sets for a configuration in the event; the
    family is minimized before use.
    """

    def __init__(
        self,
        predicate: Callable[[Configuration], bool],
        monotonicity: str = "general",
        support: Optional[Iterable[Bond]] = None,
        name: str = "event",
        witness_finder: Optional[Callable[[Configuration], Iterable]] = None,
        key: Optional[tuple] = None,
        local: bool = False,
    ):
        if monotonicity not in MONOTONICITY:
            raise ValueError(f"Unknown monotonicity '{monotonicity}' (expected one of {MONOTONICITY})")
        self.predicate = predicate
        self.monotonicity = monotonicity
        self.support = frozenset(make_bond(*b) for b in support) if support is not None else None
        self.name = name
        self.witness_finder = witness_finder
        self.key = key
        # occurs on a finite set in every configuration of the event
        self.local = local
        self._indicators: dict = {}

    def __call__(self, config: Configuration) -> bool:
        return bool(self.predicate(config))

    def __repr__(self) -> str:
        return f"Event({self.name}, {self.monotonicity})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Event):
            return NotImplemented
        if self.key is not None and other.key is not None:
            return self.key == other.key
        return self is other

    def __hash__(self) -> int:
        return hash(self.key) if self.key is not None else id(self)

    @property
    def increasing(self) -> bool:
        return self.monotonicity == "increasing"

    @property
    def decreasing(self) -> bool:
        return self.monotonicity == "decreasing"

    def indicator(self, region: Region) -> np.ndarray:
        """Membership of every configuration of the region (cached)."""
        cached = self._indicators.get(region)
        if cached is None:
            size = 1 << len(region)
            cached = np.fromiter(
                (self(Configuration(region, i)) for i in range(size)), dtype=bool, count=size
            )
            cached.flags.writeable = False
            self._indicators[region] = cached
        return cached


# =============================================================================
# Occurrence and Witnesses
# =============================================================================

def occurs_on(event: Event, config: Configuration, theta: Iterable[Bond]) -> bool:
    """
    True when every configuration agreeing with config on Θ lies in the event.

    Raises:
        EnumerationCapError: a general event with too many bonds off Θ
    """
    region = config.region
    theta_mask = region.mask_of(theta)
    if event.increasing:
        return event(Configuration(region, config.bits & theta_mask))
    if event.decreasing:
        return event(Configuration(region, config.bits | (region.full_mask & ~theta_mask)))
    free = [j for j in range(len(region)) if not theta_mask >> j & 1]
    if len(free) > GENERAL_OCCURRENCE_CAP:
        raise EnumerationCapError(len(free), GENERAL_OCCURRENCE_CAP, what="occurrence test")
    fixed = config.bits & theta_mask
    for values in range(1 << len(free)):
        bits = fixed
        for k, j in enumerate(free):
            if values >> k & 1:
                bits |= 1 << j
        if not event(Configuration(region, bits)):
            return False
    return True


def _subset_search(event: Event, config: Configuration, candidates: Sequence[Bond], cap: int) -> WitnessFamily:
    if len(candidates) > cap:
        raise EnumerationCapError(len(candidates), cap, what="witness search")
    found: list[frozenset] = []
    for size in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, size):
            s = frozenset(combo)
            if any(f <= s for f in found):
                continue
            if occurs_on(event, config, s):
                found.append(s)
    return WitnessFamily(tuple(found))


def minimal_witnesses(event: Event, config: Configuration) -> WitnessFamily:
    """
    All inclusion-minimal Θ on which the event occurs.

    Raises:
        ValueError: the configuration is not in the event
    """
    if not event(config):
        raise ValueError(f"{event.name} does not hold in the configuration")
    if event.witness_finder is not None:
        return WitnessFamily.minimized(event.witness_finder(config))
    if event.increasing:
        candidates = config.open_bonds()
        cap = GENERAL_OCCURRENCE_CAP
    elif event.decreasing:
        candidates = config.closed_bonds()
        cap = GENERAL_OCCURRENCE_CAP
    else:
        candidates = config.region.bonds
        cap = GENERAL_WITNESS_CAP
    if event.support is not None:
        candidates = tuple(b for b in candidates if b in event.support)
    return _subset_search(event, config, candidates, cap)


def _witness_pairs(a: Event, b: Event, config: Configuration):
    if not (a(config) and b(config)):
        return
    wa, wb = minimal_witnesses(a, config), minimal_witnesses(b, config)
    pairs = sorted(
        itertools.product(wa, wb),
        key=lambda p: (len(p[0]) + len(p[1]), sorted(p[0]), sorted(p[1])),
    )
    yield from pairs


def disjoint_occurrence(a: Event, b: Event, config: Configuration) -> Optional[tuple]:
    """Bond-disjoint witnesses (Θ, Γ) of A and B, or None."""
    for theta, gamma in _witness_pairs(a, b, config):
        if not theta & gamma:
            return theta, gamma
    return None


def separated_occurrence(a: Event, b: Event, config: Configuration, r: float) -> Optional[tuple]:
    """Witnesses (ℰ, ℱ) of A and B with d_R(ℰ, ℱ) >= r, or None."""
    if r < 0:
        raise ValueError(f"Separation must be nonnegative, got {r}")
    region = config.region
    for theta, gamma in _witness_pairs(a, b, config):
        if r == 0 or distance(region, list(theta), list(gamma)) >= r:
            return theta, gamma
    return None


# =============================================================================
# Catalog
# =============================================================================

def _bond_bit(config: Configuration, bond: Bond) -> Optional[bool]:
    i = config.region.index.get(bond)
    return None if i is None else bool(config.bits >> i & 1)


def open_bond(e: Sequence) -> Event:
    bond = make_bond(*e)

    def predicate(config):
        return bool(_bond_bit(config, bond))

    def witnesses(config):
        return [{bond}]

    return Event(predicate, "increasing", [bond], f"open{_fmt(bond)}", witnesses, key=("open", bond), local=True)


def closed_bond(e: Sequence) -> Event:
    bond = make_bond(*e)

    def predicate(config):
        return _bond_bit(config, bond) is False

    def witnesses(config):
        return [{bond}]

    return Event(predicate, "decreasing", [bond], f"closed{_fmt(bond)}", witnesses, key=("closed", bond), local=True)


def _open_graph(config: Configuration) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(config.region.vertices)
    graph.add_edges_from(config.open_bonds())
    return graph


def _path_bonds(path: Sequence) -> frozenset:
    return frozenset(make_bond(u, v) for u, v in zip(path, path[1:]))


def connect(x: Sequence[int], y: Sequence[int]) -> Event:
    """x ↔ y through open bonds of the region."""
    sx, sy = make_site(x), make_site(y)
    name = f"connect{_fmt(sx)}{_fmt(sy)}"
    if sx == sy:
        return always_true(name)

    def predicate(config):
        if sx not in config.region.vertex_index or sy not in config.region.vertex_index:
            return False
        return nx.has_path(_open_graph(config), sx, sy)

    def witnesses(config):
        return [_path_bonds(p) for p in nx.all_simple_paths(_open_graph(config), sx, sy)]

    return Event(predicate, "increasing", None, name, witnesses, key=("connect", sx, sy), local=True)


def _dual_graph(config: Configuration) -> nx.Graph:
    graph = nx.Graph()
    for bond in config.closed_bonds():
        a, b = dual_bond(bond).endpoints
        graph.add_edge(a, b, primal=bond)
    return graph


def connect_dual(x_star: Sequence[int], y_star: Sequence[int]) -> Event:
    """Dual sites joined by open dual bonds (duals of closed bonds of R); d = 2."""
    sx, sy = tuple(int(c) for c in x_star), tuple(int(c) for c in y_star)
    if len(sx) != 2 or len(sy) != 2:
        raise ValueError("Dual connections need d = 2")
    name = f"connect*{_fmt(sx)}{_fmt(sy)}"
    if sx == sy:
        return always_true(name)

    def predicate(config):
        graph = _dual_graph(config)
        return sx in graph and sy in graph and nx.has_path(graph, sx, sy)

    def witnesses(config):
        graph = _dual_graph(config)
        out = []
        for path in nx.all_simple_paths(graph, sx, sy):
            out.append(frozenset(graph.edges[u, v]["primal"] for u, v in zip(path, path[1:])))
        return out

    return Event(predicate, "decreasing", None, name, witnesses, key=("connect_dual", sx, sy), local=True)


def cluster_reaches(x: Sequence[int], r: float) -> Event:
    """The open cluster of x contains a site at d_R-distance >= r from x."""
    sx = make_site(x)
    name = f"reaches{_fmt(sx)}>={r}"
    if r <= 0:
        return always_true(name)

    def far(config) -> set:
        row = config.region.metric_row(sx)
        return {s for s, i in config.region.vertex_index.items() if row[i] >= r}

    def predicate(config):
        if sx not in config.region.vertex_index:
            return False
        cluster = nx.node_connected_component(_open_graph(config), sx)
        return bool(cluster & far(config))

    def witnesses(config):
        graph = _open_graph(config)
        targets = far(config)
        out = []
        stack = [(sx, [sx])]
        while stack:
            u, path = stack.pop()
            for v in graph.neighbors(u):
                if v in path:
                    continue
                if v in targets:
                    out.append(_path_bonds(path + [v]))
                else:
                    stack.append((v, path + [v]))
        return out

    return Event(predicate, "increasing", None, name, witnesses, key=("reaches", sx, r), local=True)


def all_open(bonds: Iterable[Sequence]) -> Event:
    d = tuple(sorted({make_bond(*b) for b in bonds}))

    def predicate(config):
        return all(_bond_bit(config, b) for b in d)

    return Event(predicate, "increasing", d, f"all_open[{len(d)}]", lambda config: [set(d)], key=("all_open", d), local=True)


def threshold(bonds: Iterable[Sequence], k: int) -> Event:
    """At least k bonds of 𝒟 open."""
    d = tuple(sorted({make_bond(*b) for b in bonds}))
    if k < 0:
        raise ValueError(f"Threshold must be nonnegative, got {k}")

    def predicate(config):
        return sum(1 for b in d if _bond_bit(config, b)) >= k

    def witnesses(config):
        opened = [b for b in d if _bond_bit(config, b)]
        return [set(c) for c in itertools.combinations(opened, k)]

    return Event(predicate, "increasing", d, f"threshold[{len(d)}]>={k}", witnesses, key=("threshold", d, k), local=True)


def always_true(name: str = "true") -> Event:
    return Event(lambda config: True, "increasing", (), name, lambda config: [set()], key=("true",), local=True)


def always_false(name: str = "false") -> Event:
    return Event(lambda config: False, "increasing", (), name, lambda config: [], key=("false",), local=True)


def complement(a: Event) -> Event:
    """Not A; increasing and decreasing swap."""
    if a.key and a.key[0] == "open":
        return closed_bond(a.key[1])
    if a.key and a.key[0] == "closed":
        return open_bond(a.key[1])
    if a.key == ("true",):
        return always_false()
    if a.key == ("false",):
        return always_true()
    return Event(
        lambda config: not a(config),
        _FLIP[a.monotonicity],
        a.support,
        f"not({a.name})",
        key=("not", a.key) if a.key else None,
    )


def _combined_support(a: Event, b: Event):
    return None if a.support is None or b.support is None else a.support | b.support


def _shared(a: Event, b: Event) -> str:
    return a.monotonicity if a.monotonicity == b.monotonicity else "general"


def and_(a: Event, b: Event) -> Event:
    mono = _shared(a, b)
    finder = None
    if mono != "general":
        def finder(config):
            return [t | g for t in minimal_witnesses(a, config) for g in minimal_witnesses(b, config)]
    return Event(
        lambda config: a(config) and b(config),
        mono,
        _combined_support(a, b),
        f"and({a.name},{b.name})",
        finder,
        key=("and", a.key, b.key) if a.key and b.key else None,
        local=a.local and b.local,
    )


def or_(a: Event, b: Event) -> Event:
    mono = _shared(a, b)
    finder = None
    if mono != "general":
        def finder(config):
            out = []
            for e in (a, b):
                if e(config):
                    out.extend(minimal_witnesses(e, config))
            return out
    return Event(
        lambda config: a(config) or b(config),
        mono,
        _combined_support(a, b),
        f"or({a.name},{b.name})",
        finder,
        key=("or", a.key, b.key) if a.key and b.key else None,
        local=a.local and b.local,
    )


def sep(a: Event, b: Event, r: float) -> Event:
    """A∘_r B as an event; increasing when both are."""
    mono = "increasing" if a.increasing and b.increasing else ("decreasing" if a.decreasing and b.decreasing else "general")

    def predicate(config):
        return separated_occurrence(a, b, config, r) is not None

    def finder(config):
        out = []
        for theta, gamma in _witness_pairs(a, b, config):
            if r == 0 or distance(config.region, list(theta), list(gamma)) >= r:
                out.append(theta | gamma)
        return out

    return Event(
        predicate, mono, _combined_support(a, b), f"sep{r}({a.name},{b.name})", finder,
        key=("sep", r, a.key, b.key) if a.key and b.key else None,
    )


def disjoint(a: Event, b: Event) -> Event:
    """A∘B as an event; increasing when both are."""
    mono = "increasing" if a.increasing and b.increasing else ("decreasing" if a.decreasing and b.decreasing else "general")

    def predicate(config):
        return disjoint_occurrence(a, b, config) is not None

    def finder(config):
        return [t | g for t, g in _witness_pairs(a, b, config) if not t & g]

    return Event(
        predicate, mono, _combined_support(a, b), f"disjoint({a.name},{b.name})", finder,
        key=("disjoint", a.key, b.key) if a.key and b.key else None,
    )


def _fmt(item) -> str:
    return str(item).replace(" ", "")


def increasing_catalog(region: Region, max_threshold: int = 2) -> list[Event]:
    """Catalog increasing events on a region: single bonds, connections, all-open pairs, thresholds."""
    events: list[Event] = [open_bond(b) for b in region.bonds]
    for x, y in itertools.combinations(region.vertices, 2):
        events.append(connect(x, y))
    for a, b in itertools.combinations(region.bonds, 2):
        if set(a) & set(b):
            events.append(all_open([a, b]))
    for k in range(2, max_threshold + 1):
        events.append(threshold(region.bonds, k))
    return events


# =============================================================================
# Spot Verification
# =============================================================================

@dataclass
class PropertyReport:
    holds: bool
    exhaustive: bool
    checked: int
    counterexample: Optional[tuple] = None

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "exhaustive": self.exhaustive,
            "checked": self.checked,
            "counterexample": list(self.counterexample) if self.counterexample else None,
        }


def check_monotonicity(
    event: Event, region: Region, seed: int = 0, draws: int = MONOTONICITY_DRAWS
) -> PropertyReport:
    """
    Verify the declared monotonicity: exhaustively over single-bond
    increments on small regions, else on random comparable pairs ω <= ω'.
    """
    if event.monotonicity == "general":
        return PropertyReport(True, True, 0)
    n = len(region)
    if n <= EXHAUSTIVE_CHECK_CAP:
        ind = event.indicator(region)
        codes = np.arange(1 << n)
        checked = 0
        for j in range(n):
            low = codes[(codes >> j & 1) == 0]
            high = low | (1 << j)
            bad = ind[low] & ~ind[high] if event.increasing else ind[high] & ~ind[low]
            checked += len(low)
            hits = np.nonzero(bad)[0]
            if len(hits):
                return PropertyReport(False, True, checked, (int(low[hits[0]]), int(high[hits[0]])))
        return PropertyReport(True, True, checked)

    rng = np.random.default_rng(seed)
    for k in range(draws):
        lo = _random_mask(rng, n)
        hi = lo | _random_mask(rng, n)
        a, b = event(Configuration(region, lo)), event(Configuration(region, hi))
        if (event.increasing and a and not b) or (event.decreasing and b and not a):
            return PropertyReport(False, False, k + 1, (lo, hi))
    return PropertyReport(True, False, draws)


def check_support(event: Event, region: Region, seed: int = 0, draws: int = MONOTONICITY_DRAWS) -> PropertyReport:
    """Verify the predicate ignores bonds outside the declared support."""
    if event.support is None:
        return PropertyReport(True, True, 0)
    n = len(region)
    outside = [j for j, b in enumerate(region.bonds) if b not in event.support]
    if n <= EXHAUSTIVE_CHECK_CAP:
        ind = event.indicator(region)
        codes = np.arange(1 << n)
        for j in outside:
            hits = np.nonzero(ind[codes] != ind[codes ^ (1 << j)])[0]
            if len(hits):
                w = int(codes[hits[0]])
                return PropertyReport(False, True, len(outside), (w, w ^ (1 << j)))
        return PropertyReport(True, True, len(outside) << n)

    rng = np.random.default_rng(seed)
    outside_mask = sum(1 << j for j in outside)
    for k in range(draws):
        w = _random_mask(rng, n)
        w2 = (w & ~outside_mask) | (_random_mask(rng, n) & outside_mask)
        if event(Configuration(region, w)) != event(Configuration(region, w2)):
            return PropertyReport(False, False, k + 1, (w, w2))
    return PropertyReport(True, False, draws)


def _random_mask(rng: np.random.Generator, n: int) -> int:
    bits = rng.integers(0, 2, size=n)
    return int(sum(int(b) << j for j, b in enumerate(bits)))
