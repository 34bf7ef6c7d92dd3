# operators/lattice.py
"""
Lattice Geometry - fk-separation

Bond and site regions of Z^d with their graph metric, balls, planar duals
and the structural predicates used by the filling generators: simple
lattice-connectedness, circuit-boundedness, lattice rectangles and
blocking partitions.

Conventions:
    - A Site is a tuple of ints, a Bond a pair of adjacent Sites stored
      as (min endpoint, max endpoint).
    - Bonds of a Region are kept in canonical (lexicographic) order;
      bond i of a Region is bit i of a configuration mask.
    - The empty bond set counts as connected.
    - Distances are graph hops inside the region; unreachable pairs and
      empty sets give math.inf.

Usage:
    from operators.lattice import build_rectangle, distance, ball, is_slc

    region = build_rectangle((0, 0), (2, 2))
    distance(region, [(0, 0)], [(2, 2)])      # 4
    ball(region, (1, 1), 1)                    # the 4 bonds at the center
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Union

import networkx as nx
import numpy as np
from networkx.utils import UnionFind

logger = logging.getLogger(__name__)

Site = tuple[int, ...]
Bond = tuple[Site, Site]

SUPPORTED_DIMENSIONS = (1, 2, 3)


# =============================================================================
# Sites and Bonds
# =============================================================================

def make_site(coords: Iterable[int]) -> Site:
    site = tuple(int(c) for c in coords)
    if len(site) not in SUPPORTED_DIMENSIONS:
        raise ValueError(f"Unsupported dimension {len(site)} for site {site}")
    return site


def make_bond(x: Iterable[int], y: Iterable[int]) -> Bond:
    """Normalize an adjacent pair of sites into a canonical bond."""
    a, b = make_site(x), make_site(y)
    if len(a) != len(b):
        raise ValueError(f"Endpoints of different dimension: {a}, {b}")
    if sum(abs(u - v) for u, v in zip(a, b)) != 1:
        raise ValueError(f"Sites {a} and {b} are not adjacent")
    return (a, b) if a < b else (b, a)


def lattice_neighbors(site: Site) -> list[Site]:
    out = []
    for axis in range(len(site)):
        for step in (-1, 1):
            moved = list(site)
            moved[axis] += step
            out.append(tuple(moved))
    return out


def bond_axis(bond: Bond) -> int:
    x, y = bond
    return next(i for i in range(len(x)) if x[i] != y[i])


def is_site(item) -> bool:
    return isinstance(item, tuple) and len(item) > 0 and all(isinstance(c, (int, np.integer)) for c in item)


def bonds_in_box(lo: Sequence[int], hi: Sequence[int]) -> list[Bond]:
    """All lattice bonds with both endpoints in the box [lo, hi] (canonical order)."""
    ranges = [range(a, b + 1) for a, b in zip(lo, hi)]
    bonds = []
    for site in itertools.product(*ranges):
        for axis in range(len(site)):
            if site[axis] < hi[axis]:
                moved = list(site)
                moved[axis] += 1
                bonds.append((tuple(site), tuple(moved)))
    return sorted(bonds)


def bounding_box(bonds: Iterable[Bond]) -> tuple[Site, Site]:
    sites = [s for bond in bonds for s in bond]
    if not sites:
        raise ValueError("Bounding box of an empty bond set")
    dim = len(sites[0])
    lo = tuple(min(s[i] for s in sites) for i in range(dim))
    hi = tuple(max(s[i] for s in sites) for i in range(dim))
    return lo, hi


# =============================================================================
# Region
# =============================================================================

class Region:
    """
    A finite set of bonds of Z^d with its graph metric.

    Immutable after construction; the all-pairs hop metric is computed
    eagerly by breadth-first search.
    """

    def __init__(self, bonds: Iterable):
        normalized = sorted({make_bond(*b) for b in bonds})
        self.bonds: tuple[Bond, ...] = tuple(normalized)
        self.index: dict[Bond, int] = {b: i for i, b in enumerate(self.bonds)}
        self.vertices: tuple[Site, ...] = tuple(sorted({s for b in self.bonds for s in b}))
        self.vertex_index: dict[Site, int] = {s: i for i, s in enumerate(self.vertices)}
        self.dimension = len(self.vertices[0]) if self.vertices else 0
        if any(len(s) != self.dimension for s in self.vertices):
            raise ValueError("Region mixes sites of different dimensions")

        self.endpoints: tuple[tuple[int, int], ...] = tuple(
            (self.vertex_index[x], self.vertex_index[y]) for x, y in self.bonds
        )
        incident: list[list[int]] = [[] for _ in self.vertices]
        for i, (u, v) in enumerate(self.endpoints):
            incident[u].append(i)
            incident[v].append(i)
        self.incident: tuple[tuple[int, ...], ...] = tuple(tuple(x) for x in incident)

        # Vertices with a lattice bond outside R abut R^c
        full_degree = 2 * self.dimension
        self.boundary_vertices: frozenset[int] = frozenset(
            i for i, inc in enumerate(self.incident) if len(inc) < full_degree
        )

        self.graph = nx.Graph()
        self.graph.add_nodes_from(self.vertices)
        for i, (x, y) in enumerate(self.bonds):
            self.graph.add_edge(x, y, index=i)

        n = len(self.vertices)
        self._metric = np.full((n, n), np.inf)
        for source, lengths in nx.all_pairs_shortest_path_length(self.graph):
            row = self.vertex_index[source]
            for target, hops in lengths.items():
                self._metric[row, self.vertex_index[target]] = hops

    # -------------------------------------------------------------------------
    # Container protocol
    # -------------------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.bonds)

    def __iter__(self) -> Iterator[Bond]:
        return iter(self.bonds)

    def __contains__(self, bond) -> bool:
        return bond in self.index

    def __eq__(self, other) -> bool:
        return isinstance(other, Region) and self.bonds == other.bonds

    def __hash__(self) -> int:
        return hash(self.bonds)

    def __repr__(self) -> str:
        return f"Region({len(self.bonds)} bonds, {len(self.vertices)} sites, d={self.dimension})"

    # -------------------------------------------------------------------------
    # Index helpers
    # -------------------------------------------------------------------------

    @property
    def full_mask(self) -> int:
        return (1 << len(self.bonds)) - 1

    def mask_of(self, bonds: Iterable[Bond]) -> int:
        mask = 0
        for b in bonds:
            bond = make_bond(*b)
            if bond not in self.index:
                raise ValueError(f"Bond {bond} is not in the region")
            mask |= 1 << self.index[bond]
        return mask

    def bonds_of(self, mask: int) -> tuple[Bond, ...]:
        return tuple(b for i, b in enumerate(self.bonds) if mask >> i & 1)

    def complement(self, bonds: Iterable[Bond]) -> tuple[Bond, ...]:
        drop = {make_bond(*b) for b in bonds}
        return tuple(b for b in self.bonds if b not in drop)

    def subregion(self, bonds: Iterable[Bond]) -> "Region":
        sub = Region(bonds)
        missing = [b for b in sub.bonds if b not in self.index]
        if missing:
            raise ValueError(f"Bonds outside the region: {missing[:3]}")
        return sub

    def site_distance(self, x: Site, y: Site) -> float:
        return float(self._metric[self.vertex_index[x], self.vertex_index[y]])

    def metric_row(self, x: Site) -> np.ndarray:
        return self._metric[self.vertex_index[x]]

    @property
    def metric(self) -> np.ndarray:
        view = self._metric.view()
        view.flags.writeable = False
        return view

    def diameter(self) -> float:
        finite = self._metric[np.isfinite(self._metric)]
        return float(finite.max()) if finite.size else 0.0

    def to_json(self) -> list:
        return [[list(x), list(y)] for x, y in self.bonds]


def region_from_json(data: list) -> Region:
    """Parse the region literal format: a JSON array of [site, site] pairs."""
    try:
        return Region((tuple(x), tuple(y)) for x, y in data)
    except (TypeError, ValueError) as e:
        raise ValueError(f"Invalid region literal: {e}") from e


def build_rectangle(corner_lo: Sequence[int], corner_hi: Sequence[int]) -> Region:
    """All bonds contained in the box [corner_lo, corner_hi]."""
    lo, hi = make_site(corner_lo), make_site(corner_hi)
    if len(lo) != len(hi):
        raise ValueError(f"Corners of different dimension: {lo}, {hi}")
    if any(a > b for a, b in zip(lo, hi)):
        raise ValueError(f"corner_lo {lo} is not below corner_hi {hi}")
    bonds = bonds_in_box(lo, hi)
    if not bonds:
        raise ValueError(f"Rectangle {lo}..{hi} contains no bonds")
    return Region(bonds)


# =============================================================================
# Configurations on a Region
# =============================================================================

@dataclass(frozen=True)
class Configuration:
    """One open/closed bit per bond of the region, bond i at bit i."""

    region: Region
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits <= self.region.full_mask:
            raise ValueError(f"Mask {self.bits} does not fit a region of {len(self.region)} bonds")

    @classmethod
    def from_open_bonds(cls, region: Region, bonds: Iterable[Bond]) -> "Configuration":
        return cls(region, region.mask_of(bonds))

    @classmethod
    def all_open(cls, region: Region) -> "Configuration":
        return cls(region, region.full_mask)

    @classmethod
    def all_closed(cls, region: Region) -> "Configuration":
        return cls(region, 0)

    def is_open(self, bond) -> bool:
        i = bond if isinstance(bond, int) else self.region.index[make_bond(*bond)]
        return bool(self.bits >> i & 1)

    def open_bonds(self) -> tuple[Bond, ...]:
        return self.region.bonds_of(self.bits)

    def closed_bonds(self) -> tuple[Bond, ...]:
        return self.region.bonds_of(self.region.full_mask & ~self.bits)

    def __le__(self, other: "Configuration") -> bool:
        return self.bits & ~other.bits == 0

    def __ge__(self, other: "Configuration") -> bool:
        return other <= self

    def bitstring(self) -> str:
        return "".join("1" if self.bits >> i & 1 else "0" for i in range(len(self.region)))


# =============================================================================
# Metric, Balls and Thickenings
# =============================================================================

def _vertex_indices(region: Region, items) -> list[int]:
    """Vertex indices of a site, a bond, or an iterable of sites/bonds."""
    if is_site(items):
        items = [items]
    elif (
        isinstance(items, tuple) and len(items) == 2 and all(is_site(s) for s in items)
        and sum(abs(u - v) for u, v in zip(*items)) == 1
    ):
        items = [items]
    out = set()
    for item in items:
        if is_site(item):
            site = tuple(int(c) for c in item)
            if site not in region.vertex_index:
                raise ValueError(f"Site {site} is not a vertex of the region")
            out.add(region.vertex_index[site])
        else:
            bond = make_bond(*item)
            if bond not in region.index:
                raise ValueError(f"Bond {bond} is not in the region")
            out.update(region.endpoints[region.index[bond]])
    return sorted(out)


def distance(region: Region, a, b) -> Union[int, float]:
    """
    Hop distance d_R between two sets of sites and/or bonds.

    Bond sets are measured through their vertex sets. Returns math.inf for
    pairs in different components and whenever either set is empty.
    """
    ia, ib = _vertex_indices(region, a), _vertex_indices(region, b)
    if not ia or not ib:
        return math.inf
    value = region.metric[np.ix_(ia, ib)].min()
    return int(value) if np.isfinite(value) else math.inf


def ball(region: Region, x: Sequence[int], r: float) -> tuple[Bond, ...]:
    """B_R(x, r): bonds of R with both endpoints within hop distance r of x."""
    site = tuple(int(c) for c in x)
    if site not in region.vertex_index:
        raise ValueError(f"Site {site} is not a vertex of the region")
    if r < 0:
        raise ValueError(f"Negative radius {r}")
    row = region.metric_row(site)
    return tuple(b for b, (u, v) in zip(region.bonds, region.endpoints) if row[u] <= r and row[v] <= r)


def thicken(region: Region, bonds: Iterable[Bond], r: float) -> tuple[Bond, ...]:
    """D^r(R) = {b in R : d_R(b, D) <= r}."""
    idx = _vertex_indices(region, list(bonds))
    if not idx:
        return ()
    near = region.metric[idx].min(axis=0)
    return tuple(
        b for b, (u, v) in zip(region.bonds, region.endpoints) if min(near[u], near[v]) <= r
    )


# =============================================================================
# Connectivity of Bond Sets
# =============================================================================

def components(bonds: Iterable[Bond]) -> list[tuple[Bond, ...]]:
    """Bond-connected components; two bonds are adjacent when they share a vertex."""
    bond_list = sorted({make_bond(*b) for b in bonds})
    if not bond_list:
        return []
    uf = UnionFind(range(len(bond_list)))
    first_at: dict[Site, int] = {}
    for i, bond in enumerate(bond_list):
        for s in bond:
            if s in first_at:
                uf.union(first_at[s], i)
            else:
                first_at[s] = i
    groups = sorted(uf.to_sets(), key=min)
    return [tuple(bond_list[i] for i in sorted(g)) for g in groups]


def is_connected(bonds: Iterable[Bond]) -> bool:
    return len(components(bonds)) <= 1


def outer_boundary_bonds(region: Region) -> tuple[Bond, ...]:
    """Lattice bonds outside R with an endpoint in V(R)."""
    out = set()
    for v in region.vertices:
        for w in lattice_neighbors(v):
            bond = make_bond(v, w)
            if bond not in region.index:
                out.add(bond)
    return tuple(sorted(out))


def abuts(a: Iterable[Bond], b: Iterable[Bond]) -> bool:
    """True when the two bond sets share a vertex."""
    va = {s for bond in a for s in bond}
    return any(s in va for bond in b for s in bond)


# =============================================================================
# Blocking Partitions
# =============================================================================

@dataclass(frozen=True)
class BlockingPartition:
    """(X, Y, Z) with Y separating X from Z inside a region."""

    x_part: frozenset = field(default_factory=frozenset)
    y_part: frozenset = field(default_factory=frozenset)
    z_part: frozenset = field(default_factory=frozenset)

    @classmethod
    def of(cls, x: Iterable[Bond], y: Iterable[Bond], z: Iterable[Bond]) -> "BlockingPartition":
        norm = lambda part: frozenset(make_bond(*b) for b in part)
        return cls(norm(x), norm(y), norm(z))

    def check_covers(self, region: Region) -> None:
        parts = (self.x_part, self.y_part, self.z_part)
        if any(p & q for p, q in itertools.combinations(parts, 2)):
            raise ValueError("Blocking partition parts overlap")
        if self.x_part | self.y_part | self.z_part != set(region.bonds):
            raise ValueError("Blocking partition does not cover the region")

    def to_json(self) -> dict:
        return {
            "x": [[list(a), list(b)] for a, b in sorted(self.x_part)],
            "y": [[list(a), list(b)] for a, b in sorted(self.y_part)],
            "z": [[list(a), list(b)] for a, b in sorted(self.z_part)],
        }


def verify_blocking(region: Region, partition: BlockingPartition) -> bool:
    """True iff every path of R from x_part to z_part uses a bond of y_part."""
    partition.check_covers(region)
    for comp in components(partition.x_part | partition.z_part):
        members = set(comp)
        if members & partition.x_part and members & partition.z_part:
            return False
    return True


def iter_blocking_partitions(region: Region) -> Iterator[BlockingPartition]:
    """Every (X, Y, Z) labelling of the bonds that is blocking, X and Z nonempty."""
    bonds = region.bonds
    for labels in itertools.product((0, 1, 2), repeat=len(bonds)):
        if 0 not in labels or 2 not in labels:
            continue
        parts = ([], [], [])
        for bond, label in zip(bonds, labels):
            parts[label].append(bond)
        partition = BlockingPartition.of(*parts)
        if verify_blocking(region, partition):
            yield partition


# =============================================================================
# Planar Duals (d = 2)
# =============================================================================

DualSite = tuple[int, int]  # (i, j) stands for the point (i + 1/2, j + 1/2)


@dataclass(frozen=True, order=True)
class DualBond:
    """The dual bond perpendicularly bisecting a primal bond."""

    bisected: Bond

    @property
    def endpoints(self) -> tuple[DualSite, DualSite]:
        (x, y), _ = self.bisected
        if bond_axis(self.bisected) == 0:
            return (x, y - 1), (x, y)
        return (x - 1, y), (x, y)

    def primal(self) -> Bond:
        return self.bisected


def dual_bond(bond: Bond) -> DualBond:
    bond = make_bond(*bond)
    if len(bond[0]) != 2:
        raise ValueError("Duals are only defined for d = 2")
    return DualBond(bond)


def dual_bond_between(a: DualSite, b: DualSite) -> DualBond:
    """The dual bond joining two adjacent dual sites."""
    (ax, ay), (bx, by) = sorted([tuple(a), tuple(b)])
    if ax == bx and by == ay + 1:
        return DualBond(((ax, by), (ax + 1, by)))
    if ay == by and bx == ax + 1:
        return DualBond(((bx, ay), (bx, ay + 1)))
    raise ValueError(f"Dual sites {a} and {b} are not adjacent")


@dataclass(frozen=True)
class DualConfiguration:
    """Open dual bonds of a region: bit i open iff primal bond i is closed."""

    region: Region
    bits: int

    def open_dual_bonds(self) -> tuple[DualBond, ...]:
        return tuple(DualBond(b) for b in self.region.bonds_of(self.bits))


def dualize(region: Region, config: Union[Configuration, DualConfiguration]):
    """Map a configuration to its dual (and back; dualize is an involution)."""
    if region.dimension != 2:
        raise ValueError("dualize requires d = 2")
    flipped = region.full_mask & ~config.bits
    if isinstance(config, DualConfiguration):
        return Configuration(region, flipped)
    return DualConfiguration(region, flipped)


def _dual_complement_connected(bonds: set) -> bool:
    """(B^c)* connected, checked inside a box with a two-site margin around B."""
    lo, hi = bounding_box(bonds)
    lo = tuple(c - 2 for c in lo)
    hi = tuple(c + 2 for c in hi)
    graph = nx.Graph()
    for bond in bonds_in_box(lo, hi):
        if bond not in bonds:
            graph.add_edge(*DualBond(bond).endpoints)
    return nx.is_connected(graph)


def is_slc(region: Union[Region, Iterable[Bond]]) -> bool:
    """Simply lattice-connected (d = 2): R and (R^c)* both connected."""
    bonds = set(region.bonds) if isinstance(region, Region) else {make_bond(*b) for b in region}
    if not bonds:
        return True
    if len(next(iter(bonds))[0]) != 2:
        raise ValueError("is_slc requires d = 2")
    return is_connected(bonds) and _dual_complement_connected(bonds)


# =============================================================================
# Circuits, Rectangles and Interiors
# =============================================================================

@dataclass(frozen=True)
class Circuit:
    """A self-avoiding lattice circuit in traversal order."""

    sites: tuple[Site, ...]
    bonds: tuple[Bond, ...]

    def __len__(self) -> int:
        return len(self.bonds)

    def to_json(self) -> list:
        return [[list(a), list(b)] for a, b in self.bonds]


def _plaquette_bonds(corner: Site) -> tuple[Bond, ...]:
    x, y = corner
    return (
        ((x, y), (x + 1, y)),
        ((x, y), (x, y + 1)),
        ((x, y + 1), (x + 1, y + 1)),
        ((x + 1, y), (x + 1, y + 1)),
    )


def is_circuit_bounded(region: Union[Region, Iterable[Bond]]) -> Optional[Circuit]:
    """
    Return Γ_R when R = Γ_R ∪ Int(Γ_R) for a self-avoiding circuit Γ_R.

    The plaquettes whose four bonds lie in R must tile a closed disk whose
    bonds are exactly R; the circuit is the boundary of that disk.
    """
    bonds = set(region.bonds) if isinstance(region, Region) else {make_bond(*b) for b in region}
    if not bonds:
        return None
    if len(next(iter(bonds))[0]) != 2:
        raise ValueError("is_circuit_bounded requires d = 2")

    corners = sorted({x for bond in bonds for x in bond})
    plaquettes = [c for c in corners if all(b in bonds for b in _plaquette_bonds(c))]
    if not plaquettes:
        return None

    covered: dict[Bond, int] = {}
    for corner in plaquettes:
        for b in _plaquette_bonds(corner):
            covered[b] = covered.get(b, 0) + 1
    if set(covered) != bonds:
        return None

    boundary = [b for b, count in covered.items() if count == 1]
    graph = nx.Graph()
    graph.add_edges_from(boundary)
    if any(deg != 2 for _, deg in graph.degree()) or not nx.is_connected(graph):
        return None

    start = min(graph.nodes)
    sites = [start]
    previous, current = None, start
    while True:
        nxt = min(n for n in graph.neighbors(current) if n != previous)
        if nxt == start:
            break
        sites.append(nxt)
        previous, current = current, nxt
        if len(sites) > len(boundary):
            return None
    cycle = tuple(make_bond(sites[i], sites[(i + 1) % len(sites)]) for i in range(len(sites)))
    return Circuit(sites=tuple(sites), bonds=cycle)


def is_lattice_rectangle(bonds: Iterable[Bond]) -> bool:
    bond_set = {make_bond(*b) for b in bonds}
    if not bond_set:
        return False
    lo, hi = bounding_box(bond_set)
    return bond_set == set(bonds_in_box(lo, hi))


def _on_box_boundary(site: Site, lo: Site, hi: Site) -> bool:
    return any(site[i] in (lo[i], hi[i]) for i in range(len(site)))


def _box_surface(lo: Site, hi: Site) -> set[Bond]:
    """Bonds of the box lying in its topological boundary."""
    surface = set()
    for bond in bonds_in_box(lo, hi):
        axis = bond_axis(bond)
        x = bond[0]
        if any(x[i] in (lo[i], hi[i]) for i in range(len(x)) if i != axis):
            surface.add(bond)
    return surface


def outer_surface(region: Union[Region, Iterable[Bond]]) -> tuple[Bond, ...]:
    """Γ_R for a lattice rectangle or (d = 2) a circuit-bounded region."""
    bonds = set(region.bonds) if isinstance(region, Region) else {make_bond(*b) for b in region}
    if is_lattice_rectangle(bonds):
        lo, hi = bounding_box(bonds)
        return tuple(sorted(_box_surface(lo, hi)))
    if bonds and len(next(iter(bonds))[0]) == 2:
        circuit = is_circuit_bounded(bonds)
        if circuit is not None:
            return tuple(sorted(circuit.bonds))
    raise ValueError("outer_surface needs a lattice rectangle or a circuit-bounded region")


def interior(region: Union[Region, Iterable[Bond]]) -> tuple[Bond, ...]:
    """Int(R) = R minus its outer surface."""
    bonds = set(region.bonds) if isinstance(region, Region) else {make_bond(*b) for b in region}
    surface = set(outer_surface(bonds))
    return tuple(sorted(bonds - surface))


def is_minimally_fat(region: Union[Region, Iterable[Bond]]) -> bool:
    return is_connected(interior(region))


def is_approximate_rectangle(bonds: Iterable[Bond]) -> bool:
    """Every bond of the completed rectangle missing from the set abuts its complement."""
    bond_set = {make_bond(*b) for b in bonds}
    if not bond_set:
        return True
    lo, hi = bounding_box(bond_set)
    for missing in set(bonds_in_box(lo, hi)) - bond_set:
        if not any(_on_box_boundary(s, lo, hi) for s in missing):
            return False
    return True


def is_regular(bonds: Iterable[Bond]) -> bool:
    """Each outer-surface bond has its abutting interior bonds (of the completed rectangle) present."""
    bond_set = {make_bond(*b) for b in bonds}
    if not bond_set:
        return True
    lo, hi = bounding_box(bond_set)
    surface = _box_surface(lo, hi)
    inner = set(bonds_in_box(lo, hi)) - surface
    for e in bond_set & surface:
        for f in inner:
            if (f[0] in e or f[1] in e) and f not in bond_set:
                return False
    return True


# =============================================================================
# Site Regions (Ising)
# =============================================================================

class SiteRegion:
    """
    A finite site set Λ with B(Λ), the closure 𝓑̄(Λ) and the outer boundary ∂Λ.
    """

    def __init__(self, sites: Iterable[Sequence[int]]):
        self.sites: tuple[Site, ...] = tuple(sorted({make_site(s) for s in sites}))
        if not self.sites:
            raise ValueError("Site region is empty")
        self.dimension = len(self.sites[0])
        self.index: dict[Site, int] = {s: i for i, s in enumerate(self.sites)}
        members = set(self.sites)

        inner, closure, outside = set(), set(), set()
        for s in self.sites:
            for t in lattice_neighbors(s):
                bond = make_bond(s, t)
                closure.add(bond)
                if t in members:
                    inner.add(bond)
                else:
                    outside.add(t)
        self.interior_bonds: tuple[Bond, ...] = tuple(sorted(inner))
        self.closure_bonds: tuple[Bond, ...] = tuple(sorted(closure))
        self.boundary_sites: tuple[Site, ...] = tuple(sorted(outside))

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self) -> Iterator[Site]:
        return iter(self.sites)

    def __contains__(self, site) -> bool:
        return tuple(site) in self.index

    def __eq__(self, other) -> bool:
        return isinstance(other, SiteRegion) and self.sites == other.sites

    def __hash__(self) -> int:
        return hash(self.sites)

    def __repr__(self) -> str:
        return f"SiteRegion({len(self.sites)} sites, d={self.dimension})"

    def interior_region(self) -> Region:
        return Region(self.interior_bonds)

    def closure_region(self) -> Region:
        return Region(self.closure_bonds)

    def distance(self, x: Site, y: Site) -> float:
        """Hop distance in the metric of B(Λ)."""
        if x == y:
            return 0.0
        graph = nx.Graph()
        graph.add_nodes_from(self.sites)
        graph.add_edges_from(self.interior_bonds)
        try:
            return float(nx.shortest_path_length(graph, x, y))
        except nx.NetworkXNoPath:
            return math.inf


def thicken_sites(site_region: SiteRegion, delta: Iterable[Sequence[int]], r: float) -> tuple[Site, ...]:
    """Δ^r(Λ): sites of Λ within d_{B(Λ)} distance r of Δ."""
    graph = nx.Graph()
    graph.add_nodes_from(site_region.sites)
    graph.add_edges_from(site_region.interior_bonds)
    sources = [make_site(s) for s in delta]
    for s in sources:
        if s not in site_region:
            raise ValueError(f"Site {s} is not in Λ")
    if not sources:
        return ()
    reach = nx.multi_source_dijkstra_path_length(graph, sources, cutoff=r)
    return tuple(sorted(reach))
