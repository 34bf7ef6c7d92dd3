# operators/models.py
"""
Weight Models - fk-separation

Weight functions for the FK random-cluster model (free, wired, bond and
site boundary conditions, integer-q external fields) and the Ising model,
cluster bookkeeping, and the two Edwards-Sokal constructions linking them.

Conventions:
    - External fields are h_1 = 0 >= h_2 >= ... >= h_q. A finite interior
      cluster C contributes sum_i (1-p)^(-h_i s(C)), i.e. sum_i e^(beta h_i s(C))
      with e^(-beta) = 1 - p; without fields it contributes q.
    - Clusters joined to the infinite cluster (wired boundary, or a bond
      boundary flagged infinite_cluster) contribute factor 1 (species 1).
    - Site boundaries: clusters touching ∂Λ take the label of η there and
      contribute e^(beta h_i(label) s(C)) with s(C) counting Λ sites only;
      two different labels in one cluster give weight 0.
    - Ising: H = -sum_<xy> δ[(ση)(x) = (ση)(y)] - h sum_x σ_x, weight e^(-beta H),
      over B(Λ) for a free boundary and 𝓑̄(Λ) for a site boundary.

Usage:
    from operators.models import FkParams, BoundaryCondition, make_model

    model = make_model(FkParams(p=0.5, q=2.0), region, BoundaryCondition.wired())
    model.log_weight(mask)
"""

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from networkx.utils import UnionFind
from scipy.special import logsumexp, xlogy

from operators.lattice import Bond, Configuration, Region, Site, SiteRegion, make_bond, make_site

logger = logging.getLogger(__name__)

BOUNDARY_KINDS = ("free", "wired", "bond", "site")

# Known closed forms of p_c(q, 2); the formula is proven for these q only
_SELF_DUAL_Q_MIN = 25.72


# =============================================================================
# Parameters
# =============================================================================

@dataclass(frozen=True)
class FkParams:
    """(p, q, {h_i}) for the FK model; stable_spin maps species 1 to a spin sign."""

    p: Union[float, Fraction]
    q: Union[float, Fraction]
    fields: tuple = ()
    stable_spin: int = 1

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not self.q > 0:
            raise ValueError(f"q must be positive, got {self.q}")
        if self.stable_spin not in (1, -1):
            raise ValueError(f"stable_spin must be +1 or -1, got {self.stable_spin}")
        if self.fields:
            object.__setattr__(self, "fields", tuple(float(h) for h in self.fields))
            if float(self.q) != int(self.q):
                raise ValueError(f"External fields require integer q, got q={self.q}")
            if len(self.fields) != int(self.q):
                raise ValueError(f"Expected {int(self.q)} field values, got {len(self.fields)}")
            if self.fields[0] != 0:
                raise ValueError(f"h_1 must be 0, got {self.fields[0]}")
            if any(a < b for a, b in zip(self.fields, self.fields[1:])):
                raise ValueError(f"Fields must be nonincreasing: {self.fields}")

    @classmethod
    def from_ising(cls, ising: "IsingParams") -> "FkParams":
        """The q = 2 FK model paired with an Ising model: p = 1 - e^-beta."""
        p = -math.expm1(-ising.beta)
        fields = (0.0, -2.0 * abs(ising.h)) if ising.h else ()
        return cls(p=p, q=2.0, fields=fields, stable_spin=1 if ising.h >= 0 else -1)

    @property
    def has_fields(self) -> bool:
        return any(h != 0 for h in self.fields)

    @property
    def beta(self) -> float:
        """e^-beta = 1 - p (inf at p = 1)."""
        return math.inf if self.p == 1 else -math.log1p(-float(self.p))

    def species_log_terms(self, s: int) -> np.ndarray:
        """log (1-p)^(-h_i s) for each species i."""
        beta = self.beta
        out = np.zeros(len(self.fields))
        for i, h in enumerate(self.fields):
            if h != 0 and s:
                out[i] = beta * h * s
        return out

    def cluster_log_factor(self, s: int) -> float:
        """Log weight of a finite interior cluster with s counted sites."""
        if not self.has_fields:
            return math.log(self.q)
        return float(logsumexp(self.species_log_terms(s)))

    def labelled_log_factor(self, s: int, spin: int) -> float:
        """Log weight of a cluster pinned to a spin label by a site boundary."""
        if not self.has_fields:
            return 0.0
        if int(self.q) != 2:
            raise ValueError("Site-boundary fields need q = 2 (two spin labels)")
        species = 0 if spin == self.stable_spin else 1
        return float(self.species_log_terms(s)[species])

    def to_json(self) -> dict:
        return {"p": float(self.p), "q": float(self.q), "fields": list(self.fields), "stable_spin": self.stable_spin}


@dataclass(frozen=True)
class IsingParams:
    """Inverse temperature beta >= 0 and external field h."""

    beta: float
    h: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")

    @property
    def p(self) -> float:
        return -math.expm1(-self.beta)

    def to_json(self) -> dict:
        return {"beta": self.beta, "h": self.h}


# =============================================================================
# Boundary Conditions
# =============================================================================

@dataclass(frozen=True)
class BoundaryCondition:
    """
    free, wired, bond (open bonds ρ outside R) or site (spins η on ∂Λ).

    For bond boundaries only the open bonds are stored; everything else
    outside R is closed. With infinite_cluster set, the open bonds of ρ
    must form one connected piece, which is treated as infinite.
    """

    kind: str = "free"
    rho: frozenset = field(default_factory=frozenset)
    eta: tuple = ()
    infinite_cluster: bool = False

    def __post_init__(self):
        if self.kind not in BOUNDARY_KINDS:
            raise ValueError(f"Unknown boundary kind '{self.kind}' (expected one of {BOUNDARY_KINDS})")
        if self.kind != "bond" and (self.rho or self.infinite_cluster):
            raise ValueError(f"Bond data given for a {self.kind} boundary")
        if self.kind != "site" and self.eta:
            raise ValueError(f"Site data given for a {self.kind} boundary")
        if any(spin not in (1, -1) for _, spin in self.eta):
            raise ValueError("Boundary spins must be +1 or -1")

    @classmethod
    def free(cls) -> "BoundaryCondition":
        return cls("free")

    @classmethod
    def wired(cls) -> "BoundaryCondition":
        return cls("wired")

    @classmethod
    def bond(cls, open_bonds: Iterable, infinite_cluster: bool = False) -> "BoundaryCondition":
        return cls("bond", rho=frozenset(make_bond(*b) for b in open_bonds), infinite_cluster=infinite_cluster)

    @classmethod
    def site(cls, eta: dict) -> "BoundaryCondition":
        return cls("site", eta=tuple(sorted((make_site(s), int(v)) for s, v in eta.items())))

    @classmethod
    def constant(cls, site_region: SiteRegion, spin: int) -> "BoundaryCondition":
        """η ≡ spin on ∂Λ (all-plus is the Ising wired boundary)."""
        return cls.site({s: spin for s in site_region.boundary_sites})

    @property
    def eta_map(self) -> dict:
        return dict(self.eta)

    def validate(self, region: Union[Region, SiteRegion]) -> None:
        """Bond data must lie outside R; site data must cover ∂Λ exactly."""
        if self.kind == "bond":
            if not isinstance(region, Region):
                raise ValueError("A bond boundary needs a bond region")
            inside = [b for b in self.rho if b in region.index]
            if inside:
                raise ValueError(f"Boundary bonds inside the region: {sorted(inside)[:3]}")
            if self.infinite_cluster and self.rho:
                uf = UnionFind(s for b in self.rho for s in b)
                for x, y in self.rho:
                    uf.union(x, y)
                if len(list(uf.to_sets())) != 1:
                    raise ValueError("infinite_cluster needs the open boundary bonds to form one cluster")
        elif self.kind == "site":
            if not isinstance(region, SiteRegion):
                raise ValueError("A site boundary needs a site region Λ")
            given = {s for s, _ in self.eta}
            if given != set(region.boundary_sites):
                missing = sorted(set(region.boundary_sites) - given)[:3]
                extra = sorted(given - set(region.boundary_sites))[:3]
                raise ValueError(f"η must cover ∂Λ exactly (missing {missing}, extra {extra})")

    def to_json(self) -> dict:
        if self.kind == "bond":
            data = {
                "open": [[list(x), list(y)] for x, y in sorted(self.rho)],
                "infinite_cluster": self.infinite_cluster,
            }
        elif self.kind == "site":
            data = {"eta": [[list(s), v] for s, v in self.eta]}
        else:
            data = {}
        return {"kind": self.kind, "data": data}

    @classmethod
    def from_json(cls, data: dict) -> "BoundaryCondition":
        kind = data.get("kind", "free")
        payload = data.get("data") or {}
        if kind == "bond":
            return cls.bond(
                ((tuple(x), tuple(y)) for x, y in payload.get("open", [])),
                infinite_cluster=bool(payload.get("infinite_cluster", False)),
            )
        if kind == "site":
            return cls.site({tuple(s): v for s, v in payload.get("eta", [])})
        return cls(kind)


FREE = BoundaryCondition.free()
WIRED = BoundaryCondition.wired()


# =============================================================================
# Cluster Bookkeeping
# =============================================================================

@dataclass(frozen=True)
class Cluster:
    """One open cluster: its sites, bond count, counted size and boundary status."""

    sites: frozenset
    bonds: int
    size: int
    boundary: bool = False
    label: Optional[int] = None
    counted: bool = True


@dataclass(frozen=True)
class ClusterStats:
    """K, the per-cluster (s, b) data and the 𝒦_int / 𝒦_∂ split."""

    count: int
    clusters: tuple
    consistent: bool = True

    @property
    def interior(self) -> tuple:
        return tuple(c for c in self.clusters if c.counted and not c.boundary)

    @property
    def boundary(self) -> tuple:
        return tuple(c for c in self.clusters if c.boundary)


_GHOST = ("ghost",)


class ClusterGraph:
    """
    The graph on which open clusters of a bond region are formed.

    Nodes are V(R), the extra endpoints of open ρ bonds and (wired or
    infinite ρ) a ghost node standing for the infinite cluster. Static
    edges come from the boundary; bond i of the region is the dynamic
    edge region.endpoints[i].
    """

    def __init__(self, region: Union[Region, SiteRegion], boundary: BoundaryCondition = FREE):
        if isinstance(region, SiteRegion):
            self.site_region: Optional[SiteRegion] = region
            if boundary.kind == "site":
                self.region = region.closure_region()
            elif boundary.kind == "free":
                self.region = region.interior_region()
            else:
                raise ValueError(f"A site region takes a free or site boundary, not {boundary.kind}")
        else:
            self.site_region = None
            self.region = region
            if boundary.kind == "site":
                raise ValueError("A site boundary needs a site region Λ")
        boundary.validate(region)
        self.boundary = boundary

        nodes = list(self.region.vertices)
        static: list[tuple[int, int]] = []
        if boundary.kind == "bond":
            for x, y in sorted(boundary.rho):
                for s in (x, y):
                    if s not in self.region.vertex_index and s not in nodes:
                        nodes.append(s)
        node_index = {s: i for i, s in enumerate(nodes)}
        if boundary.kind == "bond":
            static += [(node_index[x], node_index[y]) for x, y in sorted(boundary.rho)]

        self.ghost: Optional[int] = None
        if boundary.kind == "wired" or (boundary.kind == "bond" and boundary.infinite_cluster and boundary.rho):
            self.ghost = len(nodes)
            nodes.append(_GHOST)
            if boundary.kind == "wired":
                static += [(self.ghost, v) for v in sorted(self.region.boundary_vertices)]
            else:
                rho_nodes = {node_index[s] for b in boundary.rho for s in b}
                static += [(self.ghost, v) for v in sorted(rho_nodes)]

        self.nodes: tuple = tuple(nodes)
        self.node_index = node_index
        self.static_edges: tuple = tuple(static)
        self.n_region_vertices = len(self.region.vertices)

        # s(C) counts Λ sites under a site boundary, every real site otherwise
        if self.site_region is not None:
            self.weighs = frozenset(node_index[s] for s in self.site_region.sites if s in node_index)
            self.extra_sites = tuple(s for s in self.site_region.sites if s not in node_index)
        else:
            self.weighs = frozenset(i for i, s in enumerate(nodes) if s != _GHOST)
            self.extra_sites = ()
        self.labels: dict[int, int] = {}
        if boundary.kind == "site":
            for s, spin in boundary.eta:
                if s in node_index:
                    self.labels[node_index[s]] = spin

        adjacency: list[list[tuple[int, int]]] = [[] for _ in nodes]
        for u, v in self.static_edges:
            adjacency[u].append((v, -1))
            adjacency[v].append((u, -1))
        for i, (u, v) in enumerate(self.region.endpoints):
            adjacency[u].append((v, i))
            adjacency[v].append((u, i))
        self.adjacency = tuple(tuple(a) for a in adjacency)

    def __repr__(self) -> str:
        return f"ClusterGraph({self.boundary.kind}, {len(self.region)} bonds, {len(self.nodes)} nodes)"

    def union_find(self, mask: int) -> UnionFind:
        uf = UnionFind(range(len(self.nodes)))
        for u, v in self.static_edges:
            uf.union(u, v)
        for i, (u, v) in enumerate(self.region.endpoints):
            if mask >> i & 1:
                uf.union(u, v)
        return uf

    def component(self, mask: int, start: int, skip_bond: int = -1) -> set:
        """Nodes reachable from start through open bonds (and static edges), skipping one bond."""
        seen = {start}
        frontier = [start]
        while frontier:
            u = frontier.pop()
            for v, bond in self.adjacency[u]:
                if v in seen or bond == skip_bond:
                    continue
                if bond >= 0 and not mask >> bond & 1:
                    continue
                seen.add(v)
                frontier.append(v)
        return seen

    def describe(self, members: Iterable[int], bonds: int = 0) -> Cluster:
        """Classify a node set as an interior, boundary or uncounted cluster."""
        members = set(members)
        sites = frozenset(self.nodes[i] for i in members if i != self.ghost)
        size = sum(1 for i in members if i in self.weighs)
        if self.ghost is not None and self.ghost in members:
            return Cluster(sites, bonds, size, boundary=True, label=None)
        labels = {self.labels[i] for i in members if i in self.labels}
        if labels:
            label = labels.pop() if len(labels) == 1 else 0
            return Cluster(sites, bonds, size, boundary=True, label=label)
        counted = any(i < self.n_region_vertices for i in members)
        return Cluster(sites, bonds, size, counted=counted)

    def clusters(self, mask: int) -> ClusterStats:
        uf = self.union_find(mask)
        bond_counts: dict = {}
        for i, (u, v) in enumerate(self.region.endpoints):
            if mask >> i & 1:
                root = uf[u]
                bond_counts[root] = bond_counts.get(root, 0) + 1
        out = []
        for members in sorted(uf.to_sets(), key=min):
            out.append(self.describe(members, bond_counts.get(uf[min(members)], 0)))
        for s in self.extra_sites:
            out.append(Cluster(frozenset([s]), 0, 1))
        consistent = all(c.label != 0 for c in out if c.boundary)
        count = sum(1 for c in out if c.counted and not c.boundary)
        return ClusterStats(count=count, clusters=tuple(out), consistent=consistent)


def count_clusters(config: Configuration, boundary: BoundaryCondition = FREE, site_region: Optional[SiteRegion] = None) -> ClusterStats:
    """
    Cluster statistics of a bond configuration under a boundary condition.

    K follows the boundary's counting rule: free counts every cluster of
    V(R) (singletons included), wired those not joined to R^c, bond ρ the
    clusters of (ωρ) meeting V(R). Site boundaries (pass site_region Λ)
    split clusters into 𝒦_int and 𝒦_∂.
    """
    graph = ClusterGraph(site_region if site_region is not None else config.region, boundary)
    if graph.region != config.region:
        raise ValueError("Configuration region does not match the boundary's bond region")
    return graph.clusters(config.bits)


# =============================================================================
# Models
# =============================================================================

class FkModel:
    """FK weights on the bond region of a ClusterGraph."""

    kind = "fk"

    def __init__(self, params: FkParams, region: Union[Region, SiteRegion], boundary: BoundaryCondition = FREE):
        self.params = params
        self.boundary = boundary
        self.graph = ClusterGraph(region, boundary)
        self.region = self.graph.region
        self.variables = self.region.bonds
        self._log_p = float(np.log(float(params.p))) if params.p > 0 else -math.inf
        self._log_q = float(np.log1p(-float(params.p))) if params.p < 1 else -math.inf

    def __repr__(self) -> str:
        return f"FkModel(p={self.params.p}, q={self.params.q}, {self.boundary.kind}, {len(self.region)} bonds)"

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def cluster_log_factor(self, cluster: Cluster) -> float:
        if cluster.boundary:
            if cluster.label is None:
                return 0.0
            if cluster.label == 0:
                return -math.inf
            return self.params.labelled_log_factor(cluster.size, cluster.label)
        if not cluster.counted:
            return 0.0
        return self.params.cluster_log_factor(cluster.size)

    def log_weight(self, mask: int) -> float:
        k = bin(mask).count("1")
        n = self.n_variables
        base = float(xlogy(k, float(self.params.p)) + xlogy(n - k, 1.0 - float(self.params.p)))
        if base == -math.inf:
            return base
        stats = self.graph.clusters(mask)
        if not stats.consistent:
            return -math.inf
        total = base
        if self.params.has_fields:
            for c in stats.clusters:
                total += self.cluster_log_factor(c)
        else:
            total += stats.count * math.log(float(self.params.q))
        return total

    def weight(self, mask: int) -> float:
        return math.exp(self.log_weight(mask))

    def weight_exact(self, mask: int) -> Fraction:
        """p^|ω| (1-p)^(n-|ω|) q^K in rational arithmetic (field-free only)."""
        if self.params.has_fields:
            raise ValueError("Rational weights do not support external fields")
        p, q = Fraction(self.params.p), Fraction(self.params.q)
        k = bin(mask).count("1")
        stats = self.graph.clusters(mask)
        if not stats.consistent:
            return Fraction(0)
        return p ** k * (1 - p) ** (self.n_variables - k) * q ** stats.count

    def flip_log_odds(self, mask: int, bond: int) -> float:
        """
        log W(ω ∪ e) - log W(ω ∖ e) from the clusters at e's endpoints.

        Connected endpoints off e give log p/(1-p); otherwise the two
        clusters merge and their factors are replaced by the merged one.
        """
        p = float(self.params.p)
        if p == 0:
            return -math.inf
        if p == 1:
            return math.inf
        odds = math.log(p) - math.log1p(-p)
        u, v = self.region.endpoints[bond]
        side_u = self.graph.component(mask, u, skip_bond=bond)
        if v in side_u:
            return odds
        side_v = self.graph.component(mask, v, skip_bond=bond)
        a = self.graph.describe(side_u)
        b = self.graph.describe(side_v)
        merged = self.graph.describe(side_u | side_v)
        before = self.cluster_log_factor(a) + self.cluster_log_factor(b)
        after = self.cluster_log_factor(merged)
        if after == -math.inf:
            return -math.inf
        if before == -math.inf:
            return math.inf
        return odds + after - before

    def to_json(self) -> dict:
        return {"model": "fk", **self.params.to_json(), "boundary": self.boundary.to_json()}


class IsingModel:
    """Ising weights on Λ; a configuration mask has bit i set when site i is +."""

    kind = "ising"

    def __init__(self, params: IsingParams, site_region: SiteRegion, boundary: BoundaryCondition = FREE):
        if not isinstance(site_region, SiteRegion):
            raise ValueError("The Ising model lives on a site region Λ")
        self.params = params
        self.boundary = _ising_boundary(site_region, boundary)
        self.boundary.validate(site_region)
        self.region = site_region
        self.variables = site_region.sites
        self.bond_region = ising_bond_region(site_region, self.boundary)
        eta = self.boundary.eta_map
        self._pairs: list[tuple[int, int]] = []
        self._fixed: list[tuple[int, int]] = []
        for x, y in self.bond_region.bonds:
            if x in site_region and y in site_region:
                self._pairs.append((site_region.index[x], site_region.index[y]))
            else:
                inner, outer = (x, y) if x in site_region else (y, x)
                self._fixed.append((site_region.index[inner], eta[outer]))

    def __repr__(self) -> str:
        return f"IsingModel(beta={self.params.beta}, h={self.params.h}, {self.boundary.kind}, {len(self.region)} sites)"

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def spins(self, mask: int) -> list[int]:
        return [1 if mask >> i & 1 else -1 for i in range(self.n_variables)]

    def energy(self, mask: int) -> float:
        sigma = self.spins(mask)
        agree = sum(1 for i, j in self._pairs if sigma[i] == sigma[j])
        agree += sum(1 for i, spin in self._fixed if sigma[i] == spin)
        return -agree - self.params.h * sum(sigma)

    def log_weight(self, mask: int) -> float:
        return -self.params.beta * self.energy(mask)

    def weight(self, mask: int) -> float:
        return math.exp(self.log_weight(mask))

    def to_json(self) -> dict:
        return {"model": "ising", **self.params.to_json(), "boundary": self.boundary.to_json()}


def make_model(params, region, boundary: BoundaryCondition = FREE):
    """FkModel or IsingModel, depending on the parameter type."""
    if isinstance(params, FkParams):
        return FkModel(params, region, boundary)
    if isinstance(params, IsingParams):
        return IsingModel(params, region, boundary)
    raise ValueError(f"Unknown parameter type: {type(params).__name__}")


def fk_weight(config: Configuration, params: FkParams, boundary: BoundaryCondition = FREE, site_region: Optional[SiteRegion] = None) -> float:
    """Unnormalised FK weight of a configuration; 0 outside U(Λ,η)."""
    model = FkModel(params, site_region if site_region is not None else config.region, boundary)
    if model.region != config.region:
        raise ValueError("Configuration region does not match the model's bond region")
    return model.weight(config.bits)


# =============================================================================
# Ising
# =============================================================================

@dataclass(frozen=True)
class SpinConfiguration:
    """±1 spins on Λ, bit i set when site i is +."""

    site_region: SiteRegion
    bits: int

    @classmethod
    def from_spins(cls, site_region: SiteRegion, spins: dict) -> "SpinConfiguration":
        bits = 0
        for s, v in spins.items():
            if v == 1:
                bits |= 1 << site_region.index[make_site(s)]
        return cls(site_region, bits)

    def spin(self, site: Sequence[int]) -> int:
        return 1 if self.bits >> self.site_region.index[make_site(site)] & 1 else -1


def _ising_boundary(site_region: SiteRegion, boundary: BoundaryCondition) -> BoundaryCondition:
    if boundary.kind == "wired":
        return BoundaryCondition.constant(site_region, 1)
    if boundary.kind not in ("free", "site"):
        raise ValueError(f"The Ising model takes a free, wired or site boundary, not {boundary.kind}")
    return boundary


def ising_bond_region(site_region: SiteRegion, boundary: BoundaryCondition) -> Region:
    """B(Λ) for a free boundary, 𝓑̄(Λ) otherwise."""
    boundary = _ising_boundary(site_region, boundary)
    return site_region.interior_region() if boundary.kind == "free" else site_region.closure_region()


def ising_weight(spins: SpinConfiguration, params: IsingParams, boundary: BoundaryCondition = FREE) -> float:
    """Unnormalised Gibbs weight e^(-beta H)."""
    return IsingModel(params, spins.site_region, boundary).weight(spins.bits)


# =============================================================================
# Edwards-Sokal Constructions
# =============================================================================

def _label_weights(size: int, params: Optional[IsingParams]) -> tuple[float, float]:
    """(P(+), P(-)) for a free cluster with `size` Λ sites."""
    if params is None or params.h == 0 or size == 0:
        return 0.5, 0.5
    plus = 1.0 / (1.0 + math.exp(-2.0 * params.beta * params.h * size))
    return plus, 1.0 - plus


def _labelled_clusters(fk_config: Configuration, site_region: SiteRegion, boundary: BoundaryCondition):
    boundary = _ising_boundary(site_region, boundary)
    graph = ClusterGraph(site_region, boundary)
    if graph.region != fk_config.region:
        raise ValueError("FK configuration does not live on the bond region of Λ for this boundary")
    stats = graph.clusters(fk_config.bits)
    if not stats.consistent:
        raise ValueError("FK configuration joins boundary sites with different η labels")
    fixed, free = [], []
    for c in stats.clusters:
        lam = [s for s in c.sites if s in site_region]
        if not lam:
            continue
        if c.boundary:
            fixed.append((lam, c.label))
        else:
            free.append(lam)
    return fixed, free


def labeling_law(fk_config: Configuration, site_region: SiteRegion, boundary: BoundaryCondition = FREE, params: Optional[IsingParams] = None) -> dict:
    """Exact law of cluster_labeling: spin mask -> probability."""
    fixed, free = _labelled_clusters(fk_config, site_region, boundary)
    base = 0
    for sites, label in fixed:
        if label == 1:
            for s in sites:
                base |= 1 << site_region.index[s]
    law = {base: 1.0}
    for sites in free:
        plus, minus = _label_weights(len(sites), params)
        plus_bits = sum(1 << site_region.index[s] for s in sites)
        nxt: dict = {}
        for mask, prob in law.items():
            if plus:
                nxt[mask | plus_bits] = nxt.get(mask | plus_bits, 0.0) + prob * plus
            if minus:
                nxt[mask] = nxt.get(mask, 0.0) + prob * minus
        law = nxt
    return law


def cluster_labeling(
    fk_config: Configuration,
    site_region: SiteRegion,
    boundary: BoundaryCondition,
    rng: np.random.Generator,
    params: Optional[IsingParams] = None,
) -> SpinConfiguration:
    """
    Label each interior cluster ±1 independently (∝ e^(beta h s label)),
    clusters touching ∂Λ inherit η.
    """
    fixed, free = _labelled_clusters(fk_config, site_region, boundary)
    bits = 0
    for sites, label in fixed:
        if label == 1:
            bits |= sum(1 << site_region.index[s] for s in sites)
    for sites in free:
        plus, _ = _label_weights(len(sites), params)
        if rng.random() < plus:
            bits |= sum(1 << site_region.index[s] for s in sites)
    return SpinConfiguration(site_region, bits)


def _agreement_bonds(spins: SpinConfiguration, boundary: BoundaryCondition) -> tuple[Region, int]:
    site_region = spins.site_region
    boundary = _ising_boundary(site_region, boundary)
    region = ising_bond_region(site_region, boundary)
    eta = boundary.eta_map
    value = lambda s: spins.spin(s) if s in site_region else eta[s]
    agree = 0
    for i, (x, y) in enumerate(region.bonds):
        if value(x) == value(y):
            agree |= 1 << i
    return region, agree


def percolation_law(spins: SpinConfiguration, p: float, boundary: BoundaryCondition = FREE) -> dict:
    """Exact law of percolation_construction: bond mask -> probability."""
    region, agree = _agreement_bonds(spins, boundary)
    bits = [i for i in range(len(region)) if agree >> i & 1]
    law = {0: 1.0}
    for i in bits:
        nxt: dict = {}
        for mask, prob in law.items():
            if p:
                nxt[mask | 1 << i] = nxt.get(mask | 1 << i, 0.0) + prob * p
            if p < 1:
                nxt[mask] = nxt.get(mask, 0.0) + prob * (1 - p)
        law = nxt
    return law


def percolation_construction(
    spins: SpinConfiguration, p: float, boundary: BoundaryCondition, rng: np.random.Generator
) -> Configuration:
    """Open each agreement bond of (ση) independently with probability p."""
    region, agree = _agreement_bonds(spins, boundary)
    draws = rng.random(len(region))
    bits = 0
    for i in range(len(region)):
        if agree >> i & 1 and draws[i] < p:
            bits |= 1 << i
    return Configuration(region, bits)


# =============================================================================
# Reference Values and Serialization
# =============================================================================

def critical_point(q: float, d: int = 2) -> Optional[float]:
    """p_c(q, 2) = √q / (1 + √q) where it is known; None elsewhere."""
    if d != 2:
        return None
    if q in (1, 2) or q >= _SELF_DUAL_Q_MIN:
        return math.sqrt(q) / (1.0 + math.sqrt(q))
    return None


def dump_model_spec(params, boundary: BoundaryCondition = FREE) -> str:
    """Model spec as JSON text; floats keep their shortest round-trip repr."""
    if isinstance(params, FkParams):
        data = {"model": "fk", **params.to_json()}
    elif isinstance(params, IsingParams):
        data = {"model": "ising", **params.to_json()}
    else:
        raise ValueError(f"Unknown parameter type: {type(params).__name__}")
    data["boundary"] = boundary.to_json()
    return json.dumps(data, sort_keys=True)


def load_model_spec(text_or_data) -> tuple:
    """Inverse of dump_model_spec: (params, boundary)."""
    data = json.loads(text_or_data) if isinstance(text_or_data, str) else dict(text_or_data)
    kind = data.get("model")
    boundary = BoundaryCondition.from_json(data.get("boundary") or {"kind": "free"})
    if kind == "fk":
        try:
            params = FkParams(
                p=data["p"],
                q=data["q"],
                fields=tuple(data.get("fields") or ()),
                stable_spin=int(data.get("stable_spin", 1)),
            )
        except KeyError as e:
            raise ValueError(f"Missing FK model key: {e}") from e
    elif kind == "ising":
        try:
            params = IsingParams(beta=data["beta"], h=data.get("h", 0.0))
        except KeyError as e:
            raise ValueError(f"Missing Ising model key: {e}") from e
    else:
        raise ValueError(f"Unknown model '{kind}' (expected 'fk' or 'ising')")
    return params, boundary
