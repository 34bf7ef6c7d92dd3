# operators/checks.py
"""
Verification Checks - fk-separation

Named exact checks that `main.py verify` runs from an experiment spec.
Each check reads its own entry of the experiment's "checks" list, falls back to
the experiment's model / region / boundary for anything it does not override,
and returns a CheckResult with the computed quantities and, on failure,
the counterexample verbatim.

Check types:
    bk                 P(A∘B) <= P(A)P(B) over catalog or listed pairs
    correlation        sign of P(A∘B) - P(A)P(B) for one pair
    edwards_sokal      cluster labeling / percolation reproduce their laws
    markov             Markov property for blocking partitions
    fkg                FKG lattice condition
    split_identities   split marginals and the two pushforward identities
    cij_chain          C00 ⊆ C10∩C01, C10∪C01 ⊆ C11, C11 = C11^A ∪ C11^B
    induction          lhs <= rhs + leaks along a filling order
    filling            filling sequences certified
    rsm                RSM coupling marginals, residual disjointness, bound
    connection         Markov inequality for connection-inducing regions
    mixing             ratio / additive mixing coefficients
    monotonicity       declared monotonicity and support of spec events

Usage:
    from operators.checks import run_checks

    results = run_checks(spec, exact_cap=None, threads=1)
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from config.experiments import ExperimentSpec, parse_boundary, parse_bonds, parse_model, parse_region
from config.settings import INDEPENDENCE_TOLERANCE, PROBABILITY_TOLERANCE
from operators.engine import (
    check_fkg_lattice,
    check_markov_all,
    check_markov_blocking,
    compose,
    enumerate_distribution,
    ising_conditional,
    probability,
    ratio_mixing_coefficient,
    tv_distance,
)
from operators.errors import FillingError, MarkovPropertyError
from operators.events import check_monotonicity, check_support, disjoint, increasing_catalog
from operators.filling import admissible_rectangle_targets, fill_circuit_bounded, fill_rectangle
from operators.lattice import BlockingPartition, Region, SiteRegion, make_site
from operators.models import (
    FREE,
    BoundaryCondition,
    FkParams,
    IsingParams,
    labeling_law,
    percolation_law,
)
from operators.split import (
    COUPLING_FAMILIES,
    Quintuple,
    build_se_joint,
    cij_classify,
    connection_inducing,
    rsm_coupling,
    run_filling_iteration,
)

logger = logging.getLogger(__name__)


# =============================================================================
# Results and Context
# =============================================================================

@dataclass
class CheckResult:
    name: str
    kind: str
    passed: bool
    quantities: dict = field(default_factory=dict)
    counterexample: Optional[dict] = None
    error: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "type": self.kind,
            "passed": self.passed,
            "quantities": self.quantities,
            "counterexample": self.counterexample,
            "error": self.error,
        }


@dataclass
class CheckContext:
    """Spec-level defaults plus the CLI knobs every check shares."""

    spec: ExperimentSpec
    exact_cap: Optional[int] = None
    threads: int = 1

    def params(self, cfg: dict):
        if "model" in cfg:
            return parse_model(cfg["model"], path=f"{cfg['_path']}.model", exact=self.spec.exact_arithmetic)
        if self.spec.params is None:
            raise ValueError(f"{cfg['_path']}: no model given and the experiment has none")
        return self.spec.params

    def param_grid(self, cfg: dict) -> list:
        """Every FkParams of a {"p": [...], "q": [...]} sweep, else the single model."""
        sweep = cfg.get("sweep")
        if not sweep:
            return [self.params(cfg)]
        base = self.params(cfg) if ("model" in cfg or self.spec.params is not None) else None
        ps = sweep.get("p", [base.p] if base is not None else [])
        qs = sweep.get("q", [base.q] if base is not None else [])
        if not ps or not qs:
            raise ValueError(f"{cfg['_path']}.sweep: needs p and q values")
        return [FkParams(p=p, q=q) for q in qs for p in ps]

    def regions(self, cfg: dict) -> list:
        if "regions" in cfg:
            return [parse_region(r, path=f"{cfg['_path']}.regions[{i}]") for i, r in enumerate(cfg["regions"])]
        if "region" in cfg:
            return [parse_region(cfg["region"], path=f"{cfg['_path']}.region")]
        if self.spec.region is None:
            raise ValueError(f"{cfg['_path']}: no region given and the experiment has none")
        return [self.spec.region]

    def boundaries(self, cfg: dict, region) -> list:
        if "boundaries" in cfg:
            return [parse_boundary(b, region, path=f"{cfg['_path']}.boundaries[{i}]") for i, b in enumerate(cfg["boundaries"])]
        if "boundary" in cfg:
            return [parse_boundary(cfg["boundary"], region, path=f"{cfg['_path']}.boundary")]
        return [self.spec.boundary]

    def distribution(self, params, region, boundary):
        exact = self.spec.exact_arithmetic and isinstance(params, FkParams) and not params.has_fields
        return enumerate_distribution(params, region, boundary, exact=exact, cap=self.exact_cap, threads=self.threads)

    def event(self, name: str):
        return self.spec.events[name]

    def pairs(self, cfg: dict) -> list:
        """[(name_a, name_b)] from cfg["pairs"], defaulting to (A, B)."""
        raw = cfg.get("pairs", [["A", "B"]])
        return [(a, b) for a, b in raw]


def _bonds_json(bonds) -> list:
    return [[list(x), list(y)] for x, y in bonds]


def _where(region, boundary, params) -> dict:
    return {
        "region": region.to_json() if isinstance(region, Region) else [list(s) for s in region.sites],
        "boundary": boundary.to_json(),
        "model": params.to_json() if params is not None else None,
    }


# =============================================================================
# Correlation Inequalities
# =============================================================================

def check_bk(ctx: CheckContext, cfg: dict) -> CheckResult:
    """P(A∘B) <= P(A)P(B) for every ordered pair of catalog (or listed) events."""
    tol = cfg.get("tolerance", PROBABILITY_TOLERANCE)
    worst, worst_at, count = math.inf, None, 0
    for params in ctx.param_grid(cfg):
        for region in ctx.regions(cfg):
            for boundary in ctx.boundaries(cfg, region):
                dist = ctx.distribution(params, region, boundary)
                if cfg.get("pairs", "catalog") == "catalog":
                    events = increasing_catalog(region, cfg.get("max_threshold", 2))
                    index_pairs = list(itertools.combinations_with_replacement(range(len(events)), 2))
                    symmetric = True
                else:
                    names = sorted({n for pair in ctx.pairs(cfg) for n in pair})
                    events = [ctx.event(n) for n in names]
                    index_pairs = [(names.index(a), names.index(b)) for a, b in ctx.pairs(cfg)]
                    symmetric = False
                marg = [probability(dist, ev) for ev in events]
                for i, j in index_pairs:
                    p_ab = probability(dist, disjoint(events[i], events[j]))
                    slack = float(marg[i] * marg[j] - p_ab)
                    # A∘B = B∘A
                    count += 2 if symmetric and i != j else 1
                    if slack < worst:
                        worst = slack
                        worst_at = {
                            "A": events[i].name,
                            "B": events[j].name,
                            "p_disjoint": float(p_ab),
                            "p_A": float(marg[i]),
                            "p_B": float(marg[j]),
                            **_where(region, boundary, params),
                        }
    passed = worst >= -tol
    logger.info(f"[CHECK] bk: {count} ordered pairs, min slack {worst:.3g}")
    return CheckResult(
        cfg["name"], "bk", passed,
        {"ordered_pairs": count, "min_slack": worst, "tightest": worst_at},
        counterexample=None if passed else worst_at,
    )


def check_correlation(ctx: CheckContext, cfg: dict) -> CheckResult:
    """Sign of P(A∘B) - P(A)P(B): expect "positive" or "nonpositive"."""
    expect = cfg.get("expect", "nonpositive")
    if expect not in ("positive", "nonpositive"):
        raise ValueError(f"{cfg['_path']}.expect: 'positive' or 'nonpositive', got {expect!r}")
    (name_a, name_b), = ctx.pairs(cfg)[:1]
    a, b = ctx.event(name_a), ctx.event(name_b)
    rows = []
    passed = True
    for params in ctx.param_grid(cfg):
        for region in ctx.regions(cfg):
            for boundary in ctx.boundaries(cfg, region):
                dist = ctx.distribution(params, region, boundary)
                p_a, p_b = probability(dist, a), probability(dist, b)
                p_ab = probability(dist, disjoint(a, b))
                gap = p_ab - p_a * p_b
                ok = gap > 0 if expect == "positive" else gap <= PROBABILITY_TOLERANCE
                passed &= bool(ok)
                rows.append({
                    "gap": float(gap), "p_disjoint": float(p_ab), "p_A": float(p_a), "p_B": float(p_b),
                    "ok": bool(ok), **_where(region, boundary, params),
                })
    logger.info(f"[CHECK] correlation {name_a}/{name_b}: gaps {[round(r['gap'], 6) for r in rows]}")
    return CheckResult(
        cfg["name"], "correlation", passed, {"expect": expect, "runs": rows},
        counterexample=None if passed else next(r for r in rows if not r["ok"]),
    )


def check_fkg(ctx: CheckContext, cfg: dict) -> CheckResult:
    """FKG lattice condition; expect "holds" (default) or "fails"."""
    expect = cfg.get("expect", "holds")
    rows, passed, witness = [], True, None
    for params in ctx.param_grid(cfg):
        for region in ctx.regions(cfg):
            for boundary in ctx.boundaries(cfg, region):
                report = check_fkg_lattice(ctx.distribution(params, region, boundary))
                ok = report.holds == (expect == "holds")
                passed &= ok
                row = {**report.to_json(), "ok": ok, **_where(region, boundary, params)}
                rows.append(row)
                if not report.holds and witness is None:
                    witness = row
    return CheckResult(
        cfg["name"], "fkg", passed, {"expect": expect, "runs": rows},
        counterexample=witness if (not passed or expect == "fails") else None,
    )


# =============================================================================
# Edwards-Sokal
# =============================================================================

def _site_boundary(kind, region: SiteRegion, path: str) -> BoundaryCondition:
    """free / plus / minus / wired (= plus) / alternating η on ∂Λ."""
    if kind == "alternating":
        return BoundaryCondition.site({s: 1 if sum(s) % 2 == 0 else -1 for s in region.boundary_sites})
    if kind == "wired":
        return BoundaryCondition.constant(region, 1)
    return parse_boundary(kind, region, path=path)


def _covariance_rows(betas, tol: float) -> list:
    """Single bond: E σ_x σ_y and P(x ↔ y) both equal (e^β - 1)/(e^β + 1)."""
    pair = SiteRegion([(0, 0), (1, 0)])
    rows = []
    for beta in betas:
        ising = IsingParams(beta=beta)
        spins = enumerate_distribution(ising, pair, FREE)
        corr = sum(float(p) * (1 if (i & 1) == (i >> 1 & 1) else -1) for i, p in enumerate(spins.probabilities))
        fk = enumerate_distribution(FkParams.from_ising(ising), pair, FREE)
        connected = float(fk.probabilities[1])
        closed_form = math.expm1(beta) / (math.exp(beta) + 1)
        rows.append({
            "beta": beta,
            "spin_correlation": corr,
            "connection_probability": connected,
            "closed_form": closed_form,
            "ok": abs(corr - closed_form) <= tol and abs(connected - closed_form) <= tol,
        })
    return rows


def check_edwards_sokal(ctx: CheckContext, cfg: dict) -> CheckResult:
    """
    cluster_labeling pushes the FK law to the Ising law and
    percolation_construction pushes the Ising law back, in total variation.
    """
    tol = cfg.get("tolerance", PROBABILITY_TOLERANCE)
    regions = ctx.regions(cfg)
    kinds = cfg.get("boundaries", ["free", "plus", "minus", "alternating"])
    betas = cfg.get("betas", [0.5])
    fields = cfg.get("fields", [0.0])
    rows, worst = [], 0.0
    for region in regions:
        if not isinstance(region, SiteRegion):
            raise ValueError(f"{cfg['_path']}: Edwards-Sokal checks need site regions")
        for i, kind in enumerate(kinds):
            boundary = _site_boundary(kind, region, f"{cfg['_path']}.boundaries[{i}]")
            for beta, h in itertools.product(betas, fields):
                ising = IsingParams(beta=beta, h=h)
                fk_params = FkParams.from_ising(ising)
                fk = ctx.distribution(fk_params, region, boundary)
                spins = ctx.distribution(ising, region, boundary)
                labelled = compose(fk, lambda c: labeling_law(c, region, boundary, ising), region)
                percolated = compose(spins, lambda s: percolation_law(s, fk_params.p, boundary), fk.region)
                tv_label = float(tv_distance(labelled, spins))
                tv_perc = float(tv_distance(percolated, fk))
                worst = max(worst, tv_label, tv_perc)
                rows.append({
                    "sites": len(region), "boundary": kind, "beta": beta, "h": h,
                    "tv_labeling": tv_label, "tv_percolation": tv_perc,
                    "ok": tv_label <= tol and tv_perc <= tol,
                })
    covariance = _covariance_rows(cfg.get("covariance_betas", []), tol)
    passed = all(r["ok"] for r in rows) and all(r["ok"] for r in covariance)
    logger.info(f"[CHECK] edwards_sokal: {len(rows)} laws, worst TV {worst:.3g}")
    failure = next((r for r in rows + covariance if not r["ok"]), None)
    return CheckResult(
        cfg["name"], "edwards_sokal", passed,
        {"max_tv": worst, "laws": rows, "covariance": covariance},
        counterexample=failure,
    )


# =============================================================================
# Markov Property
# =============================================================================

def _partition(cfg: dict, region: Region) -> Optional[BlockingPartition]:
    spec = cfg.get("partition", "all")
    if spec == "all":
        return None
    path = f"{cfg['_path']}.partition"
    x = parse_bonds(spec.get("x", []), f"{path}.x")
    z = parse_bonds(spec.get("z", []), f"{path}.z")
    if "y" in spec:
        y = parse_bonds(spec["y"], f"{path}.y")
    else:
        y = [b for b in region.bonds if b not in set(x) | set(z)]
    return BlockingPartition.of(x, y, z)


def check_markov(ctx: CheckContext, cfg: dict) -> CheckResult:
    """
    Conditional independence of X and Z given Y all closed, for one
    partition or all of them; expect "holds" (default) or "fails" with a
    gap of at least min_gap.
    """
    expect = cfg.get("expect", "holds")
    min_gap = cfg.get("min_gap", 0.0)
    tol = cfg.get("tolerance", INDEPENDENCE_TOLERANCE)
    rows, passed, witness = [], True, None
    for params in ctx.param_grid(cfg):
        for region in ctx.regions(cfg):
            partition = _partition(cfg, region)
            for boundary in ctx.boundaries(cfg, region):
                dist = ctx.distribution(params, region, boundary)
                if partition is None:
                    report = check_markov_all(dist, tolerance=tol)
                else:
                    report = check_markov_blocking(dist, partition, tolerance=tol)
                if expect == "holds":
                    ok = report.holds
                else:
                    ok = not report.holds and float(report.gap) >= min_gap
                passed &= ok
                row = {**report.to_json(), "ok": ok, **_where(region, boundary, params)}
                rows.append(row)
                if not report.holds and witness is None:
                    witness = row
                logger.info(
                    f"[CHECK] markov {boundary.kind} ({len(region)} bonds): "
                    f"{'holds' if report.holds else 'fails'}, gap {float(report.gap):.3g}"
                )
    return CheckResult(
        cfg["name"], "markov", passed,
        {"expect": expect, "runs": rows, "max_gap": max((r["gap"] for r in rows), default=0.0)},
        counterexample=witness,
    )


# =============================================================================
# Split Measures
# =============================================================================

def _s_sets(cfg: dict, region: Region) -> list:
    raw = cfg.get("s_sets", "all")
    if raw == "all":
        bonds = region.bonds
        return [list(c) for k in range(len(bonds)) for c in itertools.combinations(bonds, k)]
    return [parse_bonds(s, f"{cfg['_path']}.s_sets[{i}]") for i, s in enumerate(raw)]


def _families(cfg: dict) -> list:
    families = cfg.get("families", ["fkg"])
    for f in families:
        if f not in COUPLING_FAMILIES:
            raise ValueError(f"{cfg['_path']}.families: unknown family {f!r} (expected one of {COUPLING_FAMILIES})")
    return families


def check_split_identities(ctx: CheckContext, cfg: dict) -> CheckResult:
    """Both layer marginals of every split equal the base law; both pushforwards of 𝕡_{𝒮,e} match."""
    worst_plus = worst_base = 0.0
    joints = 0
    failure = None
    for params in ctx.param_grid(cfg):
        for region in ctx.regions(cfg):
            for boundary in ctx.boundaries(cfg, region):
                dist = ctx.distribution(params, region, boundary)
                for s_set in _s_sets(cfg, region):
                    for e in region.bonds:
                        if e in s_set:
                            continue
                        for family in _families(cfg):
                            try:
                                joint = build_se_joint(dist, s_set, e, family)
                            except (RuntimeError, MarkovPropertyError) as err:
                                failure = failure or {
                                    "S": _bonds_json(s_set), "e": _bonds_json([e])[0], "family": family,
                                    "error": str(err), **_where(region, boundary, params),
                                }
                                continue
                            joints += 1
                            worst_plus = max(worst_plus, float(joint.identity_gaps[0]))
                            worst_base = max(worst_base, float(joint.identity_gaps[1]))
    passed = failure is None
    logger.info(f"[CHECK] split identities: {joints} joints, gaps {worst_plus:.3g} / {worst_base:.3g}")
    return CheckResult(
        cfg["name"], "split_identities", passed,
        {"joints": joints, "max_gap_split_plus": worst_plus, "max_gap_split": worst_base},
        counterexample=failure,
    )


def check_cij_chain(ctx: CheckContext, cfg: dict) -> CheckResult:
    """Pointwise C_ij inclusions over every quintuple in the support of 𝕡_{𝒮,e}."""
    r_values = cfg.get("r_values", ctx.spec.r_values or [1])
    points = chain_bad = split_bad = 0
    failure = None
    for params in ctx.param_grid(cfg):
        for region in ctx.regions(cfg):
            for boundary in ctx.boundaries(cfg, region):
                dist = ctx.distribution(params, region, boundary)
                for (name_a, name_b), r, family in itertools.product(ctx.pairs(cfg), r_values, _families(cfg)):
                    a, b = ctx.event(name_a), ctx.event(name_b)
                    for s_set in _s_sets(cfg, region):
                        for e in region.bonds:
                            if e in s_set:
                                continue
                            joint = build_se_joint(dist, s_set, e, family)
                            for atom, a_pair, b_pair, _ in joint.quintuples():
                                q = Quintuple(atom.u_code, a_pair[0], a_pair[1], b_pair[0], b_pair[1])
                                flags = cij_classify(dist, a, b, r, s_set, e, q)
                                points += 1
                                bad = not flags.chain_holds or not flags.split_holds
                                chain_bad += not flags.chain_holds
                                split_bad += not flags.split_holds
                                if bad and failure is None:
                                    failure = {
                                        "A": name_a, "B": name_b, "r": r, "family": family,
                                        "S": _bonds_json(s_set), "e": _bonds_json([e])[0],
                                        "quintuple": [q.u, q.a_top, q.a_bottom, q.b_top, q.b_bottom],
                                        "flags": flags.to_json(), **_where(region, boundary, params),
                                    }
    passed = chain_bad == 0 and split_bad == 0
    logger.info(f"[CHECK] C_ij chain: {points} points, {chain_bad} chain / {split_bad} split violations")
    return CheckResult(
        cfg["name"], "cij_chain", passed,
        {"points": points, "chain_violations": chain_bad, "split_violations": split_bad},
        counterexample=failure,
    )


def _order(cfg: dict, region: Region) -> list:
    raw = cfg.get("order", "region")
    if raw == "region":
        return list(region.bonds)
    return parse_bonds(raw, f"{cfg['_path']}.order")


def check_induction(ctx: CheckContext, cfg: dict) -> CheckResult:
    """lhs <= rhs + leak_A + leak_B at every step and the telescoped bound, along a filling order."""
    r_values = cfg.get("r_values", ctx.spec.r_values or [1])
    runs, failure = [], None
    for params in ctx.param_grid(cfg):
        for region in ctx.regions(cfg):
            order = _order(cfg, region)
            for boundary in ctx.boundaries(cfg, region):
                dist = ctx.distribution(params, region, boundary)
                for (name_a, name_b), r, family in itertools.product(ctx.pairs(cfg), r_values, _families(cfg)):
                    report = run_filling_iteration(dist, ctx.event(name_a), ctx.event(name_b), r, order, family)
                    slacks = [s.slack for s in report.steps]
                    row = {
                        "A": name_a, "B": name_b, "r": r, "family": family,
                        "p_sep": float(report.p_sep),
                        "p_all_split": None if report.p_all_split is None else float(report.p_all_split),
                        "leak_total": float(report.leak_total),
                        "min_step_slack": min(slacks) if slacks else None,
                        "max_step_ratio": max((s.ratio for s in report.steps), default=None),
                        "holds": report.holds,
                        "settled_by": report.settled_by,
                        **_where(region, boundary, params),
                    }
                    runs.append(row)
                    if not report.holds and failure is None:
                        failure = {**row, "iteration": report.to_json()}
    passed = failure is None
    logger.info(f"[CHECK] induction: {len(runs)} iterations, {'all hold' if passed else 'failure found'}")
    return CheckResult(cfg["name"], "induction", passed, {"runs": runs}, counterexample=failure)


# =============================================================================
# Filling
# =============================================================================

def check_filling(ctx: CheckContext, cfg: dict) -> CheckResult:
    """
    family "rectangle": every listed (or every admissible) target of each
    rectangle certified; family "slc": every listed center certified.
    """
    family = cfg.get("family", "rectangle")
    runs, failure = [], None
    for params_or_none in ([ctx.params(cfg)] if cfg.get("measure") else [None]):
        for region in ctx.regions(cfg):
            dist = ctx.distribution(params_or_none, region, FREE) if params_or_none is not None else None
            if family == "rectangle":
                raw = cfg.get("targets", "all")
                targets = admissible_rectangle_targets(region) if raw == "all" else [
                    parse_bonds(t, f"{cfg['_path']}.targets[{i}]") for i, t in enumerate(raw)
                ]
                jobs = [(t, lambda t=t: fill_rectangle(region, t, cfg.get("c", 2.0), cfg.get("r", 2), dist=dist)) for t in targets]
            elif family == "slc":
                centers = cfg.get("centers") or [list(region.vertices[0])]
                jobs = [
                    (c, lambda c=c: fill_circuit_bounded(region, make_site(c), cfg.get("radius", 1), cfg.get("c", 2.0), cfg.get("r", 2), dist=dist))
                    for c in centers
                ]
            else:
                raise ValueError(f"{cfg['_path']}.family: unknown family {family!r}")
            for label, job in jobs:
                try:
                    seq = job()
                    ok, reason = seq.certified, next((s.reason for s in seq.steps if not s.ok), "")
                    steps = len(seq.order)
                except FillingError as err:
                    ok, reason, steps = False, str(err), 0
                row = {"family": family, "bonds": len(region), "steps": steps, "certified": ok, "reason": reason}
                runs.append(row)
                if not ok and failure is None:
                    failure = {**row, "target": label if family == "slc" else _bonds_json(label), "region": region.to_json()}
    passed = failure is None and bool(runs)
    logger.info(f"[CHECK] filling ({family}): {sum(r['certified'] for r in runs)}/{len(runs)} certified")
    return CheckResult(cfg["name"], "filling", passed, {"sequences": len(runs), "runs": runs}, counterexample=failure)


# =============================================================================
# Couplings and Mixing
# =============================================================================

def check_rsm(ctx: CheckContext, cfg: dict) -> CheckResult:
    """
    On 1 x n Ising chains: pin the first site to + and to -, couple the two
    conditional measures through the last site, and check the marginals,
    min(τ, τ') = 0 and the per-far-configuration disagreement bound.
    """
    tol = cfg.get("tolerance", PROBABILITY_TOLERANCE)
    rows, failure = [], None
    for n, beta, h in itertools.product(cfg.get("lengths", [3, 4]), cfg.get("betas", [0.3, 1.0]), cfg.get("fields", [0.0, 0.5])):
        chain = SiteRegion([(i, 0) for i in range(n)])
        delta = [(0, 0)]
        far = [(n - 1, 0)]
        ising = IsingParams(beta=beta, h=h)
        mu_plus = ising_conditional(ising, chain, FREE, delta, {(0, 0): 1}, cap=ctx.exact_cap)
        mu_minus = ising_conditional(ising, chain, FREE, delta, {(0, 0): -1}, cap=ctx.exact_cap)
        rsm = rsm_coupling(mu_plus, mu_minus, far)
        marginal_error = float(rsm.coupling.marginal_error())
        ok = marginal_error <= tol and rsm.min0_gap <= tol and rsm.bound_holds
        row = {"length": n, "beta": beta, "h": h, **rsm.to_json(), "ok": ok}
        rows.append(row)
        if not ok and failure is None:
            failure = row
    logger.info(f"[CHECK] rsm: {sum(r['ok'] for r in rows)}/{len(rows)} chains pass")
    return CheckResult(cfg["name"], "rsm", failure is None, {"runs": rows}, counterexample=failure)


def check_connection(ctx: CheckContext, cfg: dict) -> CheckResult:
    """P(𝒬_x connection-inducing) <= E φ_x / (C e^{-λm/2})."""
    x = make_site(cfg.get("x", [0, 0]))
    m = int(cfg.get("m", 1))
    rows, failure = [], None
    for params in ctx.param_grid(cfg):
        for region in ctx.regions(cfg):
            for boundary in ctx.boundaries(cfg, region):
                dist = ctx.distribution(params, region, boundary)
                report = connection_inducing(dist, x, m, cfg.get("C", 1.0), cfg.get("lambda", 1.0))
                row = {
                    "m": m, "threshold": report.threshold, "expected_phi": report.expected_phi,
                    "p_inducing": report.p_inducing, "markov_bound": report.markov_bound,
                    "holds": report.holds, **_where(region, boundary, params),
                }
                rows.append(row)
                if not report.holds and failure is None:
                    failure = {**row, "detail": report.to_json()}
    return CheckResult(cfg["name"], "connection", failure is None, {"runs": rows}, counterexample=failure)


def check_mixing(ctx: CheckContext, cfg: dict) -> CheckResult:
    """Ratio and additive mixing between two bond sets; passes unless above max_ratio."""
    e_set = parse_bonds(cfg.get("e_set", []), f"{cfg['_path']}.e_set")
    f_set = parse_bonds(cfg.get("f_set", []), f"{cfg['_path']}.f_set")
    bound = cfg.get("max_ratio")
    rows, passed = [], True
    for params in ctx.param_grid(cfg):
        for region in ctx.regions(cfg):
            for boundary in ctx.boundaries(cfg, region):
                report = ratio_mixing_coefficient(
                    ctx.distribution(params, region, boundary), e_set, f_set, decay_rate=cfg.get("decay_rate")
                )
                ok = bound is None or float(report.max_ratio_deviation) <= bound
                passed &= ok
                rows.append({**report.to_json(), "ok": ok, **_where(region, boundary, params)})
    return CheckResult(cfg["name"], "mixing", passed, {"runs": rows})


def check_events(ctx: CheckContext, cfg: dict) -> CheckResult:
    """Declared monotonicity and support of the experiment's events on each region."""
    names = cfg.get("events") or sorted(ctx.spec.events)
    rows, failure = [], None
    for region in ctx.regions(cfg):
        for name in names:
            event = ctx.event(name)
            mono = check_monotonicity(event, region, seed=ctx.spec.seed)
            supp = check_support(event, region, seed=ctx.spec.seed)
            row = {
                "event": name, "monotonicity": event.monotonicity,
                "monotonicity_check": mono.to_json(), "support_check": supp.to_json(),
                "ok": mono.holds and supp.holds,
            }
            rows.append(row)
            if not row["ok"] and failure is None:
                failure = {**row, "region": region.to_json()}
    return CheckResult(cfg["name"], "monotonicity", failure is None, {"events": rows}, counterexample=failure)


# =============================================================================
# Dispatch
# =============================================================================

CHECKS: dict[str, Callable[[CheckContext, dict], CheckResult]] = {
    "bk": check_bk,
    "correlation": check_correlation,
    "edwards_sokal": check_edwards_sokal,
    "markov": check_markov,
    "fkg": check_fkg,
    "split_identities": check_split_identities,
    "cij_chain": check_cij_chain,
    "induction": check_induction,
    "filling": check_filling,
    "rsm": check_rsm,
    "connection": check_connection,
    "mixing": check_mixing,
    "monotonicity": check_events,
}


def run_check(ctx: CheckContext, index: int, cfg: dict) -> CheckResult:
    kind = cfg["type"]
    fn = CHECKS.get(kind)
    if fn is None:
        raise ValueError(f"$.checks[{index}].type: unknown check {kind!r} (expected one of {sorted(CHECKS)})")
    cfg = {**cfg, "_path": f"$.checks[{index}]", "name": cfg.get("name", f"{kind}_{index}")}
    try:
        return fn(ctx, cfg)
    except MarkovPropertyError as err:
        # a coupling precondition failing is a check failure, not a usage error
        return CheckResult(cfg["name"], kind, False, counterexample={"witness": err.witness}, error=str(err))


def run_checks(spec: ExperimentSpec, exact_cap: Optional[int] = None, threads: int = 1) -> list[CheckResult]:
    """Run every check of an exact-mode spec in order."""
    ctx = CheckContext(spec, exact_cap, threads)
    results = []
    for i, cfg in enumerate(spec.checks):
        result = run_check(ctx, i, cfg)
        logger.info(f"[CHECK] {result.name}: {'pass' if result.passed else 'FAIL'}")
        results.append(result)
    return results
