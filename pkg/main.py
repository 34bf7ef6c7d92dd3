# main.py
"""
fk-separation Batch Runner

Runs bundled or user-written experiment specs through one of three pipelines.

Pipelines:
    verify    exact checks on enumerated tables (mode "exact")
    estimate  Monte Carlo decay fits and separated-occurrence ratios (mode "sample")
    fill      filling sequences with per-step certificates (optionally rendered)

Usage:
    python main.py --list-experiments
    python main.py verify --spec bk_q1
    python main.py verify --spec config/specs/fig1_markov.json --out ./runs
    python main.py estimate --spec decay_q1 --seed 7 --threads 4
    python main.py fill --spec fill_rectangle_4x4 --render

Exit codes:
    0  every check passed
    1  a check (or an estimate expectation, or a filling certificate) failed
    2  usage error, malformed spec, or an exact table above the cap

Environment Variables:
    FKSEP_OUTPUT_DIR - Default output directory (default: ./out)
"""

import argparse
import logging
import sys
import time
from datetime import datetime
from typing import Optional

from config.experiments import (
    EXPERIMENTS,
    ExperimentSpec,
    get_experiment_ids_by_tier,
    load_experiment,
    parse_bonds,
)
from operators.checks import run_checks
from operators.engine import enumerate_distribution
from operators.errors import SpecError
from operators.filling import fill_circuit_bounded, fill_rectangle
from operators.lattice import bonds_in_box, make_site
from operators.sampler import ChainSpec, estimate_events, fit_decay, run_chain, sep_occ_ladder, trends_toward_one
from storage.reports import ReportStorage
from utils.render import ConfigurationRenderer

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


# =============================================================================
# Command Line Arguments
# =============================================================================

def parse_args(argv: Optional[list] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        description="fk-separation batch runner",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__.split("Usage:")[1].split("Exit codes:")[0],
    )
    parser.add_argument(
        "--list-experiments",
        action="store_true",
        help="List all bundled experiment specs and exit",
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--spec",
        required=True,
        help="Spec file path or bundled experiment ID (e.g. bk_q1)",
    )
    common.add_argument(
        "--out",
        default=None,
        help="Output directory (default: $FKSEP_OUTPUT_DIR or ./out)",
    )
    common.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Override the experiment's seed",
    )
    common.add_argument(
        "--threads",
        type=int,
        default=1,
        help="Worker threads / processes (default: 1)",
    )
    common.add_argument(
        "--exact-cap",
        type=int,
        default=None,
        help="Largest region enumerated exactly (bonds or sites)",
    )
    common.add_argument(
        "--verbose",
        action="store_true",
        help="Debug logging",
    )

    subparsers = parser.add_subparsers(dest="command")
    subparsers.add_parser("verify", parents=[common], help="Run the exact checks of a spec")
    subparsers.add_parser("estimate", parents=[common], help="Run the Monte Carlo estimates of a spec")
    fill = subparsers.add_parser("fill", parents=[common], help="Build a filling sequence")
    fill.add_argument(
        "--render",
        action="store_true",
        help="Also write one PNG frame per filling step",
    )

    args = parser.parse_args(argv)
    if not args.list_experiments and args.command is None:
        parser.error("a command is required (verify, estimate or fill)")
    if args.command and args.threads < 1:
        parser.error(f"--threads must be at least 1, got {args.threads}")
    return args


# =============================================================================
# Helper Functions
# =============================================================================

def _banner(title: str, spec: ExperimentSpec, command: str):
    print(f"\n{'=' * 60}")
    print(f"[START] {title}")
    print(f"{'=' * 60}")
    print(f"[DATE] {datetime.now().strftime('%B %d, %Y at %H:%M')}")
    print(f"[SPEC] {spec.name} ({spec.source})")
    print(f"[MODE] {spec.mode} / {command}")
    print(f"[SEED] {spec.seed}")
    print(f"{'=' * 60}")


def _done(status: str, storage: ReportStorage, elapsed: float):
    print(f"\n{'=' * 60}")
    print(f"[DONE] {status}")
    print(f"   Output: {storage.base_path}")
    print(f"   Elapsed: {elapsed:.1f}s")
    print(f"{'=' * 60}")


def _require_mode(spec: ExperimentSpec, mode: str, command: str):
    if spec.mode != mode:
        raise SpecError(f"$.mode: '{command}' needs mode '{mode}', the experiment has '{spec.mode}'")


def _chain_spec(spec: ExperimentSpec, cfg: dict) -> ChainSpec:
    return ChainSpec(
        params=spec.params,
        region=spec.region,
        boundary=spec.boundary,
        sweeps=cfg.get("sweeps", 10_000),
        burn_in=cfg.get("burn_in", 1_000),
        thinning=cfg.get("thinning", 1),
        seed=spec.seed,
        algorithm=cfg.get("algorithm", "heat_bath"),
        chains=cfg.get("chains", 1),
    )


def _event(spec: ExperimentSpec, name: str, path: str):
    if name not in spec.events:
        raise SpecError(f"{path}: unknown event '{name}'")
    return spec.events[name]


# =============================================================================
# Pipelines
# =============================================================================

def run_verify(spec: ExperimentSpec, storage: ReportStorage, exact_cap: Optional[int] = None, threads: int = 1) -> bool:
    """
    Run every check of an exact-mode spec.

    Returns:
        True when all checks pass
    """
    _require_mode(spec, "exact", "verify")

    print(f"\n[STEP 1] Running {len(spec.checks)} checks...")
    results = run_checks(spec, exact_cap=exact_cap, threads=threads)
    for result in results:
        tag = "[OK]" if result.passed else "[FAIL]"
        print(f"   {tag} {result.name} ({result.kind})")
        if result.error:
            print(f"      {result.error}")

    print("\n[STEP 2] Writing report...")
    passed = all(r.passed for r in results)
    report = {
        "spec": spec.to_json(),
        "passed": passed,
        "checks": [r.to_json() for r in results],
    }
    path = storage.save_report("verify", report, description=f"{len(results)} checks")
    print(f"   [REPORT] {path}")
    storage.save_table(
        "checks",
        ["name", "type", "passed"],
        ([r.name, r.kind, r.passed] for r in results),
    )

    if spec.outputs.get("distribution") and spec.params is not None and spec.region is not None:
        dist = enumerate_distribution(spec.params, spec.region, spec.boundary, cap=exact_cap, threads=threads)
        storage.save_distribution("base", dist, description="measure of the experiment's model on its region")

    print(f"\n   [STATS] {sum(r.passed for r in results)}/{len(results)} checks passed")
    return passed


def _run_decay(spec: ExperimentSpec, storage: ReportStorage, cfg: dict, path: str, threads: int) -> tuple[dict, bool]:
    if "source" not in cfg or "targets" not in cfg:
        raise SpecError(f"{path}: a decay estimate needs 'source' and 'targets'")
    fit = fit_decay(_chain_spec(spec, cfg), cfg["source"], cfg["targets"], dual=cfg.get("dual", False), threads=threads)
    storage.save_table(
        cfg["name"],
        ["distance", "estimate", "stderr", "ci_lo", "ci_hi", "binom_lo", "binom_hi"],
        (
            (*row, *(fit.binomial_ci[i] if i < len(fit.binomial_ci) else (None, None)))
            for i, row in enumerate(fit.rows())
        ),
    )
    ok = True
    expected = cfg.get("expect_lambda")
    if expected is not None:
        lo, hi = fit.ci
        ok = bool(lo <= expected <= hi)
    print(f"   [FIT] lambda = {fit.fitted_lambda:.4f}  CI [{fit.ci[0]:.4f}, {fit.ci[1]:.4f}]")
    return {"fit": fit.to_json(), "expect_lambda": expected, "ok": ok}, ok


def _ladder_rungs(spec: ExperimentSpec, cfg: dict, path: str) -> list:
    """(r, A, B) per rung: explicit "rungs", or one pair of events over r_values."""
    if "rungs" in cfg:
        if not cfg["rungs"]:
            raise SpecError(f"{path}.rungs: empty ladder")
        rungs = []
        for i, rung in enumerate(cfg["rungs"]):
            where = f"{path}.rungs[{i}]"
            missing = {"r", "A", "B"} - set(rung)
            if missing:
                raise SpecError(f"{where}: missing {sorted(missing)}")
            rungs.append((float(rung["r"]), _event(spec, rung["A"], f"{where}.A"), _event(spec, rung["B"], f"{where}.B")))
        return rungs
    a = _event(spec, cfg.get("A", "A"), f"{path}.A")
    b = _event(spec, cfg.get("B", "B"), f"{path}.B")
    r_values = cfg.get("r_values", spec.r_values)
    if not r_values:
        raise SpecError(f"{path}: no r_values in the estimate or the experiment")
    return [(r, a, b) for r in r_values]


def _run_sep_ratio(spec: ExperimentSpec, storage: ReportStorage, cfg: dict, path: str, threads: int) -> tuple[dict, bool]:
    rows = sep_occ_ladder(_chain_spec(spec, cfg), _ladder_rungs(spec, cfg, path), threads=threads)
    storage.save_table(
        cfg["name"],
        ["r", "ratio", "stderr", "ci_lo", "ci_hi", "p_sep", "p_A", "p_B", "flagged"],
        ([row.r, row.ratio, row.stderr, row.ci_lo, row.ci_hi, row.p_sep, row.p_a, row.p_b, row.flagged] for row in rows),
    )
    ok = True
    if cfg.get("expect") == "nonincreasing":
        ok = trends_toward_one(rows)
    for row in rows:
        flag = " (flagged)" if row.flagged else ""
        print(f"   [RATIO] r = {row.r:g}: {row.ratio:.4f} +- {row.stderr:.4f}{flag}")
    return {"rows": [row.to_json() for row in rows], "expect": cfg.get("expect"), "ok": ok}, ok


def _run_event_estimates(spec: ExperimentSpec, storage: ReportStorage, cfg: dict, path: str, threads: int) -> tuple[dict, bool]:
    names = cfg.get("events") or sorted(spec.events)
    events = [_event(spec, n, f"{path}.events") for n in names]
    estimates = estimate_events(_chain_spec(spec, cfg), events, threads=threads)
    storage.save_table(
        cfg["name"],
        ["event", "mean", "stderr", "ci_lo", "ci_hi", "n"],
        ([n, e.mean, e.stderr, e.ci_lo, e.ci_hi, e.n] for n, e in zip(names, estimates)),
    )
    return {"estimates": {n: e.to_json() for n, e in zip(names, estimates)}, "ok": True}, True


ESTIMATES = {
    "decay": _run_decay,
    "sep_ratio": _run_sep_ratio,
    "events": _run_event_estimates,
}


def run_estimate(spec: ExperimentSpec, storage: ReportStorage, threads: int = 1) -> bool:
    """
    Run every estimate of a sample-mode spec; tables are deterministic for a fixed seed.

    Returns:
        True when every stated expectation is met
    """
    _require_mode(spec, "sample", "estimate")
    if not spec.estimates:
        raise SpecError("$.estimates: a sample-mode spec needs at least one estimate")

    passed = True
    results = []
    for i, raw in enumerate(spec.estimates, 1):
        path = f"$.estimates[{i - 1}]"
        kind = raw["type"]
        if kind not in ESTIMATES:
            raise SpecError(f"{path}.type: unknown estimate '{kind}' (expected one of {tuple(ESTIMATES)})")
        cfg = {**raw, "name": raw.get("name", f"{kind}_{i}")}
        print(f"\n[STEP {i}] {kind}: {cfg['name']}")
        result, ok = ESTIMATES[kind](spec, storage, cfg, path, threads)
        print(f"   {'[OK]' if ok else '[FAIL]'} {cfg['name']}")
        passed &= ok
        results.append({"name": cfg["name"], "type": kind, "chain": _chain_spec(spec, cfg).to_json(), **result})

    if spec.outputs.get("samples"):
        first = spec.estimates[0]
        chain = _chain_spec(spec, first)
        storage.save_samples("chain", run_chain(chain), len(chain.model().region), description="chain 0 samples")

    storage.save_report("estimate", {"spec": spec.to_json(), "passed": passed, "estimates": results})
    return passed


def _fill_target(region, cfg: dict) -> list:
    target = cfg.get("target")
    if target is None:
        raise SpecError("$.filling.target: a rectangle filling needs a target")
    if isinstance(target, dict):
        if "bonds" in target:
            return parse_bonds(target["bonds"], "$.filling.target.bonds")
        if "lo" in target and "hi" in target:
            return bonds_in_box(make_site(target["lo"]), make_site(target["hi"]))
    raise SpecError("$.filling.target: expected {\"lo\", \"hi\"} or {\"bonds\"}")


def run_fill(spec: ExperimentSpec, storage: ReportStorage, render: bool = False, exact_cap: Optional[int] = None) -> bool:
    """
    Build the experiment's filling sequence and save its trace.

    Returns:
        True when every step is certified

    Raises:
        FillingError: inadmissible target (exit 2)
    """
    cfg = spec.filling
    if not cfg:
        raise SpecError("$.filling: the experiment has no filling section")
    if spec.region is None:
        raise SpecError("$.region: a filling needs a region")

    region = spec.region
    family = cfg.get("family", "rectangle")
    c, r = cfg.get("c", 2.0), cfg.get("r", 2)
    dist = None
    if cfg.get("measure") and spec.params is not None:
        dist = enumerate_distribution(spec.params, region, spec.boundary, cap=exact_cap)

    print(f"\n[STEP 1] Filling ({family}) on {len(region)} bonds...")
    if family == "rectangle":
        sequence = fill_rectangle(region, _fill_target(region, cfg), c, r, dist=dist)
    elif family == "slc":
        center = cfg.get("center")
        if center is None:
            raise SpecError("$.filling.center: an slc filling needs a center")
        sequence = fill_circuit_bounded(region, make_site(center), cfg.get("radius", 1), c, r, dist=dist)
    else:
        raise SpecError(f"$.filling.family: expected 'rectangle' or 'slc', got {family!r}")

    for step in sequence.steps:
        if not step.ok:
            print(f"   [FAIL] step {step.k}: {step.reason}")
    print(f"   [STATS] {len(sequence.order)} bonds, {sum(s.ok for s in sequence.steps)} certified steps")

    print("\n[STEP 2] Writing trace...")
    storage.save_report("fill", sequence.to_json(), description=f"{family} filling")
    storage.save_table(
        "fill_steps",
        ["k", "bond", "ok", "case", "radius", "witness_size", "blockable"],
        (
            [s.k, f"{list(s.bond[0])}-{list(s.bond[1])}", s.ok, s.case, s.radius, len(s.witness), s.blockable]
            for s in sequence.steps
        ),
    )

    if render:
        print("\n[STEP 3] Rendering frames...")
        frame = b""
        for k in range(1, len(sequence.order) + 1):
            frame = ConfigurationRenderer.render_filling_frame(sequence, k)
            storage.save_image("frame", frame, description=f"step {k}")
        storage.save_image("thumbnail", ConfigurationRenderer.create_thumbnail(frame), description="last frame")
        print(f"   [IMAGES] {len(sequence.order)} frames")

    return sequence.certified


# =============================================================================
# Main Pipeline
# =============================================================================

def run_pipeline(args: argparse.Namespace) -> int:
    """Load the experiment, run the chosen pipeline and write the manifest; returns the exit code."""
    started = time.monotonic()
    try:
        spec = load_experiment(args.spec, seed=args.seed, exact_cap=args.exact_cap)
        storage = ReportStorage(spec.name, output_dir=args.out)
        if not storage.test_connection():
            print(f"[ERROR] Output directory {storage.root} is not writable")
            return EXIT_USAGE

        _banner(f"fk-separation {args.command}", spec, args.command)
        if args.command == "verify":
            passed = run_verify(spec, storage, exact_cap=args.exact_cap, threads=args.threads)
        elif args.command == "estimate":
            passed = run_estimate(spec, storage, threads=args.threads)
        else:
            passed = run_fill(spec, storage, render=args.render, exact_cap=args.exact_cap)
    except (SpecError, ValueError) as e:
        # SpecError, EnumerationCapError and FillingError are all ValueErrors
        print(f"[ERROR] {e}")
        return EXIT_USAGE

    code = EXIT_OK if passed else EXIT_CHECK_FAILED
    elapsed = time.monotonic() - started
    storage.save_manifest({
        "command": args.command,
        "spec": spec.source,
        "seed": spec.seed,
        "threads": args.threads,
        "exit_code": code,
        "elapsed_seconds": round(elapsed, 3),
    })
    _done("All checks passed" if passed else "Some checks FAILED", storage, elapsed)
    return code


# =============================================================================
# Utility Functions
# =============================================================================

def list_available_experiments():
    """List all bundled experiment specs."""
    print("\n[LIST] Bundled Experiments")
    print("=" * 60)

    for tier, title in ((1, "Acceptance"), (2, "Demonstrations")):
        ids = get_experiment_ids_by_tier(tier)
        print(f"\nTIER {tier} - {title} ({len(ids)}):")
        print(f"{'Experiment ID':<28} {'Command':<10} {'Name'}")
        print("-" * 70)
        for experiment_id in ids:
            config = EXPERIMENTS[experiment_id]
            print(f"{experiment_id:<28} {config['command']:<10} {config['name']}")

    print(f"\n[TOTAL] {len(EXPERIMENTS)} experiments")
    print()


def main(argv: Optional[list] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if args.list_experiments:
        list_available_experiments()
        return EXIT_OK
    return run_pipeline(args)


if __name__ == "__main__":
    sys.exit(main())
