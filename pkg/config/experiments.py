# config/experiments.py
"""
Experiment Registry - fk-separation
Bundled experiment specs and the loader that validates them.

Organization:
    - Tier 1: Acceptance experiments (exact oracles and sampled trends)
    - Tier 2: Demonstrations (filling traces, diagnostics)

Spec files are JSON (schema 1) stored in config/specs/. Every field is
validated before any computation; errors cite the JSON path, and event
DSL errors the line and column inside the string.

Usage:
    from config.experiments import load_experiment, get_experiment_config
    from config.experiments import get_experiment_ids_by_mode, EXPERIMENTS
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Union

from config.settings import DEFAULT_EXACT_CAP, RATIONAL_EXACT_CAP
from operators.errors import EnumerationCapError, SpecError
from operators.event_dsl import parse_event
from operators.lattice import Region, SiteRegion, bonds_in_box, build_rectangle, make_bond
from operators.models import BoundaryCondition, FkParams, IsingParams


SPECS_DIR = Path(__file__).resolve().parent / "specs"

SCHEMA_VERSION = 1
MODES = ("exact", "sample")


# =============================================================================
# Bundled Experiments
# =============================================================================

EXPERIMENTS = {
    # =========================================================================
    # TIER 1 - Acceptance
    # =========================================================================

    "bk_q1": {
        "name": "BK inequality for independent percolation",
        "file": "bk_q1.json",
        "mode": "exact",
        "tier": 1,
        "command": "verify",
    },
    "dependent_counterexample": {
        "name": "Disjoint occurrence beats the product at q = 2",
        "file": "dependent_counterexample.json",
        "mode": "exact",
        "tier": 1,
        "command": "verify",
    },
    "edwards_sokal": {
        "name": "Edwards-Sokal cluster labeling and percolation laws",
        "file": "edwards_sokal.json",
        "mode": "exact",
        "tier": 1,
        "command": "verify",
    },
    "fig1_markov": {
        "name": "Markov property: blocking sets and the two-cluster boundary",
        "file": "fig1_markov.json",
        "mode": "exact",
        "tier": 1,
        "command": "verify",
    },
    "split_identities": {
        "name": "Split-measure marginals and pushforward identities",
        "file": "split_identities.json",
        "mode": "exact",
        "tier": 1,
        "command": "verify",
    },
    "induction_steps": {
        "name": "C_ij chain and induction-step decomposition",
        "file": "induction_steps.json",
        "mode": "exact",
        "tier": 1,
        "command": "verify",
    },
    "rsm_chain": {
        "name": "RSM coupling on short Ising chains",
        "file": "rsm_chain.json",
        "mode": "exact",
        "tier": 1,
        "command": "verify",
    },
    "decay_q1": {
        "name": "Connection decay on a strip at q = 1, p = 0.25",
        "file": "decay_q1.json",
        "mode": "sample",
        "tier": 1,
        "command": "estimate",
    },
    "sep_ratio_q2": {
        "name": "Separated-occurrence ratio ladder, q = 2 subcritical",
        "file": "sep_ratio_q2.json",
        "mode": "sample",
        "tier": 1,
        "command": "estimate",
    },

    # =========================================================================
    # TIER 2 - Demonstrations
    # =========================================================================

    "fill_rectangle_4x4": {
        "name": "Filling a rectangle inside a 4x4 box",
        "file": "fill_rectangle_4x4.json",
        "mode": "exact",
        "tier": 2,
        "command": "fill",
    },
    "fill_l_shape": {
        "name": "SLC filling of a circuit-bounded L-shape",
        "file": "fill_l_shape.json",
        "mode": "exact",
        "tier": 2,
        "command": "fill",
    },
    "fkg_small_q": {
        "name": "FKG lattice condition fails for q < 1",
        "file": "fkg_small_q.json",
        "mode": "exact",
        "tier": 2,
        "command": "verify",
    },
}


def get_experiment_config(experiment_id: str) -> Optional[dict]:
    """Get full configuration for a bundled experiment."""
    return EXPERIMENTS.get(experiment_id)


def get_experiment_path(experiment_id: str) -> Optional[Path]:
    config = EXPERIMENTS.get(experiment_id)
    return SPECS_DIR / config["file"] if config else None


def get_experiment_ids_by_mode(mode: str) -> list[str]:
    """Get list of experiment IDs for a mode (exact / sample)."""
    return [
        experiment_id for experiment_id, config in EXPERIMENTS.items()
        if config.get("mode") == mode
    ]


def get_experiment_ids_by_tier(tier: int) -> list[str]:
    return [
        experiment_id for experiment_id, config in EXPERIMENTS.items()
        if config.get("tier") == tier
    ]


def get_all_experiment_ids() -> list[str]:
    """Get all experiment IDs."""
    return list(EXPERIMENTS.keys())


def get_experiment_stats() -> dict:
    """Get statistics about bundled experiments."""
    stats = {
        "total": len(EXPERIMENTS),
        "by_mode": {},
        "by_tier": {},
        "by_command": {},
    }

    for config in EXPERIMENTS.values():
        for key, bucket in (("mode", "by_mode"), ("tier", "by_tier"), ("command", "by_command")):
            value = config.get(key)
            stats[bucket][value] = stats[bucket].get(value, 0) + 1

    return stats


# =============================================================================
# Experiment Specs
# =============================================================================

@dataclass
class ExperimentSpec:
    """A validated experiment spec (schema 1)."""

    name: str
    mode: str
    seed: int
    params: Union[FkParams, IsingParams, None]
    region: Union[Region, SiteRegion, None]
    boundary: BoundaryCondition
    events: dict = field(default_factory=dict)
    event_texts: dict = field(default_factory=dict)
    r_values: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    estimates: list = field(default_factory=list)
    filling: Optional[dict] = None
    outputs: dict = field(default_factory=dict)
    exact_arithmetic: bool = False
    source: Optional[str] = None

    @property
    def dimension(self) -> int:
        return self.region.dimension if self.region is not None else 2

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "mode": self.mode,
            "seed": self.seed,
            "model": None if self.params is None else {
                "kind": "fk" if isinstance(self.params, FkParams) else "ising",
                **self.params.to_json(),
            },
            "region": None if self.region is None else (
                self.region.to_json() if isinstance(self.region, Region) else [list(s) for s in self.region.sites]
            ),
            "boundary": self.boundary.to_json(),
            "events": dict(self.event_texts),
            "r_values": list(self.r_values),
            "checks": list(self.checks),
            "estimates": list(self.estimates),
            "filling": self.filling,
            "outputs": dict(self.outputs),
        }


def _fail(path: str, message: str) -> SpecError:
    return SpecError(f"{path}: {message}")


def _require(data: dict, key: str, path: str, kind=None) -> Any:
    if key not in data:
        raise _fail(f"{path}.{key}", "missing")
    value = data[key]
    if kind is not None and not isinstance(value, kind):
        raise _fail(f"{path}.{key}", f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
    return value


def _number(value, path: str, exact: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise _fail(path, f"expected a number, got {value!r}")
    if exact:
        try:
            return Fraction(str(value))
        except ValueError:
            raise _fail(path, f"not a rational number: {value!r}")
    try:
        return float(value)
    except ValueError:
        raise _fail(path, f"not a number: {value!r}")


def parse_model(data: Optional[dict], path: str = "$.model", exact: bool = False):
    """FkParams / IsingParams from {"kind": "fk", "p", "q", "fields"} or {"kind": "ising", "beta", "h"}."""
    if data is None:
        return None
    if not isinstance(data, dict):
        raise _fail(path, "expected an object")
    kind = data.get("kind", "fk")
    try:
        if kind == "fk":
            fields = tuple(_number(h, f"{path}.fields[{i}]") for i, h in enumerate(data.get("fields") or ()))
            return FkParams(
                p=_number(_require(data, "p", path), f"{path}.p", exact),
                q=_number(_require(data, "q", path), f"{path}.q", exact),
                fields=fields,
                stable_spin=int(data.get("stable_spin", 1)),
            )
        if kind == "ising":
            return IsingParams(
                beta=_number(_require(data, "beta", path), f"{path}.beta"),
                h=_number(data.get("h", 0.0), f"{path}.h"),
            )
    except SpecError:
        raise
    except ValueError as e:
        raise _fail(path, str(e)) from e
    raise _fail(f"{path}.kind", f"unknown model kind '{kind}' (expected fk or ising)")


def _bond(item, path: str):
    try:
        x, y = item
        return make_bond(tuple(x), tuple(y))
    except (TypeError, ValueError) as e:
        raise _fail(path, f"invalid bond {item!r}: {e}") from e


def parse_bonds(items, path: str) -> list:
    if not isinstance(items, list):
        raise _fail(path, "expected a list of bonds")
    return [_bond(item, f"{path}[{i}]") for i, item in enumerate(items)]


def parse_region(data: Optional[dict], path: str = "$.region") -> Union[Region, SiteRegion, None]:
    """
    Region forms:
        {"kind": "rectangle", "lo": [..], "hi": [..]}   all bonds of a box
        {"kind": "bonds", "bonds": [[x, y], ...]}       explicit bond list
        {"kind": "sites", "sites": [[..], ...]}         Ising site region Λ
        {"kind": "site_box", "lo": [..], "hi": [..]}    every site of a box
        {"kind": "cells", "cells": [[x, y], ...]}       union of unit squares (d = 2)
    """
    if data is None:
        return None
    if not isinstance(data, dict):
        raise _fail(path, "expected an object")
    kind = data.get("kind")
    try:
        if kind == "rectangle":
            return build_rectangle(_require(data, "lo", path, list), _require(data, "hi", path, list))
        if kind == "bonds":
            return Region(parse_bonds(_require(data, "bonds", path, list), f"{path}.bonds"))
        if kind == "sites":
            return SiteRegion(tuple(s) for s in _require(data, "sites", path, list))
        if kind == "cells":
            cells = _require(data, "cells", path, list)
            bonds = {b for x, y in cells for b in bonds_in_box((x, y), (x + 1, y + 1))}
            return Region(bonds)
        if kind == "site_box":
            lo, hi = _require(data, "lo", path, list), _require(data, "hi", path, list)
            sites = {s for bond in bonds_in_box(lo, hi) for s in bond} or {tuple(lo)}
            return SiteRegion(sites)
    except SpecError:
        raise
    except ValueError as e:
        raise _fail(path, str(e)) from e
    raise _fail(f"{path}.kind", f"unknown region kind {kind!r}")


def parse_boundary(data, region=None, path: str = "$.boundary") -> BoundaryCondition:
    """
    Boundary forms: "free", "wired", {"kind": "bond", "open": [...],
    "infinite_cluster": false}, {"kind": "site", "eta": [[site, ±1], ...]},
    {"kind": "plus"} / {"kind": "minus"} (constant η on ∂Λ).
    """
    if data is None:
        return BoundaryCondition.free()
    if isinstance(data, str):
        data = {"kind": data}
    if not isinstance(data, dict):
        raise _fail(path, "expected a string or an object")
    kind = data.get("kind", "free")
    try:
        if kind in ("free", "wired"):
            bc = BoundaryCondition(kind)
        elif kind == "bond":
            bc = BoundaryCondition.bond(
                parse_bonds(data.get("open", []), f"{path}.open"),
                infinite_cluster=bool(data.get("infinite_cluster", False)),
            )
        elif kind == "site":
            bc = BoundaryCondition.site({tuple(s): int(v) for s, v in _require(data, "eta", path, list)})
        elif kind in ("plus", "minus"):
            if not isinstance(region, SiteRegion):
                raise _fail(f"{path}.kind", f"'{kind}' needs a site region")
            bc = BoundaryCondition.constant(region, 1 if kind == "plus" else -1)
        else:
            raise _fail(f"{path}.kind", f"unknown boundary kind {kind!r}")
        if region is not None and kind in ("bond", "site"):
            bc.validate(region)
        return bc
    except SpecError:
        raise
    except ValueError as e:
        raise _fail(path, str(e)) from e


def parse_events(data: Optional[dict], dimension: int, path: str = "$.events") -> tuple[dict, dict]:
    """({name: Event}, {name: DSL text}); DSL errors keep their line and column."""
    if data is None:
        return {}, {}
    if not isinstance(data, dict):
        raise _fail(path, "expected an object of name -> DSL string")
    events, texts = {}, {}
    for name, text in data.items():
        if not isinstance(text, str):
            raise _fail(f"{path}.{name}", "expected a DSL string")
        try:
            events[name] = parse_event(text, dimension)
        except SpecError as e:
            wrapped = SpecError(f"{path}.{name}: {e.args[0]}")
            wrapped.line, wrapped.column = e.line, e.column
            raise wrapped from e
        texts[name] = text
    return events, texts


def _variable_count(params, region) -> int:
    if region is None:
        return 0
    if isinstance(region, SiteRegion):
        if isinstance(params, IsingParams):
            return len(region.sites)
        return len(region.closure_bonds)
    return len(region.bonds)


def parse_spec(data: dict, source: Optional[str] = None, exact_cap: Optional[int] = None) -> ExperimentSpec:
    """
    Validate a decoded spec document.

    Raises:
        SpecError: malformed document (message cites the JSON path)
        EnumerationCapError: exact mode on a region above the cap
    """
    if not isinstance(data, dict):
        raise _fail("$", "expected an object")
    schema = data.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise _fail("$.schema", f"unsupported schema version {schema} (expected {SCHEMA_VERSION})")
    name = _require(data, "name", "$", str)
    mode = _require(data, "mode", "$", str)
    if mode not in MODES:
        raise _fail("$.mode", f"expected one of {MODES}, got {mode!r}")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise _fail("$.seed", f"expected a nonnegative integer, got {seed!r}")

    exact_arithmetic = bool(data.get("exact_arithmetic", False))
    params = parse_model(data.get("model"), exact=exact_arithmetic)
    region = parse_region(data.get("region"))
    boundary = parse_boundary(data.get("boundary"), region)
    dimension = region.dimension if region is not None else 2
    events, texts = parse_events(data.get("events"), dimension)

    r_values = data.get("r_values", [])
    if not isinstance(r_values, list) or any(isinstance(r, bool) or not isinstance(r, (int, float)) or r < 0 for r in r_values):
        raise _fail("$.r_values", "expected a list of nonnegative numbers")

    checks = data.get("checks", [])
    if not isinstance(checks, list):
        raise _fail("$.checks", "expected a list")
    for i, check in enumerate(checks):
        if not isinstance(check, dict) or not isinstance(check.get("type"), str):
            raise _fail(f"$.checks[{i}]", "each check needs a string 'type'")
        for key in ("events", "pairs"):
            for ref in _event_refs(check.get(key)):
                if ref not in events:
                    raise _fail(f"$.checks[{i}].{key}", f"unknown event '{ref}'")

    estimates = data.get("estimates", [])
    if not isinstance(estimates, list):
        raise _fail("$.estimates", "expected a list")
    for i, est in enumerate(estimates):
        if not isinstance(est, dict) or not isinstance(est.get("type"), str):
            raise _fail(f"$.estimates[{i}]", "each estimate needs a string 'type'")

    filling = data.get("filling")
    if filling is not None and not isinstance(filling, dict):
        raise _fail("$.filling", "expected an object")
    outputs = data.get("outputs", {})
    if not isinstance(outputs, dict):
        raise _fail("$.outputs", "expected an object")

    if mode == "sample" and (params is None or region is None):
        raise _fail("$", "sample mode needs a model and a region")
    if mode == "exact" and params is not None:
        limit = exact_cap if exact_cap is not None else (RATIONAL_EXACT_CAP if exact_arithmetic else DEFAULT_EXACT_CAP)
        n = _variable_count(params, region)
        if n > limit:
            raise EnumerationCapError(n, limit, what=f"{name} region")

    return ExperimentSpec(
        name=name,
        mode=mode,
        seed=seed,
        params=params,
        region=region,
        boundary=boundary,
        events=events,
        event_texts=texts,
        r_values=list(r_values),
        checks=checks,
        estimates=estimates,
        filling=filling,
        outputs=outputs,
        exact_arithmetic=exact_arithmetic,
        source=source,
    )


def _event_refs(value) -> list:
    if value is None or value == "catalog":
        return []
    if isinstance(value, str):
        return [value]
    out = []
    for item in value:
        out.extend(_event_refs(item))
    return out


def load_experiment(
    path_or_id: Union[str, Path],
    seed: Optional[int] = None,
    exact_cap: Optional[int] = None,
) -> ExperimentSpec:
    """
    Load a spec by file path or bundled experiment ID.

    Args:
        path_or_id: JSON file, or a key of EXPERIMENTS
        seed: Overrides the experiment's seed
        exact_cap: Overrides the enumeration cap for exact mode

    Raises:
        SpecError: unreadable or malformed spec
    """
    bundled = get_experiment_path(str(path_or_id))
    path = bundled if bundled is not None else Path(path_or_id)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SpecError(f"Cannot read spec {path}: {e.strerror}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"{path}: invalid JSON: {e.msg}", e.lineno, e.colno) from e
    spec = parse_spec(data, source=str(path), exact_cap=exact_cap)
    if seed is not None:
        spec.seed = seed
    return spec


# =============================================================================
# Test
# =============================================================================

if __name__ == "__main__":
    print("=" * 50)
    print("fk-separation Experiments")
    print("=" * 50)

    stats = get_experiment_stats()
    print(f"\nTotal experiments: {stats['total']}")

    print("\nBy Tier:")
    for tier, count in sorted(stats["by_tier"].items()):
        print(f"  Tier {tier}: {count} experiments")

    print("\nBy Mode:")
    for mode, count in sorted(stats["by_mode"].items()):
        print(f"  {mode}: {count}")

    print("\nAll Experiments:")
    for experiment_id, config in EXPERIMENTS.items():
        print(f"  {experiment_id:28} [{config['tier']}] {config['name']}")
