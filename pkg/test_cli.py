# test_cli.py
"""
The batch runner end to end: bundled specs, exit codes, manifests and
reproducible tables.

Run:
    pytest test_cli.py
"""

import json
from pathlib import Path

import pytest

from config.experiments import (
    get_all_experiment_ids,
    get_experiment_config,
    get_experiment_ids_by_mode,
    load_experiment,
)
from main import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, main
from storage.reports import ReportStorage

SQUARE = {"kind": "rectangle", "lo": [0, 0], "hi": [1, 1]}
BOX5 = {"kind": "rectangle", "lo": [0, 0], "hi": [4, 4]}


def _write_spec(tmp_path, data: dict) -> str:
    path = tmp_path / f"{data['name']}.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _manifest(name: str, out_dir: str) -> dict:
    manifest = ReportStorage(name, output_dir=out_dir).get_manifest()
    assert manifest is not None
    return manifest


def _event_spec(**estimate) -> dict:
    return {
        "schema": 1,
        "name": "bond_events",
        "mode": "sample",
        "seed": 0,
        "model": {"kind": "fk", "p": 0.5, "q": 2},
        "region": SQUARE,
        "boundary": "free",
        "events": {"A": "(open 0 0 1 0)"},
        "estimates": [{"type": "events", "name": "bond_a", "sweeps": 640, "burn_in": 0, **estimate}],
    }


# =============================================================================
# Bundled Registry
# =============================================================================

SLOW_EXACT = ("induction_steps",)


def _bundled(mode: str) -> list:
    """Every bundled experiment of a mode; sampling runs and the big exact sweeps are slow."""
    return [
        pytest.param(experiment, marks=pytest.mark.slow)
        if mode == "sample" or experiment in SLOW_EXACT else experiment
        for experiment in get_experiment_ids_by_mode(mode)
    ]


@pytest.mark.parametrize("experiment", get_all_experiment_ids())
def test_bundled_spec_loads(experiment):
    spec = load_experiment(experiment)
    assert spec.mode == get_experiment_config(experiment)["mode"]
    assert spec.name == experiment


def test_every_experiment_has_a_mode():
    modes = get_experiment_ids_by_mode("exact") + get_experiment_ids_by_mode("sample")
    assert sorted(modes) == sorted(get_all_experiment_ids())


@pytest.mark.parametrize("experiment", _bundled("exact") + _bundled("sample"))
def test_bundled_spec_runs(experiment, out_dir):
    command = get_experiment_config(experiment)["command"]
    assert main([command, "--spec", experiment, "--out", out_dir]) == EXIT_OK
    manifest = _manifest(experiment, out_dir)
    assert manifest["metadata"]["exit_code"] == EXIT_OK
    assert manifest["metadata"]["command"] == command
    kind = "table" if command == "estimate" else "report"
    assert any(a["kind"] == kind for a in manifest["artifacts"])


# =============================================================================
# Arguments
# =============================================================================

class TestArguments:
    def test_list_experiments(self, capsys):
        assert main(["--list-experiments"]) == EXIT_OK
        assert "dependent_counterexample" in capsys.readouterr().out

    def test_command_is_required(self):
        with pytest.raises(SystemExit):
            main([])

    def test_threads_must_be_positive(self):
        with pytest.raises(SystemExit):
            main(["verify", "--spec", "bk_q1", "--threads", "0"])

    def test_missing_spec_file(self, out_dir):
        assert main(["verify", "--spec", "no/such/spec.json", "--out", out_dir]) == EXIT_USAGE


# =============================================================================
# Verify
# =============================================================================

class TestVerify:
    def test_distribution_is_saved(self, out_dir):
        main(["verify", "--spec", "dependent_counterexample", "--out", out_dir])
        manifest = _manifest("dependent_counterexample", out_dir)
        assert any(a["kind"] == "distribution" for a in manifest["artifacts"])

    def test_failed_expectation_exits_one(self, tmp_path, out_dir):
        spec = {
            "schema": 1,
            "name": "wrong_sign",
            "mode": "exact",
            "model": {"kind": "fk", "p": 0.5, "q": 2},
            "region": SQUARE,
            "boundary": "free",
            "events": {"A": "(open 0 0 1 0)", "B": "(open 1 0 1 1)"},
            "checks": [{"type": "correlation", "name": "claims_bk", "pairs": [["A", "B"]], "expect": "nonpositive"}],
        }
        assert main(["verify", "--spec", _write_spec(tmp_path, spec), "--out", out_dir]) == EXIT_CHECK_FAILED
        assert _manifest("wrong_sign", out_dir)["metadata"]["exit_code"] == EXIT_CHECK_FAILED

    def test_malformed_event_exits_two(self, tmp_path, out_dir):
        spec = {
            "schema": 1,
            "name": "broken_event",
            "mode": "exact",
            "model": {"kind": "fk", "p": 0.5, "q": 2},
            "region": SQUARE,
            "boundary": "free",
            "events": {"A": "(open 0 0 1 0"},
            "checks": [],
        }
        assert main(["verify", "--spec", _write_spec(tmp_path, spec), "--out", out_dir]) == EXIT_USAGE

    def test_table_above_cap_exits_two(self, out_dir):
        assert main(["verify", "--spec", "dependent_counterexample", "--exact-cap", "2", "--out", out_dir]) == EXIT_USAGE

    def test_wrong_mode_exits_two(self, tmp_path, out_dir):
        assert main(["verify", "--spec", _write_spec(tmp_path, _event_spec()), "--out", out_dir]) == EXIT_USAGE


# =============================================================================
# Fill
# =============================================================================

def _fill_spec(target: dict) -> dict:
    return {
        "schema": 1,
        "name": "domino",
        "mode": "exact",
        "region": BOX5,
        "boundary": "free",
        "filling": {"family": "rectangle", "target": target},
    }


class TestFill:
    def test_domino_with_frames(self, tmp_path, out_dir):
        spec = _write_spec(tmp_path, _fill_spec({"lo": [1, 1], "hi": [3, 1]}))
        assert main(["fill", "--spec", spec, "--out", out_dir, "--render"]) == EXIT_OK
        manifest = _manifest("domino", out_dir)
        images = [a["path"] for a in manifest["artifacts"] if a["kind"] == "image"]
        assert len(images) == 3
        assert any(Path(p).name.startswith("thumbnail") for p in images)

    def test_single_bond_target_exits_two(self, tmp_path, out_dir):
        spec = _write_spec(tmp_path, _fill_spec({"bonds": [[[1, 1], [2, 1]]]}))
        assert main(["fill", "--spec", spec, "--out", out_dir]) == EXIT_USAGE


# =============================================================================
# Estimate
# =============================================================================

class TestEstimate:
    def test_seeded_tables_are_identical(self, tmp_path):
        spec = _write_spec(tmp_path, _event_spec())
        tables = []
        for run in ("one", "two"):
            out = str(tmp_path / run)
            assert main(["estimate", "--spec", spec, "--seed", "5", "--out", out]) == EXIT_OK
            storage = ReportStorage("bond_events", output_dir=out)
            tables.append((storage.base_path / "tables" / "bond_a_001.csv").read_bytes())
        assert tables[0] == tables[1]

    def test_manifest_records_the_seed(self, tmp_path, out_dir):
        spec = _write_spec(tmp_path, _event_spec())
        main(["estimate", "--spec", spec, "--seed", "8", "--out", out_dir])
        assert _manifest("bond_events", out_dir)["metadata"]["seed"] == 8

    def test_unknown_estimate_type(self, tmp_path, out_dir):
        data = _event_spec()
        data["estimates"][0]["type"] = "histogram"
        assert main(["estimate", "--spec", _write_spec(tmp_path, data), "--out", out_dir]) == EXIT_USAGE
