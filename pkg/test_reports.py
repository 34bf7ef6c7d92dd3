# test_reports.py
"""
Report storage: dated run folders, numbered artifacts, CSV tables and the
manifest.

Run:
    pytest test_reports.py
"""

import math
from datetime import date
from fractions import Fraction

import pytest

from operators.engine import enumerate_distribution
from operators.models import FREE, FkParams
from operators.sampler import ChainSpec, load_samples, run_chain
from storage.reports import ReportStorage, to_json_text

RUN_DATE = date(2026, 10, 19)


@pytest.fixture
def storage(out_dir) -> ReportStorage:
    return ReportStorage("BK q=1 / small", output_dir=out_dir, run_date=RUN_DATE)


class TestPaths:
    def test_dated_run_folder(self, storage, out_dir):
        assert storage.experiment == "bk-q-1-small"
        assert storage.base_path.relative_to(out_dir).parts == (
            "2026", "October", "Week-4", "2026-10-19", "bk-q-1-small",
        )

    def test_indices_count_per_name(self, storage):
        first = storage.save_report("verify", {"passed": True})
        second = storage.save_report("verify", {"passed": False})
        other = storage.save_report("estimate", {})
        assert (first.name, second.name, other.name) == ("verify_001.json", "verify_002.json", "estimate_001.json")

    def test_empty_name(self, out_dir):
        with pytest.raises(ValueError):
            ReportStorage("", output_dir=out_dir)


class TestArtifacts:
    def test_report_round_trip(self, storage):
        path = storage.save_report("verify", {"p": Fraction(1, 3), "bonds": {(0, 1)}})
        data = storage.get_report(str(path.relative_to(storage.base_path)))
        assert data["p"] == {"fraction": "1/3", "value": pytest.approx(1 / 3)}
        assert storage.get_report("reports/missing.json") is None

    def test_table_is_crlf_with_full_precision(self, storage):
        path = storage.save_table("decay", ["d", "estimate", "note"], [[1, 0.1 + 0.2, None], [2, math.nan, "x,y"]])
        text = path.read_bytes().decode("utf-8")
        assert text == 'd,estimate,note\r\n1,0.30000000000000004,\r\n2,nan,"x,y"\r\n'

    def test_exact_distribution_keeps_fractions(self, storage, two_bonds):
        dist = enumerate_distribution(FkParams(p=Fraction(1, 2), q=2), two_bonds, FREE, exact=True)
        path = storage.save_distribution("base", dist)
        data = storage.get_report(str(path.relative_to(storage.base_path)))
        assert data["exact"] is True
        assert data["variables"][0] == [[0, 0], [1, 0]]
        assert all("/" in p for p in data["probabilities"])

    def test_samples_dump(self, storage, square, half_q2):
        chain = ChainSpec(half_q2, square, sweeps=20, burn_in=0, seed=1)
        path = storage.save_samples("chain", run_chain(chain), len(square))
        n_bits, masks = load_samples(path)
        assert n_bits == 4
        assert len(masks) == 20

    def test_unknown_kind(self, storage):
        with pytest.raises(ValueError):
            storage._build_path("logs", "run", "txt")


class TestManifest:
    def test_lists_every_artifact(self, storage):
        storage.save_report("verify", {})
        storage.save_image("frame", b"\x89PNG")
        storage.save_manifest({"command": "verify", "exit_code": 0})
        manifest = storage.get_manifest()
        assert manifest["artifact_count"] == 2
        assert [a["kind"] for a in manifest["artifacts"]] == ["report", "image"]
        assert manifest["metadata"]["exit_code"] == 0
        assert manifest["date"] == "2026-10-19"

    def test_no_manifest_yet(self, storage):
        assert storage.get_manifest() is None

    def test_output_directory_is_writable(self, storage):
        assert storage.test_connection()


def test_json_text_allows_nan():
    assert "NaN" in to_json_text({"lambda": math.nan})
