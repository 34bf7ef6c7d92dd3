# storage/reports.py
"""
Report Storage Module for fk-separation
Writes every artifact of a run under one dated folder of the output directory.

Folder Structure:
    out/
    └── 2026/
        └── October/
            └── Week-4/
                └── 2026-10-19/
                    └── bk_q1/
                        ├── manifest.json          # Every file of the run, with kind and size
                        ├── reports/
                        │   └── verify_001.json
                        ├── tables/
                        │   └── decay_001.csv      # RFC-4180, full-precision numbers
                        ├── distributions/
                        │   └── base_001.json      # probabilities, Fractions as "n/d"
                        ├── samples/
                        │   └── chain_001.bin      # FKSP packbits dump (operators.sampler)
                        └── images/
                            ├── frame_001.png
                            └── thumbnail_001.png

Numbers are written with repr(), which round-trips every float exactly.
"""

import csv
import io
import json
import logging
import math
import re
from datetime import date, datetime
from fractions import Fraction
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from config.settings import get_output_dir
from operators.sampler import dump_samples

logger = logging.getLogger(__name__)

KINDS = ("reports", "tables", "distributions", "samples", "images")


def _json_default(value):
    """JSON encoder hook for numpy scalars, arrays, Fractions, sets and tuples-as-keys."""
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Fraction):
        return {"fraction": f"{value.numerator}/{value.denominator}", "value": float(value)}
    if isinstance(value, (set, frozenset)):
        return sorted(value, key=repr)
    if hasattr(value, "to_json"):
        return value.to_json()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _cell(value) -> str:
    """One CSV cell: full-precision numbers, empty for None."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return repr(value)
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return str(value)


def to_json_text(data) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False, default=_json_default, allow_nan=True)


class ReportStorage:
    """Handles output-directory storage for one experiment run."""

    def __init__(
        self,
        experiment: str,
        output_dir: Optional[str] = None,
        run_date: Optional[date] = None,
    ):
        """
        Args:
            experiment: Experiment name (the run folder)
            output_dir: Root directory (defaults to FKSEP_OUTPUT_DIR / ./out)
            run_date: Date used for the folder layout (defaults to today)
        """
        if not experiment:
            raise ValueError("Missing experiment name for report storage")
        self.experiment = self._slugify(experiment)
        self.root = get_output_dir(output_dir)
        self.run_date = run_date or date.today()

        # Track file indices per name (for the current run)
        self._counters: dict[str, int] = {}
        self._entries: List[dict] = []

    # =========================================================================
    # Path Building Utilities
    # =========================================================================

    def _get_week_number(self, dt: date) -> int:
        """Get the week number within the month (1-5)."""
        first_weekday = dt.replace(day=1).weekday()
        return (dt.day + first_weekday - 1) // 7 + 1

    def _get_base_path(self) -> Path:
        """
        Run folder for the storage date.

        Format: ROOT/YYYY/MonthName/Week-N/YYYY-MM-DD/experiment
        """
        d = self.run_date
        return (
            self.root / str(d.year) / d.strftime("%B") / f"Week-{self._get_week_number(d)}"
            / d.strftime("%Y-%m-%d") / self.experiment
        )

    @property
    def base_path(self) -> Path:
        return self._get_base_path()

    def _build_path(self, kind: str, name: str, extension: str) -> Path:
        """
        Format: <run folder>/<kind>/<name>_NNN.<extension>
        """
        if kind not in KINDS:
            raise ValueError(f"Unknown artifact kind '{kind}' (expected one of {KINDS})")
        name = self._slugify(name)
        index = self._get_next_index(f"{kind}/{name}")
        return self._get_base_path() / kind / f"{name}_{index:03d}.{extension}"

    def _build_manifest_path(self) -> Path:
        return self._get_base_path() / "manifest.json"

    def _slugify(self, text: str, max_length: int = 60) -> str:
        """Lowercase file-name-safe slug."""
        slug = re.sub(r"[^a-z0-9_\-]+", "-", str(text).lower()).strip("-")
        return slug[:max_length].rstrip("-") or "untitled"

    # =========================================================================
    # Index Management
    # =========================================================================

    def _get_next_index(self, key: str) -> int:
        """Next index for a kind/name pair; starts at 1."""
        self._counters[key] = self._counters.get(key, 0) + 1
        return self._counters[key]

    def _write(self, path: Path, data: bytes, kind: str, description: str = "") -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        self._entries.append({
            "kind": kind,
            "path": str(path.relative_to(self._get_base_path())),
            "bytes": len(data),
            "description": description,
        })
        logger.debug(f"[REPORT] wrote {path} ({len(data)} bytes)")
        return path

    # =========================================================================
    # Artifacts
    # =========================================================================

    def save_report(self, name: str, report: dict, description: str = "") -> Path:
        """Save a JSON report; returns its path."""
        path = self._build_path("reports", name, "json")
        return self._write(path, to_json_text(report).encode("utf-8"), "report", description)

    def save_table(
        self,
        name: str,
        header: Sequence[str],
        rows: Iterable[Sequence],
        description: str = "",
    ) -> Path:
        """
        Save an RFC-4180 CSV table (CRLF line endings, minimal quoting).
        Numbers keep full precision, so equal inputs give byte-identical files.
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\r\n")
        writer.writerow(list(header))
        count = 0
        for row in rows:
            writer.writerow([_cell(v) for v in row])
            count += 1
        path = self._build_path("tables", name, "csv")
        logger.info(f"[REPORT] table {path.name}: {count} rows")
        return self._write(path, buffer.getvalue().encode("utf-8"), "table", description)

    def save_distribution(self, name: str, dist, description: str = "") -> Path:
        """Save a tabulated distribution: variables plus one probability per configuration."""
        data = {
            "variables": [list(map(list, v)) if isinstance(v[0], tuple) else list(v) for v in dist.variables],
            "exact": bool(dist.exact),
            "probabilities": [
                f"{p.numerator}/{p.denominator}" if isinstance(p, Fraction) else float(p)
                for p in dist.probabilities
            ],
        }
        path = self._build_path("distributions", name, "json")
        return self._write(path, to_json_text(data).encode("utf-8"), "distribution", description)

    def save_samples(self, name: str, samples: Iterable, n_bits: int, description: str = "") -> Path:
        """Save configurations as a packbits dump."""
        path = self._build_path("samples", name, "bin")
        path.parent.mkdir(parents=True, exist_ok=True)
        count = dump_samples(path, samples, n_bits)
        self._entries.append({
            "kind": "sample",
            "path": str(path.relative_to(self._get_base_path())),
            "bytes": path.stat().st_size,
            "description": description or f"{count} samples",
        })
        return path

    def save_image(self, name: str, image_bytes: bytes, description: str = "") -> Path:
        """Save PNG bytes (rendered by utils.render)."""
        path = self._build_path("images", name, "png")
        return self._write(path, image_bytes, "image", description)

    # =========================================================================
    # Manifest
    # =========================================================================

    def save_manifest(self, metadata: Optional[dict] = None) -> Path:
        """
        Write manifest.json listing every artifact of the run.

        Args:
            metadata: Extra fields (command, seed, exit status, ...)
        """
        manifest = {
            "experiment": self.experiment,
            "date": self.run_date.isoformat(),
            "created_at": datetime.now().isoformat(timespec="seconds"),
            "artifact_count": len(self._entries),
            "artifacts": list(self._entries),
        }
        if metadata:
            manifest["metadata"] = metadata
        path = self._build_manifest_path()
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(to_json_text(manifest), encoding="utf-8")
        logger.info(f"[REPORT] manifest: {len(self._entries)} artifacts in {self._get_base_path()}")
        return path

    def get_manifest(self) -> Optional[dict]:
        path = self._build_manifest_path()
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def get_report(self, relative_path: str) -> Optional[dict]:
        path = self._get_base_path() / relative_path
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    # =========================================================================
    # Utility Methods
    # =========================================================================

    def test_connection(self) -> bool:
        """Check that the output directory can be created and written."""
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            marker = self.root / ".write-test"
            marker.write_text("ok", encoding="utf-8")
            marker.unlink()
            return True
        except OSError as e:
            logger.error(f"[REPORT] output directory {self.root} is not writable: {e}")
            return False
