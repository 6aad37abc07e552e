# ABOUTME: Artifact persistence for experiment runs
# ABOUTME: Writes hash-stamped CSV tables, the PASS/FAIL summary and the JSON run manifest

import csv
import json
import logging
import math
import time
from collections.abc import Iterable, Sequence
from datetime import UTC, datetime
from pathlib import Path

from cocyclelab import __version__
from cocyclelab.experiments.verdict import Criterion

logger = logging.getLogger(__name__)

Cell = str | int | float | bool | None


def format_cell(value: Cell) -> str:
    """CSV text of one cell: 17 significant digits for floats, lowercase booleans."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


class ArtifactWriter:
    """
    Owns an output directory and everything one command writes into it.

    CSV bodies depend only on the config and the seed; timestamps and
    timings go to manifest.json alone.
    """

    def __init__(self, out_dir: Path, config_hash: str, command: str):
        """
        Initialize the writer.

        Args:
            out_dir: Output directory, created if missing
            config_hash: SHA-256 of the canonical config, stamped on every CSV
            command: Command name recorded in the manifest (e.g. "verify be")
        """
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.config_hash = config_hash
        self.command = command
        self.outputs: dict[str, str] = {}
        self.timings: dict[str, float] = {}

    def write_csv(
        self, name: str, header: Sequence[str], rows: Iterable[Sequence[Cell]]
    ) -> Path:
        """
        Write one table with a leading `# config_hash=` comment line.

        Args:
            name: File name inside the output directory
            header: Column names
            rows: Row values, formatted by format_cell

        Returns:
            Path of the written file
        """
        path = self.out_dir / name
        with path.open("w", encoding="utf-8", newline="") as f:
            f.write(f"# config_hash={self.config_hash}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            count = 0
            for row in rows:
                writer.writerow([format_cell(v) for v in row])
                count += 1
        self.outputs[Path(name).stem] = name
        logger.info(f"Wrote {path} ({count} rows)")
        return path

    def write_summary(self, criteria: Sequence[Criterion]) -> Path:
        """Write summary.txt with one verdict line per criterion."""
        path = self.out_dir / "summary.txt"
        lines = [c.summary_line() for c in criteria]
        path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
        self.outputs["summary"] = "summary.txt"
        for line in lines:
            logger.info(line)
        return path

    def timed(self, label: str) -> "_Timer":
        """Context manager recording the wall-clock time of a stage."""
        return _Timer(self, label)

    def write_manifest(self) -> Path:
        """Write manifest.json: hash, version, command, outputs, timings and a UTC timestamp."""
        manifest = {
            "config_hash": self.config_hash,
            "tool_version": __version__,
            "command": self.command,
            "outputs": dict(sorted(self.outputs.items())),
            "timings_seconds": {k: round(v, 6) for k, v in self.timings.items()},
            "created_utc": datetime.now(UTC).isoformat(timespec="seconds"),
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        logger.info(f"Wrote manifest {path}")
        return path


class _Timer:
    def __init__(self, writer: ArtifactWriter, label: str):
        self.writer = writer
        self.label = label
        self.start = 0.0

    def __enter__(self) -> "_Timer":
        self.start = time.perf_counter()
        logger.info(f"Starting {self.label}")
        return self

    def __exit__(self, *exc) -> None:
        elapsed = time.perf_counter() - self.start
        self.writer.timings[self.label] = elapsed
        logger.info(f"Finished {self.label} in {elapsed:.2f}s")
