import csv
import enum
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence
import logging

import numpy as np

from app.config import settings
from schemas.experiment import RunManifest

logger = logging.getLogger(__name__)


def format_cell(value: Any) -> str:
    """Shortest round-trip text for floats, lower-case booleans, empty for None"""
    if isinstance(value, np.generic):
        value = value.item()
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, enum.Enum):
        return str(value.value)
    return str(value)


class ReportStore:
    """
    Output directory of one run: CSV reports, the manifest and edge lists.
    """

    def __init__(self, output_dir: Optional[str] = None):
        """
        Initialize the report store.

        Args:
            output_dir: Target directory (uses settings.output_dir if not provided)
        """
        self.output_dir = Path(output_dir or settings.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[str] = []
        logger.info(f"Writing reports to {self.output_dir.absolute()}")

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
        """
        Write one CSV report.

        Args:
            name: File name, e.g. "deloc_survey.csv"
            header: Column names
            rows: Row values in header order

        Returns:
            Number of data rows written
        """
        path = self.output_dir / name
        count = 0
        try:
            with open(path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    if len(row) != len(header):
                        raise ValueError(f"{name}: row has {len(row)} values, header has {len(header)}")
                    writer.writerow([format_cell(v) for v in row])
                    count += 1
        except Exception as e:
            logger.error(f"Failed to write {path}: {e}")
            raise
        self.written.append(name)
        logger.info(f"Wrote {count} rows to {name}")
        return count

    def write_manifest(self, manifest: RunManifest) -> Path:
        path = self.output_dir / "manifest.json"
        with open(path, "w", encoding="utf-8") as f:
            f.write(manifest.model_dump_json(indent=2))
            f.write("\n")
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self.output_dir / name
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        self.written.append(name)
        return path

    def read_csv(self, name: str) -> List[List[str]]:
        with open(self.output_dir / name, newline="", encoding="utf-8") as f:
            return list(csv.reader(f))


def read_text(path: str) -> str:
    """Read an input file (config or edge list)"""
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    with open(file_path, "r", encoding="utf-8") as f:
        return f.read()
