"""
Output directory management: run metadata and the incremental results CSV
"""
import csv
import json
import logging
import time
from pathlib import Path
from typing import Any, Dict, Optional

from src.errors import FormatError
from src.models.records import CSV_COLUMNS, RunRecord
from src.utils.rng import PRNG_NAME

logger = logging.getLogger(__name__)

RESULTS_FILE = "results.csv"
METADATA_FILE = "metadata.json"
EMBEDDINGS_DIR = "embeddings"


class RunStore:
    """Manages one sweep's output directory"""

    def __init__(self, out_dir: str = "./runs"):
        """
        Initialize run store

        Args:
            out_dir: Directory that receives results.csv, metadata.json and embeddings
        """
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"Initialized RunStore at {self.out_dir}")

    @property
    def results_path(self) -> Path:
        return self.out_dir / RESULTS_FILE

    @property
    def metadata_path(self) -> Path:
        return self.out_dir / METADATA_FILE

    def start(self, config: Dict[str, Any], dataset_shape: tuple[int, int]):
        """
        Begin a sweep: truncate the CSV to its header and write fresh metadata

        Args:
            config: Serialized SweepConfig
            dataset_shape: (N, d) after subsampling
        """
        with open(self.results_path, "w", newline="") as f:
            csv.writer(f).writerow(CSV_COLUMNS)

        self._save_metadata({
            "status": "running",
            "config": config,
            "dataset_shape": list(dataset_shape),
            "prng": PRNG_NAME,
            "started_at": time.strftime("%Y-%m-%d %H:%M:%S"),
            "finished_at": None,
            "completed_runs": 0,
            "failed_runs": 0,
        })
        logger.info(f"Started sweep in {self.out_dir}")

    def append(self, record: RunRecord):
        """Append one run to the CSV as soon as it completes"""
        with open(self.results_path, "a", newline="") as f:
            csv.writer(f).writerow(record.to_csv_row())

        metadata = self._load_metadata()
        key = "failed_runs" if record.failed else "completed_runs"
        metadata[key] = metadata.get(key, 0) + 1
        self._save_metadata(metadata)
        logger.debug(f"Appended {record.reducer} d'={record.d_prime} to {self.results_path}")

    def finish(self, status: str = "completed"):
        """Mark the sweep finished"""
        metadata = self._load_metadata()
        metadata["status"] = status
        metadata["finished_at"] = time.strftime("%Y-%m-%d %H:%M:%S")
        self._save_metadata(metadata)
        logger.info(f"Sweep status: {status}")

    def embedding_path(self, reducer: str, d_prime: int, repeat: int) -> str:
        """Where the embedding of one run is saved"""
        return str(self.out_dir / EMBEDDINGS_DIR / f"{reducer}_d{d_prime}_r{repeat}.f64")

    def read_records(self, k: int = 1) -> list[RunRecord]:
        """
        Parse the results CSV back into RunRecords

        Args:
            k: Neighbour count to attach to the accuracy reports

        Returns:
            Records in file order
        """
        return read_results(str(self.results_path), k=k)

    def get_metadata(self) -> Dict[str, Any]:
        """
        Get sweep metadata

        Returns:
            Metadata dictionary (status "unknown" when none was written)
        """
        return self._load_metadata()

    def _load_metadata(self) -> Dict[str, Any]:
        """Load metadata from JSON file"""
        if not self.metadata_path.exists():
            return {"status": "unknown"}

        try:
            with open(self.metadata_path, 'r') as f:
                return json.load(f)
        except Exception as e:
            logger.error(f"Error loading metadata from {self.metadata_path}: {str(e)}")
            return {"status": "error"}

    def _save_metadata(self, metadata: Dict[str, Any]):
        """Save metadata to JSON file"""
        try:
            with open(self.metadata_path, 'w') as f:
                json.dump(metadata, indent=2, fp=f)
        except Exception as e:
            logger.error(f"Error saving metadata to {self.metadata_path}: {str(e)}")
            raise


def read_results(path: str, k: int = 1) -> list[RunRecord]:
    """Read a results CSV written by RunStore"""
    if not Path(path).exists():
        raise FileNotFoundError(f"Results file not found: {path}")
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    try:
        return [RunRecord.from_csv_row(row, k=k) for row in rows]
    except (KeyError, ValueError) as e:
        raise FormatError(f"{path}: malformed results row ({e})")


def find_baseline(records: list[RunRecord]) -> Optional[RunRecord]:
    """First completed unreduced run, if any"""
    return next((r for r in records if r.reducer == "none" and not r.failed), None)
