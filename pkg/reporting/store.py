"""On-disk persistence of run records, curves, snapshots and summaries."""
import csv
import json
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from ewc.fisher import AnchorParams, FisherDiag
from ewc.penalty import ConsolidationState
from nn_core.network import Params
from protocols.records import CURVE_ORDER, ExperimentSummary, Paradigm, RunRecord
from utils.errors import RecordError
from utils.logging_config import logger

SUMMARY_FILE = "summary.json"
STATUS_FILE = "status.json"


def experiment_dir_name(model_family: str, task: str, paradigm, seed: int) -> str:
    """``<family>__<task>__<paradigm>__seed<k>``"""
    return f"{model_family}__{task}__{Paradigm(paradigm).value}__seed{seed}"


def _save_params(path: Path, params: Params, prefix: str = ""):
    arrays = {
        f"{prefix}{index}.{name}": value
        for index, layer in enumerate(params)
        for name, value in layer.items()
    }
    arrays[f"{prefix}layers"] = np.asarray(len(params))
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(path, **arrays)


def _read_params(archive, prefix: str = "") -> Params:
    params: Params = [dict() for _ in range(int(archive[f"{prefix}layers"]))]
    for key in archive.files:
        if not key.startswith(prefix) or key == f"{prefix}layers":
            continue
        index, name = key[len(prefix):].split(".", 1)
        params[int(index)][name] = archive[key]
    return params


class RecordStore:
    """
    Files of one experiment directory.

    Layout::

        summary.json  status.json
        runs/<run_id>.json  curves/<run_id>.csv
        snapshots/<run_id>.npz  consolidation/<key>.npz  plots/
    """

    def __init__(self, root):
        self.root = Path(root)
        self.runs_dir = self.root / "runs"
        self.curves_dir = self.root / "curves"
        self.snapshots_dir = self.root / "snapshots"
        self.consolidation_dir = self.root / "consolidation"
        self.plots_dir = self.root / "plots"

    def ensure_directories(self):
        for directory in (self.runs_dir, self.curves_dir, self.snapshots_dir, self.consolidation_dir, self.plots_dir):
            directory.mkdir(parents=True, exist_ok=True)

    # Run records

    def record_path(self, run_id: str) -> Path:
        return self.runs_dir / f"{run_id}.json"

    def save_record(self, record: RunRecord) -> Path:
        """Write the record JSON and its curves CSV."""
        self.ensure_directories()
        path = self.record_path(record.run_id)
        path.write_text(record.model_dump_json(indent=2))
        with open(self.curves_dir / f"{record.run_id}.csv", "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["iteration", "curve_name", "accuracy"])
            for name in CURVE_ORDER:
                curve = record.curves.get(name)
                if curve is None:
                    continue
                for iteration, acc in zip(curve.iterations, curve.accuracies):
                    writer.writerow([iteration, name, repr(acc)])
        logger.debug(f"Saved run record {path}")
        return path

    def load_record(self, run_id: str) -> RunRecord:
        return load_record_file(self.record_path(run_id))

    def has_completed(self, run_id: str) -> bool:
        """Whether a readable, completed record exists for ``run_id``."""
        if not self.record_path(run_id).exists():
            return False
        try:
            return not self.load_record(run_id).failed
        except RecordError as e:
            logger.warning(f"Ignoring unreadable record {run_id}: {e}")
            return False

    def list_records(self) -> Tuple[List[RunRecord], List[Path]]:
        """All readable records (sorted by run id) and the paths of corrupt ones."""
        records, corrupt = [], []
        if not self.runs_dir.exists():
            return records, corrupt
        for path in sorted(self.runs_dir.glob("*.json")):
            try:
                records.append(load_record_file(path))
            except RecordError as e:
                logger.warning(str(e))
                corrupt.append(path)
        return records, corrupt

    # Parameter snapshots

    def snapshot_path(self, run_id: str) -> Path:
        return self.snapshots_dir / f"{run_id}.npz"

    def save_snapshot(self, run_id: str, params: Params) -> Path:
        path = self.snapshot_path(run_id)
        _save_params(path, params)
        return path

    def load_snapshot(self, run_id: str) -> Optional[Params]:
        path = self.snapshot_path(run_id)
        if not path.exists():
            return None
        try:
            with np.load(path) as archive:
                return _read_params(archive)
        except (OSError, KeyError, ValueError) as e:
            logger.warning(f"Ignoring unreadable snapshot {path}: {e}")
            return None

    def save_consolidation(self, key: str, consolidation: ConsolidationState) -> Path:
        path = self.consolidation_dir / f"{key}.npz"
        anchor = {f"anchor.{k}": v for k, v in _flatten(consolidation.anchor.values).items()}
        fisher = {f"fisher.{k}": v for k, v in _flatten(consolidation.fisher.values).items()}
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez_compressed(
            path,
            n_samples=np.asarray(consolidation.fisher.n_samples),
            layers=np.asarray(len(consolidation.anchor.values)),
            **anchor,
            **fisher,
        )
        return path

    def load_consolidation(self, key: str) -> Optional[ConsolidationState]:
        path = self.consolidation_dir / f"{key}.npz"
        if not path.exists():
            return None
        try:
            with np.load(path) as archive:
                layers = int(archive["layers"])
                anchor: Params = [dict() for _ in range(layers)]
                fisher: Params = [dict() for _ in range(layers)]
                for key_name in archive.files:
                    group, _, rest = key_name.partition(".")
                    if group not in ("anchor", "fisher"):
                        continue
                    index, name = rest.split(".", 1)
                    (anchor if group == "anchor" else fisher)[int(index)][name] = archive[key_name]
                return ConsolidationState(
                    anchor=AnchorParams(anchor),
                    fisher=FisherDiag(fisher, int(archive["n_samples"])),
                )
        except (OSError, KeyError, ValueError) as e:
            logger.warning(f"Ignoring unreadable consolidation state {path}: {e}")
            return None

    # Experiment summary and status

    def save_summary(self, summary: ExperimentSummary) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / SUMMARY_FILE
        path.write_text(summary.model_dump_json(indent=2))
        return path

    def load_summary(self) -> ExperimentSummary:
        return load_summary_file(self.root / SUMMARY_FILE)

    def write_status(self, status: str, **fields):
        """status.json is the only file that carries wall-clock timestamps."""
        self.root.mkdir(parents=True, exist_ok=True)
        payload = {"status": status, "updated_at": datetime.now().isoformat(), **fields}
        (self.root / STATUS_FILE).write_text(json.dumps(payload, indent=2))

    def read_status(self) -> Optional[Dict]:
        path = self.root / STATUS_FILE
        if not path.exists():
            return None
        return json.loads(path.read_text())


def _flatten(params: Params) -> Dict[str, np.ndarray]:
    return {f"{index}.{name}": value for index, layer in enumerate(params) for name, value in layer.items()}


def load_record_file(path) -> RunRecord:
    """
    Read one run record.

    Raises:
        RecordError: If the file is missing, not JSON or fails validation
    """
    path = Path(path)
    try:
        return RunRecord.model_validate_json(path.read_text())
    except FileNotFoundError as e:
        raise RecordError(f"Run record {path} does not exist") from e
    except (ValidationError, ValueError, OSError) as e:
        raise RecordError(f"Corrupt run record {path}: {e}") from e


def load_summary_file(path) -> ExperimentSummary:
    path = Path(path)
    try:
        return ExperimentSummary.model_validate_json(path.read_text())
    except FileNotFoundError as e:
        raise RecordError(f"Experiment summary {path} does not exist") from e
    except (ValidationError, ValueError, OSError) as e:
        raise RecordError(f"Corrupt experiment summary {path}: {e}") from e


def find_experiments(out_dir) -> List[Path]:
    """Experiment directories below ``out_dir`` that hold a summary."""
    out_dir = Path(out_dir)
    if not out_dir.exists():
        return []
    return sorted(path.parent for path in out_dir.glob(f"*/{SUMMARY_FILE}"))
