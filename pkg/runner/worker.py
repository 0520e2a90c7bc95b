"""Experiment worker: one (model family, task, paradigm, seed) experiment end to end."""
import shutil
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from data.idx import get_mnist
from data.labeled_set import LabeledSet
from data.tasks import build_task
from models.model_manager import model_manager
from protocols.hyperparams import GridOverrides, phase1_grid, prescient_grid, retrain_rates
from protocols.prescient import prescient_eval
from protocols.realistic import realistic_eval
from protocols.records import ExperimentSummary, Paradigm, RunStatus
from protocols.runs import experiment_identity
from protocols.selection import EvaluationResult, chance_level
from protocols.training import TrainingSettings
from reporting.store import RecordStore, experiment_dir_name
from utils.config import Config
from utils.errors import AllRunsFailedError, BenchmarkError
from utils.logging_config import logger


def grid_axes(family, overrides: Optional[GridOverrides]) -> Dict[str, List]:
    """Grid axes of a family as recorded in the summary."""
    axes = (overrides or GridOverrides()).axes()
    if family.fixed_topology():
        axes = {"lr_d1": axes["lr_d1"], "lr_d2": axes["lr_d2"]}
    return {name: list(values) for name, values in axes.items()}


class ExperimentWorker:
    """Runs experiments and tracks their progress in ``status.json``."""

    def __init__(self, out_dir=None, data_dir=None, parallel: int = 1):
        """
        Args:
            out_dir: Records root (``Config.OUTPUT_PATH`` if None)
            data_dir: MNIST directory (``FCB_DATA_DIR`` if None)
            parallel: Worker processes per experiment
        """
        self.out_dir = Path(out_dir) if out_dir else Config.OUTPUT_PATH
        self.data_dir = Config.get_data_dir(data_dir)
        self.parallel = max(1, int(parallel))

    def experiment_store(self, family_name: str, task_name: str, paradigm: Paradigm, seed: int) -> RecordStore:
        return RecordStore(self.out_dir / experiment_dir_name(family_name, task_name, paradigm, seed))

    def load_data(self, data: Optional[Tuple[LabeledSet, LabeledSet]] = None) -> Tuple[LabeledSet, LabeledSet]:
        if data is not None:
            return data
        if self.data_dir is None:
            raise FileNotFoundError("No MNIST directory given; pass --data-dir or set FCB_DATA_DIR")
        return get_mnist(self.data_dir)

    def run_experiment(
        self,
        family_name: str,
        task_name: str,
        paradigm: Paradigm,
        seed: int,
        settings: Optional[TrainingSettings] = None,
        overrides: Optional[GridOverrides] = None,
        permute_d1: bool = False,
        fresh: bool = False,
        data: Optional[Tuple[LabeledSet, LabeledSet]] = None
    ) -> ExperimentSummary:
        """
        Execute one experiment and write its summary.

        Args:
            family_name: Model family name
            task_name: Task preset
            paradigm: prescient or realistic
            seed: Experiment seed
            settings: Schedule and numerics
            overrides: Grid axis replacements
            permute_d1: Permute D1 as well on DP10-10
            fresh: Discard stored runs instead of resuming from them
            data: Preloaded (train, test) MNIST splits

        Returns:
            ExperimentSummary (status failed when every run failed)

        Raises:
            UnknownPresetError: For unknown family or task names
            FileNotFoundError: If the MNIST files cannot be found
        """
        paradigm = Paradigm(paradigm)
        settings = settings or TrainingSettings()
        family = model_manager.get_family(family_name)
        store = self.experiment_store(family_name, task_name, paradigm, seed)
        tag = f"[{family_name}/{task_name}/{paradigm.value}/seed{seed}]"
        if fresh:
            self._clear(store)
        try:
            self._update_status(store, "processing", progress=0.0, message="Loading data")
            logger.info(f"{tag} Step 1: Loading MNIST")
            train, test = self.load_data(data)

            logger.info(f"{tag} Step 2: Building task")
            task = build_task(task_name, train, test, seed=seed, permute_d1=permute_d1)
            axes = grid_axes(family, overrides)
            experiment_id = experiment_identity(family_name, task, paradigm, seed, settings, axes)
            self._update_status(store, "processing", progress=10.0, message=f"Task {task.name} built", experiment_id=experiment_id)

            logger.info(f"{tag} Step 3: Running {paradigm.value} evaluation")
            summary = ExperimentSummary(
                experiment_id=experiment_id,
                model_family=family_name,
                task=task.name,
                paradigm=paradigm,
                seed=seed,
                settings=settings.as_dict(),
                grid=axes,
                chance_level=chance_level(task),
            )
            try:
                result = self._evaluate(family, task, paradigm, seed, settings, overrides, store, experiment_id)
            except AllRunsFailedError as e:
                logger.error(f"{tag} Every run failed: {e}")
                records, _ = store.list_records()
                summary.run_ids = sorted(r.run_id for r in records if r.experiment_id == experiment_id)
                summary.failed_run_ids = list(summary.run_ids)
                summary.status = RunStatus.FAILED
                summary.error = str(e)
            else:
                summary.q_star = result.q_star
                summary.best_run_id = result.best_record.run_id
                summary.run_ids = [r.run_id for r in result.records]
                summary.failed_run_ids = [r.run_id for r in result.failed]

            logger.info(f"{tag} Step 4: Writing summary")
            store.save_summary(summary)
            self._update_status(
                store,
                summary.status.value,
                progress=100.0,
                message=f"q* = {summary.q_star}" if summary.q_star is not None else summary.error,
                experiment_id=experiment_id,
            )
            logger.info(f"{tag} Experiment finished: q* = {summary.q_star}, chance {summary.chance_level:g}")
            return summary

        except (BenchmarkError, FileNotFoundError, ValueError) as e:
            logger.error(f"{tag} Experiment failed: {e}", exc_info=True)
            self._update_status(store, "failed", message=f"Experiment failed: {e}", error=str(e))
            raise

    def _evaluate(self, family, task, paradigm, seed, settings, overrides, store, experiment_id) -> EvaluationResult:
        if paradigm is Paradigm.PRESCIENT:
            return prescient_eval(
                family, task, prescient_grid(family, overrides), seed,
                settings=settings, store=store, parallel=self.parallel, experiment_id=experiment_id,
            )
        return realistic_eval(
            family, task, phase1_grid(family, overrides), retrain_rates(overrides), seed,
            settings=settings, store=store, parallel=self.parallel, experiment_id=experiment_id,
        )

    @staticmethod
    def _clear(store: RecordStore):
        for directory in (store.runs_dir, store.curves_dir, store.snapshots_dir, store.consolidation_dir):
            if directory.exists():
                shutil.rmtree(directory)

    @staticmethod
    def _update_status(
        store: RecordStore,
        status: str,
        progress: Optional[float] = None,
        message: Optional[str] = None,
        **fields
    ):
        """Update the experiment's status.json."""
        previous = store.read_status() or {}
        payload = {key: value for key, value in previous.items() if key not in ("status", "updated_at")}
        if progress is not None:
            payload["progress"] = progress
        if message is not None:
            payload["message"] = message
        payload.update(fields)
        store.write_status(status, **payload)

