"""Pieces shared by the prescient and realistic run jobs."""
from dataclasses import dataclass
from typing import Any, Dict, Optional

from data.tasks import TaskSpec
from protocols.hyperparams import HyperParams
from protocols.identity import run_identity, run_seed
from protocols.records import Paradigm, RunRecord, RunStage, RunStatus
from protocols.training import TrainingSettings
from reporting.store import RecordStore


@dataclass(frozen=True)
class RunContext:
    """Per-experiment constants every job of the experiment shares."""
    experiment_id: str
    paradigm: Paradigm
    family_name: str
    seed: int
    settings: TrainingSettings
    store_root: Optional[str] = None

    def open_store(self) -> Optional[RecordStore]:
        return RecordStore(self.store_root) if self.store_root else None


def experiment_identity(family_name: str, task: TaskSpec, paradigm: Paradigm, seed: int, settings: TrainingSettings, grid: Dict[str, Any]) -> str:
    return run_identity({
        "family": family_name,
        "task": task.identity(),
        "paradigm": Paradigm(paradigm).value,
        "seed": seed,
        "settings": settings.as_dict(),
        "grid": grid,
    })


def run_id_for(stage: RunStage, context: RunContext, task: TaskSpec, hyperparams: HyperParams, parent_run_id: Optional[str] = None) -> str:
    """Content address of one run: same configuration, same id."""
    payload = {
        "stage": stage.value,
        "family": context.family_name,
        "task": task.identity(),
        "seed": context.seed,
        "hyperparams": hyperparams.as_dict(),
        "settings": context.settings.as_dict(),
    }
    if parent_run_id is not None:
        payload["parent_run_id"] = parent_run_id
    return run_identity(payload)


def initial_seeds(context: RunContext, task: TaskSpec, hyperparams: HyperParams) -> Dict[str, int]:
    """
    Seeds of D1 training and of the Fisher estimate.

    They depend on the D1 part of the grid point only, so a prescient run and
    the realistic initial run of the same point train identically on D1.
    """
    base = (context.seed, context.family_name, task.identity(), hyperparams.initial_part().as_dict())
    return {
        "experiment": context.seed,
        "init": run_seed("init", *base),
        "d1_batches": run_seed("d1", *base),
        "fisher": run_seed("fisher", *base),
    }


def retrain_seed(context: RunContext, task: TaskSpec, hyperparams: HyperParams) -> int:
    return run_seed("d2", context.seed, context.family_name, task.identity(), hyperparams.as_dict())


def new_record(
    run_id: str,
    stage: RunStage,
    context: RunContext,
    task: TaskSpec,
    hyperparams: HyperParams,
    seeds: Dict[str, int],
    **fields
) -> RunRecord:
    return RunRecord(
        run_id=run_id,
        experiment_id=context.experiment_id,
        paradigm=context.paradigm,
        stage=stage,
        model_family=context.family_name,
        task=task.name,
        hyperparams=hyperparams.as_dict(),
        seeds=seeds,
        t_max=context.settings.t_max,
        eval_every=context.settings.eval_every,
        batch_size=context.settings.batch_size,
        **fields,
    )


def failed_record(run_id: str, stage: RunStage, context: RunContext, task: TaskSpec, hyperparams: HyperParams, seeds: Dict[str, int], error: Exception, **fields) -> RunRecord:
    return new_record(
        run_id, stage, context, task, hyperparams, seeds,
        status=RunStatus.FAILED,
        error=f"{type(error).__name__}: {error}",
        **fields,
    )
