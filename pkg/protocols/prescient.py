"""Prescient evaluation: select on the union test set over the whole grid."""
from dataclasses import dataclass
from typing import Optional, Sequence

from data.tasks import TaskSpec
from ewc.penalty import ConsolidationState, lambda_from_retrain_rate
from models.model_manager import model_manager
from nn_core.network import copy_network, init_network
from protocols.executor import map_runs, shared_context
from protocols.hyperparams import HyperParams
from protocols.records import CURVE_D1, CURVE_D2, CURVE_UNION, Paradigm, RunRecord, RunStage
from protocols.runs import RunContext, experiment_identity, failed_record, initial_seeds, new_record, retrain_seed, run_id_for
from protocols.selection import EvaluationResult, prescient_from_records, prescient_quality
from protocols.training import TrainingSettings, train_phase
from utils.errors import D1AccessError
from utils.logging_config import logger


@dataclass(frozen=True)
class PrescientJob:
    context: RunContext
    hyperparams: HyperParams


def _family_name(model_family) -> str:
    return model_family if isinstance(model_family, str) else model_family.get_name()


def run_prescient_point(job: PrescientJob) -> RunRecord:
    """
    Train on D1, retrain on D2 and record all three curves for one grid point.

    Runs found completed in the store are loaded instead of retrained.
    Failures are returned as failed records.
    """
    task: TaskSpec = shared_context()
    context, hp = job.context, job.hyperparams
    store = context.open_store()
    run_id = run_id_for(RunStage.FULL, context, task, hp)
    if store is not None and store.has_completed(run_id):
        logger.info(f"[{run_id}] Reusing stored run {hp.label()}")
        return store.load_record(run_id)

    settings = context.settings
    seeds = initial_seeds(context, task, hp)
    seeds["d2_batches"] = retrain_seed(context, task, hp)
    tag = f"[{run_id}]"
    logger.info(f"{tag} Prescient run {context.family_name} {task.name} {hp.label()}")
    try:
        family = model_manager.get_family(context.family_name)
        state = init_network(family.build_spec(hp), seeds["init"], settings.dtype)
        initial = train_phase(
            state, task.d1_train, [task.d1_test], settings.t_max, hp.lr_d1, settings.eval_every,
            seeds["d1_batches"], settings.batch_size, settings.momentum, tag=f"{tag} D1",
        )
        state = copy_network(initial.state, reset_momentum=True)
        penalty, ewc_lambda = None, None
        if family.uses_ewc():
            consolidation = ConsolidationState.capture(state, task.d1_train, settings.fisher_samples, seeds["fisher"])
            penalty = consolidation.penalty_for(hp.lr_d2)
            ewc_lambda = lambda_from_retrain_rate(hp.lr_d2)
        retrain = train_phase(
            state, task.d2_train, [task.union_test, task.d2_test], settings.t_max, hp.lr_d2,
            settings.eval_every, seeds["d2_batches"], settings.batch_size, settings.momentum,
            penalty=penalty, iteration_offset=settings.t_max, tag=f"{tag} D2",
        )
        record = new_record(
            run_id, RunStage.FULL, context, task, hp, seeds,
            curves={CURVE_D1: initial.curves[0], CURVE_UNION: retrain.curves[0], CURVE_D2: retrain.curves[1]},
            best_iteration=initial.best.iteration,
            best_quality=initial.best.quality,
            ewc_lambda=ewc_lambda,
        )
        record.quality = prescient_quality(record)
    except D1AccessError:
        raise
    except Exception as e:
        logger.error(f"{tag} Run failed: {e}", exc_info=True)
        record = failed_record(run_id, RunStage.FULL, context, task, hp, seeds, e)

    if store is not None:
        store.save_record(record)
    return record


def prescient_eval(
    model_family,
    task: TaskSpec,
    grid: Sequence[HyperParams],
    seed: int,
    settings: Optional[TrainingSettings] = None,
    store=None,
    parallel: int = 1,
    experiment_id: Optional[str] = None
) -> EvaluationResult:
    """
    Evaluate a model family with knowledge of the union test set.

    Every grid point (including the retraining rate) is trained on D1 and
    retrained on D2; q* is the best union-test accuracy any run reaches at
    any evaluation point of retraining.

    Args:
        model_family: Family name or ModelFamily instance
        task: Task to evaluate on
        grid: Full grid points, each with ``lr_d2`` set
        seed: Experiment seed
        settings: Schedule and numerics (defaults from Config)
        store: Optional RecordStore for persistence and resumption
        parallel: Number of worker processes
        experiment_id: Id written into every record

    Returns:
        EvaluationResult with q* and every run record

    Raises:
        ValueError: If the grid is empty or lacks retraining rates
        AllRunsFailedError: If no run completed
    """
    grid = list(grid)
    if not grid:
        raise ValueError("Prescient grid is empty")
    if any(point.lr_d2 is None for point in grid):
        raise ValueError("Every prescient grid point needs a retraining rate")
    settings = settings or TrainingSettings()
    family_name = _family_name(model_family)
    experiment_id = experiment_id or experiment_identity(
        family_name, task, Paradigm.PRESCIENT, seed, settings, {"points": [p.as_dict() for p in grid]}
    )
    context = RunContext(
        experiment_id=experiment_id,
        paradigm=Paradigm.PRESCIENT,
        family_name=family_name,
        seed=seed,
        settings=settings,
        store_root=str(store.root) if store is not None else None,
    )
    logger.info(f"Prescient evaluation of {family_name} on {task.name}: {len(grid)} runs")
    records = map_runs(run_prescient_point, [PrescientJob(context, hp) for hp in grid], parallel, context=task)
    failed = [r for r in records if r.failed]
    q_star, best = prescient_from_records(records)
    logger.info(f"Prescient q* = {q_star:.4f} ({best.run_id}, {HyperParams.from_dict(best.hyperparams).label()})")
    return EvaluationResult(q_star=q_star, best_record=best, records=records, failed=failed)
