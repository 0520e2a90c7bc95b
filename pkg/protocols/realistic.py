"""Realistic evaluation: pick the D1 model without D2, then retrain without D1."""
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

from data.labeled_set import GuardedSet
from data.tasks import TaskSpec
from ewc.penalty import ConsolidationState, lambda_from_retrain_rate
from models.model_manager import model_manager
from nn_core.network import Params, init_network, restore_network
from protocols.executor import map_runs, shared_context
from protocols.hyperparams import HyperParams
from protocols.identity import run_identity
from protocols.records import CURVE_D1, CURVE_D2, CURVE_UNION, Curve, Paradigm, RunRecord, RunStage
from protocols.runs import RunContext, experiment_identity, failed_record, initial_seeds, new_record, retrain_seed, run_id_for
from protocols.selection import EvaluationResult, realistic_from_records, realistic_quality, select_initial
from protocols.training import TrainingSettings, train_phase
from utils.errors import D1AccessError
from utils.logging_config import logger


@dataclass(frozen=True)
class InitialJob:
    context: RunContext
    hyperparams: HyperParams


@dataclass(frozen=True)
class RetrainJob:
    context: RunContext
    hyperparams: HyperParams
    parent_run_id: str
    parent_curve: Curve
    snapshot: Params
    consolidation: Optional[ConsolidationState] = None


def run_initial_point(job: InitialJob) -> Tuple[RunRecord, Optional[Params]]:
    """
    D1 training of one phase-1 grid point.

    Returns:
        (record, parameters at the best chi(D1, D1, t) point); the snapshot
        is None for failed runs
    """
    task: TaskSpec = shared_context()
    context, hp = job.context, job.hyperparams
    store = context.open_store()
    run_id = run_id_for(RunStage.INITIAL, context, task, hp)
    if store is not None and store.has_completed(run_id):
        snapshot = store.load_snapshot(run_id)
        if snapshot is not None:
            logger.info(f"[{run_id}] Reusing stored initial run {hp.label()}")
            return store.load_record(run_id), snapshot

    settings = context.settings
    seeds = initial_seeds(context, task, hp)
    tag = f"[{run_id}]"
    logger.info(f"{tag} Initial training {context.family_name} {task.name} {hp.label()}")
    snapshot = None
    try:
        family = model_manager.get_family(context.family_name)
        state = init_network(family.build_spec(hp), seeds["init"], settings.dtype)
        result = train_phase(
            state, task.d1_train, [task.d1_test], settings.t_max, hp.lr_d1, settings.eval_every,
            seeds["d1_batches"], settings.batch_size, settings.momentum, tag=f"{tag} D1",
        )
        record = new_record(
            run_id, RunStage.INITIAL, context, task, hp, seeds,
            curves={CURVE_D1: result.curves[0]},
            best_iteration=result.best.iteration,
            best_quality=result.best.quality,
            quality=result.best.quality,
        )
        snapshot = result.best.state.params
    except D1AccessError:
        raise
    except Exception as e:
        logger.error(f"{tag} Initial training failed: {e}", exc_info=True)
        record = failed_record(run_id, RunStage.INITIAL, context, task, hp, seeds, e)

    if store is not None:
        if snapshot is not None:
            store.save_snapshot(run_id, snapshot)
        store.save_record(record)
    return record, snapshot


def run_retrain_point(job: RetrainJob) -> RunRecord:
    """Retrain the selected D1 model on D2 with one retraining rate."""
    task: TaskSpec = shared_context()
    context, hp = job.context, job.hyperparams
    store = context.open_store()
    run_id = run_id_for(RunStage.RETRAIN, context, task, hp, parent_run_id=job.parent_run_id)
    if store is not None and store.has_completed(run_id):
        logger.info(f"[{run_id}] Reusing stored retraining run {hp.label()}")
        return store.load_record(run_id)

    settings = context.settings
    seeds = {"experiment": context.seed, "d2_batches": retrain_seed(context, task, hp)}
    tag = f"[{run_id}]"
    logger.info(f"{tag} Retraining {context.family_name} {task.name} {hp.label()} from {job.parent_run_id}")
    try:
        family = model_manager.get_family(context.family_name)
        state = restore_network(family.build_spec(hp), job.snapshot, settings.dtype)
        penalty, ewc_lambda = None, None
        if job.consolidation is not None:
            penalty = job.consolidation.penalty_for(hp.lr_d2)
            ewc_lambda = lambda_from_retrain_rate(hp.lr_d2)
        result = train_phase(
            state, task.d2_train, [task.d2_test, task.union_test], settings.t_max, hp.lr_d2,
            settings.eval_every, seeds["d2_batches"], settings.batch_size, settings.momentum,
            penalty=penalty, iteration_offset=settings.t_max, tag=f"{tag} D2",
        )
        record = new_record(
            run_id, RunStage.RETRAIN, context, task, hp, seeds,
            parent_run_id=job.parent_run_id,
            curves={CURVE_D1: job.parent_curve, CURVE_D2: result.curves[0], CURVE_UNION: result.curves[1]},
            ewc_lambda=ewc_lambda,
        )
        quality, t_e, q_r_star = realistic_quality(record)
        record.quality, record.t_e, record.q_r_star = quality, t_e, q_r_star
    except D1AccessError:
        raise
    except Exception as e:
        logger.error(f"{tag} Retraining failed: {e}", exc_info=True)
        record = failed_record(run_id, RunStage.RETRAIN, context, task, hp, seeds, e, parent_run_id=job.parent_run_id)

    if store is not None:
        store.save_record(record)
    return record


def _consolidate(context: RunContext, task: TaskSpec, parent: RunRecord, snapshot: Params, d1_train: GuardedSet, store) -> ConsolidationState:
    """One-time Fisher capture on D1 for the selected model; the only D1 read after phase 1."""
    key = run_identity({"parent_run_id": parent.run_id, "fisher_samples": context.settings.fisher_samples})
    if store is not None:
        cached = store.load_consolidation(key)
        if cached is not None:
            logger.info(f"Reusing stored consolidation state {key}")
            return cached
    family = model_manager.get_family(context.family_name)
    state = restore_network(family.build_spec(HyperParams.from_dict(parent.hyperparams)), snapshot, context.settings.dtype)
    with d1_train.unlocked():
        consolidation = ConsolidationState.capture(state, d1_train, context.settings.fisher_samples, parent.seeds["fisher"])
    logger.info(f"Captured EWC consolidation state from {parent.run_id} (Fisher total {consolidation.fisher.total():.4g})")
    if store is not None:
        store.save_consolidation(key, consolidation)
    return consolidation


def realistic_eval(
    model_family,
    task: TaskSpec,
    grid_phase1: Sequence[HyperParams],
    retrain_rates: Sequence[float],
    seed: int,
    settings: Optional[TrainingSettings] = None,
    store=None,
    parallel: int = 1,
    experiment_id: Optional[str] = None
) -> EvaluationResult:
    """
    Evaluate a model family the way it could be used in practice.

    Phase 1 trains every (L, S, eps_D1) point on D1 and keeps the snapshot
    with the best chi(D1, D1, t). D1 then becomes unavailable: its train and
    test splits sit behind locked guards, lifted once for the EWC Fisher
    capture. Phase 2 retrains that snapshot on D2 for every eps_D2, stops
    each run at t_E and reports chi(D2, D1uD2, t_E); q* is the best of these.

    Args:
        model_family: Family name or ModelFamily instance
        task: Task to evaluate on
        grid_phase1: Phase-1 grid points (``lr_d2`` unset)
        retrain_rates: eps_D2 values of phase 2
        seed: Experiment seed
        settings: Schedule and numerics (defaults from Config)
        store: Optional RecordStore for persistence and resumption
        parallel: Number of worker processes
        experiment_id: Id written into every record

    Returns:
        EvaluationResult holding phase-1 and phase-2 records

    Raises:
        ValueError: If either grid is empty
        AllRunsFailedError: If every run of a phase failed
        D1AccessError: If D1 is read while unavailable
    """
    grid_phase1 = [point.initial_part() for point in grid_phase1]
    retrain_rates = list(retrain_rates)
    if not grid_phase1 or not retrain_rates:
        raise ValueError("Realistic evaluation needs a phase-1 grid and at least one retraining rate")
    settings = settings or TrainingSettings()
    family_name = model_family if isinstance(model_family, str) else model_family.get_name()
    experiment_id = experiment_id or experiment_identity(
        family_name, task, Paradigm.REALISTIC, seed, settings,
        {"points": [p.as_dict() for p in grid_phase1], "lr_d2": retrain_rates},
    )
    context = RunContext(
        experiment_id=experiment_id,
        paradigm=Paradigm.REALISTIC,
        family_name=family_name,
        seed=seed,
        settings=settings,
        store_root=str(store.root) if store is not None else None,
    )
    d1_train = GuardedSet(task.d1_train, "D1 train")
    d1_test = GuardedSet(task.d1_test, "D1 test")
    guarded = replace(task, d1_train=d1_train, d1_test=d1_test)

    logger.info(f"Realistic evaluation of {family_name} on {task.name}: phase 1 with {len(grid_phase1)} runs")
    outcomes = map_runs(run_initial_point, [InitialJob(context, hp) for hp in grid_phase1], parallel, context=guarded)
    initial_records = [record for record, _ in outcomes]
    parent = select_initial(initial_records)
    snapshot = outcomes[initial_records.index(parent)][1]
    logger.info(
        f"Selected initial model {parent.run_id} ({HyperParams.from_dict(parent.hyperparams).label()}): "
        f"chi(D1, D1) = {parent.best_quality:.4f} at t={parent.best_iteration}"
    )

    d1_train.lock()
    d1_test.lock()
    family = model_manager.get_family(family_name)
    consolidation = _consolidate(context, task, parent, snapshot, d1_train, store) if family.uses_ewc() else None

    base = HyperParams.from_dict(parent.hyperparams)
    jobs = [
        RetrainJob(context, base.with_retrain_rate(rate), parent.run_id, parent.curves[CURVE_D1], snapshot, consolidation)
        for rate in retrain_rates
    ]
    logger.info(f"Realistic phase 2: {len(jobs)} retraining runs")
    retrain_records = map_runs(run_retrain_point, jobs, parallel, context=guarded)

    violations = d1_train.violations + d1_test.violations
    if violations:
        raise D1AccessError(f"D1 was read {violations} times during retraining")
    records = initial_records + retrain_records
    q_star, best = realistic_from_records(retrain_records)
    logger.info(f"Realistic q* = {q_star:.4f} ({best.run_id}, t_E={best.t_e})")
    return EvaluationResult(
        q_star=q_star,
        best_record=best,
        records=records,
        failed=[r for r in records if r.failed],
        d1_violations=violations,
    )
