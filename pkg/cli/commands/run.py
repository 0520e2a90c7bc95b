"""``run``: one (model, task, paradigm, seed) experiment."""
from cli.options import add_experiment_options, experiment_values
from cli.schemas import ExperimentConfig
from protocols.records import Paradigm, RunStatus
from runner.worker import ExperimentWorker
from utils.errors import ConfigError


def add_parser(subparsers):
    parser = subparsers.add_parser("run", help="Run a single experiment from scratch")
    parser.add_argument("--model", help="Model family (EWC, fc, D-fc, conv, D-conv, LWTA)")
    parser.add_argument("--task", help="Task preset (D5-5a..h, D9-1a..c, DP10-10)")
    parser.add_argument("--paradigm", choices=[p.value for p in Paradigm])
    parser.add_argument("--seed", type=int)
    parser.add_argument("--resume", action="store_true", help="Reuse runs stored by an earlier invocation")
    add_experiment_options(parser)


def execute(args) -> int:
    values = experiment_values(args)
    values.update({
        "models": [args.model] if args.model else None,
        "tasks": [args.task] if args.task else None,
        "paradigms": [args.paradigm] if args.paradigm else None,
        "seeds": [args.seed] if args.seed is not None else None,
    })
    config = ExperimentConfig.resolve(args.config, values)
    config.check_names()
    if max(len(config.models), len(config.tasks), len(config.paradigms), len(config.seeds)) > 1:
        raise ConfigError("run executes exactly one experiment; use grid for several")

    worker = ExperimentWorker(config.out_dir, config.data_dir, config.parallel)
    summary = worker.run_experiment(
        config.models[0],
        config.tasks[0],
        config.paradigms[0],
        config.seeds[0],
        settings=config.training_settings(),
        overrides=config.grid.to_overrides(),
        permute_d1=config.permute_d1,
        fresh=not args.resume,
    )
    store = worker.experiment_store(summary.model_family, summary.task, summary.paradigm, summary.seed)
    if summary.status is RunStatus.FAILED:
        print(f"Experiment failed: {summary.error} ({store.root})")
        return 1
    print(f"q* = {summary.q_star:.4f} (chance {summary.chance_level:g}), best run {summary.best_run_id}")
    print(f"Records written to {store.root}")
    return 0
