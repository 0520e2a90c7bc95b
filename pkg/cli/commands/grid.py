"""``grid``: resumable batch over models, tasks, paradigms and seeds."""
from itertools import product

from cli.options import add_experiment_options, experiment_values
from cli.schemas import ExperimentConfig
from protocols.records import Paradigm, RunStatus
from runner.worker import ExperimentWorker
from utils.errors import BenchmarkError
from utils.logging_config import logger


def add_parser(subparsers):
    parser = subparsers.add_parser("grid", help="Run every experiment of a batch, skipping stored runs")
    parser.add_argument("--model", dest="models", nargs="+", help="Model families")
    parser.add_argument("--task", dest="tasks", nargs="+", help="Task presets")
    parser.add_argument("--paradigm", dest="paradigms", nargs="+", choices=[p.value for p in Paradigm])
    parser.add_argument("--seed", "--seeds", dest="seeds", type=int, nargs="+", help="Experiment seeds")
    parser.add_argument("--fresh", action="store_true", help="Discard stored runs first")
    add_experiment_options(parser)


def execute(args) -> int:
    values = experiment_values(args)
    values.update({"models": args.models, "tasks": args.tasks, "paradigms": args.paradigms, "seeds": args.seeds})
    config = ExperimentConfig.resolve(args.config, values)
    config.check_names()

    worker = ExperimentWorker(config.out_dir, config.data_dir, config.parallel)
    experiments = list(product(config.models, config.tasks, config.paradigms, config.seeds))
    settings = config.training_settings()
    overrides = config.grid.to_overrides()
    failures = 0
    for index, (model, task, paradigm, seed) in enumerate(experiments, start=1):
        logger.info(f"[{index}/{len(experiments)}] {model} on {task}, {paradigm.value}, seed {seed}")
        try:
            summary = worker.run_experiment(
                model, task, paradigm, seed,
                settings=settings,
                overrides=overrides,
                permute_d1=config.permute_d1,
                fresh=args.fresh,
            )
        except BenchmarkError as e:
            logger.error(f"[{index}/{len(experiments)}] Experiment failed: {e}")
            failures += 1
            continue
        if summary.status is RunStatus.FAILED:
            failures += 1
        else:
            print(f"{model:7s} {task:8s} {paradigm.value:10s} seed {seed}: q* = {summary.q_star:.4f}")
    print(f"{len(experiments) - failures}/{len(experiments)} experiments completed; records in {config.out_dir}")
    return 1 if failures else 0
