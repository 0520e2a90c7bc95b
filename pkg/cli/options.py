"""Command-line options shared by the experiment subcommands."""
import argparse
from typing import List


def int_list(text: str) -> List[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def float_list(text: str) -> List[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def add_experiment_options(parser: argparse.ArgumentParser):
    """Options shared by ``run`` and ``grid``; every default is None so lower-precedence sources apply."""
    parser.add_argument("--config", help="JSON file with experiment configuration")
    parser.add_argument("--data-dir", help="Directory holding the four MNIST IDX files")
    parser.add_argument("--out-dir", help="Records root directory")
    parser.add_argument("--tmax", dest="t_max", type=int, help="Iterations per training phase (default 2500)")
    parser.add_argument("--batch-size", type=int, help="Minibatch size (default 100)")
    parser.add_argument("--eval-every", type=int, help="Evaluation interval (default 100)")
    parser.add_argument("--fisher-samples", type=int, help="Samples of the EWC Fisher estimate (default 1000)")
    parser.add_argument("--dtype", choices=["float32", "float64"])
    parser.add_argument("--parallel", type=int, help="Worker processes")
    parser.add_argument("--permute-d1", action="store_true", default=None, help="DP10-10: permute D1 as well")
    parser.add_argument("--hidden-layers", type=int_list, help="Comma-separated hidden layer counts")
    parser.add_argument("--layer-sizes", type=int_list, help="Comma-separated hidden layer sizes")
    parser.add_argument("--lr-d1", type=float_list, help="Comma-separated initial-training learning rates")
    parser.add_argument("--lr-d2", type=float_list, help="Comma-separated retraining learning rates")


def experiment_values(args: argparse.Namespace) -> dict:
    """Command-line values in ExperimentConfig layout."""
    return {
        "data_dir": args.data_dir,
        "out_dir": args.out_dir,
        "t_max": args.t_max,
        "batch_size": args.batch_size,
        "eval_every": args.eval_every,
        "fisher_samples": args.fisher_samples,
        "dtype": args.dtype,
        "parallel": args.parallel,
        "permute_d1": args.permute_d1,
        "grid": {
            "hidden_layers": args.hidden_layers,
            "layer_sizes": args.layer_sizes,
            "lr_d1": args.lr_d1,
            "lr_d2": args.lr_d2,
        },
    }
