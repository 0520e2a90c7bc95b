"""``plot``: accuracy curves of one run as SVG."""
from pathlib import Path

from reporting.plots import plot_record
from reporting.store import RecordStore, load_record_file
from utils.errors import RecordError


def add_parser(subparsers):
    parser = subparsers.add_parser("plot", help="Plot the curves of a run record or of an experiment's best run")
    parser.add_argument("path", help="Run record JSON file or experiment directory")
    parser.add_argument("--output", help="SVG file to write (default: <experiment>/plots/<run_id>.svg)")


def execute(args) -> int:
    path = Path(args.path)
    if path.is_dir():
        store = RecordStore(path)
        summary = store.load_summary()
        if summary.best_run_id is None:
            raise RecordError(f"Experiment {path} has no completed run to plot")
        record = store.load_record(summary.best_run_id)
    else:
        record = load_record_file(path)
        store = RecordStore(path.parent.parent)
    output = Path(args.output) if args.output else store.plots_dir / f"{record.run_id}.svg"
    print(plot_record(record, output))
    return 0
