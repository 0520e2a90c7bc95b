"""``report``: result tables from stored experiment summaries."""
import sys
from pathlib import Path

from reporting.store import RecordStore, find_experiments, load_summary_file, SUMMARY_FILE
from reporting.tables import build_tables, recompute_q_star, write_tables
from utils.config import Config
from utils.errors import RecordError
from utils.logging_config import logger


def add_parser(subparsers):
    parser = subparsers.add_parser("report", help="Render result tables as text and CSV")
    parser.add_argument("records_dir", nargs="?", help="Records root (default: output directory)")
    parser.add_argument("--tables-dir", help="Where to write the tables (default: <records_dir>/tables)")
    parser.add_argument("--verify", action="store_true", help="Recompute every q* from the stored run records")


def execute(args) -> int:
    records_dir = Path(args.records_dir) if args.records_dir else Config.OUTPUT_PATH
    tables, corrupt = build_tables(records_dir)
    corrupt += _corrupt_run_records(records_dir)
    for path in corrupt:
        print(f"unreadable record: {path}", file=sys.stderr)

    for table in tables.values():
        print(table.render_text())
    written = write_tables(tables, Path(args.tables_dir) if args.tables_dir else records_dir / "tables")
    logger.info(f"Wrote {len(written)} table files")

    if args.verify and not _verify(records_dir):
        return 1
    return 0


def _corrupt_run_records(records_dir: Path):
    corrupt = []
    for directory in find_experiments(records_dir):
        _, bad = RecordStore(directory).list_records()
        corrupt.extend(bad)
    return corrupt


def _verify(records_dir: Path) -> bool:
    """Whether every summary's q* equals the value recomputed from its records."""
    ok = True
    for directory in find_experiments(records_dir):
        try:
            summary = load_summary_file(directory / SUMMARY_FILE)
            recomputed = recompute_q_star(directory)
        except RecordError as e:
            print(f"cannot verify {directory.name}: {e}", file=sys.stderr)
            ok = False
            continue
        if recomputed != summary.q_star:
            print(f"q* mismatch in {directory.name}: summary {summary.q_star}, records {recomputed}", file=sys.stderr)
            ok = False
    if ok:
        print("All q* values reproduce from the stored run records")
    return ok
