"""Result tables: model families by task presets, one table per paradigm."""
import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from data.tasks import TASK_PRESETS
from models.model_manager import model_manager
from protocols.records import Paradigm
from protocols.selection import prescient_from_records, realistic_from_records
from reporting.store import SUMMARY_FILE, RecordStore, find_experiments, load_summary_file
from utils.errors import AllRunsFailedError, RecordError
from utils.logging_config import logger

MISSING = "—"
CHANCE_ROW = "chance"


@dataclass
class ResultTable:
    """q* per (model family, task preset) for one paradigm."""
    paradigm: Paradigm
    families: List[str]
    tasks: List[str]
    cells: Dict[Tuple[str, str], float] = field(default_factory=dict)
    chance: Dict[str, float] = field(default_factory=dict)
    replicates: Dict[Tuple[str, str], int] = field(default_factory=dict, compare=False)

    def get(self, family: str, task: str) -> Optional[float]:
        return self.cells.get((family, task))

    def _rows(self) -> List[List[str]]:
        rows = [[CHANCE_ROW] + [_format(self.chance.get(task)) for task in self.tasks]]
        for family in self.families:
            rows.append([family] + [_format(self.get(family, task)) for task in self.tasks])
        return rows

    def render_text(self, precision: int = 4) -> str:
        """Aligned plain-text table with the chance level as the first row."""
        header = ["model"] + self.tasks
        rows = [
            [row[0]] + [cell if cell == MISSING else f"{float(cell):.{precision}f}" for cell in row[1:]]
            for row in self._rows()
        ]
        widths = [max(len(str(line[i])) for line in [header] + rows) for i in range(len(header))]

        def line(cells):
            return "  ".join(str(cell).rjust(width) if i else str(cell).ljust(width) for i, (cell, width) in enumerate(zip(cells, widths)))

        title = f"{self.paradigm.value.capitalize()} evaluation (q*)"
        out = [title, line(header), "  ".join("-" * w for w in widths)]
        out.extend(line(row) for row in rows)
        return "\n".join(out) + "\n"

    def render_csv(self) -> str:
        """CSV with full float precision; parses back with ``read_table_csv``."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow([self.paradigm.value] + self.tasks)
        writer.writerows(self._rows())
        return buffer.getvalue()


def _format(value: Optional[float]) -> str:
    return MISSING if value is None else repr(float(value))


def _parse(cell: str) -> Optional[float]:
    return None if cell in (MISSING, "") else float(cell)


def read_table_csv(text: str) -> ResultTable:
    """
    Parse a table written by ``ResultTable.render_csv``.

    Raises:
        RecordError: If the text is not such a table
    """
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 2 or rows[1][0] != CHANCE_ROW:
        raise RecordError("Not a result table: missing header or chance row")
    try:
        paradigm = Paradigm(rows[0][0])
    except ValueError as e:
        raise RecordError(f"Unknown paradigm in table header: {rows[0][0]}") from e
    tasks = rows[0][1:]
    table = ResultTable(paradigm=paradigm, families=[], tasks=tasks)
    for task, cell in zip(tasks, rows[1][1:]):
        value = _parse(cell)
        if value is not None:
            table.chance[task] = value
    for row in rows[2:]:
        family = row[0]
        table.families.append(family)
        for task, cell in zip(tasks, row[1:]):
            value = _parse(cell)
            if value is not None:
                table.cells[(family, task)] = value
    return table


def _ordered(names, reference) -> List[str]:
    known = [name for name in reference if name in names]
    return known + sorted(name for name in names if name not in reference)


def build_tables(out_dir) -> Tuple[Dict[Paradigm, ResultTable], List[Path]]:
    """
    Collect every experiment summary below ``out_dir`` into result tables.

    Cells replicated over several seeds hold the mean q*. Failed experiments
    leave their cell empty.

    Returns:
        (tables keyed by paradigm, paths of unreadable summaries)

    Raises:
        RecordError: If no readable summary exists
    """
    values: Dict[Paradigm, Dict[Tuple[str, str], List[float]]] = defaultdict(lambda: defaultdict(list))
    chance: Dict[Paradigm, Dict[str, float]] = defaultdict(dict)
    families: Dict[Paradigm, set] = defaultdict(set)
    tasks: Dict[Paradigm, set] = defaultdict(set)
    corrupt: List[Path] = []
    found = 0
    for directory in find_experiments(out_dir):
        path = directory / SUMMARY_FILE
        try:
            summary = load_summary_file(path)
        except RecordError as e:
            logger.warning(str(e))
            corrupt.append(path)
            continue
        found += 1
        paradigm = summary.paradigm
        families[paradigm].add(summary.model_family)
        tasks[paradigm].add(summary.task)
        chance[paradigm][summary.task] = summary.chance_level
        if summary.q_star is not None:
            values[paradigm][(summary.model_family, summary.task)].append(summary.q_star)
    if not found:
        raise RecordError(f"No records found in {out_dir}")

    tables = {}
    for paradigm in sorted(families, key=lambda p: list(Paradigm).index(p)):
        table = ResultTable(
            paradigm=paradigm,
            families=_ordered(families[paradigm], model_manager.list_families()),
            tasks=_ordered(tasks[paradigm], TASK_PRESETS),
            chance=dict(chance[paradigm]),
        )
        for key, qs in values[paradigm].items():
            table.cells[key] = float(np.mean(qs))
            table.replicates[key] = len(qs)
        tables[paradigm] = table
    return tables, corrupt


def write_tables(tables: Dict[Paradigm, ResultTable], tables_dir) -> List[Path]:
    """Write ``<paradigm>.txt`` and ``<paradigm>.csv`` for every table."""
    tables_dir = Path(tables_dir)
    tables_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for paradigm, table in tables.items():
        for suffix, text in (("txt", table.render_text()), ("csv", table.render_csv())):
            path = tables_dir / f"{paradigm.value}.{suffix}"
            path.write_text(text)
            written.append(path)
    return written


def recompute_q_star(experiment_dir) -> Optional[float]:
    """
    q* recomputed from the stored run records of an experiment, without retraining.

    Returns:
        None when the experiment has no completed run

    Raises:
        RecordError: If the summary or one of its records cannot be read
    """
    store = RecordStore(experiment_dir)
    summary = store.load_summary()
    records = [store.load_record(run_id) for run_id in summary.run_ids]
    try:
        if summary.paradigm is Paradigm.PRESCIENT:
            q_star, _ = prescient_from_records(records)
        else:
            q_star, _ = realistic_from_records(records)
    except AllRunsFailedError:
        return None
    return q_star
