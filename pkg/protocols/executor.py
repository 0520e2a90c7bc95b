"""Sequential or process-parallel execution of independent runs."""
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Sequence, TypeVar

from utils.logging_config import logger

J = TypeVar("J")
R = TypeVar("R")

# Data shared by every job of one map_runs call (the task), installed once per process
_shared_context: Any = None


def _install_context(context: Any):
    global _shared_context
    _shared_context = context


def shared_context() -> Any:
    """Context object handed to the current ``map_runs`` call."""
    if _shared_context is None:
        raise RuntimeError("No shared context installed; call through map_runs")
    return _shared_context


def map_runs(fn: Callable[[J], R], jobs: Sequence[J], parallel: int = 1, context: Any = None) -> List[R]:
    """
    Apply ``fn`` to every job, preserving job order in the results.

    ``fn`` must be a module-level function when ``parallel > 1``; each job is
    then pickled to a worker process while ``context`` is shipped once per
    worker. Results never depend on ``parallel`` because every job carries
    its own seeds.
    """
    jobs = list(jobs)
    if parallel <= 1 or len(jobs) <= 1:
        _install_context(context)
        try:
            return [fn(job) for job in jobs]
        finally:
            _install_context(None)
    workers = min(parallel, len(jobs))
    logger.info(f"Running {len(jobs)} jobs on {workers} worker processes")
    with ProcessPoolExecutor(max_workers=workers, initializer=_install_context, initargs=(context,)) as pool:
        return list(pool.map(fn, jobs))
