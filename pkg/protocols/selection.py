"""Quality measures, stopping point and best-run selection."""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from protocols.records import CURVE_D1, CURVE_D2, CURVE_UNION, Curve, RunRecord, RunStage
from utils.errors import AllRunsFailedError

STOPPING_FACTOR = 0.99


@dataclass
class EvaluationResult:
    """Outcome of one evaluation strategy over a grid."""
    q_star: float
    best_record: RunRecord
    records: List[RunRecord]
    failed: List[RunRecord] = field(default_factory=list)
    d1_violations: int = 0


def scored_points(curve: Curve, start: int) -> Tuple[List[int], List[float]]:
    """Samples taken after at least one update of the phase starting at ``start``."""
    pairs = [(it, acc) for it, acc in zip(curve.iterations, curve.accuracies) if it > start]
    return [it for it, _ in pairs], [acc for _, acc in pairs]


def stopping_point(iterations: Sequence[int], accuracies: Sequence[float], factor: float = STOPPING_FACTOR) -> Tuple[int, float]:
    """
    Earliest evaluation point whose D2 accuracy exceeds ``factor`` times the best.

    Args:
        iterations: Evaluation points of the retraining curve
        accuracies: chi(D2, D2, t) at those points

    Returns:
        (t_E, q_R*) where q_R* is the curve maximum. An all-zero curve stops
        at its first point.

    Raises:
        ValueError: If the curve is empty
    """
    if not accuracies:
        raise ValueError("Cannot determine a stopping point on an empty curve")
    q_r_star = max(accuracies)
    threshold = factor * q_r_star
    for iteration, acc in zip(iterations, accuracies):
        if acc > threshold:
            return int(iteration), float(q_r_star)
    return int(iterations[0]), float(q_r_star)


def realistic_quality(record: RunRecord) -> Tuple[float, int, float]:
    """
    Quality of one retraining run: chi(D2, D1uD2, t_E).

    Returns:
        (quality, t_E relative to the start of retraining, q_R*)
    """
    start = record.t_max
    iterations, d2_acc = scored_points(record.curves[CURVE_D2], start)
    t_e, q_r_star = stopping_point(iterations, d2_acc)
    union = record.curves[CURVE_UNION]
    quality = union.accuracies[union.iterations.index(t_e)]
    return float(quality), t_e - start, q_r_star


def prescient_quality(record: RunRecord) -> float:
    """Best chi(D2, D1uD2, t) reached at any point of retraining."""
    _, union_acc = scored_points(record.curves[CURVE_UNION], record.t_max)
    return float(max(union_acc))


def initial_quality(record: RunRecord) -> Tuple[float, int]:
    """Best chi(D1, D1, t) of an initial-training run and where it occurred."""
    iterations, acc = scored_points(record.curves[CURVE_D1], 0)
    best = int(np.argmax(acc))
    return float(acc[best]), int(iterations[best])


def _completed(records: Sequence[RunRecord], stage: RunStage) -> List[RunRecord]:
    done = [r for r in records if r.stage is stage and not r.failed]
    if not done:
        raise AllRunsFailedError(f"No completed {stage.value} runs among {len(records)} records")
    return done


def select_initial(records: Sequence[RunRecord]) -> RunRecord:
    """Initial-training run with the highest D1 accuracy; ties keep grid order."""
    best = None
    for record in _completed(records, RunStage.INITIAL):
        if best is None or record.best_quality > best.best_quality:
            best = record
    return best


def prescient_from_records(records: Sequence[RunRecord]) -> Tuple[float, RunRecord]:
    """Recompute the prescient q* from persisted full runs."""
    best, best_q = None, -1.0
    for record in _completed(records, RunStage.FULL):
        q = prescient_quality(record)
        if q > best_q:
            best, best_q = record, q
    return best_q, best


def realistic_from_records(records: Sequence[RunRecord]) -> Tuple[float, RunRecord]:
    """Recompute the realistic q* from persisted retraining runs."""
    best, best_q = None, -1.0
    for record in _completed(records, RunStage.RETRAIN):
        q, _, _ = realistic_quality(record)
        if q > best_q:
            best, best_q = record, q
    return best_q, best


def chance_level(task, weighted: bool = False) -> float:
    """
    Union-test accuracy left after complete forgetting.

    For class splits this is the share of classes belonging to D2 (0.5 for
    D5-5, 0.1 for D9-1); with ``weighted`` the share is taken over union test
    samples instead of classes. Permutation tasks keep every class in both
    sub-tasks, so the level is uniform guessing over all classes.
    """
    all_classes = set(task.d1_classes) | set(task.d2_classes)
    if not all_classes:
        raise ValueError(f"Task {task.name} has no classes")
    if task.kind == "permutation":
        return 1.0 / len(all_classes)
    if weighted:
        labels = np.asarray(task.union_test.labels)
        return float(np.isin(labels, list(task.d2_classes)).mean())
    return len(set(task.d2_classes)) / len(all_classes)
