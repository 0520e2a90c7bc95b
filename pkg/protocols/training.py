"""Momentum-SGD training phases with periodic evaluation."""
from dataclasses import asdict, dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from data.batching import batch_stream
from ewc.penalty import QuadraticPenalty
from nn_core.losses import cross_entropy_loss
from nn_core.metrics import accuracy
from nn_core.network import Gradients, Mode, NetworkState, add_gradients, backward, copy_network, forward
from nn_core.optim import sgd_momentum_step
from protocols.records import Curve
from utils.config import Config
from utils.errors import NumericError
from utils.logging_config import logger

PenaltyFn = Callable[[NetworkState], Tuple[float, Gradients]]


@dataclass(frozen=True)
class TrainingSettings:
    """Schedule and numerics shared by every run of an experiment."""
    t_max: int = Config.T_MAX
    batch_size: int = Config.BATCH_SIZE
    eval_every: int = Config.EVAL_EVERY
    fisher_samples: int = Config.FISHER_SAMPLES
    dtype: str = Config.DTYPE
    momentum: float = Config.MOMENTUM

    def __post_init__(self):
        for name in ("t_max", "batch_size", "eval_every", "fisher_samples"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.dtype not in Config.SUPPORTED_DTYPES:
            raise ValueError(f"dtype must be one of {Config.SUPPORTED_DTYPES}, got {self.dtype}")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class Snapshot:
    """Copy of the network at its best evaluation point."""
    iteration: int
    state: NetworkState
    quality: float


@dataclass
class PhaseResult:
    state: NetworkState
    curves: List[Curve]
    best: Snapshot
    final_loss: float


def evaluation_points(iters: int, every: int) -> List[int]:
    """Iteration 0, every ``every`` iterations, and the final iteration."""
    if iters <= 0 or every <= 0:
        raise ValueError(f"iters and eval_every must be positive, got {iters}, {every}")
    points = list(range(0, iters + 1, every))
    if points[-1] != iters:
        points.append(iters)
    return points


def train_phase(
    state: NetworkState,
    train_set,
    eval_sets: Sequence,
    iters: int,
    learning_rate: float,
    eval_every: int,
    seed: int,
    batch_size: int = Config.BATCH_SIZE,
    momentum: float = Config.MOMENTUM,
    penalty: Optional[PenaltyFn] = None,
    iteration_offset: int = 0,
    tag: str = ""
) -> PhaseResult:
    """
    Train ``state`` in place for ``iters`` momentum-SGD iterations.

    All ``eval_sets`` are evaluated at iteration 0 and on the evaluation
    schedule. The best snapshot maximizes accuracy on the first evaluation
    set over the points reached after at least one update; ties keep the
    earliest point.

    Args:
        state: Network to train (mutated)
        train_set: Training samples
        eval_sets: Sets whose accuracy curves are recorded
        iters: Number of iterations
        learning_rate: SGD step size
        eval_every: Evaluation interval
        seed: Seed of batch order and Dropout masks
        batch_size: Minibatch size
        momentum: Momentum coefficient
        penalty: Optional extra loss term returning (value, gradients). A
            QuadraticPenalty (EWC) is applied as a proximal step instead of
            through its gradient
        iteration_offset: Added to recorded iterations (retraining starts at t_max)
        tag: Prefix for log lines

    Returns:
        PhaseResult with the final state, one curve per eval set and the best snapshot

    Raises:
        NumericError: If the loss or a gradient becomes non-finite
    """
    if not eval_sets:
        raise ValueError("At least one evaluation set is required")
    points = set(evaluation_points(iters, eval_every))
    stream = batch_stream(train_set, batch_size, seed)
    dropout_rng = np.random.default_rng([seed, 1])
    curves = [Curve() for _ in eval_sets]
    best: Optional[Snapshot] = None
    loss = float("nan")

    def evaluate(t: int):
        nonlocal best
        for curve, eval_set in zip(curves, eval_sets):
            curve.append(iteration_offset + t, accuracy(state, eval_set))
        quality = curves[0].accuracies[-1]
        if t > 0 and (best is None or quality > best.quality):
            best = Snapshot(iteration_offset + t, copy_network(state, reset_momentum=True), quality)
        logger.debug(f"{tag} t={iteration_offset + t} loss={loss:.4f} acc={[c.accuracies[-1] for c in curves]}")

    proximal = penalty.proximal_terms(state) if isinstance(penalty, QuadraticPenalty) else None

    evaluate(0)
    for t in range(1, iters + 1):
        images, labels = next(stream)
        logits, trace = forward(state, images, Mode.TRAIN, rng_seed=int(dropout_rng.integers(2**62)))
        loss, dlogits = cross_entropy_loss(logits, labels)
        grads = backward(state, trace, dlogits)
        if penalty is not None:
            extra, extra_grads = penalty(state)
            loss += extra
            if proximal is None:
                grads = add_gradients(grads, extra_grads)
        if not np.isfinite(loss):
            raise NumericError(f"{tag} loss became non-finite at iteration {iteration_offset + t}")
        sgd_momentum_step(state, grads, learning_rate, momentum, proximal)
        if t in points:
            evaluate(t)

    logger.info(
        f"{tag} finished {iters} iterations (lr={learning_rate:g}): "
        f"final acc {[round(c.accuracies[-1], 4) for c in curves]}, best {best.quality:.4f} at t={best.iteration}"
    )
    return PhaseResult(state=state, curves=curves, best=best, final_loss=loss)
