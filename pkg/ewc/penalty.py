"""The EWC quadratic penalty and the lambda rule."""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ewc.fisher import AnchorParams, FisherDiag, check_alignment, estimate_fisher
from nn_core.network import Gradients, NetworkState, Params


def lambda_from_retrain_rate(epsilon_d2: float) -> float:
    """
    Importance weight lambda = 1 / eps_D2.

    Raises:
        ValueError: If the rate is not positive
    """
    if epsilon_d2 <= 0:
        raise ValueError(f"Retraining learning rate must be positive, got {epsilon_d2}")
    return 1.0 / epsilon_d2


def ewc_penalty(
    state: NetworkState,
    anchor: AnchorParams,
    fisher: FisherDiag,
    lam: float
) -> Tuple[float, Gradients]:
    """
    Penalty (lam/2) * sum_i F_i (theta_i - theta*_i)^2 and its gradient.

    Returns:
        (penalty, gradients mirroring ``state.params``)

    Raises:
        ValueError: If ``lam`` is negative
        ShapeError: If anchor or Fisher shapes differ from the network
    """
    if lam < 0:
        raise ValueError(f"EWC lambda must be non-negative, got {lam}")
    check_alignment(state, anchor.values, "Anchor")
    check_alignment(state, fisher.values, "Fisher")
    total = 0.0
    grads: Gradients = []
    for index, layer in enumerate(state.params):
        layer_grads = {}
        for name, value in layer.items():
            delta = value.astype(np.float64) - anchor.values[index][name]
            weighted = fisher.values[index][name] * delta
            total += float(np.sum(weighted * delta))
            layer_grads[name] = (lam * weighted).astype(value.dtype)
        grads.append(layer_grads)
    return 0.5 * lam * total, grads


@dataclass(frozen=True)
class QuadraticPenalty:
    """
    EWC penalty bound to an anchor, a Fisher diagonal and lambda.

    Calling it yields ``ewc_penalty`` for a state. During training the
    quadratic term is applied as a proximal step instead (see
    ``proximal_terms``), which stays stable for any lambda * F.
    """
    anchor: AnchorParams
    fisher: FisherDiag
    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"EWC lambda must be non-negative, got {self.lam}")

    def __call__(self, state: NetworkState) -> Tuple[float, Gradients]:
        return ewc_penalty(state, self.anchor, self.fisher, self.lam)

    def proximal_terms(self, state: NetworkState) -> Tuple[Params, Params]:
        """
        Per-parameter stiffness lam * F_i and the anchor it pulls towards.

        Raises:
            ShapeError: If anchor or Fisher shapes differ from the network
        """
        check_alignment(state, self.anchor.values, "Anchor")
        check_alignment(state, self.fisher.values, "Fisher")
        stiffness = [
            {name: self.lam * values for name, values in layer.items()}
            for layer in self.fisher.values
        ]
        return stiffness, self.anchor.values


@dataclass(frozen=True)
class ConsolidationState:
    """Anchor and Fisher diagonal captured after D1; lambda follows the retraining rate."""
    anchor: AnchorParams
    fisher: FisherDiag

    def penalty_for(self, epsilon_d2: float) -> QuadraticPenalty:
        return QuadraticPenalty(self.anchor, self.fisher, lambda_from_retrain_rate(epsilon_d2))

    @classmethod
    def capture(cls, state: NetworkState, d1_samples, n_samples: int, seed: int) -> "ConsolidationState":
        """Snapshot the anchor and estimate the Fisher diagonal while D1 is still at hand."""
        return cls(anchor=AnchorParams.capture(state), fisher=estimate_fisher(state, d1_samples, n_samples, seed))
