"""Hyperparameter points and the search grids."""
from dataclasses import asdict, dataclass
from itertools import product
from typing import Any, Dict, List, Optional, Tuple

HIDDEN_LAYERS: Tuple[int, ...] = (2, 3)
LAYER_SIZES: Tuple[int, ...] = (200, 400, 800)
LEARNING_RATES_D1: Tuple[float, ...] = (0.01, 0.001)
LEARNING_RATES_D2: Tuple[float, ...] = (0.001, 0.0001, 0.00001)


@dataclass(frozen=True)
class HyperParams:
    """One grid point. Fixed-topology families leave layer count and size unset."""
    model_family: str
    num_hidden_layers: Optional[int] = 2
    layer_size: Optional[int] = 200
    lr_d1: float = 0.01
    lr_d2: Optional[float] = None

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def initial_part(self) -> "HyperParams":
        """The point without its retraining rate (what D1 training depends on)."""
        return HyperParams(self.model_family, self.num_hidden_layers, self.layer_size, self.lr_d1, None)

    def with_retrain_rate(self, lr_d2: float) -> "HyperParams":
        return HyperParams(self.model_family, self.num_hidden_layers, self.layer_size, self.lr_d1, lr_d2)

    def label(self) -> str:
        parts = []
        if self.num_hidden_layers is not None:
            parts.append(f"L={self.num_hidden_layers}")
        if self.layer_size is not None:
            parts.append(f"S={self.layer_size}")
        parts.append(f"eps1={self.lr_d1:g}")
        if self.lr_d2 is not None:
            parts.append(f"eps2={self.lr_d2:g}")
        return " ".join(parts)

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "HyperParams":
        return cls(**values)


@dataclass(frozen=True)
class GridOverrides:
    """Replacement values for any grid axis (None keeps the default axis)."""
    hidden_layers: Optional[Tuple[int, ...]] = None
    layer_sizes: Optional[Tuple[int, ...]] = None
    lr_d1: Optional[Tuple[float, ...]] = None
    lr_d2: Optional[Tuple[float, ...]] = None

    def axes(self) -> Dict[str, Tuple]:
        return {
            "hidden_layers": tuple(self.hidden_layers or HIDDEN_LAYERS),
            "layer_sizes": tuple(self.layer_sizes or LAYER_SIZES),
            "lr_d1": tuple(self.lr_d1 or LEARNING_RATES_D1),
            "lr_d2": tuple(self.lr_d2 or LEARNING_RATES_D2),
        }


def _validate(values, name: str, positive=True):
    if not values:
        raise ValueError(f"Grid axis {name} must not be empty")
    if positive and any(v <= 0 for v in values):
        raise ValueError(f"Grid axis {name} must hold positive values, got {values}")


def phase1_grid(family, overrides: Optional[GridOverrides] = None) -> List[HyperParams]:
    """
    Initial-training grid: (L, S, eps_D1), or eps_D1 alone for fixed topologies.

    Args:
        family: ModelFamily whose grid is built
        overrides: Optional axis replacements
    """
    axes = (overrides or GridOverrides()).axes()
    name = family.get_name()
    _validate(axes["lr_d1"], "lr_d1")
    if family.fixed_topology():
        return [HyperParams(name, None, None, lr) for lr in axes["lr_d1"]]
    _validate(axes["hidden_layers"], "hidden_layers")
    _validate(axes["layer_sizes"], "layer_sizes")
    return [
        HyperParams(name, layers, size, lr)
        for layers, size, lr in product(axes["hidden_layers"], axes["layer_sizes"], axes["lr_d1"])
    ]


def retrain_rates(overrides: Optional[GridOverrides] = None) -> Tuple[float, ...]:
    rates = (overrides or GridOverrides()).axes()["lr_d2"]
    _validate(rates, "lr_d2")
    return rates


def prescient_grid(family, overrides: Optional[GridOverrides] = None) -> List[HyperParams]:
    """Full grid including the retraining rate."""
    return [
        point.with_retrain_rate(rate)
        for point in phase1_grid(family, overrides)
        for rate in retrain_rates(overrides)
    ]
