"""Base model family class."""
from abc import ABC, abstractmethod
from typing import List, Tuple

from nn_core.layers import LayerBase
from nn_core.network import NetworkSpec
from protocols.hyperparams import HyperParams

MNIST_PIXELS = 28 * 28
NUM_CLASSES = 10


class ModelFamily(ABC):
    """Abstract base class for the benchmarked DNN model families."""

    @abstractmethod
    def get_name(self) -> str:
        """Get family name as used on the command line and in tables."""
        pass

    @abstractmethod
    def build_layers(self, hyperparams: HyperParams) -> List[LayerBase]:
        """Layer list for one grid point."""
        pass

    def uses_ewc(self) -> bool:
        """Whether retraining adds the EWC penalty."""
        return False

    def fixed_topology(self) -> bool:
        """Fixed-topology families ignore the layer count and size axes of the grid."""
        return False

    def get_input_shape(self) -> Tuple[int, ...]:
        return (MNIST_PIXELS,)

    def build_spec(self, hyperparams: HyperParams) -> NetworkSpec:
        """
        Build the network topology for a grid point.

        Raises:
            SpecError: If the resulting topology is malformed
        """
        spec = NetworkSpec(input_shape=self.get_input_shape(), layers=tuple(self.build_layers(hyperparams)))
        spec.layer_shapes()
        return spec

    def describe(self, hyperparams: HyperParams) -> str:
        return self.build_spec(hyperparams).describe()
