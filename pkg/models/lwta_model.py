"""LWTA family: fully-connected layers with local winner-takes-all transfer."""
from typing import List

from models.base_model import MNIST_PIXELS, NUM_CLASSES, ModelFamily
from nn_core.layers import FullyConnected, LWTA, LayerBase, SoftmaxReadout
from protocols.hyperparams import HyperParams

BLOCK_SIZE = 2


class LWTAFamily(ModelFamily):
    """In-FC1-LWTA-FC2-LWTA-...-FCn-SM, blocks of two competing units."""

    def get_name(self) -> str:
        return "LWTA"

    def build_layers(self, hyperparams: HyperParams) -> List[LayerBase]:
        layers: List[LayerBase] = []
        width = MNIST_PIXELS
        for _ in range(hyperparams.num_hidden_layers):
            layers.append(FullyConnected(width, hyperparams.layer_size))
            layers.append(LWTA(BLOCK_SIZE))
            width = hyperparams.layer_size
        layers.append(FullyConnected(width, NUM_CLASSES))
        layers.append(SoftmaxReadout(NUM_CLASSES))
        return layers
