"""Fully-connected families: fc and D-fc."""
from typing import List

from models.base_model import MNIST_PIXELS, NUM_CLASSES, ModelFamily
from nn_core.layers import Dropout, FullyConnected, LayerBase, ReLU, SoftmaxReadout
from protocols.hyperparams import HyperParams
from utils.config import Config


def fully_connected_layers(hyperparams: HyperParams, dropout: bool) -> List[LayerBase]:
    """In-[D]-FC1-[D]-ReLU-...-FCn-SM with ``num_hidden_layers`` hidden layers."""
    input_rate, hidden_rate = Config.DROPOUT_RATES["fc"]
    layers: List[LayerBase] = []
    if dropout:
        layers.append(Dropout(input_rate))
    width = MNIST_PIXELS
    for _ in range(hyperparams.num_hidden_layers):
        layers.append(FullyConnected(width, hyperparams.layer_size))
        if dropout:
            layers.append(Dropout(hidden_rate))
        layers.append(ReLU())
        width = hyperparams.layer_size
    layers.append(FullyConnected(width, NUM_CLASSES))
    layers.append(SoftmaxReadout(NUM_CLASSES))
    return layers


class FullyConnectedFamily(ModelFamily):
    """Plain MLP with ReLU hidden layers."""

    def get_name(self) -> str:
        return "fc"

    def build_layers(self, hyperparams: HyperParams) -> List[LayerBase]:
        return fully_connected_layers(hyperparams, dropout=False)


class DropoutFullyConnectedFamily(ModelFamily):
    """MLP with Dropout on the input (0.2) and after every hidden layer (0.5)."""

    def get_name(self) -> str:
        return "D-fc"

    def build_layers(self, hyperparams: HyperParams) -> List[LayerBase]:
        return fully_connected_layers(hyperparams, dropout=True)
