"""Convolutional families: conv and D-conv (fixed topology)."""
from typing import List, Tuple

from models.base_model import NUM_CLASSES, ModelFamily
from nn_core.layers import Conv, Dropout, FullyConnected, LayerBase, MaxPool, ReLU, SoftmaxReadout
from protocols.hyperparams import HyperParams
from utils.config import Config

IMAGE_SHAPE = (1, 28, 28)
CONV_FILTERS = (32, 64)
KERNEL_SIZE = 5
POOL_WINDOW = 2


def convolutional_layers(dropout: bool) -> List[LayerBase]:
    """In-[D]-C1-MP-[D]-ReLU-C2-MP-[D]-ReLU-FC3-SM."""
    rate, _ = Config.DROPOUT_RATES["conv"]
    layers: List[LayerBase] = []
    if dropout:
        layers.append(Dropout(rate))
    channels, height, width = IMAGE_SHAPE
    for filters in CONV_FILTERS:
        # same padding: output keeps the spatial size before pooling
        layers.append(Conv(filters, KERNEL_SIZE, stride=1, padding=KERNEL_SIZE // 2))
        layers.append(MaxPool(POOL_WINDOW))
        if dropout:
            layers.append(Dropout(rate))
        layers.append(ReLU())
        channels, height, width = filters, height // POOL_WINDOW, width // POOL_WINDOW
    layers.append(FullyConnected(channels * height * width, NUM_CLASSES))
    layers.append(SoftmaxReadout(NUM_CLASSES))
    return layers


class ConvFamily(ModelFamily):
    """Two conv/max-pool stages and a linear readout."""

    def get_name(self) -> str:
        return "conv"

    def fixed_topology(self) -> bool:
        return True

    def get_input_shape(self) -> Tuple[int, ...]:
        return IMAGE_SHAPE

    def build_layers(self, hyperparams: HyperParams) -> List[LayerBase]:
        return convolutional_layers(dropout=False)


class DropoutConvFamily(ConvFamily):
    """Conv family with a single Dropout rate of 0.5 on input and hidden layers."""

    def get_name(self) -> str:
        return "D-conv"

    def build_layers(self, hyperparams: HyperParams) -> List[LayerBase]:
        return convolutional_layers(dropout=True)
