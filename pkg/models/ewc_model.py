"""EWC family: the D-fc topology retrained under the EWC penalty."""
from typing import List

from models.base_model import ModelFamily
from models.fc_model import fully_connected_layers
from nn_core.layers import LayerBase
from protocols.hyperparams import HyperParams


class EWCFamily(ModelFamily):
    """Dropout MLP whose retraining is anchored by a diagonal Fisher penalty."""

    def get_name(self) -> str:
        return "EWC"

    def uses_ewc(self) -> bool:
        return True

    def build_layers(self, hyperparams: HyperParams) -> List[LayerBase]:
        return fully_connected_layers(hyperparams, dropout=True)
