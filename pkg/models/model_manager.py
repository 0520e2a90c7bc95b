"""Model manager for registering and looking up model families."""
from typing import Dict, List, Type

from models.base_model import ModelFamily
from models.conv_model import ConvFamily, DropoutConvFamily
from models.ewc_model import EWCFamily
from models.fc_model import DropoutFullyConnectedFamily, FullyConnectedFamily
from models.lwta_model import LWTAFamily
from utils.errors import UnknownPresetError
from utils.logging_config import logger


class ModelManager:
    """Manages model family registration and instantiation."""

    def __init__(self):
        """Initialize model manager with all benchmarked families."""
        self._families: Dict[str, Type[ModelFamily]] = {}
        self._register_default_families()

    def _register_default_families(self):
        """Register families in the row order of the result tables."""
        families = [
            EWCFamily,
            FullyConnectedFamily,
            DropoutFullyConnectedFamily,
            ConvFamily,
            DropoutConvFamily,
            LWTAFamily,
        ]
        for family_class in families:
            name = family_class().get_name()
            self._families[name] = family_class
            logger.debug(f"Registered model family: {name}")

    def get_family(self, name: str) -> ModelFamily:
        """
        Get a family instance.

        Raises:
            UnknownPresetError: If the family is not registered
        """
        if name not in self._families:
            available = ", ".join(self._families)
            raise UnknownPresetError(f"Model family '{name}' not found. Available: {available}")
        return self._families[name]()

    def list_families(self) -> List[str]:
        """List all registered family names."""
        return list(self._families)


# Global model manager instance
model_manager = ModelManager()
