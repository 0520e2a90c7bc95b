"""Pydantic schemas for experiment configuration."""
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator

from data.tasks import TASK_PRESETS, unknown_preset
from models.model_manager import model_manager
from protocols.hyperparams import GridOverrides
from protocols.records import Paradigm
from protocols.training import TrainingSettings
from utils.config import Config
from utils.errors import ConfigError


class GridConfig(BaseModel):
    """Grid axis overrides; unset axes keep the default grid."""
    hidden_layers: Optional[List[int]] = Field(default=None, description="Hidden layer counts L")
    layer_sizes: Optional[List[int]] = Field(default=None, description="Hidden layer sizes S")
    lr_d1: Optional[List[float]] = Field(default=None, description="Initial-training learning rates")
    lr_d2: Optional[List[float]] = Field(default=None, description="Retraining learning rates")

    @field_validator("hidden_layers", "layer_sizes", "lr_d1", "lr_d2")
    @classmethod
    def _positive(cls, values):
        if values is not None and (not values or any(v <= 0 for v in values)):
            raise ValueError("grid axes must be non-empty lists of positive values")
        return values

    def to_overrides(self) -> GridOverrides:
        def as_tuple(values):
            return tuple(values) if values else None

        return GridOverrides(
            hidden_layers=as_tuple(self.hidden_layers),
            layer_sizes=as_tuple(self.layer_sizes),
            lr_d1=as_tuple(self.lr_d1),
            lr_d2=as_tuple(self.lr_d2),
        )


class ExperimentConfig(BaseModel):
    """Everything needed to run one or more experiments."""
    models: List[str] = Field(default_factory=lambda: ["fc"], min_length=1, description="Model families")
    tasks: List[str] = Field(default_factory=lambda: ["D5-5a"], min_length=1, description="Task presets")
    paradigms: List[Paradigm] = Field(default_factory=lambda: [Paradigm.REALISTIC], min_length=1)
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    grid: GridConfig = Field(default_factory=GridConfig)
    t_max: int = Field(default=Config.T_MAX, gt=0, description="Iterations per training phase")
    batch_size: int = Field(default=Config.BATCH_SIZE, gt=0)
    eval_every: int = Field(default=Config.EVAL_EVERY, gt=0, description="Evaluation interval in iterations")
    fisher_samples: int = Field(default=Config.FISHER_SAMPLES, gt=0)
    dtype: str = Field(default=Config.DTYPE)
    parallel: int = Field(default=Config.MAX_PARALLEL_RUNS, ge=1, description="Worker processes")
    permute_d1: bool = Field(default=False, description="Permute D1 as well on DP10-10")
    data_dir: Optional[str] = Field(default=Config.DATA_DIR)
    out_dir: str = Field(default=str(Config.OUTPUT_PATH))

    @field_validator("dtype")
    @classmethod
    def _dtype(cls, value: str) -> str:
        if value not in Config.SUPPORTED_DTYPES:
            raise ValueError(f"dtype must be one of {Config.SUPPORTED_DTYPES}")
        return value

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, values: List[int]) -> List[int]:
        if any(seed < 0 for seed in values):
            raise ValueError("seeds must be non-negative")
        return values

    def check_names(self):
        """
        Raises:
            UnknownPresetError: For unknown task presets or model families
        """
        for task in self.tasks:
            if task not in TASK_PRESETS:
                raise unknown_preset(task)
        for model in self.models:
            model_manager.get_family(model)

    def training_settings(self) -> TrainingSettings:
        return TrainingSettings(
            t_max=self.t_max,
            batch_size=self.batch_size,
            eval_every=self.eval_every,
            fisher_samples=self.fisher_samples,
            dtype=self.dtype,
        )

    @classmethod
    def resolve(cls, config_file: Optional[str], cli_values: Dict[str, Any]) -> "ExperimentConfig":
        """
        Merge configuration sources: CLI values > config file > environment > defaults.

        ``cli_values`` holds only options given on the command line (None
        entries are ignored); grid axes go under the ``grid`` key.

        Raises:
            ConfigError: If the file cannot be read or the merged values are invalid
        """
        merged: Dict[str, Any] = {}
        if config_file:
            path = Path(config_file)
            try:
                merged = json.loads(path.read_text())
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"Cannot read config file {path}: {e}") from e
            if not isinstance(merged, dict):
                raise ConfigError(f"Config file {path} must hold a JSON object")
        grid = dict(merged.get("grid") or {})
        grid.update({k: v for k, v in (cli_values.get("grid") or {}).items() if v is not None})
        merged.update({k: v for k, v in cli_values.items() if k != "grid" and v is not None})
        merged["grid"] = grid
        try:
            return cls.model_validate(merged)
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration: {e}") from e
