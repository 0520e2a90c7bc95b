"""Pydantic schemas for run records and experiment summaries."""
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class Paradigm(str, Enum):
    """Model-selection paradigms."""
    PRESCIENT = "prescient"
    REALISTIC = "realistic"


class RunStage(str, Enum):
    """Which part of an experiment a run covers."""
    FULL = "full"          # initial training and retraining (prescient)
    INITIAL = "initial"    # D1 training only (realistic phase 1)
    RETRAIN = "retrain"    # D2 retraining of the selected model (realistic phase 2)


class RunStatus(str, Enum):
    """Run status values."""
    COMPLETED = "completed"
    FAILED = "failed"


# Curve names
CURVE_D1 = "d1_d1"        # accuracy on D1 test while training on D1
CURVE_D2 = "d2_d2"        # accuracy on D2 test while retraining on D2
CURVE_UNION = "d2_union"  # accuracy on D1 u D2 test while retraining on D2
CURVE_ORDER = (CURVE_D1, CURVE_D2, CURVE_UNION)


class Curve(BaseModel):
    """Accuracy samples on the evaluation schedule."""
    iterations: List[int] = Field(default_factory=list)
    accuracies: List[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self) -> "Curve":
        if len(self.iterations) != len(self.accuracies):
            raise ValueError("Curve iterations and accuracies differ in length")
        if any(b <= a for a, b in zip(self.iterations, self.iterations[1:])):
            raise ValueError("Curve iterations must be strictly increasing")
        if any(not 0.0 <= acc <= 1.0 for acc in self.accuracies):
            raise ValueError("Accuracies must lie in [0, 1]")
        return self

    def append(self, iteration: int, accuracy: float):
        if self.iterations and iteration <= self.iterations[-1]:
            raise ValueError(f"Iteration {iteration} does not follow {self.iterations[-1]}")
        self.iterations.append(int(iteration))
        self.accuracies.append(float(accuracy))

    def __len__(self) -> int:
        return len(self.iterations)


class RunRecord(BaseModel):
    """Everything recorded for one run of an experiment."""
    run_id: str
    experiment_id: str
    paradigm: Paradigm
    stage: RunStage
    status: RunStatus = RunStatus.COMPLETED
    model_family: str
    task: str
    hyperparams: Dict[str, Any]
    seeds: Dict[str, int]
    t_max: int = Field(..., gt=0)
    eval_every: int = Field(..., gt=0)
    batch_size: int = Field(..., gt=0)
    parent_run_id: Optional[str] = Field(default=None, description="Initial-training run this retraining starts from")
    curves: Dict[str, Curve] = Field(default_factory=dict)
    quality: Optional[float] = Field(default=None, description="q value of this run")
    best_iteration: Optional[int] = Field(default=None, description="Iteration of the best D1 snapshot")
    best_quality: Optional[float] = Field(default=None, description="chi(D1, D1, t) at the best snapshot")
    q_r_star: Optional[float] = Field(default=None, description="Best D2 accuracy during retraining")
    t_e: Optional[int] = Field(default=None, description="Stopping point, retraining-relative iteration")
    ewc_lambda: Optional[float] = None
    error: Optional[str] = None

    @field_validator("quality", "best_quality", "q_r_star")
    @classmethod
    def _in_unit_interval(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not 0.0 <= value <= 1.0:
            raise ValueError(f"Accuracy value {value} outside [0, 1]")
        return value

    @property
    def failed(self) -> bool:
        return self.status is RunStatus.FAILED


class ExperimentSummary(BaseModel):
    """Outcome of one (model, task, paradigm, seed) experiment."""
    experiment_id: str
    model_family: str
    task: str
    paradigm: Paradigm
    seed: int
    settings: Dict[str, Any]
    grid: Dict[str, List[Any]]
    q_star: Optional[float] = None
    best_run_id: Optional[str] = None
    chance_level: float
    run_ids: List[str] = Field(default_factory=list)
    failed_run_ids: List[str] = Field(default_factory=list)
    status: RunStatus = RunStatus.COMPLETED
    error: Optional[str] = None
