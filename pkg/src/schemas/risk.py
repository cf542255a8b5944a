import math
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.util.errors import DomainError, ShapeError


class LossBase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class SquaredError(LossBase):
    """||theta_hat - theta||^2."""

    kind: Literal["squared_error"] = "squared_error"


class PredictionError(LossBase):
    """||X (theta_hat - theta)||^2 / n; design defaults to the model design."""

    kind: Literal["prediction_error"] = "prediction_error"
    design: Optional[List[List[float]]] = None


class PointwiseSquared(LossBase):
    """(f_hat(x0) - f(x0))^2."""

    kind: Literal["pointwise_squared"] = "pointwise_squared"
    x0: float = 0.0
    true_value: Optional[float] = None


LossSpec = Annotated[
    Union[SquaredError, PredictionError, PointwiseSquared],
    Field(discriminator="kind"),
]


class RiskMatrix(BaseModel):
    """Monte Carlo mean losses, rows are estimators and columns perturbations."""

    estimator_labels: List[str]
    perturbation_labels: List[str]
    mean_loss: List[List[float]]
    std_error: List[List[float]]
    trials: int = Field(ge=2)
    master_seed: int = Field(ge=0, lt=2 ** 64)

    @model_validator(mode="after")
    def check_dimensions(self):
        rows, cols = len(self.estimator_labels), len(self.perturbation_labels)
        for name, grid in (("mean_loss", self.mean_loss), ("std_error", self.std_error)):
            if len(grid) != rows or any(len(row) != cols for row in grid):
                raise ShapeError(f"{name} must be {rows}x{cols}")
        if any(v < 0.0 for row in self.mean_loss for v in row):
            raise DomainError("mean losses must be nonnegative")
        if not all(math.isfinite(v) for row in self.std_error for v in row):
            raise DomainError("standard errors must be finite")
        return self


class MinimaxSummary(BaseModel):
    value: float
    argmin_estimator: int
    argmax_perturbation: int
    per_estimator_worst_case: List[float]
    std_error: float = 0.0
