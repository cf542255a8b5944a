from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.util.errors import DomainError

ShiftClass = Literal["CDS", "IDS", "JDS"]

# CDS is contained in IDS, which is contained in JDS
SHIFT_CLASS_RANK = {"CDS": 0, "IDS": 1, "JDS": 2}


class PerturbationBase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: Optional[str] = None

    @property
    def label(self) -> str:
        return self.name or self.kind


class NoShift(PerturbationBase):
    kind: Literal["no_shift"] = "no_shift"
    shift_class: ShiftClass = "CDS"


class ConstantShift(PerturbationBase):
    """X'_i = X_i + delta for every row, with ||delta|| <= eps."""

    kind: Literal["constant_shift"] = "constant_shift"
    shift_class: ShiftClass = "CDS"
    delta: List[float]
    eps: float = Field(ge=0.0)

    @model_validator(mode="after")
    def check_budget(self):
        norm_sq = float(np.dot(self.delta, self.delta))
        if norm_sq > self.eps ** 2 * (1.0 + 1e-12) + 1e-300:
            raise DomainError(f"||delta||^2 = {norm_sq:.6g} exceeds eps^2 = {self.eps ** 2:.6g}")
        return self


class RandomDirectionConstantShift(PerturbationBase):
    """Constant shift eps * u, u drawn once per trial from the signed basis vectors."""

    kind: Literal["random_direction_constant_shift"] = "random_direction_constant_shift"
    shift_class: ShiftClass = "CDS"
    eps: float = Field(ge=0.0)


class IdsLeastFavorable(PerturbationBase):
    """X'_i = X_i + zeta (X_i - theta) + psi delta, delta drawn once per trial."""

    kind: Literal["ids_least_favorable"] = "ids_least_favorable"
    shift_class: ShiftClass = "IDS"
    zeta: float = Field(ge=0.0)
    psi: float = Field(ge=0.0)


class JdsMeanShift(PerturbationBase):
    """X'_i = X_i + xi (mean(X) - theta)."""

    kind: Literal["jds_mean_shift"] = "jds_mean_shift"
    shift_class: ShiftClass = "JDS"
    xi: float = Field(ge=0.0)


class LrPredictionShift(PerturbationBase):
    """
    Y' = Y + kappa (P Y - X theta), with P the projection weighted by noise_cov,
    or the orthogonal projection onto the columns of the design when noise_cov
    is omitted.
    """

    kind: Literal["lr_prediction_shift"] = "lr_prediction_shift"
    shift_class: ShiftClass = "JDS"
    kappa: float = Field(ge=0.0)
    design: List[List[float]]
    noise_cov: Optional[List[List[float]]] = None


class LrConstantShift(PerturbationBase):
    kind: Literal["lr_constant_shift"] = "lr_constant_shift"
    shift_class: ShiftClass = "JDS"
    direction: List[float]
    magnitude: float = Field(ge=0.0)

    @field_validator("direction")
    @classmethod
    def check_unit(cls, direction: List[float]) -> List[float]:
        norm = float(np.linalg.norm(direction))
        if abs(norm - 1.0) > 1e-9:
            raise DomainError(f"direction must have unit norm, got {norm:.12g}")
        return direction


class OrderStatTailShift(PerturbationBase):
    """X'_i = X_i - eps sqrt(n/k) for the k smallest observations."""

    kind: Literal["order_stat_tail_shift"] = "order_stat_tail_shift"
    shift_class: ShiftClass = "JDS"
    k: int = Field(ge=1)
    eps: float = Field(ge=0.0)


PerturbationSpec = Annotated[
    Union[
        NoShift,
        ConstantShift,
        RandomDirectionConstantShift,
        IdsLeastFavorable,
        JdsMeanShift,
        LrPredictionShift,
        LrConstantShift,
        OrderStatTailShift,
    ],
    Field(discriminator="kind"),
]
