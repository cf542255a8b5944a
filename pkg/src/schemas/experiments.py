from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.config.settings import DEFAULT_SEED, DEFAULT_TRIALS
from src.schemas.distributions import DistributionSpec, HolderBumpDensity
from src.schemas.perturbations import ShiftClass
from src.schemas.risk import LossSpec, PointwiseSquared, PredictionError, SquaredError
from src.util.errors import ConfigError, DomainError

Problem = Literal["location", "linear_regression", "uniform", "density"]

PROBLEM_DIST_KIND = {
    "location": "gaussian_location",
    "linear_regression": "linear_model",
    "uniform": "uniform_location",
    "density": "holder_bump",
}

PROBLEM_LOSS_KINDS = {
    "location": {"squared_error"},
    "linear_regression": {"squared_error", "prediction_error"},
    "uniform": {"squared_error"},
    "density": {"pointwise_squared"},
}


class ExperimentConfig(BaseModel):
    """
    One experiment manifest. Exactly one of `alphas` (eps = n^alpha) or
    `eps_list` is given.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    problem: Problem
    dist: DistributionSpec
    n: Optional[int] = Field(default=None, ge=1)
    shift_classes: List[ShiftClass] = Field(min_length=1)
    alphas: Optional[List[float]] = None
    eps_list: Optional[List[float]] = None
    trials: int = Field(default=DEFAULT_TRIALS, ge=2)
    master_seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2 ** 64)
    loss: LossSpec = SquaredError()
    output_path: Optional[str] = None
    output_format: Literal["csv", "json"] = "csv"
    threads: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="before")
    @classmethod
    def default_loss(cls, data):
        if isinstance(data, dict) and data.get("loss") is None and data.get("problem") == "density":
            data = {**data, "loss": {"kind": "pointwise_squared"}}
        return data

    @model_validator(mode="after")
    def check_consistency(self):
        if (self.alphas is None) == (self.eps_list is None):
            raise ConfigError("exactly one of alphas / eps_list must be given", ["alphas", "eps_list"])
        if self.eps_list is not None and any(e < 0.0 for e in self.eps_list):
            raise ConfigError("eps_list entries must be nonnegative", ["eps_list"])
        expected = PROBLEM_DIST_KIND[self.problem]
        if self.dist.kind != expected:
            raise ConfigError(f"problem {self.problem} needs dist kind {expected}, got {self.dist.kind}", ["dist.kind"])
        if self.problem == "linear_regression":
            if self.n is not None and self.n != self.dist.n:
                raise ConfigError(f"n={self.n} does not match the {self.dist.n} design rows", ["n"])
        elif self.n is None:
            raise ConfigError(f"problem {self.problem} needs a sample size n", ["n"])
        if self.loss.kind not in PROBLEM_LOSS_KINDS[self.problem]:
            raise ConfigError(f"loss {self.loss.kind} is not available for {self.problem}", ["loss.kind"])
        if isinstance(self.loss, PredictionError) and self.loss.design is not None:
            if not np.array_equal(np.asarray(self.loss.design), np.asarray(self.dist.design)):
                raise ConfigError("prediction loss design differs from the model design", ["loss.design"])
        if isinstance(self.loss, PointwiseSquared) and self.loss.x0 != self.dist.x0:
            raise ConfigError("pointwise loss x0 differs from the density x0", ["loss.x0"])
        return self

    @property
    def sample_size(self) -> int:
        return self.dist.n if self.problem == "linear_regression" else self.n

    def eps_grid(self) -> List[tuple[Optional[float], float]]:
        """(alpha, eps) pairs in configured order; alpha is None for eps_list."""
        if self.alphas is not None:
            n = self.sample_size
            return [(a, float(n) ** a) for a in self.alphas]
        return [(None, float(e)) for e in self.eps_list]


class DensityShiftPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    clean: HolderBumpDensity
    shifted: HolderBumpDensity
    eps: float
    eps_certified: float
    kl: float
    x0: float
    h: float
    pointwise_gap: float

    @model_validator(mode="after")
    def check_gap(self):
        if self.clean.sign != 0:
            raise DomainError("clean density of a pair must be unbumped")
        if self.shifted.sign != 0 and self.pointwise_gap <= 0.0:
            raise DomainError("a bumped pair must have a positive pointwise gap")
        return self


class RiskRow(BaseModel):
    estimator: str
    perturbation: str
    mean: float
    std_error: float
    trials: int
    seed: int


class SweepRow(BaseModel):
    problem: str
    alpha: Optional[float] = None
    eps: float
    shift_class: ShiftClass
    minimax_empirical: float
    se: float
    log_n_risk: Optional[float] = None
    theory_exact: Optional[float] = None
    theory_lower: Optional[float] = None
    theory_upper: Optional[float] = None
    rate_only: bool = False


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class CurvePoint(BaseModel):
    """Pointwise KDE risk at one sample size."""

    n: int
    bandwidth: float
    mean: float
    std_error: float
