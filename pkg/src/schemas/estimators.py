from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.schemas.distributions import GaussianLocation, ScalarDistributionSpec, UniformLocation, SmoothedUniform
from src.util.errors import DomainError


class EstimatorBase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: Optional[str] = None

    @property
    def label(self) -> str:
        return self.name or self.kind


class SampleMean(EstimatorBase):
    kind: Literal["sample_mean"] = "sample_mean"


class CoordinatewiseMedian(EstimatorBase):
    kind: Literal["coordinatewise_median"] = "coordinatewise_median"


class Midrange(EstimatorBase):
    """(X_(k) + X_(n-k+1)) / 2."""

    kind: Literal["midrange"] = "midrange"
    k: int = Field(ge=1)

    @property
    def label(self) -> str:
        return self.name or f"midrange_k{self.k}"


class SwitchingUniform(EstimatorBase):
    """Midrange{1} when eps <= C_U(n), sample mean otherwise."""

    kind: Literal["switching_uniform"] = "switching_uniform"
    eps: float = Field(ge=0.0)


class LeastSquares(EstimatorBase):
    kind: Literal["least_squares"] = "least_squares"
    design: List[List[float]]


class GeneralizedLeastSquares(EstimatorBase):
    kind: Literal["generalized_least_squares"] = "generalized_least_squares"
    design: List[List[float]]
    noise_cov: List[List[float]]


class KernelDensityAt(EstimatorBase):
    kind: Literal["kernel_density_at"] = "kernel_density_at"
    x0: float
    bandwidth: float = Field(gt=0.0)
    kernel: Literal["gaussian", "epanechnikov"] = "gaussian"


class Pitman1D(EstimatorBase):
    """Flat-prior posterior mean for the location family generated by base_density."""

    kind: Literal["pitman_1d"] = "pitman_1d"
    base_density: ScalarDistributionSpec
    quad_tol: float = Field(default=1e-10, gt=0.0)

    @field_validator("base_density")
    @classmethod
    def check_centered(cls, base):
        if isinstance(base, GaussianLocation):
            if base.p != 1 or base.theta[0] != 0.0 or base.sigma_cov[0][0] <= 0.0:
                raise DomainError("Pitman base must be a 1-D Gaussian centered at 0 with positive variance")
        elif isinstance(base, (UniformLocation, SmoothedUniform)):
            if base.theta != 0.0:
                raise DomainError("Pitman base density must be centered at theta = 0")
        else:
            raise DomainError(f"{base.kind} is not a location family base")
        return base


EstimatorSpec = Annotated[
    Union[
        SampleMean,
        CoordinatewiseMedian,
        Midrange,
        SwitchingUniform,
        LeastSquares,
        GeneralizedLeastSquares,
        KernelDensityAt,
        Pitman1D,
    ],
    Field(discriminator="kind"),
]
