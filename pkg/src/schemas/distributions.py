from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import stats

from src.util.errors import DomainError, ShapeError
from src.util.kernels import bump_difference, holder_kernel_amplitude
from src.util.linalg import cholesky_lower, smallest_singular_value, symmetric_eigen


class DistributionBase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    @property
    def is_scalar(self) -> bool:
        return False


class GaussianLocation(DistributionBase):
    """N(theta, sigma_cov); sigma_cov may be singular."""

    kind: Literal["gaussian_location"] = "gaussian_location"
    theta: Optional[List[float]] = None
    sigma_cov: List[List[float]]

    @model_validator(mode="before")
    @classmethod
    def default_theta(cls, data):
        if isinstance(data, dict) and data.get("theta") is None and data.get("sigma_cov") is not None:
            data = {**data, "theta": [0.0] * len(data["sigma_cov"])}
        return data

    @model_validator(mode="after")
    def check_covariance(self):
        cov = np.asarray(self.sigma_cov, dtype=float)
        if cov.ndim != 2 or cov.shape != (len(self.theta), len(self.theta)):
            raise ShapeError(f"sigma_cov must be {len(self.theta)}x{len(self.theta)}, got {cov.shape}")
        symmetric_eigen(cov, "sigma_cov")
        return self

    @property
    def p(self) -> int:
        return len(self.theta)

    @property
    def is_scalar(self) -> bool:
        return self.p == 1

    @property
    def mean(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)

    @property
    def cov(self) -> np.ndarray:
        return np.asarray(self.sigma_cov, dtype=float)

    @property
    def trace_sigma(self) -> float:
        return float(np.trace(self.cov))

    @property
    def scale(self) -> float:
        return float(np.sqrt(self.cov[0, 0]))


class UniformLocation(DistributionBase):
    """Unif[theta - 1/2, theta + 1/2]."""

    kind: Literal["uniform_location"] = "uniform_location"
    theta: float = 3.0

    @property
    def is_scalar(self) -> bool:
        return True


class SmoothedUniform(DistributionBase):
    """Uniform of unit width whose edges are replaced by Gaussian-kernel tails of mass tau."""

    kind: Literal["smoothed_uniform"] = "smoothed_uniform"
    theta: float = 0.0
    tau: float = Field(gt=0.0, le=0.5)

    @property
    def is_scalar(self) -> bool:
        return True


class HolderBumpDensity(DistributionBase):
    """
    phi_sigma(x) + sign * L * h^s * T((x - x0) / h); sign 0 is the plain
    Gaussian base.
    """

    kind: Literal["holder_bump"] = "holder_bump"
    x0: float = 0.0
    s: float = Field(default=2.0, gt=0.0)
    big_l: float = Field(default=10.0, gt=0.0)
    sigma_base: float = Field(default=1.0, gt=0.0)
    h: float = Field(default=1.0, gt=0.0)
    sign: Literal[-1, 0, 1] = 0

    @model_validator(mode="after")
    def check_positive(self):
        if self.sign == 0:
            return self
        lo = min(self.x0 - 5.0 * self.sigma_base, self.x0 - self.h / 2.0)
        hi = max(self.x0 + 5.0 * self.sigma_base, self.x0 + 1.5 * self.h)
        grid = np.linspace(lo, hi, 20001)
        values = stats.norm.pdf(grid, scale=self.sigma_base) + self.sign * self.bump_height * bump_difference(
            (grid - self.x0) / self.h, self.amplitude
        )
        if values.min() <= 0.0:
            raise DomainError(
                f"holder bump density is not positive (min {values.min():.3e}); decrease big_l or h"
            )
        return self

    @property
    def is_scalar(self) -> bool:
        return True

    @property
    def amplitude(self) -> float:
        return holder_kernel_amplitude(self.s)

    @property
    def bump_height(self) -> float:
        """L * h^s."""
        return self.big_l * self.h ** self.s


class LinearModel(DistributionBase):
    """Y = X theta + E with E ~ N(0, noise_cov)."""

    kind: Literal["linear_model"] = "linear_model"
    design: List[List[float]]
    theta: Optional[List[float]] = None
    noise_cov: List[List[float]]

    @model_validator(mode="before")
    @classmethod
    def default_theta(cls, data):
        if isinstance(data, dict) and data.get("theta") is None and data.get("design"):
            data = {**data, "theta": [1.0] * len(data["design"][0])}
        return data

    @model_validator(mode="after")
    def check_design(self):
        x = np.asarray(self.design, dtype=float)
        if x.ndim != 2:
            raise ShapeError(f"design must be a matrix, got shape {x.shape}")
        smallest_singular_value(x)
        n, p = x.shape
        if len(self.theta) != p:
            raise ShapeError(f"theta has length {len(self.theta)}, design has {p} columns")
        cov = np.asarray(self.noise_cov, dtype=float)
        if cov.shape != (n, n):
            raise ShapeError(f"noise_cov must be {n}x{n}, got {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(cov).max()))):
            raise DomainError("noise_cov is not symmetric")
        cholesky_lower(cov)
        return self

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.design, dtype=float)

    @property
    def cov(self) -> np.ndarray:
        return np.asarray(self.noise_cov, dtype=float)

    @property
    def noise_chol(self) -> np.ndarray:
        return cholesky_lower(self.cov)

    @property
    def mean(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)

    @property
    def n(self) -> int:
        return len(self.design)

    @property
    def p(self) -> int:
        return len(self.design[0])


DistributionSpec = Annotated[
    Union[GaussianLocation, UniformLocation, SmoothedUniform, HolderBumpDensity, LinearModel],
    Field(discriminator="kind"),
]

ScalarDistributionSpec = Annotated[
    Union[GaussianLocation, UniformLocation, SmoothedUniform, HolderBumpDensity],
    Field(discriminator="kind"),
]
