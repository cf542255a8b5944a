import logging
import math
from functools import lru_cache
from typing import List, Tuple, Union

import numpy as np
from scipy import optimize, stats
from scipy.interpolate import PchipInterpolator

from src.schemas.distributions import (
    DistributionBase,
    GaussianLocation,
    HolderBumpDensity,
    LinearModel,
    SmoothedUniform,
    UniformLocation,
)
from src.util.errors import DomainError, NumericalError, ShapeError, UnsupportedOperationError
from src.util.kernels import GAUSSIAN_K0, bump_difference, bump_difference_integral
from src.util.linalg import psd_factor
from src.util.quadrature import chebyshev_grid, integrate_segments

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

QUANTILE_GRID_SIZE = 4097
QUANTILE_XTOL = 1e-12
# pdf threshold below which Gaussian tails are dropped from quadrature ranges
TAIL_PDF = 1e-16


def _require_scalar(spec: DistributionBase, op: str) -> None:
    if not spec.is_scalar:
        raise UnsupportedOperationError(f"{op} is only defined for scalar laws, got {spec.kind}")


def _gaussian_moments(spec: GaussianLocation) -> Tuple[float, float]:
    sd = spec.scale
    if sd <= 0.0:
        raise DomainError("degenerate 1-D Gaussian has no density")
    return spec.theta[0], sd


def _smoothed_geometry(spec: SmoothedUniform) -> Tuple[float, float]:
    """Half-width of the flat part and the scale of the Gaussian edges."""
    return 0.5 - spec.tau, 2.0 * spec.tau * GAUSSIAN_K0


def _gaussian_tail_width(sd: float) -> float:
    return sd * math.sqrt(-2.0 * math.log(TAIL_PDF * sd * math.sqrt(2.0 * math.pi)))


def location_parameter(spec: DistributionBase):
    """The parameter an estimator targets: theta, or f(x0) for densities."""
    if isinstance(spec, (GaussianLocation, LinearModel)):
        return spec.mean
    if isinstance(spec, (UniformLocation, SmoothedUniform)):
        return np.array([spec.theta])
    if isinstance(spec, HolderBumpDensity):
        return np.array([float(pdf(spec, spec.x0))])
    raise UnsupportedOperationError(f"no parameter for {spec.kind}")


def effective_support(spec: DistributionBase) -> Tuple[float, float]:
    """
    Interval outside of which the density is negligible for quadrature.

    Raises:
        UnsupportedOperationError: If the law is not scalar.
    """
    _require_scalar(spec, "effective_support")
    if isinstance(spec, GaussianLocation):
        m, sd = _gaussian_moments(spec)
        w = _gaussian_tail_width(sd)
        return m - w, m + w
    if isinstance(spec, UniformLocation):
        return spec.theta - 0.5, spec.theta + 0.5
    if isinstance(spec, SmoothedUniform):
        w = 0.5 + 40.0 * spec.tau * GAUSSIAN_K0
        return spec.theta - w, spec.theta + w
    w = _gaussian_tail_width(spec.sigma_base)
    return min(-w, spec.x0 - spec.h / 2.0), max(w, spec.x0 + 1.5 * spec.h)


def knots(spec: DistributionBase) -> List[float]:
    """Points where the density is not smooth (or changes regime)."""
    if isinstance(spec, UniformLocation):
        return [spec.theta - 0.5, spec.theta + 0.5]
    if isinstance(spec, SmoothedUniform):
        a, _ = _smoothed_geometry(spec)
        return [spec.theta - a, spec.theta + a]
    if isinstance(spec, HolderBumpDensity) and spec.sign != 0:
        return [spec.x0 - spec.h / 2.0, spec.x0 + spec.h / 2.0, spec.x0 + 1.5 * spec.h]
    if isinstance(spec, GaussianLocation):
        return [spec.theta[0]]
    return []


def pdf(spec: DistributionBase, x: ArrayLike) -> ArrayLike:
    """
    Density of a scalar law.

    Args:
        spec (DistributionBase): A scalar distribution spec.
        x (float | np.ndarray): Evaluation points.

    Returns:
        float | np.ndarray: Density values with the shape of x.

    Raises:
        UnsupportedOperationError: If the law is not scalar.
    """
    _require_scalar(spec, "pdf")
    x = np.asarray(x, dtype=float)
    if isinstance(spec, GaussianLocation):
        m, sd = _gaussian_moments(spec)
        out = stats.norm.pdf(x, loc=m, scale=sd)
    elif isinstance(spec, UniformLocation):
        out = np.where(np.abs(x - spec.theta) <= 0.5, 1.0, 0.0)
    elif isinstance(spec, SmoothedUniform):
        a, scale = _smoothed_geometry(spec)
        dist = np.abs(x - spec.theta)
        out = np.where(dist <= a, 1.0, stats.norm.pdf((dist - a) / scale) / GAUSSIAN_K0)
    else:
        out = stats.norm.pdf(x, scale=spec.sigma_base)
        if spec.sign != 0:
            out = out + spec.sign * spec.bump_height * bump_difference((x - spec.x0) / spec.h, spec.amplitude)
    return out if out.ndim else float(out)


def _bump_cdf_offset(spec: HolderBumpDensity, x: np.ndarray) -> np.ndarray:
    if spec.sign == 0:
        return np.zeros_like(x)
    u = (x - spec.x0) / spec.h
    integral = np.vectorize(lambda v: bump_difference_integral(v, spec.amplitude))(u)
    return spec.sign * spec.bump_height * spec.h * integral


def cdf(spec: DistributionBase, x: ArrayLike) -> ArrayLike:
    _require_scalar(spec, "cdf")
    x = np.asarray(x, dtype=float)
    if isinstance(spec, GaussianLocation):
        m, sd = _gaussian_moments(spec)
        out = stats.norm.cdf(x, loc=m, scale=sd)
    elif isinstance(spec, UniformLocation):
        out = np.clip(x - spec.theta + 0.5, 0.0, 1.0)
    elif isinstance(spec, SmoothedUniform):
        out = 1.0 - np.asarray(sf(spec, x))
    else:
        out = np.clip(stats.norm.cdf(x, scale=spec.sigma_base) + _bump_cdf_offset(spec, x), 0.0, 1.0)
    return out if out.ndim else float(out)


def sf(spec: DistributionBase, x: ArrayLike) -> ArrayLike:
    """Survival function 1 - cdf, accurate in the upper tail."""
    _require_scalar(spec, "sf")
    x = np.asarray(x, dtype=float)
    if isinstance(spec, SmoothedUniform):
        a, scale = _smoothed_geometry(spec)
        tau = spec.tau
        rel = x - spec.theta
        with np.errstate(invalid="ignore"):
            upper = 2.0 * tau * stats.norm.sf((rel - a) / scale)
            lower = 1.0 - 2.0 * tau * stats.norm.sf((-rel - a) / scale)
        out = np.where(rel >= a, upper, np.where(rel <= -a, lower, 0.5 - rel))
    elif isinstance(spec, GaussianLocation):
        m, sd = _gaussian_moments(spec)
        out = stats.norm.sf(x, loc=m, scale=sd)
    elif isinstance(spec, UniformLocation):
        out = np.clip(spec.theta + 0.5 - x, 0.0, 1.0)
    else:
        out = np.clip(stats.norm.sf(x, scale=spec.sigma_base) - _bump_cdf_offset(spec, x), 0.0, 1.0)
    return out if out.ndim else float(out)


def _check_probability(q: np.ndarray) -> None:
    if np.any((q <= 0.0) | (q >= 1.0)) or np.any(np.isnan(q)):
        raise DomainError("quantile levels must lie in (0, 1)")


def _bracketed_root(func, guess: float, width: float) -> float:
    lo, hi = guess - width, guess + width
    for _ in range(200):
        f_lo, f_hi = func(lo), func(hi)
        if f_lo <= 0.0 <= f_hi:
            return optimize.brentq(func, lo, hi, xtol=QUANTILE_XTOL, rtol=4 * np.finfo(float).eps)
        if f_lo > 0.0:
            lo -= width
        if f_hi < 0.0:
            hi += width
        width *= 2.0
    raise NumericalError(f"could not bracket quantile near {guess}")


def _holder_quantile(spec: HolderBumpDensity, q: float) -> float:
    guess = float(stats.norm.ppf(q, scale=spec.sigma_base))
    if q > 0.5:
        return _bracketed_root(lambda x: (1.0 - q) - float(sf(spec, x)), guess, spec.sigma_base)
    return _bracketed_root(lambda x: float(cdf(spec, x)) - q, guess, spec.sigma_base)


def quantile(spec: DistributionBase, q: ArrayLike) -> ArrayLike:
    """
    Inverse cdf of a scalar law.

    Closed forms for the Gaussian, uniform and smoothed uniform laws; the Holder
    bump density is inverted by bracketing and Brent's method to 1e-12 in x.

    Raises:
        DomainError: If any level lies outside (0, 1).
        UnsupportedOperationError: If the law is not scalar.
    """
    _require_scalar(spec, "quantile")
    q = np.asarray(q, dtype=float)
    _check_probability(q)
    if isinstance(spec, GaussianLocation):
        m, sd = _gaussian_moments(spec)
        out = stats.norm.ppf(q, loc=m, scale=sd)
    elif isinstance(spec, UniformLocation):
        out = spec.theta - 0.5 + q
    elif isinstance(spec, SmoothedUniform):
        tau = spec.tau
        a, scale = _smoothed_geometry(spec)
        with np.errstate(divide="ignore", invalid="ignore"):
            low = spec.theta - a + scale * stats.norm.ppf(q / (2.0 * tau))
            high = spec.theta + a + scale * stats.norm.isf((1.0 - q) / (2.0 * tau))
        out = np.where(q <= tau, low, np.where(q >= 1.0 - tau, high, spec.theta + q - 0.5))
    else:
        out = np.vectorize(lambda level: _holder_quantile(spec, level))(q)
    return out if np.ndim(out) else float(out)


def upper_quantile(spec: DistributionBase, u: ArrayLike) -> ArrayLike:
    """quantile(1 - u) evaluated without forming 1 - u."""
    _require_scalar(spec, "upper_quantile")
    u = np.asarray(u, dtype=float)
    _check_probability(u)
    if isinstance(spec, GaussianLocation):
        m, sd = _gaussian_moments(spec)
        out = stats.norm.isf(u, loc=m, scale=sd)
    elif isinstance(spec, UniformLocation):
        out = spec.theta + 0.5 - u
    elif isinstance(spec, SmoothedUniform):
        a, scale = _smoothed_geometry(spec)
        with np.errstate(divide="ignore", invalid="ignore"):
            high = spec.theta + a + scale * stats.norm.isf(u / (2.0 * spec.tau))
        out = np.where(u <= spec.tau, high, spec.theta + 0.5 - u)
    else:
        guess_of = lambda level: float(stats.norm.isf(level, scale=spec.sigma_base))
        out = np.vectorize(
            lambda level: _bracketed_root(lambda x: level - float(sf(spec, x)), guess_of(level), spec.sigma_base)
        )(u)
    return out if np.ndim(out) else float(out)


@lru_cache(maxsize=64)
def _quantile_table(spec: Union[SmoothedUniform, HolderBumpDensity]) -> Tuple[PchipInterpolator, float, float]:
    lo, hi = effective_support(spec)
    grid = chebyshev_grid(lo, hi, QUANTILE_GRID_SIZE)
    levels = np.asarray(cdf(spec, grid), dtype=float)
    keep = np.concatenate([[True], np.diff(levels) > 0.0])
    levels, grid = levels[keep], grid[keep]
    logger.debug(f"Tabulated {len(grid)} quantile nodes for {spec.kind}")
    return PchipInterpolator(levels, grid, extrapolate=False), float(levels[0]), float(levels[-1])


def sample(spec: DistributionBase, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draws i.i.d. observations from a clean law.

    Args:
        spec (DistributionBase): The clean law.
        n (int): Number of rows; for LinearModel it must equal the design rows.
        rng (np.random.Generator): Caller-owned stream, the only source of randomness.

    Returns:
        np.ndarray: An n x p matrix (n x 1 for scalar laws), or Y of length n
        for LinearModel.

    Raises:
        DomainError: If n < 1.
        ShapeError: If n disagrees with a LinearModel design.
    """
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    if isinstance(spec, GaussianLocation):
        factor = psd_factor(spec.cov, "sigma_cov")
        z = rng.standard_normal((n, spec.p))
        return spec.mean + z @ factor.T
    if isinstance(spec, UniformLocation):
        return spec.theta - 0.5 + rng.random((n, 1))
    if isinstance(spec, (SmoothedUniform, HolderBumpDensity)):
        table, first, last = _quantile_table(spec)
        u = np.clip(rng.random(n), first, last)
        return table(u).reshape(n, 1)
    if isinstance(spec, LinearModel):
        if n != spec.n:
            raise ShapeError(f"linear model draws Y of length {spec.n}, requested {n}")
        return spec.x @ spec.mean + spec.noise_chol @ rng.standard_normal(spec.n)
    raise UnsupportedOperationError(f"cannot sample {spec.kind}")


def fisher_info_smoothed_uniform(tau: float, numeric: bool = False) -> float:
    """
    Fisher information of the smoothed uniform location family, pi / tau.

    Args:
        tau (float): Edge mass, 0 < tau <= 1/2.
        numeric (bool): Integrate (1/(tau K(0)^2)) * int_0^inf K'(y)^2 / K(y) dy
            by quadrature instead of using the closed form.

    Returns:
        float: The Fisher information.

    Raises:
        DomainError: If tau is out of range.
    """
    if not 0.0 < tau <= 0.5:
        raise DomainError(f"tau must lie in (0, 1/2], got {tau}")
    if not numeric:
        return math.pi / tau

    def score_density(y: float) -> float:
        k = stats.norm.pdf(y)
        return (y * k) ** 2 / k if k > 0.0 else 0.0

    integral, _ = integrate_segments(score_density, 0.0, 40.0, knots=(1.0, 5.0), tol=1e-14)
    return integral / (tau * GAUSSIAN_K0 ** 2)
