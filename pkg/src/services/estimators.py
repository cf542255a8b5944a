import logging
import math
from typing import List, Optional

import numpy as np

from src.schemas.distributions import DistributionBase, HolderBumpDensity, LinearModel
from src.schemas.estimators import (
    CoordinatewiseMedian,
    EstimatorBase,
    GeneralizedLeastSquares,
    KernelDensityAt,
    LeastSquares,
    Midrange,
    Pitman1D,
    SampleMean,
    SwitchingUniform,
)
from src.services import distributions
from src.util.errors import DomainError, NumericalError, ShapeError, UnsupportedOperationError
from src.util.kernels import KERNELS
from src.util.linalg import cholesky_lower, gls_solve, least_squares_solve, smallest_singular_value
from src.util.quadrature import integrate_segments

logger = logging.getLogger(__name__)

PITMAN_GRID = 4001
# log-likelihood drop beyond which the Pitman integrand is treated as zero
PITMAN_LOG_WINDOW = 60.0


def uniform_switch_threshold(n: int) -> float:
    """C_U(n), the budget below which Midrange{1} beats the sample mean; C_U(1) = 0."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if n == 1:
        return 0.0
    numerator = math.sqrt(3.0 / n) - math.sqrt(18.0 / ((n + 2) * (n + 1)))
    return numerator / (6.0 * (math.sqrt(n) - 1.0))


def bandwidth_select(n: int, s: float, eps: float) -> float:
    """
    KDE bandwidth max(n^(-1/(2s+1)), eps^(1/(s+2))) with unit constants. The
    shift-free rule wins exactly when eps <= n^(-(s+2)/(2s+1)).
    """
    if n < 1 or s <= 0.0 or eps < 0.0:
        raise DomainError(f"invalid bandwidth parameters n={n}, s={s}, eps={eps}")
    return max(n ** (-1.0 / (2.0 * s + 1.0)), eps ** (1.0 / (s + 2.0)))


def _as_rows(sample: np.ndarray) -> np.ndarray:
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise DomainError("empty sample")
    return x.reshape(-1, 1) if x.ndim == 1 else x


def _midrange(rows: np.ndarray, k: int) -> np.ndarray:
    n = rows.shape[0]
    if k > math.ceil(n / 2):
        raise DomainError(f"midrange k={k} exceeds ceil(n/2) for n={n}")
    ordered = np.sort(rows, axis=0)
    return (ordered[k - 1] + ordered[n - k]) / 2.0


def _base_half_width(base: DistributionBase) -> float:
    lo, hi = distributions.effective_support(base)
    return (hi - lo) / 2.0


def _pitman(spec: Pitman1D, sample: np.ndarray) -> np.ndarray:
    x = _as_rows(sample)
    if x.shape[1] != 1:
        raise ShapeError("Pitman estimator needs scalar observations")
    x = x[:, 0]
    base = spec.base_density
    mid = (x.min() + x.max()) / 2.0
    half = _base_half_width(base) + 10.0 * float(x.std())

    def log_likelihood(u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(distributions.pdf(base, x[None, :] - u[:, None]))).sum(axis=1)

    grid = np.linspace(mid - half, mid + half, PITMAN_GRID)
    values = log_likelihood(grid)
    peak = float(values.max())
    if not math.isfinite(peak):
        raise NumericalError(
            f"Pitman likelihood vanishes on [{grid[0]:.6g}, {grid[-1]:.6g}] for a sample of size {x.size}"
        )
    center = float(grid[int(np.argmax(values))])
    live = np.nonzero(values > peak - PITMAN_LOG_WINDOW)[0]
    lo = grid[max(live[0] - 1, 0)]
    hi = grid[min(live[-1] + 1, PITMAN_GRID - 1)]
    cuts = [xi - k for xi in x for k in distributions.knots(base) if lo < xi - k < hi]

    def weight(u: float) -> float:
        return math.exp(float(log_likelihood(u)[0]) - peak)

    denominator, _ = integrate_segments(weight, lo, hi, knots=cuts, tol=spec.quad_tol)
    if denominator <= 0.0:
        raise NumericalError(f"Pitman denominator underflow on [{lo:.6g}, {hi:.6g}] (peak log-likelihood {peak:.6g})")
    numerator, _ = integrate_segments(lambda u: (u - center) * weight(u), lo, hi, knots=cuts, tol=spec.quad_tol)
    return np.array([center + numerator / denominator])


def estimate(spec: EstimatorBase, sample: np.ndarray) -> np.ndarray:
    """
    Applies an estimator to one observed sample.

    Args:
        spec (EstimatorBase): The estimator.
        sample (np.ndarray): n x p observations, or Y of length n for the
            regression estimators.

    Returns:
        np.ndarray: The estimate; a length-1 array for density values.

    Raises:
        DomainError: For an empty sample or an out-of-range Midrange k.
        ShapeError: If the sample does not match the stored design.
        NumericalError: If the Pitman likelihood underflows.
    """
    if isinstance(spec, SampleMean):
        return _as_rows(sample).mean(axis=0)
    if isinstance(spec, CoordinatewiseMedian):
        return np.median(_as_rows(sample), axis=0)
    if isinstance(spec, Midrange):
        return _midrange(_as_rows(sample), spec.k)
    if isinstance(spec, SwitchingUniform):
        rows = _as_rows(sample)
        if spec.eps <= uniform_switch_threshold(rows.shape[0]):
            return _midrange(rows, 1)
        return rows.mean(axis=0)
    if isinstance(spec, (LeastSquares, GeneralizedLeastSquares)):
        design = np.asarray(spec.design, dtype=float)
        y = np.asarray(sample, dtype=float).ravel()
        if y.size == 0:
            raise DomainError("empty sample")
        if y.shape[0] != design.shape[0]:
            raise ShapeError(f"Y has length {y.shape[0]}, design has {design.shape[0]} rows")
        smallest_singular_value(design)
        if isinstance(spec, LeastSquares):
            return least_squares_solve(design, y)
        return gls_solve(design, cholesky_lower(np.asarray(spec.noise_cov, dtype=float)), y)
    if isinstance(spec, KernelDensityAt):
        x = _as_rows(sample)[:, 0]
        kernel = KERNELS[spec.kernel]
        value = np.sum(kernel((x - spec.x0) / spec.bandwidth)) / (x.size * spec.bandwidth)
        return np.array([value])
    if isinstance(spec, Pitman1D):
        return _pitman(spec, sample)
    raise UnsupportedOperationError(f"unknown estimator {spec.kind}")


def estimator_catalog(problem: str, n: int, eps: float, extras: Optional[DistributionBase] = None) -> List[EstimatorBase]:
    """
    Estimators compared in the simulations of each problem.

    Args:
        problem (str): "location", "linear_regression", "uniform" or "density".
        n (int): Sample size.
        eps (float): Budget, used by the density bandwidth rule.
        extras (DistributionBase, optional): The clean law; required for
            regression (design, noise) and density (x0, s).

    Returns:
        List[EstimatorBase]: The estimator list.
    """
    if problem == "location":
        return [SampleMean(), CoordinatewiseMedian()]
    if problem == "linear_regression":
        if not isinstance(extras, LinearModel):
            raise DomainError("regression estimators need the linear model")
        return [
            LeastSquares(design=extras.design),
            GeneralizedLeastSquares(design=extras.design, noise_cov=extras.noise_cov),
        ]
    if problem == "uniform":
        midranges: List[EstimatorBase] = [Midrange(k=k) for k in range(1, n // 2 + 1)]
        return midranges + [SampleMean(), CoordinatewiseMedian()]
    if problem == "density":
        if not isinstance(extras, HolderBumpDensity):
            raise DomainError("density estimators need the Holder bump template")
        return [KernelDensityAt(x0=extras.x0, bandwidth=bandwidth_select(n, extras.s, eps))]
    raise DomainError(f"no estimator catalog for problem {problem}")
