import logging
import math

import numpy as np

from src.config.settings import QUAD_TOL
from src.schemas.distributions import DistributionBase, SmoothedUniform
from src.schemas.transport import CouplingCostReport
from src.services import distributions
from src.util.errors import DomainError, NumericalError, ShapeError, UnsupportedOperationError
from src.util.linalg import psd_sqrt
from src.util.quadrature import integrate_segments

logger = logging.getLogger(__name__)

# W2^2(uniform, smoothed uniform) = SMOOTHED_UNIFORM_W2_CONSTANT * tau^3
SMOOTHED_UNIFORM_W2_CONSTANT = 2.0 * (6.0 - 6.0 * math.sqrt(2.0) + math.pi) / (3.0 * math.pi)

# quantile-space cut where the tail pieces are integrated separately
TAIL_LEVEL = 1e-8

SUPPORT_FLOOR = 1e-300


def w2_gaussian(mu1, cov1, mu2, cov2) -> float:
    """
    Closed-form W2 distance between two Gaussian laws.

    Args:
        mu1, mu2: Mean vectors (or scalars).
        cov1, cov2: Symmetric PSD covariance matrices (or variances).

    Returns:
        float: sqrt(||mu1 - mu2||^2 + Tr[S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2]).

    Raises:
        ShapeError: If dimensions disagree.
        DomainError: If a covariance is not symmetric PSD.
    """
    mu1, mu2 = np.atleast_1d(np.asarray(mu1, dtype=float)), np.atleast_1d(np.asarray(mu2, dtype=float))
    cov1, cov2 = np.atleast_2d(np.asarray(cov1, dtype=float)), np.atleast_2d(np.asarray(cov2, dtype=float))
    p = mu1.shape[0]
    if mu2.shape != (p,) or cov1.shape != (p, p) or cov2.shape != (p, p):
        raise ShapeError(
            f"dimension mismatch: means {mu1.shape}, {mu2.shape}; covariances {cov1.shape}, {cov2.shape}"
        )
    root1 = psd_sqrt(cov1, "cov1")
    psd_sqrt(cov2, "cov2")
    middle = root1 @ cov2 @ root1
    cross = psd_sqrt((middle + middle.T) / 2.0, "cross term")
    value = float(np.sum((mu1 - mu2) ** 2) + np.trace(cov1 + cov2 - 2.0 * cross))
    return math.sqrt(max(value, 0.0))


def _probability_knots(spec: DistributionBase) -> list[float]:
    if isinstance(spec, SmoothedUniform):
        return [spec.tau]
    return []


def _half_integral(lower, spec1, spec2, quad_tol: float) -> float:
    """
    Integral over q in (0, 1/2) of (Q1 - Q2)^2, with Q the lower quantile when
    `lower` is set and the upper quantile quantile(1 - q) otherwise.
    """
    inverse = distributions.quantile if lower else distributions.upper_quantile

    def integrand(q: float) -> float:
        return (float(inverse(spec1, q)) - float(inverse(spec2, q))) ** 2

    cuts = [TAIL_LEVEL, *_probability_knots(spec1), *_probability_knots(spec2)]
    value, _ = integrate_segments(integrand, 0.0, 0.5, knots=cuts, tol=quad_tol / 2.0)
    return value


def w2_1d(spec1: DistributionBase, spec2: DistributionBase, quad_tol: float = QUAD_TOL) -> float:
    """
    W2 distance between two scalar laws through their quantile functions.

    The unit interval is split at 1/2; the upper half is evaluated in u = 1 - q
    with upper quantiles so that both tails keep full precision. The pieces on
    (0, 1e-8) next to each tail are integrated separately, which lets QUADPACK
    extrapolate the logarithmic growth of Gaussian quantiles.

    Args:
        spec1 (DistributionBase): First scalar law.
        spec2 (DistributionBase): Second scalar law.
        quad_tol (float): Absolute tolerance on W2^2.

    Returns:
        float: The W2 distance.

    Raises:
        UnsupportedOperationError: If either spec is not scalar.
    """
    for spec in (spec1, spec2):
        if not spec.is_scalar:
            raise UnsupportedOperationError(f"w2_1d needs scalar laws, got {spec.kind}")
    total = _half_integral(True, spec1, spec2, quad_tol) + _half_integral(False, spec1, spec2, quad_tol)
    return math.sqrt(max(total, 0.0))


def w2_smoothed_uniform_closed(tau: float) -> float:
    if not 0.0 < tau <= 0.5:
        raise DomainError(f"tau must lie in (0, 1/2], got {tau}")
    return math.sqrt(SMOOTHED_UNIFORM_W2_CONSTANT * tau ** 3)


def coupling_cost_report(costs: np.ndarray, budget: float) -> CouplingCostReport:
    """
    Reduces per-unit squared displacements to a budget report.

    within_budget holds when the mean is at most budget + 3 SE; exact equality
    up to float rounding also counts for deterministic shifts.
    """
    costs = np.asarray(costs, dtype=float).ravel()
    if costs.size == 0:
        raise ShapeError("no displacements to aggregate")
    mean = float(costs.mean())
    se = float(costs.std(ddof=1) / math.sqrt(costs.size)) if costs.size > 1 else 0.0
    within = mean <= budget + 3.0 * se or math.isclose(mean, budget, rel_tol=1e-9, abs_tol=1e-15)
    return CouplingCostReport(
        mean_sq_displacement=mean,
        std_error=se,
        trials=int(costs.size),
        budget=budget,
        within_budget=within,
    )


def empirical_coupling_cost(clean: np.ndarray, perturbed: np.ndarray, budget: float) -> CouplingCostReport:
    """
    Mean over rows of ||X'_i - X_i||^2 for the coupling (X, X').

    Args:
        clean (np.ndarray): Clean rows.
        perturbed (np.ndarray): Perturbed rows, same shape.
        budget (float): eps^2.

    Returns:
        CouplingCostReport: Mean displacement, SE and the budget verdict.

    Raises:
        ShapeError: If the shapes differ.
    """
    clean, perturbed = np.asarray(clean, dtype=float), np.asarray(perturbed, dtype=float)
    if clean.shape != perturbed.shape:
        raise ShapeError(f"shape mismatch: {clean.shape} vs {perturbed.shape}")
    diff = (perturbed - clean).reshape(clean.shape[0], -1)
    return coupling_cost_report(np.sum(diff ** 2, axis=1), budget)


def order_statistic_displacement(clean: np.ndarray, perturbed: np.ndarray, j: int) -> np.ndarray:
    """
    Squared displacement of the j-th order statistic for each trial row of
    scalar samples shaped (trials, n).
    """
    clean, perturbed = np.asarray(clean, dtype=float), np.asarray(perturbed, dtype=float)
    if clean.shape != perturbed.shape or clean.ndim != 2:
        raise ShapeError("order statistics need matching (trials, n) arrays")
    if not 1 <= j <= clean.shape[1]:
        raise DomainError(f"order statistic index {j} outside 1..{clean.shape[1]}")
    a = np.sort(clean, axis=1)[:, j - 1]
    b = np.sort(perturbed, axis=1)[:, j - 1]
    return (b - a) ** 2


def kl_numeric(p_spec: DistributionBase, q_spec: DistributionBase, quad_tol: float = QUAD_TOL) -> float:
    """
    KL(p || q) of two scalar laws by quadrature over the union of their
    effective supports. The integrand p log(p/q) - p + q is pointwise
    nonnegative and has the same integral.

    Raises:
        UnsupportedOperationError: If either spec is not scalar.
        NumericalError: If p > 0 where q vanishes.
    """
    for spec in (p_spec, q_spec):
        if not spec.is_scalar:
            raise UnsupportedOperationError(f"kl_numeric needs scalar laws, got {spec.kind}")
    lo1, hi1 = distributions.effective_support(p_spec)
    lo2, hi2 = distributions.effective_support(q_spec)
    lo, hi = min(lo1, lo2), max(hi1, hi2)

    grid = np.linspace(lo1, hi1, 20001)
    p_grid = np.asarray(distributions.pdf(p_spec, grid))
    q_grid = np.asarray(distributions.pdf(q_spec, grid))
    if np.any((p_grid > 0.0) & (q_grid <= SUPPORT_FLOOR)):
        raise NumericalError(f"support violation: {p_spec.kind} has mass where {q_spec.kind} vanishes")

    def integrand(x: float) -> float:
        p = float(distributions.pdf(p_spec, x))
        q = float(distributions.pdf(q_spec, x))
        if p <= 0.0:
            return q
        if q <= SUPPORT_FLOOR:
            raise NumericalError(f"support violation at x={x}")
        return p * math.log1p((p - q) / q) - p + q

    cuts = distributions.knots(p_spec) + distributions.knots(q_spec)
    value, _ = integrate_segments(integrand, lo, hi, knots=cuts, tol=quad_tol)
    return max(value, 0.0)


def talagrand_w2_upper(kl: float, rho: float) -> float:
    """W2 <= sqrt(2 KL / rho) for a rho-strongly log-concave reference law."""
    if rho <= 0.0:
        raise DomainError(f"rho must be positive, got {rho}")
    if kl < 0.0:
        raise DomainError(f"KL divergence must be nonnegative, got {kl}")
    return math.sqrt(2.0 * kl / rho)
