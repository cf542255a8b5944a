import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from src.schemas.distributions import DistributionBase, GaussianLocation, LinearModel, UniformLocation
from src.schemas.perturbations import (
    ConstantShift,
    IdsLeastFavorable,
    JdsMeanShift,
    LrConstantShift,
    LrPredictionShift,
    NoShift,
    OrderStatTailShift,
    PerturbationBase,
    RandomDirectionConstantShift,
)
from src.schemas.transport import CouplingCostReport
from src.services import distributions
from src.services.transport import coupling_cost_report
from src.util.errors import DomainError, ShapeError, UnsupportedOperationError
from src.util.linalg import cholesky_lower, projection, smallest_singular_value, trace_cov_projection
from src.util.rng import trial_stream

logger = logging.getLogger(__name__)


def ids_parameters(eps: float, n: int, trace_sigma: float) -> Tuple[float, float]:
    """
    (zeta, psi) of the i.i.d. least favorable shift: zeta scales the noise
    until it hits 1/(n-1), the rest of the budget goes to a random constant
    offset of length psi. zeta^2 trace_sigma + psi^2 = eps^2.
    """
    if n < 2:
        raise DomainError("the i.i.d. least favorable shift needs n >= 2")
    zeta = min(math.sqrt(eps ** 2 / trace_sigma), 1.0 / (n - 1))
    psi = math.sqrt(max(0.0, eps ** 2 - trace_sigma / (n - 1) ** 2))
    return zeta, psi


def least_favorable_location(shift_class: str, eps: float, n: int, p: int, trace_sigma: float) -> PerturbationBase:
    """
    Least favorable perturbation of the Gaussian location model for a shift class.

    Args:
        shift_class (str): "CDS", "IDS" or "JDS".
        eps (float): W2 budget per observation.
        n (int): Sample size. For IDS with n = 1 the JDS shift is returned.
        p (int): Dimension.
        trace_sigma (float): Tr[Sigma] > 0.

    Returns:
        PerturbationBase: RandomDirectionConstantShift, IdsLeastFavorable or JdsMeanShift.

    Raises:
        DomainError: If a parameter is out of range.
    """
    if eps < 0.0 or n < 1 or p < 1 or trace_sigma <= 0.0:
        raise DomainError(f"invalid parameters eps={eps}, n={n}, p={p}, trace_sigma={trace_sigma}")
    if shift_class == "CDS":
        return RandomDirectionConstantShift(eps=eps, name="cds_random_direction")
    if shift_class == "IDS" and n >= 2:
        zeta, psi = ids_parameters(eps, n, trace_sigma)
        return IdsLeastFavorable(zeta=zeta, psi=psi, name="ids_least_favorable")
    if shift_class in ("IDS", "JDS"):
        return JdsMeanShift(xi=eps * math.sqrt(n / trace_sigma), name="jds_mean_shift")
    raise DomainError(f"unknown shift class {shift_class}")


def least_favorable_lr(eps: float, design, noise_cov) -> LrPredictionShift:
    """
    Least favorable regression shift Y' = Y + kappa (P_{X,S} Y - X theta) with
    kappa = eps * sqrt(n / Tr[S P_{X,S}]).

    Raises:
        DomainError: If the design is rank deficient or noise_cov is not positive definite.
    """
    if eps < 0.0:
        raise DomainError(f"eps must be nonnegative, got {eps}")
    x = np.asarray(design, dtype=float)
    smallest_singular_value(x)
    trace = trace_cov_projection(x, noise_cov, weighted=True)
    kappa = eps * math.sqrt(x.shape[0] / trace)
    return LrPredictionShift(
        kappa=kappa,
        design=np.asarray(design, dtype=float).tolist(),
        noise_cov=np.asarray(noise_cov, dtype=float).tolist(),
        name="lr_projection_gls",
    )


def _signed_basis(p: int, rng: np.random.Generator) -> np.ndarray:
    index = int(rng.integers(2 * p))
    delta = np.zeros(p)
    delta[index % p] = 1.0 if index < p else -1.0
    return delta


def apply(spec: PerturbationBase, clean: np.ndarray, theta, rng: np.random.Generator) -> np.ndarray:
    """
    Applies a perturbation to one clean sample. The input is never modified.

    Args:
        spec (PerturbationBase): The perturbation.
        clean (np.ndarray): n x p sample, or Y of length n for regression shifts.
        theta: True parameter (the adversary knows it).
        rng (np.random.Generator): Stream for the per-trial random direction.

    Returns:
        np.ndarray: The perturbed sample.

    Raises:
        ShapeError: If the sample and the perturbation parameters disagree.
        DomainError: If OrderStatTailShift has k > n/2.
    """
    clean = np.asarray(clean, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if isinstance(spec, NoShift):
        return clean.copy()
    if isinstance(spec, ConstantShift):
        delta = np.asarray(spec.delta, dtype=float)
        if clean.ndim != 2 or clean.shape[1] != delta.shape[0]:
            raise ShapeError(f"delta of length {delta.shape[0]} does not fit sample {clean.shape}")
        return clean + delta
    if isinstance(spec, RandomDirectionConstantShift):
        return clean + spec.eps * _signed_basis(clean.shape[1], rng)
    if isinstance(spec, IdsLeastFavorable):
        delta = _signed_basis(clean.shape[1], rng)
        return clean + spec.zeta * (clean - theta) + spec.psi * delta
    if isinstance(spec, JdsMeanShift):
        return clean + spec.xi * (clean.mean(axis=0) - theta)
    if isinstance(spec, LrPredictionShift):
        x = np.asarray(spec.design, dtype=float)
        if clean.shape != (x.shape[0],):
            raise ShapeError(f"regression shift expects Y of length {x.shape[0]}, got {clean.shape}")
        chol = None if spec.noise_cov is None else cholesky_lower(np.asarray(spec.noise_cov, dtype=float))
        return clean + spec.kappa * (projection(x, clean, chol) - x @ theta)
    if isinstance(spec, LrConstantShift):
        direction = np.asarray(spec.direction, dtype=float)
        if clean.shape != direction.shape:
            raise ShapeError(f"direction of shape {direction.shape} does not fit Y of shape {clean.shape}")
        return clean + spec.magnitude * direction
    if isinstance(spec, OrderStatTailShift):
        column = clean.reshape(clean.shape[0], -1)
        if column.shape[1] != 1:
            raise ShapeError("order statistic shifts need scalar observations")
        n = column.shape[0]
        if spec.k > n // 2:
            raise DomainError(f"k={spec.k} exceeds n/2 for n={n}")
        out = clean.copy().reshape(n)
        lowest = np.argsort(column[:, 0], kind="stable")[: spec.k]
        out[lowest] -= spec.eps * math.sqrt(n / spec.k)
        return out.reshape(clean.shape)
    raise UnsupportedOperationError(f"cannot apply {spec.kind}")


def _location_catalog(eps: float, n: int, dist: GaussianLocation) -> List[PerturbationBase]:
    p = dist.p
    e1 = np.zeros(p)
    e1[0] = eps
    ones = np.full(p, eps / math.sqrt(p))
    return [
        ConstantShift(delta=e1.tolist(), eps=eps, name="cds_e1"),
        ConstantShift(delta=ones.tolist(), eps=eps, name="cds_ones"),
        least_favorable_location("IDS", eps, n, p, dist.trace_sigma),
        least_favorable_location("JDS", eps, n, p, dist.trace_sigma),
    ]


def _regression_catalog(eps: float, dist: LinearModel) -> List[PerturbationBase]:
    x = dist.x
    n = dist.n
    magnitude = math.sqrt(n) * eps
    e1 = np.zeros(n)
    e1[0] = 1.0
    ones = np.full(n, 1.0 / math.sqrt(n))
    # image of the last right singular vector, i.e. the direction X is least sensitive along
    _, sv, vt = np.linalg.svd(x, full_matrices=False)
    weakest = x @ vt[-1] / sv[-1]
    kappa_ols = eps * math.sqrt(n / trace_cov_projection(x, dist.cov, weighted=False))
    return [
        LrConstantShift(direction=e1.tolist(), magnitude=magnitude, name="lr_shift_e1"),
        LrConstantShift(direction=ones.tolist(), magnitude=magnitude, name="lr_shift_ones"),
        LrPredictionShift(kappa=kappa_ols, design=dist.design, name="lr_projection_ols"),
        least_favorable_lr(eps, dist.design, dist.noise_cov),
        LrConstantShift(direction=(weakest / np.linalg.norm(weakest)).tolist(), magnitude=magnitude,
                        name="lr_shift_min_singular"),
    ]


def _uniform_catalog(eps: float, n: int) -> List[PerturbationBase]:
    shifts: List[PerturbationBase] = [
        OrderStatTailShift(k=k, eps=eps, name=f"tail_shift_k{k}") for k in range(1, n // 2 + 1)
    ]
    shifts.append(ConstantShift(delta=[eps], eps=eps, name="cds_constant"))
    return shifts


def catalog(problem: str, eps: float, n: int, dist: DistributionBase) -> List[PerturbationBase]:
    """
    Full simulation list of perturbations for a problem.

    Args:
        problem (str): "location", "linear_regression" or "uniform".
        eps (float): Budget.
        n (int): Sample size (the design rows for regression).
        dist (DistributionBase): The clean law, which carries p, Sigma or the design.

    Returns:
        List[PerturbationBase]: 4 shifts for location, 5 for regression,
        n/2 + 1 for uniform.

    Raises:
        DomainError: For an unknown problem or a mismatched law.
    """
    if eps < 0.0:
        raise DomainError(f"eps must be nonnegative, got {eps}")
    if problem == "location" and isinstance(dist, GaussianLocation):
        return _location_catalog(eps, n, dist)
    if problem == "linear_regression" and isinstance(dist, LinearModel):
        return _regression_catalog(eps, dist)
    if problem == "uniform" and isinstance(dist, UniformLocation):
        return _uniform_catalog(eps, n)
    raise DomainError(f"no perturbation catalog for problem {problem} with {dist.kind}")


def check_budget(
    dist: DistributionBase,
    perturbation: PerturbationBase,
    eps: float,
    trials: int,
    seed: int,
    n: Optional[int] = None,
) -> CouplingCostReport:
    """
    Monte Carlo budget check of the coupling (X, X') a perturbation induces.

    Each trial contributes the average of ||X'_i - X_i||^2 over its rows (for
    regression, ||Y' - Y||^2 / n), compared against eps^2.
    """
    n = dist.n if isinstance(dist, LinearModel) else n
    theta = distributions.location_parameter(dist)
    costs = np.empty(trials)
    for t in range(trials):
        rng = trial_stream(seed, t)
        clean = distributions.sample(dist, n, rng)
        shifted = apply(perturbation, clean, theta, rng)
        costs[t] = np.sum((shifted - clean) ** 2) / n
    report = coupling_cost_report(costs, eps ** 2)
    logger.debug(
        f"{perturbation.label}: mean displacement {report.mean_sq_displacement:.6g} "
        f"(se {report.std_error:.2g}) vs budget {eps ** 2:.6g}"
    )
    return report
