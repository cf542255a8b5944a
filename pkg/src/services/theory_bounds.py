import logging
import math
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import scipy.linalg

from src.schemas.bounds import TheoryBound
from src.schemas.distributions import GaussianLocation, HolderBumpDensity, LinearModel
from src.services.estimators import uniform_switch_threshold
from src.services.perturbations import ids_parameters
from src.services.transport import SMOOTHED_UNIFORM_W2_CONSTANT
from src.util.errors import DomainError
from src.util.linalg import (
    cholesky_lower,
    information_matrix,
    inverse_trace,
    ols_error_trace,
    smallest_singular_value,
    symmetric_eigen,
    trace_cov_projection,
)

logger = logging.getLogger(__name__)

Phi = Callable[[float], float]

# constant of the i.i.d. uniform lower bound, a rounding down of 1 / (pi c^(1/3))
UNIFORM_IDS_CONSTANT = 0.614


def identity(t: float) -> float:
    return t


def square(t: float) -> float:
    return t * t


PHI: Dict[str, Phi] = {"identity": identity, "square": square}


def _check_eps(eps: float) -> None:
    if not eps >= 0.0:
        raise DomainError(f"eps must be nonnegative, got {eps}")


def triangle_upper_bound(shift_free_risk: float, displacement: float) -> float:
    """
    (sqrt(R) + d)^2: the worst-case squared error of an estimator with
    shift-free risk R whose output moves by at most d under the shift.
    """
    if shift_free_risk < 0.0 or displacement < 0.0:
        raise DomainError("risk and displacement must be nonnegative")
    return (math.sqrt(shift_free_risk) + displacement) ** 2


def ids_location_branches(eps: float, n: int, trace_sigma: float) -> Tuple[float, float]:
    """
    The two branches of the i.i.d. location risk, (eps + sqrt(tr))^2 / n and
    eps^2 + tr / (n - 1). They agree at eps = sqrt(tr) / (n - 1).
    """
    if n < 2:
        raise DomainError("the i.i.d. branches need n >= 2")
    small = (eps + math.sqrt(trace_sigma)) ** 2 / n
    large = eps ** 2 + trace_sigma / (n - 1)
    return small, large


def location_risk(shift_class: str, eps: float, n: int, p: int, trace_sigma: float) -> TheoryBound:
    """
    Exact minimax risk of Gaussian location estimation under squared loss.

    Args:
        shift_class (str): "CDS", "IDS" or "JDS".
        eps (float): Budget.
        n (int): Sample size; IDS with n = 1 coincides with JDS.
        p (int): Dimension.
        trace_sigma (float): Tr[Sigma].

    Returns:
        TheoryBound: An exact value.

    Raises:
        DomainError: For parameters outside their domain.
    """
    _check_eps(eps)
    if n < 1 or p < 1 or trace_sigma < 0.0:
        raise DomainError(f"invalid parameters n={n}, p={p}, trace_sigma={trace_sigma}")
    if shift_class == "CDS":
        value = eps ** 2 + trace_sigma / n
    elif shift_class == "IDS" and n >= 2:
        small, large = ids_location_branches(eps, n, trace_sigma)
        value = small if eps ** 2 <= trace_sigma / (n - 1) ** 2 else large
    elif shift_class in ("IDS", "JDS"):
        value = triangle_upper_bound(trace_sigma / n, eps)
    else:
        raise DomainError(f"unknown shift class {shift_class}")
    return TheoryBound.exact_value("location", shift_class, eps, value)


def modulus_lr(eps: float, design, m0: float) -> float:
    """max(n eps^2 / sigma_min(X)^2, M(0))."""
    _check_eps(eps)
    x = np.asarray(design, dtype=float)
    sigma_min = smallest_singular_value(x)
    return max(x.shape[0] * eps ** 2 / sigma_min ** 2, m0)


def lr_risk(eps: float, design, noise_cov, loss: str = "prediction") -> TheoryBound:
    """
    Minimax risk of linear regression under joint shifts.

    The prediction risk (eps + sqrt(Tr[S P_{X,S}] / n))^2 is exact and attained
    by GLS. For the squared error only bounds are available: the Bayes lower
    bound (1 + kappa)^2 Tr[(X^T S^-1 X)^-1] against the modulus bound, and the
    least squares upper bound.

    Args:
        eps (float): Budget.
        design: n x p full-rank design.
        noise_cov: n x n positive definite noise covariance.
        loss (str): "prediction" or "squared".

    Returns:
        TheoryBound: Exact for prediction, lower/upper for squared.

    Raises:
        DomainError: If the design is rank deficient or noise_cov is not positive definite.
    """
    _check_eps(eps)
    x = np.asarray(design, dtype=float)
    s = np.asarray(noise_cov, dtype=float)
    sigma_min = smallest_singular_value(x)
    n = x.shape[0]
    trace = trace_cov_projection(x, s, weighted=True)
    if loss == "prediction":
        return TheoryBound.exact_value("linear_regression", "JDS", eps, triangle_upper_bound(trace / n, eps))
    if loss != "squared":
        raise DomainError(f"unknown regression loss {loss}")
    kappa = eps * math.sqrt(n / trace)
    bayes = (1.0 + kappa) ** 2 * inverse_trace(information_matrix(x, cholesky_lower(s)))
    lower = modulus_lr(eps, x, bayes)
    upper = triangle_upper_bound(ols_error_trace(x, s), eps * math.sqrt(n) / sigma_min)
    return TheoryBound(problem="linear_regression", shift_class="JDS", eps=eps, lower=lower, upper=upper)


def uniform_bounds(shift_class: str, eps: float, n: int) -> TheoryBound:
    """
    Uniform location under squared loss: exact under constant shifts, a
    Cramer-Rao based lower bound and the midrange / sample mean upper bound
    otherwise.

    Args:
        shift_class (str): "CDS", "IDS" or "JDS".
        eps (float): Budget.
        n (int): Sample size.

    Returns:
        TheoryBound: Exact for CDS, lower/upper for IDS and JDS.
    """
    _check_eps(eps)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    midrange_risk = 1.0 / (2.0 * (n + 1) * (n + 2))
    cds = eps ** 2 + midrange_risk
    if shift_class == "CDS":
        return TheoryBound.exact_value("uniform", shift_class, eps, cds)
    if shift_class not in ("IDS", "JDS"):
        raise DomainError(f"unknown shift class {shift_class}")
    lower = max(min(UNIFORM_IDS_CONSTANT * eps ** (2.0 / 3.0) / n, 1.0 / (2.0 * math.pi * n)), cds)
    if eps <= uniform_switch_threshold(n):
        upper = triangle_upper_bound(midrange_risk, eps * math.sqrt(n))
    else:
        upper = triangle_upper_bound(1.0 / (12.0 * n), eps)
    return TheoryBound(problem="uniform", shift_class=shift_class, eps=eps, lower=lower, upper=upper)


def density_bounds(eps: float, n: int, s: float, shift_class: str = "IDS") -> TheoryBound:
    """
    Rates of pointwise density estimation over a Holder class with unit
    constants. The lower rate is only established for eps <= 1 and is omitted
    beyond.
    """
    _check_eps(eps)
    if n < 1 or s <= 0.0:
        raise DomainError(f"invalid parameters n={n}, s={s}")
    base = n ** (-2.0 * s / (2.0 * s + 1.0))
    upper = max(base, eps ** (2.0 * s / (s + 2.0)))
    lower = None
    if eps <= 1.0:
        lower = max(base, eps ** (4.0 * s / (2.0 * s + 1.0)))
    else:
        logger.warning(f"density lower bound omitted for eps={eps} > 1")
    return TheoryBound(problem="density", shift_class=shift_class, eps=eps, lower=lower, upper=upper, rate_only=True)


def crlb_smoothed_uniform(eps: float, n: int) -> float:
    """
    Cramer-Rao bound obtained by smoothing the uniform within a W2 budget eps:
    tau = (eps^2 / c)^(1/3) gives tau / (n pi), capped at the Gaussian value
    1 / (2 pi n) once tau reaches 1/2, i.e. for eps >= sqrt(c / 8).

    The regime cut is sqrt(c / 8), where tau = 1/2, not sqrt(c / 2).
    """
    if eps <= 0.0 or n < 1:
        raise DomainError(f"invalid parameters eps={eps}, n={n}")
    c = SMOOTHED_UNIFORM_W2_CONSTANT
    if eps < math.sqrt(c / 8.0):
        return eps ** (2.0 / 3.0) / (n * math.pi * c ** (1.0 / 3.0))
    return 1.0 / (2.0 * math.pi * n)


def lecam_gauss_1d(eps: float, n: int, sigma: float, phi: Phi = square) -> float:
    return phi(eps + sigma / (2.0 * math.sqrt(n))) / 4.0


def fano_gauss(eps: float, n: int, p: int, sigma: float, phi: Phi = square) -> float:
    if p < 2:
        raise DomainError(f"fano_gauss needs p >= 2, got {p}")
    return phi((eps + sigma * math.sqrt((p - 2) * math.log(2.0) / (4.0 * n))) / 4.0) / 2.0


def assouad_gauss(eps: float, n: int, p: int, sigma: float) -> float:
    return eps ** 2 / 4.0 + sigma ** 2 * p / (32.0 * n)


def modulus_location(eps: float, m0: float, phi: Phi = square) -> float:
    return max(phi(eps) / 2.0, m0)


def nonparam_reg(eps: float, n: int, sigma: float, s: float, phi: Phi = square) -> float:
    """Rate only: max(Phi(eps), Phi((n / sigma^2)^(-s/(2s+1))))."""
    return max(phi(eps), phi((n / sigma ** 2) ** (-s / (2.0 * s + 1.0))))


def fano_lr_squared(eps: float, design, sigma: float, phi: Phi = square) -> float:
    x = np.asarray(design, dtype=float)
    n, p = x.shape
    if p < 23:
        raise DomainError(f"fano_lr_squared needs p >= 23, got {p}")
    spectral = float(scipy.linalg.norm(x / math.sqrt(n), 2))
    return phi((8.0 * eps + sigma * math.sqrt(2.0 * (p - 16.0 * math.log(2.0)) / n)) / (16.0 * spectral)) / 2.0


def fano_lr_prediction(eps: float, n: int, p: int, sigma: float, phi: Phi = square) -> float:
    if p < 2:
        raise DomainError(f"fano_lr_prediction needs p >= 2, got {p}")
    return phi((2.0 * eps + sigma * math.sqrt((p - 1) / (4.0 * n))) / 8.0) / 3.0


def lecam_uniform(eps: float, n: int, phi: Phi = square) -> float:
    """Two-point bound for the uniform location family."""
    _check_eps(eps)
    return phi(eps + 1.0 / (4.0 * n)) / 4.0


LOWER_BOUND_TOOLS: Dict[str, Callable[..., float]] = {
    "modulus_location": modulus_location,
    "lecam_gauss_1d": lecam_gauss_1d,
    "fano_gauss": fano_gauss,
    "assouad_gauss": assouad_gauss,
    "nonparam_reg": nonparam_reg,
    "fano_lr_squared": fano_lr_squared,
    "fano_lr_prediction": fano_lr_prediction,
    "lecam_uniform": lecam_uniform,
}


def lower_bound_tools(example: str, params: dict) -> float:
    """
    Evaluates one lower-bound instantiation by name.

    Args:
        example (str): A key of LOWER_BOUND_TOOLS.
        params (dict): Keyword arguments of the instantiation; `phi` may be a
            callable or "identity" / "square".

    Returns:
        float: The bound.

    Raises:
        DomainError: For an unknown example or a failed precondition.
    """
    if example not in LOWER_BOUND_TOOLS:
        raise DomainError(f"unknown lower bound example {example}")
    kwargs = dict(params)
    if isinstance(kwargs.get("phi"), str):
        kwargs["phi"] = PHI[kwargs["phi"]]
    if kwargs.get("eps", 0.0) < 0.0:
        raise DomainError(f"eps must be nonnegative, got {kwargs['eps']}")
    try:
        return LOWER_BOUND_TOOLS[example](**kwargs)
    except TypeError as e:
        raise DomainError(f"bad parameters for {example}: {e}") from e


def bayes_posterior_location(
    eps: float, n: int, p: int, sigma_cov, b: float, shift_class: str = "JDS"
) -> Tuple[float, float]:
    """
    Bayes risk of the least favorable location shift under the prior
    N(0, b^2 I), and its limit as b grows.

    Zero eigenvalues of Sigma contribute nothing (pseudo-inverse convention).
    For IDS with finite b the value is the risk of the posterior mean of the
    Gaussian part plus the spread the random offset psi * delta leaves after
    shrinkage.

    Args:
        eps (float): Budget.
        n (int): Sample size.
        p (int): Dimension.
        sigma_cov: p x p PSD covariance.
        b (float): Prior scale; math.inf gives the limit.
        shift_class (str): "JDS" or "IDS".

    Returns:
        Tuple[float, float]: (posterior risk at b, limit).
    """
    _check_eps(eps)
    if not b > 0.0:
        raise DomainError(f"prior scale must be positive, got {b}")
    cov = np.asarray(sigma_cov, dtype=float)
    if cov.shape != (p, p):
        raise DomainError(f"sigma_cov must be {p}x{p}, got {cov.shape}")
    values, _ = symmetric_eigen(cov, "sigma_cov")
    trace = float(values.sum())
    if trace <= 0.0:
        raise DomainError("sigma_cov must have positive trace")
    if shift_class == "IDS" and n >= 2:
        zeta, psi = ids_parameters(eps, n, trace)
        inflation, offset = (1.0 + zeta) ** 2, psi
    elif shift_class in ("IDS", "JDS"):
        xi = eps * math.sqrt(n / trace)
        inflation, offset = (1.0 + xi) ** 2, 0.0
    else:
        raise DomainError(f"no Bayes construction for shift class {shift_class}")
    effective = inflation * values
    limit = float(effective.sum()) / n + offset ** 2
    if math.isinf(b):
        return limit, limit
    prior = b ** 2
    within = float(np.sum(effective * prior / (effective + n * prior)))
    shrink = n * prior / (effective + n * prior)
    spread = offset ** 2 / p * float(np.sum(shrink ** 2))
    return within + spread, limit


def bayes_posterior_lr(eps: float, design, noise_cov, b: float, loss: str = "prediction") -> Tuple[float, float]:
    """
    Bayes risk under the regression least favorable shift with prior
    N(0, b^2 I). The shifted response has information X^T S^-1 X / (1 + kappa)^2.

    Returns:
        Tuple[float, float]: (posterior risk at b, limit).
    """
    _check_eps(eps)
    if not b > 0.0:
        raise DomainError(f"prior scale must be positive, got {b}")
    x = np.asarray(design, dtype=float)
    s = np.asarray(noise_cov, dtype=float)
    smallest_singular_value(x)
    n, p = x.shape
    trace = trace_cov_projection(x, s, weighted=True)
    kappa = eps * math.sqrt(n / trace)
    information = information_matrix(x, cholesky_lower(s)) / (1.0 + kappa) ** 2
    if loss not in ("prediction", "squared"):
        raise DomainError(f"unknown regression loss {loss}")

    def risk(precision: np.ndarray) -> float:
        factor = scipy.linalg.cho_factor(precision, lower=True)
        if loss == "squared":
            return float(np.trace(scipy.linalg.cho_solve(factor, np.eye(p))))
        return float(np.trace(scipy.linalg.cho_solve(factor, x.T @ x))) / n

    limit = risk(information)
    if math.isinf(b):
        return limit, limit
    return risk(information + np.eye(p) / b ** 2), limit


def midpoint_modulus(eps: float) -> float:
    """mi(eps) = 2 eps for location families under W2."""
    _check_eps(eps)
    return 2.0 * eps


def modulus(eps: float) -> float:
    """m(eps) = eps for location families under W2."""
    _check_eps(eps)
    return eps


def modulus_sandwich(eps: float) -> Tuple[float, float, float]:
    """(m(eps), mi(eps), m(2 eps)); the middle value lies between the others."""
    return modulus(eps), midpoint_modulus(eps), modulus(2.0 * eps)


def modulus_location_family(eps: float) -> float:
    """
    Midpoint modulus of a location family. Raises if the sandwich
    m(eps) <= mi(eps) <= m(2 eps) fails.
    """
    low, mid, high = modulus_sandwich(eps)
    if not low <= mid <= high:
        raise DomainError(f"modulus sandwich violated at eps={eps}: {low}, {mid}, {high}")
    return mid


def theory_for(config, shift_class: str, eps: float) -> Optional[TheoryBound]:
    """
    Theory values matching an experiment config, or None where no closed form
    exists for the class (regression outside JDS, density outside IDS).
    """
    n = config.sample_size
    dist = config.dist
    if config.problem == "location" and isinstance(dist, GaussianLocation):
        return location_risk(shift_class, eps, n, dist.p, dist.trace_sigma)
    if config.problem == "linear_regression" and isinstance(dist, LinearModel):
        if shift_class != "JDS":
            return None
        loss = "prediction" if config.loss.kind == "prediction_error" else "squared"
        return lr_risk(eps, dist.design, dist.noise_cov, loss)
    if config.problem == "uniform":
        return uniform_bounds(shift_class, eps, n)
    if config.problem == "density" and isinstance(dist, HolderBumpDensity):
        if shift_class != "IDS":
            return None
        return density_bounds(eps, n, dist.s)
    raise DomainError(f"no theory for problem {config.problem} with {dist.kind}")
