import logging
import math
from typing import List, Sequence

import numpy as np
from scipy import stats

from src.schemas.distributions import HolderBumpDensity
from src.schemas.estimators import KernelDensityAt
from src.schemas.experiments import CurvePoint, DensityShiftPair, ExperimentConfig
from src.schemas.perturbations import NoShift
from src.schemas.risk import PointwiseSquared, RiskMatrix
from src.services.estimators import bandwidth_select, estimator_catalog
from src.services.risk_engine import CellPlan, run_cell, run_plan
from src.services.transport import kl_numeric, talagrand_w2_upper
from src.util.errors import CertificationError, DomainError
from src.util.kernels import bump_difference_square_mass, holder_kernel_amplitude
from src.util.rng import cell_seed

logger = logging.getLogger(__name__)

DEFAULT_H_MAX = 2.0
MIN_CURVE_N = 16


def kl_bound_constant(amplitude: float, x0: float, sigma: float, h_max: float = DEFAULT_H_MAX) -> float:
    """
    C~ = int T^2 / inf phi_sigma, the infimum taken over the widest bump
    support [x0 - h_max/2, x0 + 3 h_max/2]. Then KL <= L^2 h^(2s+1) C~.
    """
    if amplitude <= 0.0 or sigma <= 0.0 or h_max <= 0.0:
        raise DomainError(f"invalid parameters amplitude={amplitude}, sigma={sigma}, h_max={h_max}")
    floor = min(
        stats.norm.pdf(x0 - h_max / 2.0, scale=sigma),
        stats.norm.pdf(x0 + 1.5 * h_max, scale=sigma),
    )
    return bump_difference_square_mass(amplitude) / float(floor)


def build_pair(
    eps: float,
    s: float = 2.0,
    big_l: float = 10.0,
    sigma_base: float = 1.0,
    x0: float = 0.0,
    sign: int = 1,
    h_max: float = DEFAULT_H_MAX,
) -> DensityShiftPair:
    """
    A Gaussian base density and its bumped version within W2 distance eps.

    The bandwidth is h = (eps / (2 sqrt(C~) sigma L))^(2/(2s+1)); the realized
    distance is certified by the Talagrand inequality for the Gaussian base
    applied to the numerically integrated KL divergence. eps = 0 returns the
    unshifted pair.

    Args:
        eps (float): Budget in [0, 1].
        s (float): Holder exponent.
        big_l (float): Holder constant L.
        sigma_base (float): Scale of the Gaussian base.
        x0 (float): Estimation point.
        sign (int): +1 or -1, the orientation of the bump.
        h_max (float): Largest admissible bandwidth.

    Returns:
        DensityShiftPair: The certified pair.

    Raises:
        DomainError: For parameters out of range.
        CertificationError: If the certified W2 bound exceeds eps.
    """
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"eps must lie in [0, 1], got {eps}")
    if s <= 0.0 or big_l <= 0.0 or sigma_base <= 0.0:
        raise DomainError(f"invalid parameters s={s}, big_l={big_l}, sigma_base={sigma_base}")
    if sign not in (-1, 1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    template = dict(x0=x0, s=s, big_l=big_l, sigma_base=sigma_base)
    if eps == 0.0:
        clean = HolderBumpDensity(**template)
        return DensityShiftPair(
            clean=clean, shifted=clean, eps=0.0, eps_certified=0.0, kl=0.0, x0=x0, h=clean.h, pointwise_gap=0.0
        )

    amplitude = holder_kernel_amplitude(s)
    c_tilde = kl_bound_constant(amplitude, x0, sigma_base, h_max)
    h = (eps / (2.0 * math.sqrt(c_tilde) * sigma_base * big_l)) ** (2.0 / (2.0 * s + 1.0))
    if h > h_max:
        logger.warning(f"bump bandwidth {h:.4g} clamped to {h_max} for eps={eps}")
        h = h_max

    clean = HolderBumpDensity(**template, h=h)
    shifted = HolderBumpDensity(**template, h=h, sign=sign)
    kl = kl_numeric(shifted, clean)
    certified = talagrand_w2_upper(kl, 1.0 / sigma_base ** 2)
    if certified > eps:
        raise CertificationError(f"certified W2 bound {certified:.6g} exceeds eps={eps}", certified)
    gap = big_l * h ** s * amplitude * math.exp(-1.0)
    logger.debug(f"density pair eps={eps}: h={h:.6g}, KL={kl:.3e}, certified W2={certified:.6g}, gap={gap:.6g}")
    return DensityShiftPair(
        clean=clean, shifted=shifted, eps=eps, eps_certified=certified, kl=kl, x0=x0, h=h, pointwise_gap=gap
    )


def _clean_value(pair: DensityShiftPair) -> float:
    return float(stats.norm.pdf(pair.x0, scale=pair.clean.sigma_base))


def kde_risk_curve(pair: DensityShiftPair, n_grid: Sequence[int], trials: int, seed: int) -> List[CurvePoint]:
    """
    Pointwise risk of the KDE at x0 when the data come from the shifted
    density and the target is the clean value.

    Args:
        pair (DensityShiftPair): The density pair.
        n_grid (Sequence[int]): Sample sizes, each at least 16.
        trials (int): Trials per sample size.
        seed (int): Master seed; sample size k uses cell_seed(seed, k, 0).

    Returns:
        List[CurvePoint]: Mean risk and SE per sample size.
    """
    if not n_grid:
        raise DomainError("n_grid must not be empty")
    if min(n_grid) < MIN_CURVE_N:
        raise DomainError(f"every n must be >= {MIN_CURVE_N}, got {min(n_grid)}")
    loss = PointwiseSquared(x0=pair.x0, true_value=_clean_value(pair))
    points = []
    for k, n in enumerate(n_grid):
        bandwidth = bandwidth_select(n, pair.clean.s, pair.eps)
        estimator = KernelDensityAt(x0=pair.x0, bandwidth=bandwidth)
        mean, se = run_cell(pair.shifted, NoShift(), estimator, loss, trials, cell_seed(seed, k, 0), n)
        points.append(CurvePoint(n=n, bandwidth=bandwidth, mean=mean, std_error=se))
        logger.debug(f"KDE risk at n={n}: {mean:.6g} (se {se:.2g}, bandwidth {bandwidth:.4g})")
    return points


def rate_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise DomainError("rate_slope needs two equally long sequences of at least 2 points")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise DomainError("rate_slope needs positive values")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def density_plan(config: ExperimentConfig, eps: float) -> CellPlan:
    """
    Columns of the density problem: the two bumps (sign +1 and -1) of the
    clean Gaussian, or the clean law alone at eps = 0.
    """
    template = config.dist
    if not isinstance(template, HolderBumpDensity):
        raise DomainError(f"density experiments need a holder_bump template, got {template.kind}")
    params = dict(s=template.s, big_l=template.big_l, sigma_base=template.sigma_base, x0=template.x0)
    n = config.sample_size
    if eps == 0.0:
        pair = build_pair(0.0, **params)
        laws, shifts = [pair.shifted], [NoShift(name="no_shift")]
    else:
        up = build_pair(eps, sign=1, **params)
        down = build_pair(eps, sign=-1, **params)
        pair = up
        laws = [up.shifted, down.shifted]
        shifts = [NoShift(name="bump_up", shift_class="IDS"), NoShift(name="bump_down", shift_class="IDS")]
    loss = PointwiseSquared(x0=template.x0, true_value=_clean_value(pair))
    return CellPlan(
        laws=laws,
        perturbations=shifts,
        estimators=estimator_catalog("density", n, eps, template),
        loss=loss,
        n=n,
    )


def density_risk_matrix(config: ExperimentConfig, eps: float, trials: int, master_seed: int, workers: int = 1) -> RiskMatrix:
    return run_plan(density_plan(config, eps), trials, master_seed, workers)
