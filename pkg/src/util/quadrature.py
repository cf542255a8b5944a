import logging
import math
import warnings
from typing import Callable, Iterable, Tuple

import numpy as np
from scipy import integrate

from src.config.settings import QUAD_TOL
from src.util.errors import NumericalError

logger = logging.getLogger(__name__)


def integrate_segments(
    func: Callable[[float], float],
    a: float,
    b: float,
    knots: Iterable[float] = (),
    tol: float = QUAD_TOL,
    limit: int = 200,
) -> Tuple[float, float]:
    """
    Integrates `func` over [a, b] with QUADPACK's adaptive Gauss-Kronrod rule,
    splitting the range at every knot that falls strictly inside it.

    Each segment is refined by interval bisection inside `quad` until the local
    error estimate drops below the segment's share of `tol`.

    Args:
        func (Callable): Integrand of one real variable.
        a (float): Lower limit, may be -inf.
        b (float): Upper limit, may be +inf.
        knots (Iterable[float]): Points where the integrand is not smooth.
        tol (float): Absolute tolerance for the whole integral.
        limit (int): Maximum number of subintervals per segment.

    Returns:
        Tuple[float, float]: The integral and the summed error estimate.

    Raises:
        NumericalError: If the integral is not finite.
    """
    if b < a:
        value, err = integrate_segments(func, b, a, knots, tol, limit)
        return -value, err
    inner = sorted({float(k) for k in knots if a < k < b})
    edges = [a, *inner, b]
    share = tol / (len(edges) - 1)
    total = 0.0
    total_err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi == lo:
            continue
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                value, err = integrate.quad(func, lo, hi, epsabs=share, epsrel=1e-12, limit=limit)
            except Exception as e:
                raise NumericalError(f"Quadrature failed on [{lo}, {hi}]: {e}") from e
        for w in caught:
            logger.debug(f"quad on [{lo:.6g}, {hi:.6g}]: {w.message}")
        total += value
        total_err += err
    if not math.isfinite(total):
        raise NumericalError(f"Quadrature over [{a}, {b}] returned {total}")
    return total, total_err


def chebyshev_grid(lo: float, hi: float, size: int = 4097) -> np.ndarray:
    """Chebyshev-Lobatto points on [lo, hi] in increasing order."""
    k = np.arange(size)
    nodes = -np.cos(np.pi * k / (size - 1))
    return lo + (hi - lo) * (nodes + 1.0) / 2.0
