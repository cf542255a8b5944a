import math
from functools import lru_cache

import numpy as np
from scipy import integrate, stats

# K(0) of the standard Gaussian kernel
GAUSSIAN_K0 = 1.0 / math.sqrt(2.0 * math.pi)


def gaussian(u):
    return stats.norm.pdf(u)


def epanechnikov(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


KERNELS = {
    "gaussian": gaussian,
    "epanechnikov": epanechnikov,
}


def unit_bump(v):
    """exp(-1 / (1 - v^2)) on |v| < 1, zero elsewhere."""
    v = np.asarray(v, dtype=float)
    inside = np.abs(v) < 1.0
    safe = np.where(inside, 1.0 - v * v, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


def bump_kernel(u, amplitude: float):
    """K_b(u) = a * unit_bump(2u), supported on [-1/2, 1/2]."""
    return amplitude * unit_bump(2.0 * np.asarray(u, dtype=float))


def bump_difference(u, amplitude: float):
    """T(u) = K_b(u) - K_b(u - 1), supported on [-1/2, 3/2] with zero integral."""
    u = np.asarray(u, dtype=float)
    return bump_kernel(u, amplitude) - bump_kernel(u - 1.0, amplitude)


@lru_cache(maxsize=None)
def unit_bump_mass() -> float:
    value, _ = integrate.quad(lambda v: float(unit_bump(v)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    return value


@lru_cache(maxsize=None)
def unit_bump_square_mass() -> float:
    value, _ = integrate.quad(lambda v: float(unit_bump(v)) ** 2, -1.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    return value


def bump_kernel_integral(u: float, amplitude: float) -> float:
    """Integral of K_b from -inf to u."""
    upper = min(max(2.0 * u, -1.0), 1.0)
    if upper <= -1.0:
        return 0.0
    if upper >= 1.0:
        return amplitude * unit_bump_mass() / 2.0
    value, _ = integrate.quad(lambda v: float(unit_bump(v)), -1.0, upper, epsabs=1e-14, epsrel=1e-13)
    return amplitude * value / 2.0


def bump_difference_integral(u: float, amplitude: float) -> float:
    """Integral of T from -inf to u."""
    return bump_kernel_integral(u, amplitude) - bump_kernel_integral(u - 1.0, amplitude)


def bump_difference_square_mass(amplitude: float) -> float:
    """Integral of T^2; the two halves of T have disjoint supports."""
    return amplitude ** 2 * unit_bump_square_mass()


@lru_cache(maxsize=None)
def holder_kernel_amplitude(s: float, grid_size: int = 1101, stride: int = 2) -> float:
    """
    Largest a such that K_b = a * unit_bump(2u) lies in the Holder class
    Sigma(s, 1/4), certified on a dense grid of (u, u') pairs.

    With l = floor(s) the certified quantity is
    max |K_b^(l)(u) - K_b^(l)(u')| / |u - u'|^(s - l); derivatives are taken
    by repeated second-order finite differences of the unit-amplitude kernel.

    Args:
        s (float): Holder exponent, s > 0.
        grid_size (int): Points on [-0.55, 0.55] used for differentiation.
        stride (int): Subsampling applied before forming pairs.

    Returns:
        float: The amplitude a.
    """
    order = int(math.floor(s))
    exponent = s - order
    u = np.linspace(-0.55, 0.55, grid_size)
    step = u[1] - u[0]
    derivative = unit_bump(2.0 * u)
    for _ in range(order):
        derivative = np.gradient(derivative, step, edge_order=2)
    values = derivative[::stride]
    points = u[::stride]
    if exponent == 0.0:
        seminorm = float(values.max() - values.min())
    else:
        gaps = np.abs(values[:, None] - values[None, :])
        distances = np.abs(points[:, None] - points[None, :]) ** exponent
        np.fill_diagonal(distances, np.inf)
        seminorm = float(np.max(gaps / distances))
    return 0.25 / seminorm
