import math

import numpy as np
import pytest

from src.schemas.distributions import GaussianLocation, HolderBumpDensity, SmoothedUniform, UniformLocation
from src.services import distributions, transport
from src.util.errors import NumericalError, ShapeError, UnsupportedOperationError
from src.util.quadrature import integrate_segments


def _gaussian(mean: float, var: float) -> GaussianLocation:
    return GaussianLocation(theta=[mean], sigma_cov=[[var]])


def test_w2_gaussian_mean_shift_only():
    cov = np.diag([1.0, 2.0])
    assert transport.w2_gaussian([0.0, 0.0], cov, [3.0, 4.0], cov) == pytest.approx(5.0, rel=1e-12)


def test_w2_gaussian_scalar_scales():
    # W2 between N(0, a^2) and N(0, b^2) is |a - b|
    assert transport.w2_gaussian(0.0, 4.0, 0.0, 9.0) == pytest.approx(1.0, rel=1e-12)


def test_w2_gaussian_dimension_mismatch():
    with pytest.raises(ShapeError):
        transport.w2_gaussian([0.0], [[1.0]], [0.0, 0.0], np.eye(2))


@pytest.mark.parametrize("shift", [0.0, 0.1, 0.5, 1.0, 3.0])
@pytest.mark.parametrize("ratio", [0.25, 0.5, 1.0, 2.0, 4.0])
def test_w2_1d_matches_gaussian_closed_form(shift, ratio):
    a, b = _gaussian(0.0, 1.0), _gaussian(shift, ratio)
    closed = transport.w2_gaussian(0.0, 1.0, shift, ratio)
    numeric = transport.w2_1d(a, b)
    if closed == 0.0:
        assert numeric == pytest.approx(0.0, abs=1e-6)
    else:
        assert numeric == pytest.approx(closed, rel=1e-6)


@pytest.mark.parametrize("tau", [0.05, 0.1, 0.25, 0.5])
def test_w2_smoothed_uniform_closed_form(tau):
    numeric = transport.w2_1d(UniformLocation(theta=0.0), SmoothedUniform(tau=tau))
    assert numeric == pytest.approx(transport.w2_smoothed_uniform_closed(tau), rel=1e-6)


def test_smoothed_uniform_constant():
    c = transport.SMOOTHED_UNIFORM_W2_CONSTANT
    assert c == pytest.approx(0.13927, abs=1e-5)
    assert 1.0 / (math.pi * c ** (1.0 / 3.0)) >= 0.614


def test_w2_1d_needs_scalar_laws():
    with pytest.raises(UnsupportedOperationError):
        transport.w2_1d(GaussianLocation(sigma_cov=np.eye(2).tolist()), _gaussian(0.0, 1.0))


def test_empirical_coupling_cost_of_constant_shift():
    clean = np.zeros((100, 2))
    report = transport.empirical_coupling_cost(clean, clean + np.array([0.3, 0.4]), budget=0.25)
    assert report.mean_sq_displacement == pytest.approx(0.25)
    assert report.within_budget


def test_empirical_coupling_cost_over_budget():
    clean = np.zeros((100, 1))
    report = transport.empirical_coupling_cost(clean, clean + 1.0, budget=0.5)
    assert not report.within_budget


def test_order_statistic_displacement_is_bounded_by_coupling_cost():
    rng = np.random.default_rng(0)
    clean = rng.random((200, 20))
    perturbed = clean + rng.normal(scale=0.1, size=clean.shape)
    costs = np.sum((perturbed - clean) ** 2, axis=1)
    for j in (1, 10, 20):
        displacement = transport.order_statistic_displacement(clean, perturbed, j)
        assert np.all(displacement <= costs + 1e-15)


def test_kl_numeric_between_gaussians():
    # KL(N(1, 1) || N(0, 1)) = 1/2
    assert transport.kl_numeric(_gaussian(1.0, 1.0), _gaussian(0.0, 1.0)) == pytest.approx(0.5, rel=1e-8)


def test_kl_numeric_support_violation():
    with pytest.raises(NumericalError):
        transport.kl_numeric(_gaussian(0.0, 1.0), UniformLocation(theta=0.0))


def test_bump_kl_below_chi_square():
    clean = HolderBumpDensity(h=0.5)
    bumped = HolderBumpDensity(h=0.5, sign=1)
    kl = transport.kl_numeric(bumped, clean)

    def chi_square_density(x: float) -> float:
        f1 = float(distributions.pdf(clean, x))
        return (float(distributions.pdf(bumped, x)) - f1) ** 2 / f1

    chi_square, _ = integrate_segments(chi_square_density, -0.25, 0.75, knots=[0.25])
    assert 0.0 < kl <= chi_square
    assert transport.talagrand_w2_upper(kl, 1.0) == pytest.approx(math.sqrt(2.0 * kl))
