import math

import numpy as np
import pytest

from src.schemas.distributions import GaussianLocation
from src.schemas.perturbations import (
    ConstantShift,
    IdsLeastFavorable,
    JdsMeanShift,
    LrConstantShift,
    NoShift,
    OrderStatTailShift,
)
from src.services import distributions, perturbations
from src.util.errors import DomainError
from src.util.linalg import trace_cov_projection
from src.util.rng import stream


@pytest.mark.parametrize("eps", [0.0, 0.05, 1.0 / 9.0, 0.2, 1.0])
def test_ids_parameters_spend_the_budget(eps):
    zeta, psi = perturbations.ids_parameters(eps, 10, 1.0)
    assert zeta ** 2 * 1.0 + psi ** 2 == pytest.approx(eps ** 2, rel=1e-12, abs=1e-15)
    assert zeta <= 1.0 / 9.0


def test_least_favorable_location_variants():
    assert isinstance(perturbations.least_favorable_location("IDS", 0.1, 10, 3, 1.0), IdsLeastFavorable)
    jds = perturbations.least_favorable_location("JDS", 0.1, 10, 3, 1.0)
    assert isinstance(jds, JdsMeanShift)
    assert jds.xi == pytest.approx(0.1 * math.sqrt(10.0))
    # a single observation has no i.i.d. structure to exploit
    assert isinstance(perturbations.least_favorable_location("IDS", 0.1, 1, 3, 1.0), JdsMeanShift)


def test_least_favorable_location_rejects_unknown_class():
    with pytest.raises(DomainError):
        perturbations.least_favorable_location("XDS", 0.1, 10, 3, 1.0)


def test_apply_does_not_modify_input():
    clean = np.arange(6.0).reshape(3, 2)
    before = clean.copy()
    shifted = perturbations.apply(ConstantShift(delta=[0.3, 0.4], eps=0.5), clean, np.zeros(2), stream(0))
    np.testing.assert_array_equal(clean, before)
    np.testing.assert_allclose(shifted - clean, np.tile([0.3, 0.4], (3, 1)))


def test_no_shift_is_identity():
    clean = np.ones((4, 1))
    np.testing.assert_array_equal(perturbations.apply(NoShift(), clean, np.zeros(1), stream(0)), clean)


def test_constant_shift_budget_is_validated():
    with pytest.raises(ValueError):
        ConstantShift(delta=[1.0, 1.0], eps=1.0)


def test_jds_mean_shift_moves_the_mean_by_eps():
    rng = stream(7)
    theta = np.zeros(3)
    spec = perturbations.least_favorable_location("JDS", 0.5, 10, 3, 1.0)
    dist = GaussianLocation(sigma_cov=(np.eye(3) / 3.0).tolist())
    clean = distributions.sample(dist, 10, rng)
    shifted = perturbations.apply(spec, clean, theta, rng)
    moved = np.linalg.norm(shifted.mean(axis=0) - clean.mean(axis=0))
    assert moved == pytest.approx(spec.xi * np.linalg.norm(clean.mean(axis=0)))


def test_order_stat_tail_shift_moves_the_k_smallest():
    clean = np.array([[0.5], [0.1], [0.9], [0.3]])
    spec = OrderStatTailShift(k=2, eps=0.1)
    shifted = perturbations.apply(spec, clean, np.array([0.5]), stream(0))
    drop = 0.1 * math.sqrt(4 / 2)
    np.testing.assert_allclose(shifted[:, 0], [0.5, 0.1 - drop, 0.9, 0.3 - drop])
    # per-row average squared displacement equals eps^2
    assert np.sum((shifted - clean) ** 2) / 4 == pytest.approx(0.01)


def test_order_stat_tail_shift_k_too_large():
    with pytest.raises(DomainError):
        perturbations.apply(OrderStatTailShift(k=3, eps=0.1), np.zeros((4, 1)), np.zeros(1), stream(0))


def test_lr_constant_shift_needs_unit_direction():
    with pytest.raises(ValueError):
        LrConstantShift(direction=[1.0, 1.0], magnitude=1.0)


def test_catalog_sizes(location_dist, uniform_dist, lr_model):
    assert len(perturbations.catalog("location", 0.1, 10, location_dist)) == 4
    assert len(perturbations.catalog("linear_regression", 0.1, 10, lr_model)) == 5
    uniform = perturbations.catalog("uniform", 0.1, 50, uniform_dist)
    assert len(uniform) == 26
    assert len({p.label for p in uniform}) == 26


def test_catalog_rejects_mismatched_law(uniform_dist):
    with pytest.raises(DomainError):
        perturbations.catalog("location", 0.1, 10, uniform_dist)


def test_least_favorable_lr_uses_the_weighted_trace(hetero_model):
    eps = 0.1
    spec = perturbations.least_favorable_lr(eps, hetero_model.design, hetero_model.noise_cov)
    trace = trace_cov_projection(hetero_model.x, hetero_model.cov, weighted=True)
    assert spec.kappa == pytest.approx(eps * math.sqrt(10 / trace))


@pytest.mark.parametrize("problem", ["location", "linear_regression", "uniform"])
def test_every_catalog_member_stays_within_budget(problem, location_dist, uniform_dist, lr_model):
    eps = 0.2
    dist, n = {
        "location": (location_dist, 10),
        "linear_regression": (lr_model, 10),
        "uniform": (uniform_dist, 50),
    }[problem]
    for spec in perturbations.catalog(problem, eps, n, dist):
        report = perturbations.check_budget(dist, spec, eps, trials=2000, seed=17, n=n)
        assert report.within_budget, f"{spec.label}: {report.mean_sq_displacement} > {eps ** 2}"
