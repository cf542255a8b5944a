import math

import numpy as np
import pytest

from src.schemas.bounds import TheoryBound
from src.services import theory_bounds
from src.services.estimators import uniform_switch_threshold
from src.services.experiments import lr_design_gaussian
from src.services.transport import SMOOTHED_UNIFORM_W2_CONSTANT
from src.util.errors import DomainError

EPS_GRID = np.concatenate([[0.0], np.logspace(-4.0, 1.0, 49)])


@pytest.mark.parametrize("shift_class", ["CDS", "IDS", "JDS"])
def test_location_risk_without_shift(shift_class):
    assert theory_bounds.location_risk(shift_class, 0.0, 10, 3, 1.0).exact == pytest.approx(0.1)


def test_location_risk_jds_value():
    assert theory_bounds.location_risk("JDS", 0.1, 10, 3, 1.0).exact == pytest.approx(0.173246, abs=1e-6)


def test_ids_branches_meet_at_the_transition():
    n, trace = 10, 1.0
    eps = math.sqrt(trace) / (n - 1)
    small, large = theory_bounds.ids_location_branches(eps, n, trace)
    assert small == pytest.approx(large, rel=1e-12)
    assert small == pytest.approx(trace * n / (n - 1) ** 2, rel=1e-12)


def test_ids_with_one_observation_is_jds():
    ids = theory_bounds.location_risk("IDS", 0.3, 1, 2, 1.0)
    jds = theory_bounds.location_risk("JDS", 0.3, 1, 2, 1.0)
    assert ids.exact == jds.exact


@pytest.mark.parametrize("n", [2, 10, 100])
def test_location_risk_ordering(n):
    trace = 1.0
    shift_free = trace / n
    for eps in EPS_GRID:
        cds, ids, jds = (theory_bounds.location_risk(c, float(eps), n, 3, trace).exact for c in ("CDS", "IDS", "JDS"))
        assert shift_free <= cds * (1 + 1e-12)
        assert cds <= ids * (1 + 1e-12)
        assert ids <= jds * (1 + 1e-12)


def test_location_risk_rejects_negative_eps():
    with pytest.raises(DomainError):
        theory_bounds.location_risk("JDS", -0.1, 10, 3, 1.0)


def test_theory_bound_ordering_is_validated():
    with pytest.raises(ValueError):
        TheoryBound(problem="location", shift_class="JDS", eps=0.1, lower=2.0, upper=1.0)


def test_lr_prediction_risk_with_isotropic_noise(lr_model):
    # noise covariance I / 100, n = 10, p = 5
    sigma = 0.1
    at_zero = theory_bounds.lr_risk(0.0, lr_model.design, lr_model.noise_cov).exact
    assert at_zero == pytest.approx(sigma ** 2 * 5 / 10, rel=1e-10)
    for eps in (0.01, 0.1, 1.0):
        value = theory_bounds.lr_risk(eps, lr_model.design, lr_model.noise_cov).exact
        assert value == pytest.approx((eps + sigma * math.sqrt(5 / 10)) ** 2, rel=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_lr_squared_bounds_are_ordered(seed):
    design = lr_design_gaussian(20, 4, seed)
    noise = np.diag(np.linspace(0.5, 2.0, 20))
    for eps in (0.0, 0.01, 0.1, 1.0):
        bound = theory_bounds.lr_risk(eps, design, noise, loss="squared")
        assert bound.lower <= bound.upper


def test_lr_risk_rejects_rank_deficient_design():
    with pytest.raises(DomainError):
        theory_bounds.lr_risk(0.1, [[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]], np.eye(3))


def test_lr_prediction_reproduces_location_jds():
    n, p = 6, 3
    sigma = np.diag([1.0, 2.0, 3.0]) / 6.0
    design = np.tile(np.eye(p), (n, 1))
    noise = np.kron(np.eye(n), sigma)
    for eps in (0.0, 0.05, 0.3):
        embedded = theory_bounds.lr_risk(eps / math.sqrt(p), design, noise).exact * p
        direct = theory_bounds.location_risk("JDS", eps, n, p, float(np.trace(sigma))).exact
        assert embedded == pytest.approx(direct, rel=1e-10)


def test_uniform_cds_without_shift():
    assert theory_bounds.uniform_bounds("CDS", 0.0, 50).exact == pytest.approx(1.0 / 5304.0)


def test_uniform_bounds_are_ordered_along_the_sweep():
    n = 50
    for alpha in np.linspace(-3.0, 0.5, 20):
        eps = n ** alpha
        for shift_class in ("IDS", "JDS"):
            bound = theory_bounds.uniform_bounds(shift_class, eps, n)
            assert bound.lower <= bound.upper


def test_uniform_upper_bound_switches_estimator():
    n = 50
    below = theory_bounds.uniform_bounds("JDS", 0.5 * uniform_switch_threshold(n), n).upper
    above = theory_bounds.uniform_bounds("JDS", 2.0 * uniform_switch_threshold(n), n).upper
    assert below == pytest.approx((0.5 * uniform_switch_threshold(n) * math.sqrt(n) + math.sqrt(1.0 / 5304.0)) ** 2)
    assert above == pytest.approx((2.0 * uniform_switch_threshold(n) + math.sqrt(1.0 / 600.0)) ** 2)


def test_density_bounds_without_shift():
    bound = theory_bounds.density_bounds(0.0, 1000, 2.0)
    assert bound.rate_only
    assert bound.lower == pytest.approx(1000 ** -0.8)
    assert bound.upper == pytest.approx(1000 ** -0.8)


def test_density_bounds_exponents():
    bound = theory_bounds.density_bounds(0.1, 10 ** 4, 2.0)
    assert bound.lower == pytest.approx(0.1 ** 1.6)
    assert bound.upper == pytest.approx(0.1)


@pytest.mark.parametrize("s", [1.0, 2.0, 5.0])
def test_density_bounds_coincide_below_the_crossover(s):
    n = 1000
    crossover = n ** (-(s + 2.0) / (2.0 * s + 1.0))
    inside = theory_bounds.density_bounds(0.5 * crossover, n, s)
    outside = theory_bounds.density_bounds(2.0 * crossover, n, s)
    assert inside.lower == pytest.approx(inside.upper)
    assert outside.lower < outside.upper


def test_density_lower_bound_omitted_beyond_unit_budget():
    bound = theory_bounds.density_bounds(2.0, 1000, 2.0)
    assert bound.lower is None
    assert bound.upper == pytest.approx(2.0)


def test_crlb_regimes_meet():
    n = 50
    edge = math.sqrt(SMOOTHED_UNIFORM_W2_CONSTANT / 8.0)
    assert theory_bounds.crlb_smoothed_uniform(edge * (1 - 1e-9), n) == pytest.approx(1.0 / (2.0 * math.pi * n), rel=1e-6)
    assert theory_bounds.crlb_smoothed_uniform(10.0, n) == pytest.approx(1.0 / (2.0 * math.pi * n))


def test_crlb_is_above_the_reported_uniform_constant():
    n, eps = 50, 0.01
    assert theory_bounds.crlb_smoothed_uniform(eps, n) >= theory_bounds.UNIFORM_IDS_CONSTANT * eps ** (2.0 / 3.0) / n


def test_crlb_rejects_zero_budget():
    with pytest.raises(DomainError):
        theory_bounds.crlb_smoothed_uniform(0.0, 10)


def test_lower_bound_tool_examples():
    assert theory_bounds.lower_bound_tools("lecam_gauss_1d", {"eps": 0.0, "n": 4, "sigma": 1.0, "phi": "square"}) == pytest.approx(1.0 / 64.0)
    assert theory_bounds.lower_bound_tools("assouad_gauss", {"eps": 0.0, "n": 10, "p": 3, "sigma": 2.0}) == pytest.approx(4.0 * 3 / 320.0)
    value = theory_bounds.lower_bound_tools("modulus_location", {"eps": 0.3, "m0": 0.1, "phi": theory_bounds.identity})
    assert value == pytest.approx(0.15)


@pytest.mark.parametrize(
    "example, params",
    [
        ("fano_gauss", {"eps": 0.1, "n": 10, "p": 1, "sigma": 1.0}),
        ("fano_lr_squared", {"eps": 0.1, "design": np.eye(5).tolist(), "sigma": 1.0}),
        ("lecam_gauss_1d", {"eps": 0.1, "n": 10}),
        ("nowhere", {"eps": 0.1}),
        ("assouad_gauss", {"eps": -0.1, "n": 10, "p": 3, "sigma": 1.0}),
    ],
)
def test_lower_bound_tool_preconditions(example, params):
    with pytest.raises(DomainError):
        theory_bounds.lower_bound_tools(example, params)


def test_fano_lr_squared_on_a_high_dimensional_design():
    design = lr_design_gaussian(200, 30, 1)
    value = theory_bounds.lower_bound_tools("fano_lr_squared", {"eps": 0.1, "design": design, "sigma": 1.0})
    assert value > 0.0


def test_lower_bound_tools_stay_below_exact_risks():
    n, p, sigma = 10, 3, 0.5
    trace = p * sigma ** 2
    for eps in EPS_GRID:
        eps = float(eps)
        cds = theory_bounds.location_risk("CDS", eps, n, p, trace).exact
        jds_1d = theory_bounds.location_risk("JDS", eps, n, 1, sigma ** 2).exact
        assert theory_bounds.assouad_gauss(eps, n, p, sigma) <= cds
        assert theory_bounds.fano_gauss(eps, n, p, sigma) <= cds
        assert theory_bounds.modulus_location(eps, trace / n) <= cds
        assert theory_bounds.lecam_gauss_1d(eps, n, sigma) <= jds_1d
        assert theory_bounds.lecam_uniform(eps, 50) <= theory_bounds.uniform_bounds("CDS", eps, 50).exact


def test_bayes_location_limit_without_shift():
    value, limit = theory_bounds.bayes_posterior_location(0.0, 10, 3, np.eye(3), math.inf)
    assert value == limit == pytest.approx(0.3)


@pytest.mark.parametrize("shift_class", ["JDS", "IDS"])
def test_bayes_location_limit_is_the_exact_risk(shift_class):
    sigma = np.diag([1.0, 2.0, 3.0]) / 6.0
    for eps in (0.01, 0.1, 1.0):
        _, limit = theory_bounds.bayes_posterior_location(eps, 10, 3, sigma, math.inf, shift_class)
        exact = theory_bounds.location_risk(shift_class, eps, 10, 3, 1.0).exact
        assert limit == pytest.approx(exact, rel=1e-10)


def test_bayes_location_converges_for_large_prior():
    value, limit = theory_bounds.bayes_posterior_location(0.1, 10, 3, np.eye(3), 1e6)
    assert value == pytest.approx(limit, rel=1e-5)


@pytest.mark.parametrize("shift_class", ["JDS", "IDS"])
def test_bayes_location_increases_with_the_prior_scale(shift_class):
    sigma = np.diag([1.0, 2.0, 3.0]) / 6.0
    values = [
        theory_bounds.bayes_posterior_location(0.1, 10, 3, sigma, 10.0 ** k, shift_class)[0] for k in range(7)
    ]
    assert all(a <= b for a, b in zip(values, values[1:]))
    assert values[-1] <= theory_bounds.bayes_posterior_location(0.1, 10, 3, sigma, math.inf, shift_class)[1]


def test_bayes_location_singular_covariance():
    value, limit = theory_bounds.bayes_posterior_location(0.1, 10, 2, np.diag([1.0, 0.0]), 100.0)
    assert 0.0 < value <= limit


def test_bayes_location_rejects_bad_prior():
    with pytest.raises(DomainError):
        theory_bounds.bayes_posterior_location(0.1, 10, 3, np.eye(3), 0.0)


def test_bayes_lr_limit_is_the_prediction_risk(hetero_model):
    for eps in (0.0, 0.05, 0.5):
        _, limit = theory_bounds.bayes_posterior_lr(eps, hetero_model.design, hetero_model.noise_cov, math.inf)
        exact = theory_bounds.lr_risk(eps, hetero_model.design, hetero_model.noise_cov).exact
        assert limit == pytest.approx(exact, rel=1e-10)


def test_bayes_lr_squared_limit_is_the_lower_bound_ingredient(lr_model):
    eps = 0.1
    _, limit = theory_bounds.bayes_posterior_lr(eps, lr_model.design, lr_model.noise_cov, math.inf, loss="squared")
    bound = theory_bounds.lr_risk(eps, lr_model.design, lr_model.noise_cov, loss="squared")
    assert limit <= bound.lower * (1 + 1e-12)
    value, _ = theory_bounds.bayes_posterior_lr(eps, lr_model.design, lr_model.noise_cov, 10.0, loss="squared")
    assert value < limit


@pytest.mark.parametrize("eps, expected", [(0.0, 0.0), (0.5, 1.0)])
def test_modulus_location_family(eps, expected):
    assert theory_bounds.modulus_location_family(eps) == expected


@pytest.mark.parametrize("eps", [0.1, 1.0, 10.0])
def test_modulus_sandwich(eps):
    low, mid, high = theory_bounds.modulus_sandwich(eps)
    assert low <= mid <= high


def test_theory_for_matches_the_config(lr_config):
    assert theory_bounds.theory_for(lr_config, "IDS", 0.1) is None
    bound = theory_bounds.theory_for(lr_config, "JDS", 0.1)
    assert bound.exact == pytest.approx(theory_bounds.lr_risk(0.1, lr_config.dist.design, lr_config.dist.noise_cov).exact)
