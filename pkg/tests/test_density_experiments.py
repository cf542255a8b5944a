import math

import pytest

from src.services import density_experiments
from src.services.experiments import load_config
from src.util.errors import DomainError
from src.util.kernels import holder_kernel_amplitude
from tests.conftest import config_path


@pytest.mark.parametrize("eps", [0.1, 0.5, 1.0])
def test_pairs_are_certified_within_budget(eps):
    pair = density_experiments.build_pair(eps)
    assert 0.0 < pair.eps_certified <= eps
    assert pair.kl > 0.0
    assert pair.shifted.sign == 1 and pair.clean.sign == 0


def test_gap_is_the_bump_value_at_x0():
    pair = density_experiments.build_pair(0.2)
    expected = pair.clean.big_l * pair.h ** 2 * holder_kernel_amplitude(2.0) * math.exp(-1.0)
    assert pair.pointwise_gap == pytest.approx(expected, rel=1e-12)


def test_gap_grows_like_the_lower_bound_rate():
    budgets = [0.1, 0.2, 0.4, 0.8]
    gaps = [density_experiments.build_pair(eps).pointwise_gap for eps in budgets]
    assert density_experiments.rate_slope(budgets, gaps) == pytest.approx(4.0 / 5.0, abs=0.1)


def test_bandwidth_shrinks_with_the_budget():
    small = density_experiments.build_pair(1e-3)
    large = density_experiments.build_pair(0.1)
    assert small.h < large.h
    assert small.pointwise_gap < large.pointwise_gap


def test_negative_bump():
    pair = density_experiments.build_pair(0.1, sign=-1)
    assert pair.shifted.sign == -1
    assert pair.eps_certified <= 0.1


def test_zero_budget_gives_the_clean_pair():
    pair = density_experiments.build_pair(0.0)
    assert pair.shifted == pair.clean
    assert pair.pointwise_gap == 0.0
    assert pair.eps_certified == 0.0


@pytest.mark.parametrize("kwargs", [{"eps": 1.5}, {"eps": -0.1}, {"eps": 0.1, "sign": 0}, {"eps": 0.1, "s": 0.0}])
def test_build_pair_rejects_bad_parameters(kwargs):
    with pytest.raises(DomainError):
        density_experiments.build_pair(**kwargs)


def test_kl_bound_constant_is_positive():
    assert density_experiments.kl_bound_constant(holder_kernel_amplitude(2.0), 0.0, 1.0) > 0.0
    with pytest.raises(DomainError):
        density_experiments.kl_bound_constant(0.0, 0.0, 1.0)


def test_rate_slope_of_a_power_law():
    x = [2.0 ** k for k in range(1, 8)]
    assert density_experiments.rate_slope(x, [3.0 * v ** -0.8 for v in x]) == pytest.approx(-0.8, rel=1e-12)


def test_rate_slope_needs_positive_points():
    with pytest.raises(DomainError):
        density_experiments.rate_slope([1.0, 2.0], [0.0, 1.0])
    with pytest.raises(DomainError):
        density_experiments.rate_slope([1.0], [1.0])


def test_kde_risk_curve_validates_the_grid():
    pair = density_experiments.build_pair(0.0)
    with pytest.raises(DomainError):
        density_experiments.kde_risk_curve(pair, [], trials=10, seed=0)
    with pytest.raises(DomainError):
        density_experiments.kde_risk_curve(pair, [8, 64], trials=10, seed=0)


def test_kde_risk_decreases_without_shift():
    pair = density_experiments.build_pair(0.0)
    first, second = density_experiments.kde_risk_curve(pair, [64, 4096], trials=200, seed=11)
    assert second.mean + 3.0 * second.std_error < first.mean - 3.0 * first.std_error
    assert second.bandwidth < first.bandwidth


def test_density_plan_columns():
    config = load_config(config_path("density.yaml"))
    clean = density_experiments.density_plan(config, 0.0)
    assert len(clean.laws) == 1
    shifted = density_experiments.density_plan(config, 0.01)
    assert [p.label for p in shifted.perturbations] == ["bump_up", "bump_down"]
    assert {p.shift_class for p in shifted.perturbations} == {"IDS"}
    assert [law.sign for law in shifted.laws] == [1, -1]
    assert shifted.loss.true_value == pytest.approx(1.0 / math.sqrt(2.0 * math.pi))


def test_density_risk_matrix_shape():
    config = load_config(config_path("density.yaml"))
    matrix = density_experiments.density_risk_matrix(config, 0.01, trials=5, master_seed=1)
    assert len(matrix.mean_loss) == 1
    assert len(matrix.mean_loss[0]) == 2


@pytest.mark.slow
def test_kde_rate_without_shift():
    pair = density_experiments.build_pair(0.0)
    n_grid = [2 ** k for k in range(8, 17)]
    curve = density_experiments.kde_risk_curve(pair, n_grid, trials=2000, seed=20240101)
    slope = density_experiments.rate_slope(n_grid, [point.mean for point in curve])
    assert slope == pytest.approx(-4.0 / 5.0, abs=0.1)
