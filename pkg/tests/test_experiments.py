import os

import pytest
import yaml

from src.schemas.bounds import TheoryBound
from src.services import experiments, theory_bounds
from src.util.errors import ConfigError
from src.util.rng import cell_seed
from tests.conftest import CONFIG_DIR, config_path

IDENTITY_CHECKS = {
    "ids_transition_continuity",
    "location_risk_ordering",
    "bayes_jds_limit",
    "bayes_lr_limit",
    "uniform_bounds_order",
    "crlb_constant",
    "modulus_sandwich",
    "lower_tools_below_exact",
}


def _single_eps(name: str, eps: float, trials: int) -> dict:
    data = experiments.load_config(config_path(name)).model_dump(mode="json", exclude_none=True)
    data.pop("alphas", None)
    data.update(eps_list=[eps], trials=trials)
    return data


@pytest.mark.parametrize("name", sorted(f for f in os.listdir(CONFIG_DIR) if f.endswith(".yaml")))
def test_shipped_configs_load_and_round_trip(name):
    config = experiments.load_config(config_path(name))
    assert experiments.parse_config(yaml.safe_load(experiments.dump_config(config))) == config


def test_regression_theta_defaults_to_ones(lr_model):
    assert lr_model.theta == [1.0] * lr_model.p


def test_trials_below_two_names_the_field():
    data = _single_eps("location.yaml", 0.1, trials=1)
    with pytest.raises(ConfigError) as exc_info:
        experiments.parse_config(data)
    assert "trials" in exc_info.value.fields


def test_alphas_and_eps_list_are_exclusive():
    data = _single_eps("location.yaml", 0.1, trials=10)
    data["alphas"] = [0.0]
    with pytest.raises(ConfigError) as exc_info:
        experiments.parse_config(data)
    assert set(exc_info.value.fields) == {"alphas", "eps_list"}


def test_problem_must_match_the_law():
    data = _single_eps("location.yaml", 0.1, trials=10)
    data["problem"] = "uniform"
    with pytest.raises(ConfigError) as exc_info:
        experiments.parse_config(data)
    assert exc_info.value.fields == ["dist.kind"]


def test_empty_class_list_is_rejected():
    data = _single_eps("location.yaml", 0.1, trials=10)
    data["shift_classes"] = []
    with pytest.raises(ConfigError) as exc_info:
        experiments.parse_config(data)
    assert "shift_classes" in exc_info.value.fields


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError) as exc_info:
        experiments.load_config(str(tmp_path / "missing.yaml"))
    assert exc_info.value.fields == ["config"]
    broken = tmp_path / "broken.yaml"
    broken.write_text("problem: [location\n")
    with pytest.raises(ConfigError):
        experiments.load_config(str(broken))


def test_overrides_are_validated():
    config = experiments.load_config(config_path("location.yaml"))
    assert experiments.apply_overrides(config, trials=None) is config
    assert experiments.apply_overrides(config, trials=7).trials == 7
    with pytest.raises(ConfigError):
        experiments.apply_overrides(config, master_seed=-1)


def test_location_risk_matrix_rows():
    config = experiments.parse_config(_single_eps("location_matrix.yaml", 0.1, trials=20))
    rows = experiments.risk_matrix_rows(config)
    assert len(rows) == 2 * 4
    assert rows[5].seed == cell_seed(config.master_seed, 1, 1)
    assert all(row.trials == 20 for row in rows)


def test_uniform_risk_matrix_rows():
    config = experiments.parse_config(_single_eps("uniform.yaml", 0.01, trials=2))
    rows = experiments.risk_matrix_rows(config)
    assert len(rows) == 27 * 26
    assert len({row.estimator for row in rows}) == 27


def test_risk_matrix_needs_one_eps():
    with pytest.raises(ConfigError):
        experiments.risk_matrix_rows(experiments.load_config(config_path("location.yaml")))


def test_sweep_needs_alphas():
    with pytest.raises(ConfigError):
        experiments.sweep_rows(experiments.load_config(config_path("location_matrix.yaml")))


def test_sweep_rows_are_deterministic():
    config = experiments.apply_overrides(experiments.load_config(config_path("location.yaml")), trials=10)
    assert experiments.sweep_rows(config) == experiments.sweep_rows(config)


def test_verify_fails_on_corrupted_theory():
    config = experiments.parse_config(_single_eps("location_matrix.yaml", 0.1, trials=200))

    def corrupted(cfg, shift_class, eps):
        bound = theory_bounds.theory_for(cfg, shift_class, eps)
        return TheoryBound.exact_value(bound.problem, shift_class, eps, 2.0 * bound.exact)

    results = experiments.verify(config, theory=corrupted)
    failed = {result.name for result in results if not result.passed}
    assert failed == {"location_CDS_eps=0.1", "location_IDS_eps=0.1", "location_JDS_eps=0.1"}


def test_identity_suite_passes():
    config = experiments.parse_config(_single_eps("location_matrix.yaml", 0.1, trials=20))
    results = {result.name: result.passed for result in experiments.verify(config)}
    assert IDENTITY_CHECKS <= set(results)
    assert all(results[name] for name in IDENTITY_CHECKS)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["location_matrix.yaml", "linear_regression.yaml", "uniform.yaml"])
def test_verify_passes_on_shipped_configs(name):
    config = experiments.apply_overrides(experiments.load_config(config_path(name)), trials=1000)
    results = experiments.verify(config)
    assert [result.name for result in results if not result.passed] == []


def test_bounds_table_for_uniform():
    config = experiments.load_config(config_path("uniform.yaml"))
    rows = experiments.bounds_table(config)
    assert len(rows) == len(config.alphas)
    assert experiments.bounds_columns(config)[:3] == ["alpha", "eps", "rate_only"]
    for row in rows:
        assert row["CDS_exact"] == pytest.approx(row["eps"] ** 2 + 1.0 / 5304.0)
        assert row["IDS_lower"] <= row["JDS_upper"]
        assert row["rate_only"] is False


def test_bounds_table_for_density_is_rate_only():
    rows = experiments.bounds_table(experiments.load_config(config_path("density.yaml")))
    assert all(row["rate_only"] for row in rows)


def test_bounds_table_with_empty_grid():
    data = _single_eps("uniform.yaml", 0.1, trials=10)
    data["eps_list"] = []
    assert experiments.bounds_table(experiments.parse_config(data)) == []
