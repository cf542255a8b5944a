import os

import numpy as np
import pytest

from src.schemas.distributions import GaussianLocation, LinearModel, UniformLocation
from src.services.experiments import load_config

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


def config_path(name: str) -> str:
    return os.path.join(CONFIG_DIR, name)


@pytest.fixture
def location_dist() -> GaussianLocation:
    """n = 10 experiments: p = 3, Sigma = diag(1, 2, 3) / 6, Tr[Sigma] = 1."""
    return GaussianLocation(sigma_cov=(np.diag([1.0, 2.0, 3.0]) / 6.0).tolist())


@pytest.fixture
def uniform_dist() -> UniformLocation:
    return UniformLocation(theta=3.0)


@pytest.fixture
def lr_config():
    return load_config(config_path("linear_regression.yaml"))


@pytest.fixture
def lr_model(lr_config) -> LinearModel:
    return lr_config.dist


@pytest.fixture
def hetero_model() -> LinearModel:
    return load_config(config_path("linear_regression_hetero.yaml")).dist
