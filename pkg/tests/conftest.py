import copy

import numpy as np
import pytest

from config.config_manager import config_manager
from core.lattice import build_strip


@pytest.fixture(autouse=True)
def isolated_config(tmp_path):
    """Each test sees default settings and never writes log files into the repo."""
    snapshot = copy.deepcopy(config_manager.config)
    config_manager.set("logging.enable_file_logs", False)
    config_manager.set("logging.log_directory", str(tmp_path / "logs"))
    yield config_manager
    config_manager.config = snapshot


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv("FRUSTRA_SEED", raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def strip_2_1():
    return build_strip(2, 1)


@pytest.fixture
def strip_3_2():
    return build_strip(3, 2)


def positive_couplings(lattice, value=1.0):
    return np.full(lattice.num_edges, value)
