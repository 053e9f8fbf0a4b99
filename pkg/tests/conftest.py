import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def default_snapshots():
    """The default 1000-point synthetic data set (seed 42)."""
    from heatsink_twin.config import RunConfig
    from heatsink_twin.thermal_sim import generate_snapshots

    cfg = RunConfig(seed=42)
    return generate_snapshots(cfg.geometry, cfg.material, cfg.sampling.velocity_range,
                              cfg.sampling.flux_range, cfg.samples, cfg.seed,
                              cfg.sampling.ambient_temperature, cfg.resolution)


@pytest.fixture(scope="session")
def default_dataset(default_snapshots):
    from heatsink_twin.store import snapshot_dataset
    return snapshot_dataset(default_snapshots)


@pytest.fixture(scope="session")
def small_dataset():
    """60 points on a smooth analytic response; cheap enough for every test."""
    from heatsink_twin.regressors import Dataset
    rng = np.random.default_rng(5)
    X = rng.uniform([0.2, 450.0], [0.6, 850.0], size=(60, 2))
    Y = np.column_stack([5 + 8 * np.sqrt(X[:, 0]), 300 + X[:, 1] / (150 + 200 * X[:, 0]),
                         X[:, 1] * 0.006])
    return Dataset(X, Y, ("inlet_velocity_m_s", "wall_heat_flux_W_m2"),
                   ("heat_coef_W_m2K", "max_temp_K", "total_heat_W"))


@pytest.fixture(scope="session", autouse=True)
def _warm_compiled_kernels():
    """Load/compile the numba kernels once so timings inside tests are steady."""
    from heatsink_twin.regressors.mlp import train_mlp
    from heatsink_twin.regressors.svr import train_svr
    X = np.random.default_rng(0).random((8, 2))
    train_mlp(X, X[:, 0], epochs=1)
    train_svr(X, X[:, 0])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
