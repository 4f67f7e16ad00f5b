import numpy as np
import pytest

from uavmimo import config as C
from uavmimo.deployment import build_layout


@pytest.fixture(scope="session")
def layout():
    return build_layout(500.0, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_cfg():
    return C.ExperimentConfig()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
