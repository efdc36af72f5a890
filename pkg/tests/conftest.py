import functools
import math

import numpy as np
import pytest

from quadsmc.dynamics import VehicleState
from quadsmc.engine import run_scenario
from quadsmc.mathcore import euler_to_quat
from quadsmc.reference import make_scenario

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def cached_run(scenario, controller, disturbance=True, uncertainty=True, duration=None):
    """Closed-loop runs are a few seconds each; share them across test modules."""
    sc = make_scenario(scenario, duration=duration, disturbance=disturbance, uncertainty=uncertainty)
    return run_scenario(sc, controller)


@functools.lru_cache(maxsize=None)
def yaw_error_run(deg, wz=0.0, duration=10.0, disturbance=False, uncertainty=True):
    """Hover hold at (0,0,2) starting with a pure yaw error of ``deg`` degrees."""
    q = euler_to_quat(np.array([0.0, 0.0, math.radians(deg)]))
    s0 = VehicleState([0, 0, 2], [0, 0, 0], q, [0, 0, wz])
    sc = make_scenario("hover", duration=duration, disturbance=disturbance, uncertainty=uncertainty,
                       initial_state=s0)
    return run_scenario(sc, "proposed")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
