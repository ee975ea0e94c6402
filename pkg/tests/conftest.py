import numpy as np
import pytest

from tdsm.presets import TERMINAL_TIME_2D, scene_2d
from tdsm.verify import reference_tm_traces


@pytest.fixture(scope="session")
def tm_scene():
    return scene_2d()


@pytest.fixture(scope="session")
def tm_traces():
    # shared with the verification suites through their in-process cache
    return reference_tm_traces()


@pytest.fixture(scope="session")
def tm_indicator(tm_scene, tm_traces):
    from tdsm.imaging import time_indicator

    return time_indicator(tm_traces, tm_scene.receivers, tm_scene.grid, 0.0, tm_scene.constants.c0, TERMINAL_TIME_2D)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


CRITERIA: dict[int, str] = {}


def record_criterion(k: int, passed: bool, detail: str) -> None:
    line = f"CRITERION {k} {'PASS' if passed else 'FAIL'} {detail}"
    CRITERIA[k] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
