import numpy as np
import pytest

from uwsim.scenes import depth_ramp, textured_image


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def scene64():
    return textured_image(64, 64, seed=3), depth_ramp(64, 64, 0.4, 10.0)


_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(passed, detail)``."""

    def record(passed: bool, detail: str = ""):
        _CRITERIA.append((request.node.name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
