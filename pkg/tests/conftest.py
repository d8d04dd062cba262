import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conekit.geometry import WeightSpec  # noqa: E402

SURFACE = WeightSpec("surface", 2, -1.0, 0.0)
CONE = WeightSpec("cone", 2, 0.0, 0.0, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[SURFACE, CONE], ids=["surface", "cone"])
def desk_weight(request):
    return request.param


_ACCEPTANCE: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
