from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from proexplore.world import load_world, read_world

settings.register_profile(
    "repo", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("repo")

DATA = Path(str(resources.files("proexplore") / "data"))


def world_text(occupied: np.ndarray, resolution: float) -> str:
    rows = ["".join("#" if v else "." for v in row) for row in occupied]
    return f"resolution {resolution}\n" + "\n".join(rows) + "\n"


def box_world(height, width, resolution=0.1, **sensor):
    """Rectangular room: one-cell wall ring around a free interior."""
    occ = np.zeros((height, width), dtype=bool)
    occ[0, :] = occ[-1, :] = occ[:, 0] = occ[:, -1] = True
    return load_world(world_text(occ, resolution), **sensor)


def world_from(occ, resolution=0.1, **sensor):
    return load_world(world_text(np.asarray(occ, dtype=bool), resolution), **sensor)


@pytest.fixture(scope="session")
def office():
    return read_world(DATA / "office.world")


@pytest.fixture(scope="session")
def demo():
    return read_world(DATA / "demo.world")


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
