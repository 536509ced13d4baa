import math

import numpy as np
import pytest

from motlab.sim_world import CameraModel


def oracle_project(cam: CameraModel, point):
    """Independent pinhole projection built from a look-at frame."""
    forward = np.array([math.cos(cam.pitch) * math.cos(cam.yaw),
                        math.cos(cam.pitch) * math.sin(cam.yaw),
                        math.sin(cam.pitch)])
    world_up = np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, world_up)
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    d = np.asarray(point, dtype=float) - np.asarray(cam.position)
    x, y, z = d @ right, d @ down, d @ forward
    if z <= 0:
        return None
    return (cam.principal_point[0] + cam.focal_px * x / z,
            cam.principal_point[1] + cam.focal_px * y / z, z)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
