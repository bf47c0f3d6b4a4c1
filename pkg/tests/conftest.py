import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from prosthesis_handover.kinematics import RigidTransform, build_model, scale_from_anthropometry  # noqa: E402
from prosthesis_handover.mobility import ImpairmentModel, PostureContext, RoMBounds  # noqa: E402
from prosthesis_handover.optimizer import TaskSpace  # noqa: E402

ROM_MIN = np.radians([-20, -120, -170, -60, 0, -80, -70, -30])
ROM_MAX = np.radians([60, 30, 50, 90, 145, 80, 70, 30])
Q_N = np.radians([0, 0, 0, 0, 90, 0, 0, 0])
WRIST = (6, 7)


@pytest.fixture(scope="session")
def healthy():
    return RoMBounds(ROM_MIN, ROM_MAX)


@pytest.fixture(scope="session")
def model():
    return build_model(scale_from_anthropometry(1.83))


@pytest.fixture(scope="session")
def grasp():
    return RigidTransform(np.eye(3), [-0.08, 0.0, 0.0])


@pytest.fixture(scope="session")
def wrist_locked():
    return ImpairmentModel.blocked(WRIST)


@pytest.fixture(scope="session")
def ctx():
    return PostureContext(Q_N, Q_N, 0.10, np.radians(5.0))


@pytest.fixture(scope="session")
def sphere():
    return TaskSpace(center=[0.75, -0.2, 0.0], radius=0.85)


# criterion id -> list of (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record(criterion: int, title: str, passed: bool, detail: str) -> None:
    ACCEPTANCE.setdefault((criterion, title), []).append((bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), parts in sorted(ACCEPTANCE.items()):
        ok = all(p for p, _ in parts)
        details = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d} {title}: {details}")
