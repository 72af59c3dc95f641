import math

import numpy as np
import pytest

from turntrack.evolution import ObservationWindow


def circle_points(n, *, radius=10.0, center=(3.0, 4.0), delta=0.05, phase=0.0, dt=0.1, t0=0.0):
    """``n`` noiseless samples of a counter-clockwise circle (negative delta turns clockwise)."""
    k = np.arange(n)
    theta = phase + delta * k
    pos = np.asarray(center) + radius * np.column_stack([np.cos(theta), np.sin(theta)])
    return t0 + dt * k, pos


def make_window(times, positions, capacity=None):
    return ObservationWindow(capacity or max(3, len(times)), tuple(times), positions)


def circle_window(n=20, **kw):
    return make_window(*circle_points(n, **kw))


@pytest.fixture
def circle():
    """Window of 20 samples on r=10, center (3,4), delta=0.05 per 0.1 s."""
    return circle_window()


def rot(phi):
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


#: PASS/FAIL lines recorded by the acceptance suite, printed after the run.
ACCEPTANCE_LINES: list[str] = []


def report(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2])):
            terminalreporter.write_line(line)
