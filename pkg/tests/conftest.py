import math
import warnings

import pytest

warnings.filterwarnings("ignore", module="numba")

from hillfila.biot_savart import PatchSource  # noqa: E402
from hillfila.geometry import AxiBall  # noqa: E402


@pytest.fixture(scope="session")
def ball_contour():
    return AxiBall().contour(1024)


@pytest.fixture(scope="session")
def hill_source_64(ball_contour):
    return PatchSource((ball_contour,), 1.0, 1.0 / 64.0)


@pytest.fixture(scope="session")
def hill_source_128(ball_contour):
    return PatchSource((ball_contour,), 1.0, 1.0 / 128.0)


W = 2.0 / 15.0
UNIT_BALL = 4.0 * math.pi / 3.0


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion and fail the test if needed."""
    def report(number: int, ok: bool, detail: str):
        line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
