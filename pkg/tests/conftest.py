import numpy as np
import pytest

from lowreg_gp import Field, Grid, random_sobolev_field
from lowreg_gp.datagen import RegularitySpec


def random_pair(grid, theta, seed):
    """Initial datum and potential drawn like the harness does."""
    u = random_sobolev_field(RegularitySpec(theta, seed, grid, 0))
    V = random_sobolev_field(RegularitySpec(theta, seed, grid, 1))
    return u, V


def max_abs(f: Field) -> float:
    return float(np.abs(f.coeffs).max())


def loglog_slope(taus, errs) -> float:
    return float(np.polyfit(np.log(taus), np.log(errs), 1)[0])


@pytest.fixture
def grid1d():
    return Grid(1, 32)


@pytest.fixture
def smooth_pair():
    """H^4 data on a K=128 grid."""
    return random_pair(Grid(1, 128), 4.0, 7)


# Acceptance verdicts, printed together at the end of the session.
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} :: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
