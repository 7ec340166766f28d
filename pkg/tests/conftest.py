import re

import pytest

from rdcomp.grid import build_grid
from rdcomp.model import classical_lv
from rdcomp.sweep import ModelFamily, RegionSpec, sweep_region

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def grid():
    """The default interval (0, pi) with 200 interior nodes."""
    return build_grid("interval", 200)


@pytest.fixture(scope="session")
def small_grid():
    return build_grid("interval", 20)


LV_FAMILY = ModelFamily("classical_lv", dict(b=1.0, c=0.1, e=0.1, f=1.0))
LV_SPEC = RegionSpec(0.5, 5.0, 0.5, 5.0, 10, 10)


@pytest.fixture(scope="session")
def lv_sweep(grid):
    """The 10 x 10 LV map over [0.5, 5]^2, warm-started, one thread."""
    return sweep_region(LV_SPEC, LV_FAMILY, grid, threads=1)


@pytest.fixture
def lv():
    """classical_lv with the default shape b = f = 1, c = e = 0.1."""

    def make(a=5.0, d=5.0, b=1.0, c=0.1, e=0.1, f=1.0):
        return classical_lv(a, b, c, d, e, f)

    return make


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_c(\d+)_", report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _ACCEPTANCE.get(n, "passed")
        _ACCEPTANCE[n] = report.outcome if prev == "passed" else prev


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    from test_acceptance import CRITERIA

    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        outcome = _ACCEPTANCE.get(n)
        label = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}.get(outcome, "NOT RUN")
        terminalreporter.write_line(f"criterion {n:2d}: {label}  {CRITERIA[n]}")
