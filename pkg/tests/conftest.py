"""Shared fixtures: Green tables and constructed solutions are expensive, build them once."""

import numpy as np
import pytest

from halfliouville.ansatz import BlowupConfig
from halfliouville.domain import ConfigPoint, IntervalUnion, KappaField
from halfliouville.greens import GreenTable
from halfliouville.reduced import XiLandscape, minimize_xi
from halfliouville.reduction import outer_reduce

EPS_SWEEP = (0.05, 0.025, 0.0125)


@pytest.fixture(scope="session")
def unit():
    return IntervalUnion(((-1.0, 1.0),))


@pytest.fixture(scope="session")
def gt_unit(unit):
    return GreenTable(unit, 1 / 400)


@pytest.fixture(scope="session")
def sweep_m1(unit, gt_unit):
    """m = 1 on (-1, 1), kappa = 1, constructed at every eps of the sweep."""
    out = []
    for eps in EPS_SWEEP:
        cfg = BlowupConfig(eps, ConfigPoint((0.0,), 0.1), unit)
        out.append(outer_reduce(cfg, gt_unit, hy=0.1))
    return out


@pytest.fixture(scope="session")
def two_intervals():
    return IntervalUnion(((-2.0, -1.0), (1.0, 2.0)))


@pytest.fixture(scope="session")
def gt_two(two_intervals):
    return GreenTable(two_intervals, 1 / 200)


@pytest.fixture(scope="session")
def xi_two(two_intervals, gt_two):
    return minimize_xi(XiLandscape(two_intervals, KappaField.constant(), gt_two, (0, 1))).xi


@pytest.fixture(scope="session")
def sweep_m2(two_intervals, gt_two, xi_two):
    """m = 2 on (-2,-1) u (1,2), one point per interval."""
    out = []
    for eps in EPS_SWEEP:
        cfg = BlowupConfig(eps, ConfigPoint(xi_two, 0.1), two_intervals)
        out.append(outer_reduce(cfg, gt_two, hy=0.1))
    return out


@pytest.fixture(scope="session")
def jb():
    """J_1 = (-3, -2) u (0, 1)."""
    return IntervalUnion(((-3.0, -2.0), (0.0, 1.0)))


@pytest.fixture(scope="session")
def gt_jb(jb):
    return GreenTable(jb, 1 / 400)


@pytest.fixture(scope="session")
def xi_jb(jb, gt_jb):
    return minimize_xi(XiLandscape(jb, KappaField.constant(), gt_jb, (0, 1))).xi


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    def report(number, title, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        request.config.stash[_ACCEPTANCE].append((number, line))
        print(line)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(config.stash.get(_ACCEPTANCE, []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in lines:
            terminalreporter.write_line(line)
