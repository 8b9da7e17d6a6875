"""Shared fixtures and the per-criterion acceptance summary."""
from __future__ import annotations

import numpy as np
import pytest

from rotfric.engine import Particle, Scenario, Surface
from rotfric.materials import ClausiusMossotti, DirectOscillator, Drude, Lorentz, tabulate
from rotfric.spectra import Axis, KinematicState, ThermalState

RADIUS = 1e-7  # cm
Z0 = 1e-6  # cm


def drude_surface():
    return Drude(1.5e14, 2e13)


def lorentz_surface():
    return Lorentz(1e14, 1.2e14, 2e13, 2.0)


def tabulated_surface():
    grid = np.concatenate([[0.0], np.geomspace(1e11, 1e16, 400)])
    return tabulate(lorentz_surface(), grid)


def drude_particle(radius=RADIUS):
    return ClausiusMossotti(radius, Drude(2e14, 3e13))


def lorentz_particle(radius=RADIUS):
    return ClausiusMossotti(radius, Lorentz(1.3e14, 1e14, 2.5e13, 1.5))


def oscillator_particle():
    return DirectOscillator(1e-21, 1e14, 1.5e13)


def make_scenario(surface, particle, V=0.0, Omega=0.0, T1=300.0, T2=300.0, z0=Z0,
                  axis=Axis.X, radius=RADIUS, **kw):
    return Scenario(particle=Particle(particle, radius, kw.pop("particle_magnetic", None)),
                    surface=Surface(surface, kw.pop("surface_magnetic", None)),
                    kinematics=KinematicState(V=V, Omega=Omega, z0=z0),
                    thermal=ThermalState(T1, T2), configuration=axis, **kw)


@pytest.fixture
def base_scenario():
    return make_scenario(lorentz_surface(), drude_particle())


# -- acceptance summary: one line per criterion ------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    n, title = marker
    entry = _CRITERIA.setdefault(n, {"title": title, "passed": 0, "failed": 0})
    entry["passed" if report.passed else "failed"] += 1


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        report.criterion = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["failed"] == 0 else "FAIL"
        terminalreporter.write_line(
            f"criterion {n:2d}  {status}  {e['title']}  "
            f"({e['passed']} passed, {e['failed']} failed)")
