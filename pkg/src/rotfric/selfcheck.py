"""Fast invariant battery run by ``rotfric selfcheck``.

Every check reads the integrands through :func:`spectra.integrand_for`, so a
patched integrand is seen by the battery.
"""
from __future__ import annotations

import sys
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import spectra
from .engine import Particle, Scenario, Surface, bind_kernel, compute_observable
from .materials import ClausiusMossotti, Drude, Lorentz
from .quadrature import OracleGrid, QuadratureSpec, integrate_observable, oracle_integrate
from .spectra import Axis, KinematicState, ThermalState

SPEC = QuadratureSpec(rel_tol=1e-8, window_factor=10.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    deviation: float
    detail: str = ""


def _scenario(V=0.0, Omega=0.0, T1=300.0, T2=300.0, z0=1e-6, axis=Axis.X) -> Scenario:
    return Scenario(
        particle=Particle(ClausiusMossotti(1e-7, Drude(2e14, 3e13)), 1e-7),
        surface=Surface(Lorentz(1e14, 1.2e14, 2e13, 2.0)),
        kinematics=KinematicState(V=V, Omega=Omega, z0=z0),
        thermal=ThermalState(T1, T2),
        configuration=axis,
    )


def _value(sc, obs, spec=SPEC):
    return compute_observable(sc, obs, spec).value


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _samples(n=400, seed=7):
    rng = np.random.default_rng(seed)
    w = rng.uniform(-1e15, 1e15, n)
    k = rng.uniform(1e3, 1e7, n)
    phi = rng.uniform(0, 2 * np.pi, n)
    return w, k, phi


def _pointwise(sc, obs):
    w, k, phi = _samples()
    return spectra.integrand_for(obs)(w, k, phi, sc.configuration, sc.kinematics, sc.thermal,
                                      sc.surface.electric, sc.particle.electric)


def check_fdt():
    from .materials import DirectOscillator
    alpha = DirectOscillator(1e-21, 1e14, 1e13)
    w = np.linspace(-5e14, 5e14, 401)
    dev = float(np.max(np.abs(spectra.fdt_dipole_spectrum(w, 0.0, 300.0, alpha).S_yz_imag)))
    a = spectra.fdt_dipole_spectrum(w, 3e13, 300.0, alpha)
    b = spectra.fdt_dipole_spectrum(w, -3e13, 300.0, alpha)
    scale = float(np.max(np.abs(a.S_yy)))
    dev = max(dev, float(np.max(np.abs(a.S_yy - b.S_yy))) / scale,
              float(np.max(np.abs(a.S_yz_imag + b.S_yz_imag))) / scale)
    return dev <= 1e-12, dev


def check_equilibrium_null():
    sc = _scenario()
    fz = _value(sc, "Fz")
    dev = max(abs(_value(sc, o)) / abs(fz) for o in ("Fx", "Q", "M"))
    scale = np.max(np.abs(_pointwise(sc, "Fz")))
    dev = max(dev, max(float(np.max(np.abs(_pointwise(sc, o)))) / scale for o in ("Fx", "Q", "M")))
    return dev <= 1e-8 and fz < 0, dev


def check_degeneracy():
    base = _scenario(V=3e6, T1=300.0, T2=200.0)
    dev = 0.0
    # the torque carries only w_Omega and is specific to its axis
    for obs in ("Fx", "Fz", "Q"):
        ref = _pointwise(base, obs)
        scale = max(float(np.max(np.abs(ref))), 1e-300)
        for axis in (Axis.Y, Axis.Z):
            other = _pointwise(base.replace(configuration=axis), obs)
            dev = max(dev, float(np.max(np.abs(other - ref))) / scale)
    fx = [_value(base.replace(configuration=a), "Fx") for a in Axis]
    dev = max(dev, _rel(fx[0], fx[1]), _rel(fx[0], fx[2]))
    return dev <= 1e-6, dev


def check_scaling():
    sc = _scenario(Omega=4e13, T1=350.0, T2=250.0)
    dev = 0.0
    for obs, power in (("Fz", 4), ("Q", 3), ("M", 3)):
        a = _value(sc, obs)
        b = _value(sc.replace(z0=2 * sc.kinematics.z0), obs)
        dev = max(dev, _rel(a / b, 2.0**power))
    return dev <= 1e-6, dev


def check_sign_laws():
    products = [
        _value(_scenario(V=5e6), "Fx") * 5e6,
        _value(_scenario(V=-5e6), "Fx") * -5e6,
        _value(_scenario(Omega=5e13), "M") * 5e13,
        _value(_scenario(Omega=-5e13), "M") * -5e13,
        _value(_scenario(T1=400.0, T2=200.0), "Q") * 200.0,
        _value(_scenario(T1=100.0, T2=300.0), "Q") * -200.0,
        _value(_scenario(), "Fz"),
        _value(_scenario(T1=0.0, T2=0.0), "Fz"),
    ]
    # deviation reported as the number of violations
    violations = sum(1 for p in products if not p < 0)
    return violations == 0, float(violations)


def check_oracle():
    sc = _scenario(V=2e6, Omega=2e13, T1=300.0, T2=200.0)
    dev = 0.0
    for obs in ("Fx", "Q"):
        kernel = bind_kernel(obs, sc.configuration, sc.kinematics, sc.thermal,
                             sc.surface.electric, sc.particle.electric)
        a = integrate_observable(kernel, SPEC)
        o = oracle_integrate(kernel, OracleGrid(n_omega=2048, n_u=96, n_phi=16), SPEC)
        dev = max(dev, _rel(a.value, o.value))
    return dev <= 1e-3, dev


CHECKS: dict[str, Callable] = {
    "fdt identities": check_fdt,
    "equilibrium null": check_equilibrium_null,
    "Omega=0 degeneracy": check_degeneracy,
    "z0 scaling": check_scaling,
    "sign laws": check_sign_laws,
    "oracle comparison": check_oracle,
}


def run_selfcheck(out=None) -> list[CheckResult]:
    out = out or sys.stdout
    results = []
    for name, fn in CHECKS.items():
        t0 = time.perf_counter()
        try:
            passed, dev = fn()
            detail = ""
        except Exception as exc:  # a broken build must report, not crash
            passed, dev, detail = False, float("nan"), f"{type(exc).__name__}: {exc}"
        dt = time.perf_counter() - t0
        res = CheckResult(name, bool(passed), float(dev), detail)
        results.append(res)
        status = "PASS" if res.passed else "FAIL"
        line = f"{status}  {name:<20s} max_deviation={res.deviation:.3e}  ({dt:.2f} s)"
        if detail:
            line += f"  {detail}"
        print(line, file=out, flush=True)
    return results
