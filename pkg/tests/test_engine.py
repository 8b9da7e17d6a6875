import math

import numpy as np
import pytest
from scipy import integrate

from conftest import Z0, drude_particle, lorentz_surface, make_scenario
from rotfric import engine
from rotfric.constants import C_LIGHT, HBAR, KB
from rotfric.engine import (Channels, ScenarioError, compute, compute_observable, pointlike_ratios,
                            sweep, validate_pointlike)
from rotfric.materials import DirectOscillator, Drude, Lorentz, Tabulated
from rotfric.quadrature import QuadratureSpec
from rotfric.spectra import Axis

SPEC = QuadratureSpec(rel_tol=1e-6)
TIGHT = QuadratureSpec(rel_tol=1e-8)


# -- imaginary-frequency references for the equilibrium normal force ---------

def _lorentz_im(m, xi):
    return m.eps_infinity + m.oscillator_strength**2 / (m.resonance**2 + xi * xi + m.damping * xi)


def _drude_im(m, xi):
    return 1 + m.plasma_frequency**2 / (xi * xi + m.damping * xi)


def _oscillator_im(a, xi):
    w0sq = a.resonance**2
    return a.static_polarizability * w0sq / (w0sq + xi * xi + a.damping * xi)


def _delta_alpha(eps_im, surface, particle, xi):
    e = eps_im(surface, xi)
    d = 1.0 if np.isinf(e) else (e - 1) / (e + 1)
    return d * _oscillator_im(particle, xi)


def casimir_polder_t0(eps_im, surface, particle, z0):
    """F_z = -3 hbar / (4 pi z0^4) int_0^inf Delta(i xi) alpha(i xi) d xi."""
    scale = particle.resonance
    val, _ = integrate.quad(lambda x: _delta_alpha(eps_im, surface, particle, x * scale),
                            0, np.inf, epsabs=0, epsrel=1e-12, limit=500)
    return -3 * HBAR / (4 * math.pi * z0**4) * val * scale


def casimir_polder_matsubara(eps_im, surface, particle, z0, T):
    """Same with ``(hbar/pi) int d xi -> 2 kB T sum'`` over Matsubara frequencies."""
    n = np.arange(0, 2_000_000, dtype=float)
    xi = 2 * math.pi * KB * T / HBAR * n
    with np.errstate(divide="ignore", invalid="ignore"):
        e = eps_im(surface, xi)
        d = np.where(np.isinf(e), 1.0, (e - 1) / (e + 1))
    terms = d * _oscillator_im(particle, xi)
    terms[0] *= 0.5
    return -3 * KB * T / (2 * z0**4) * terms.sum()


CP_CASES = {
    "lorentz": (Lorentz(1e14, 1.2e14, 2e13, 2.0), _lorentz_im),
    "drude": (Drude(1.5e14, 2e13), _drude_im),
}
OSC = DirectOscillator(1e-21, 1e14, 1.5e13)


@pytest.mark.parametrize("case", list(CP_CASES))
@pytest.mark.parametrize("T", [0.0, 300.0])
def test_equilibrium_normal_force_matches_imaginary_axis(case, T):
    surface, eps_im = CP_CASES[case]
    sc = make_scenario(surface, OSC, T1=T, T2=T)
    got = compute_observable(sc, "Fz", TIGHT)
    if T == 0:
        want = casimir_polder_t0(eps_im, surface, OSC, Z0)
    else:
        want = casimir_polder_matsubara(eps_im, surface, OSC, Z0, T)
    assert got.converged
    assert got.value < 0
    assert got.value == pytest.approx(want, rel=1e-7)


def test_equilibrium_compute():
    sc = make_scenario(lorentz_surface(), drude_particle(), T1=300.0, T2=300.0)
    obs = compute(sc, SPEC)
    scale = abs(obs.F_z.value) * Z0  # force times length, for Q and M comparison
    assert obs.F_z.value < 0
    assert abs(obs.F_x.value) <= 1e-8 * abs(obs.F_z.value)
    assert abs(obs.M.value) <= 1e-8 * scale
    assert abs(obs.Q_dot.value) <= 1e-8 * scale * 1e14
    assert set(obs.items()) == {"F_x", "F_z", "Q_dot", "M"}


def test_pointlike_small_particle_silent():
    sc = make_scenario(lorentz_surface(), DirectOscillator(1e-21, 1e14, 1e13), radius=Z0 / 100)
    assert validate_pointlike(sc) == []


def test_pointlike_half_distance_warns():
    sc = make_scenario(lorentz_surface(), DirectOscillator(1e-21, 1e14, 1e13), radius=Z0 / 2)
    (w,) = validate_pointlike(sc)
    assert w.condition == "R << z0" and w.ratio == pytest.approx(0.5) and w.level == "weak"
    assert "R << z0 violated: ratio 0.5" in str(w)
    sc = make_scenario(lorentz_surface(), DirectOscillator(1e-21, 1e14, 1e13), radius=2 * Z0)
    assert [x.level for x in validate_pointlike(sc)] == ["strong"]


def test_pointlike_thermal_length():
    sc = make_scenario(lorentz_surface(), DirectOscillator(1e-21, 1e14, 1e13), T1=0.0, T2=300.0,
                       radius=1e-6, z0=1e-3)
    lam = 2 * math.pi * HBAR * C_LIGHT / (KB * 300.0)
    assert lam == pytest.approx(4.796e-3, rel=1e-3)
    ratio = pointlike_ratios(sc)["R << 2 pi hbar c / kB T2"]
    assert ratio == pytest.approx(1e-6 / lam, rel=1e-12)
    assert validate_pointlike(sc) == []


def test_channels_require_magnetic_models():
    with pytest.raises(ScenarioError, match="magnetic"):
        make_scenario(lorentz_surface(), drude_particle(), channels="magnetic")
    with pytest.raises(ValueError):
        make_scenario(lorentz_surface(), drude_particle(), channels="gravitational")


def test_both_channels_sum():
    surf, mu = Lorentz(1e14, 1.2e14, 2e13, 2.0), Lorentz(1.5e14, 5e13, 3e13)
    p_e, p_m = DirectOscillator(1e-21, 1e14, 1.5e13), DirectOscillator(3e-22, 8e13, 1e13)
    kw = dict(V=1e6, T1=400.0, T2=200.0, particle_magnetic=p_m, surface_magnetic=mu)
    e = compute_observable(make_scenario(surf, p_e, **kw, channels="electric"), "Fx", SPEC)
    m = compute_observable(make_scenario(surf, p_e, **kw, channels="magnetic"), "Fx", SPEC)
    b = compute_observable(make_scenario(surf, p_e, **kw, channels=Channels.BOTH), "Fx", SPEC)
    assert b.value == e.value + m.value
    assert b.error_estimate == pytest.approx(math.hypot(e.error_estimate, m.error_estimate))


def test_radius_must_be_positive():
    with pytest.raises(ScenarioError):
        make_scenario(lorentz_surface(), drude_particle(), radius=0.0)


def test_tabulated_passivity_rejected():
    bad = Tabulated((0.0, 1e14, 2e14, 3e14), (3 + 0j, 2 + 0.5j, 2 - 0.1j, 1.5 + 0.2j))
    with pytest.raises(ScenarioError, match="passivity"):
        make_scenario(bad, drude_particle())


def test_sweep_distance_scaling():
    sc = make_scenario(lorentz_surface(), drude_particle(), Omega=3e13, T1=400.0, T2=200.0)
    rows = sweep(sc, "z0", [Z0, 2 * Z0], TIGHT)
    assert [r.value for r in rows] == [Z0, 2 * Z0]
    a, b = rows[0].observables, rows[1].observables
    assert a.F_z.value / b.F_z.value == pytest.approx(16, rel=1e-6)
    assert a.Q_dot.value / b.Q_dot.value == pytest.approx(8, rel=1e-6)
    assert a.M.value / b.M.value == pytest.approx(8, rel=1e-6)


def test_sweep_velocity_parity():
    sc = make_scenario(lorentz_surface(), drude_particle(), T1=300.0, T2=300.0)
    rows = sweep(sc, "V", [-2e6, 2e6], SPEC)
    neg, pos = rows[0].observables, rows[1].observables
    tol = 2 * (neg.F_x.error_estimate + pos.F_x.error_estimate)
    assert abs(neg.F_x.value + pos.F_x.value) <= tol
    assert pos.F_x.value < 0  # friction opposes the motion
    assert neg.F_z.value == pytest.approx(pos.F_z.value, rel=1e-5)
    assert neg.Q_dot.value == pytest.approx(pos.Q_dot.value, rel=1e-5)


def test_sweep_rotation_through_zero():
    sc = make_scenario(lorentz_surface(), drude_particle(), T1=300.0, T2=300.0, axis=Axis.Z)
    rows = sweep(sc, "Omega", [-1e13, 0.0, 1e13], SPEC)
    m = [r.observables.M.value for r in rows]
    assert m[0] > 0 > m[2]
    assert abs(m[1]) <= 1e-8 * abs(m[2])


def test_sweep_rejects_invalid_values_before_integrating(monkeypatch):
    calls = []
    monkeypatch.setattr(engine, "compute", lambda *a, **k: calls.append(1))
    sc = make_scenario(lorentz_surface(), drude_particle())
    with pytest.raises(ScenarioError):
        sweep(sc, "z0", [Z0, -1.0])
    with pytest.raises(ScenarioError):
        sweep(sc, "T1", [300.0, -5.0])
    with pytest.raises(ScenarioError):
        sweep(sc, "radius", [1e-7])
    with pytest.raises(ScenarioError):
        sweep(sc, "V", [])
    assert calls == []
