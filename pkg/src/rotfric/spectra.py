"""Pointwise integrands for the forces, heating rate and torque.

All integrands are densities per ``d(omega) d^2k`` and take the wave vector
in polar form, ``kx = k cos(phi)``, ``ky = k sin(phi)``; the quadrature layer
supplies the ``k dk dphi`` measure.  Arguments broadcast like numpy ufuncs.

The particle rotates about ``axis`` with signed angular speed ``Omega`` while
moving with velocity ``V`` along x at height ``z0`` above the surface.  The
configuration enters only through the pair of wave-vector weights
``(w0, wOmega)`` multiplying the unshifted and rotation-shifted particle
response; :func:`weights` holds the map.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .constants import HBAR, KB
from .materials import PolarizabilityModel, ResponseModel, surface_response

PREFACTOR = HBAR / (4 * np.pi**2)
SMALL_X = 1e-8


class Axis(str, enum.Enum):
    X = "x"
    Y = "y"
    Z = "z"


@dataclass(frozen=True)
class KinematicState:
    """Velocity ``V`` (cm/s, along x), angular speed ``Omega`` (rad/s), height ``z0`` (cm)."""

    V: float = 0.0
    Omega: float = 0.0
    z0: float = 1e-6

    def __post_init__(self):
        if not (np.isfinite(self.z0) and self.z0 > 0):
            raise ValueError(f"z0 must be > 0, got {self.z0!r}")
        if not (np.isfinite(self.V) and np.isfinite(self.Omega)):
            raise ValueError("V and Omega must be finite")


@dataclass(frozen=True)
class ThermalState:
    """Particle temperature ``T1`` and surface temperature ``T2`` in K."""

    T1: float = 0.0
    T2: float = 0.0

    def __post_init__(self):
        for name in ("T1", "T2"):
            t = getattr(self, name)
            if not (np.isfinite(t) and t >= 0):
                raise ValueError(f"{name} must be >= 0, got {t!r}")


def weights(axis: Axis, kx, ky):
    """Wave-vector weights ``(w0, wOmega)`` for a rotation axis.

    x -> (kx^2, ky^2 + k^2), y -> (ky^2, kx^2 + k^2), z -> (k^2, kx^2 + ky^2);
    in every case ``w0 + wOmega = 2 k^2``.
    """
    kx2 = kx * kx
    ky2 = ky * ky
    k2 = kx2 + ky2
    axis = Axis(axis)
    if axis is Axis.X:
        return kx2, ky2 + k2
    if axis is Axis.Y:
        return ky2, kx2 + k2
    return k2, kx2 + ky2


def thermal_factor(omega, T):
    """``coth(hbar omega / 2 kB T)``, odd in omega.

    ``T = 0`` gives ``sign(omega)``; the pole at ``omega = 0`` is assigned the
    value 0.  For ``|x| < 1e-8`` the series ``1/x + x/3`` is used.
    """
    w = np.asarray(omega, dtype=float)
    scale = 2 * KB * T
    if scale == 0:  # T = 0, or T so small the thermal energy underflows
        out = np.sign(w)
    else:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            x = HBAR * w / scale
            ax = np.abs(x)
            out = np.where(ax < SMALL_X, 1.0 / x + x / 3.0, 1.0 / np.tanh(x))
        out = np.where(x == 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def _im_times_coth(model, w, T):
    """``Im alpha(w) coth(hbar w / 2 kB T)`` with its finite limit at ``w = 0``."""
    w = np.asarray(w, dtype=float)
    zero = w == 0
    if T > 0 and np.any(zero):
        # even function of w; evaluate just off the removable singularity
        h = 1e-7 * 2 * KB * T / HBAR
        w = np.where(zero, h, w)
    safe = np.where(zero & (T == 0), 1.0, w)
    val = np.imag(model(safe)) * thermal_factor(safe, T)
    if T == 0:
        val = np.where(zero, 0.0, val)
    return val


class DipoleSpectrum(NamedTuple):
    S_xx: np.ndarray
    S_yy: np.ndarray
    S_yz_imag: np.ndarray


def fdt_dipole_spectrum(omega, Omega, T1, alpha: PolarizabilityModel) -> DipoleSpectrum:
    """Spectral densities of the spontaneous dipole in the co-moving frame.

    For rotation about x, with ``w_pm = w +- Omega``::

        S_xx      = alpha''(w) coth(hbar w / 2 kB T1)
        S_yy      = S_zz = (g(w_+) + g(w_-)) / 2
        S_yz_imag = -(g(w_+) - g(w_-)) / 2

    where ``g(w) = alpha''(w) coth(hbar w / 2 kB T1)``.  The common factor
    ``2 pi hbar delta(w + w')`` is omitted.
    """
    w = np.asarray(omega, dtype=float)
    g0 = _im_times_coth(alpha, w, T1)
    gp = _im_times_coth(alpha, w + Omega, T1)
    gm = _im_times_coth(alpha, w - Omega, T1)
    return DipoleSpectrum(g0, 0.5 * (gp + gm), -0.5 * (gp - gm))


def _common(omega, k, phi, axis, kin, th, surface, particle, need_unshifted=True):
    w = np.asarray(omega, dtype=float)
    k = np.asarray(k, dtype=float)
    phi = np.asarray(phi, dtype=float)
    kx = k * np.cos(phi)
    ky = k * np.sin(phi)
    w0, wO = weights(axis, kx, ky)
    decay = np.exp(-2 * k * kin.z0)
    delta = surface_response(surface, w)
    w1 = w + kx * kin.V
    w2 = w1 + kin.Omega
    a2 = particle(w2)
    if not need_unshifted:
        a1 = None
    elif kin.Omega == 0:
        a1 = a2
    else:
        a1 = particle(w1)
    return kx, w0, wO, decay, np.asarray(delta), w1, w2, a1, a2


def _dissipative_braces(w, w0, wO, delta, w1, w2, a1, a2, th):
    c2 = thermal_factor(w, th.T2)
    br1 = c2 - thermal_factor(w1, th.T1)
    br2 = c2 - thermal_factor(w2, th.T1)
    return delta.imag * (w0 * np.imag(a1) * br1 + wO * np.imag(a2) * br2)


def integrand_Fx(omega, k, phi, config: Axis, kin: KinematicState, th: ThermalState,
                 surface: ResponseModel, particle: PolarizabilityModel):
    """Tangential force density (dyn s cm^2 per d(omega) d^2k)."""
    kx, w0, wO, decay, delta, w1, w2, a1, a2 = _common(omega, k, phi, config, kin, th, surface, particle)
    braces = _dissipative_braces(omega, w0, wO, delta, w1, w2, a1, a2, th)
    return -PREFACTOR * (kx / k) * decay * braces


def integrand_Fz(omega, k, phi, config: Axis, kin: KinematicState, th: ThermalState,
                 surface: ResponseModel, particle: PolarizabilityModel):
    """Normal force density; negative values attract the particle."""
    kx, w0, wO, decay, delta, w1, w2, a1, a2 = _common(omega, k, phi, config, kin, th, surface, particle)
    c2 = thermal_factor(omega, th.T2)
    t1 = delta.real * np.imag(a1) * thermal_factor(w1, th.T1) + delta.imag * np.real(a1) * c2
    t2 = delta.real * np.imag(a2) * thermal_factor(w2, th.T1) + delta.imag * np.real(a2) * c2
    return -PREFACTOR * decay * (w0 * t1 + wO * t2)


def integrand_Q(omega, k, phi, config: Axis, kin: KinematicState, th: ThermalState,
                surface: ResponseModel, particle: PolarizabilityModel):
    """Heating-rate density; positive means the particle gains energy."""
    kx, w0, wO, decay, delta, w1, w2, a1, a2 = _common(omega, k, phi, config, kin, th, surface, particle)
    braces = _dissipative_braces(omega, w0, wO, delta, w1, w2, a1, a2, th)
    return PREFACTOR * (np.asarray(omega, dtype=float) / k) * decay * braces


def integrand_M(omega, k, phi, config: Axis, kin: KinematicState, th: ThermalState,
                surface: ResponseModel, particle: PolarizabilityModel):
    """Torque density along the rotation axis."""
    kx, w0, wO, decay, delta, w1, w2, a1, a2 = _common(
        omega, k, phi, config, kin, th, surface, particle, need_unshifted=False)
    br = thermal_factor(omega, th.T2) - thermal_factor(w2, th.T1)
    return -PREFACTOR * (wO / k) * decay * delta.imag * np.imag(a2) * br


OBSERVABLES = ("Fx", "Fz", "Q", "M")


def integrand_for(name: str):
    """Look up an integrand by observable name at call time."""
    if name not in OBSERVABLES:
        raise KeyError(f"unknown observable {name!r}")
    return globals()["integrand_" + name]
