"""Dispersive response functions for the surface and the particle.

Every model is evaluated on ``|omega|`` and reflected by complex conjugation
for negative frequencies, so ``f(-w) == conj(f(w))`` holds exactly.  Nothing
is ever stored at negative frequency.

Permittivity-type models (:class:`Drude`, :class:`Lorentz`,
:class:`Composite`, :class:`Tabulated`) are reused for the permeability
``mu(w)``; polarizability models (:class:`ClausiusMossotti`,
:class:`DirectOscillator`, :class:`TabulatedPolarizability`) for the magnetic
polarizability.  Frequencies are angular (rad/s), polarizabilities in cm^3.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P

DEFAULT_POLE_GUARD = 1e-12


class MaterialError(ValueError):
    """Invalid material parameters or an unevaluable frequency."""


class ExtrapolationError(MaterialError):
    """Tabulated data queried outside its frequency grid."""


class PoleError(MaterialError):
    """Evaluation at (or numerically on top of) a pole."""


def _reflect(omega, positive):
    w = np.asarray(omega, dtype=float)
    val = positive(np.abs(w))
    val = np.where(w < 0, np.conj(val), val)
    if val.ndim == 0:
        return complex(val)
    return val


def _check_positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise MaterialError(f"{name} must be > 0, got {value!r}")


def _peaks_on_grid(freqs, g, max_peaks=8):
    """Local maxima of ``g`` on a grid as ``(center, width)`` pairs."""
    if len(freqs) < 3:
        return []
    inner = (g[1:-1] > g[:-2]) & (g[1:-1] >= g[2:])
    idx = np.nonzero(inner)[0] + 1
    if idx.size == 0:
        return []
    top = np.max(g[idx])
    if top <= 0:
        return []
    idx = idx[g[idx] >= 1e-3 * top]
    idx = idx[np.argsort(g[idx])[::-1][:max_peaks]]
    out = []
    for i in sorted(idx):
        # half-maximum width, walking outwards on the grid
        half = 0.5 * g[i]
        lo = i
        while lo > 0 and g[lo] > half:
            lo -= 1
        hi = i
        while hi < len(g) - 1 and g[hi] > half:
            hi += 1
        out.append((float(freqs[i]), float(max(freqs[hi] - freqs[lo], 1e-12 * freqs[i])) / 2))
    return out


def _strongest_kinks(freqs, g, limit):
    """Grid nodes where linear interpolation of ``g`` bends most.

    Strength is the slope jump times the squared local spacing, roughly the
    quadrature error a kink leaves inside an unsplit panel.
    """
    if limit <= 0 or len(freqs) < 3:
        return ()
    h = np.diff(freqs)
    slope = np.diff(g) / h
    strength = np.abs(np.diff(slope)) * (h[:-1] + h[1:]) ** 2
    idx = np.argsort(strength)[::-1][:limit]
    idx = idx[strength[idx] > 0]
    return tuple(sorted(float(freqs[i + 1]) for i in idx))


class ResponseModel:
    """Base class for ``eps(w)`` / ``mu(w)`` models."""

    def kinks(self, limit: int) -> tuple:
        """Positive frequencies where the surface response has interpolation kinks."""
        return ()

    def permittivity(self, omega):
        return _reflect(omega, self._positive)

    __call__ = permittivity

    def _positive(self, w):  # pragma: no cover - abstract
        raise NotImplementedError

    def frequency_scale(self) -> float:
        """Largest resonance/plasma frequency plus five damping widths."""
        raise NotImplementedError

    def peaks(self) -> list[tuple[float, float]]:
        """Positive-frequency absorption peaks of ``Im eps`` as (center, half-width)."""
        raise NotImplementedError

    def modes(self, target: float) -> list[tuple[float, float]]:
        """Complex solutions of ``eps(w) = target`` with ``Re w > 0``.

        Returned as ``(Re w, |Im w|)``.  ``target=-1`` gives the surface modes
        (poles of ``(eps-1)/(eps+1)``), ``target=-2`` the dipole modes of a
        small sphere.
        """
        raise NotImplementedError

    def coverage(self) -> tuple[float, float]:
        """Range of ``|omega|`` on which the model can be evaluated."""
        return (0.0, np.inf)


@dataclass(frozen=True)
class Drude(ResponseModel):
    """``eps = 1 - wp^2 / (w (w + i gamma))``."""

    plasma_frequency: float
    damping: float

    def __post_init__(self):
        _check_positive("plasma_frequency", self.plasma_frequency)
        _check_positive("damping", self.damping)

    def _chi(self, w):
        if np.any(w == 0):
            raise PoleError("Drude permittivity has a pole at omega = 0")
        return -self.plasma_frequency**2 / (w * (w + 1j * self.damping))

    def _positive(self, w):
        return 1.0 + self._chi(w)

    def _rational(self):
        # (numerator, denominator coefficients in increasing powers of w)
        return -self.plasma_frequency**2 + 0j, np.array([0.0, 1j * self.damping, 1.0])

    def frequency_scale(self):
        return self.plasma_frequency + 5 * self.damping

    def peaks(self):
        # Im eps decreases monotonically from w = 0
        return []

    def modes(self, target):
        return _rational_modes(1.0, [self._rational()], target)


@dataclass(frozen=True)
class Lorentz(ResponseModel):
    """``eps = eps_inf + wp^2 / (w0^2 - w^2 - i gamma w)``.

    ``oscillator_strength`` is the plasma-like frequency ``wp`` (rad/s).
    """

    resonance: float
    oscillator_strength: float
    damping: float
    eps_infinity: float = 1.0

    def __post_init__(self):
        _check_positive("resonance", self.resonance)
        _check_positive("damping", self.damping)
        if self.oscillator_strength < 0:
            raise MaterialError("oscillator_strength must be >= 0")

    def _chi(self, w):
        return self.oscillator_strength**2 / (self.resonance**2 - w * w - 1j * self.damping * w)

    def _positive(self, w):
        return self.eps_infinity + self._chi(w)

    def _rational(self):
        return (self.oscillator_strength**2 + 0j,
                np.array([self.resonance**2, -1j * self.damping, -1.0]))

    def frequency_scale(self):
        # the oscillator strength plays the role of a plasma frequency
        return max(self.resonance, self.oscillator_strength) + 5 * self.damping

    def peaks(self):
        if self.oscillator_strength == 0:
            return []
        return [(self.resonance, self.damping / 2)]

    def modes(self, target):
        if self.oscillator_strength == 0:
            return []
        return _rational_modes(self.eps_infinity, [self._rational()], target)


@dataclass(frozen=True)
class Composite(ResponseModel):
    """``eps_inf`` plus a sum of Drude and Lorentz susceptibilities.

    Each term contributes its susceptibility only; ``eps_infinity`` of
    individual :class:`Lorentz` terms is ignored.
    """

    terms: tuple
    eps_infinity: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise MaterialError("Composite needs at least one term")
        for t in self.terms:
            if not isinstance(t, (Drude, Lorentz)):
                raise MaterialError(f"Composite terms must be Drude or Lorentz, got {type(t).__name__}")

    def _positive(self, w):
        total = self.eps_infinity + 0j
        for t in self.terms:
            total = total + t._chi(w)
        return total

    def frequency_scale(self):
        return max(t.frequency_scale() for t in self.terms)

    def peaks(self):
        return [p for t in self.terms for p in t.peaks()]

    def modes(self, target):
        return _rational_modes(self.eps_infinity, [t._rational() for t in self.terms], target)


def _rational_modes(background, terms, target):
    """Roots of ``background + sum(n_i / d_i(w)) - target`` with Re w > 0."""
    dens = [d for _, d in terms]
    poly = (background - target) * _polyprod(dens)
    for i, (n, _) in enumerate(terms):
        poly = P.polyadd(poly, n * _polyprod(dens[:i] + dens[i + 1:]))
    poly = np.trim_zeros(np.asarray(poly, dtype=complex), "b")
    if poly.size < 2:
        return []
    roots = P.polyroots(poly)
    out = []
    for r in roots:
        if r.real > 0 and np.isfinite(r):
            out.append((float(r.real), float(abs(r.imag))))
    return sorted(out)


def _polyprod(polys):
    out = np.array([1.0 + 0j])
    for p in polys:
        out = P.polymul(out, p)
    return out


@dataclass(frozen=True)
class Tabulated(ResponseModel):
    """Linear-in-omega interpolation of tabulated complex values.

    The grid must be strictly increasing with ``frequencies[0] >= 0``.
    Queries outside the grid raise :class:`ExtrapolationError`.
    """

    frequencies: tuple
    values: tuple
    _f: np.ndarray = field(init=False, repr=False, compare=False)
    _re: np.ndarray = field(init=False, repr=False, compare=False)
    _im: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if f.ndim != 1 or f.shape != v.shape or f.size < 2:
            raise MaterialError("tabulated data needs matching 1-D grids with >= 2 points")
        if not np.all(np.isfinite(f)) or not np.all(np.isfinite(v)):
            raise MaterialError("tabulated data must be finite")
        if f[0] < 0:
            raise MaterialError("first tabulated frequency must be >= 0")
        if np.any(np.diff(f) <= 0):
            raise MaterialError("tabulated frequencies must be strictly increasing")
        if f[0] == 0 and v[0].imag != 0:
            raise MaterialError("value at omega = 0 must be real (reality symmetry)")
        object.__setattr__(self, "frequencies", tuple(float(x) for x in f))
        object.__setattr__(self, "values", tuple(complex(x) for x in v))
        object.__setattr__(self, "_f", f)
        object.__setattr__(self, "_re", v.real.copy())
        object.__setattr__(self, "_im", v.imag.copy())

    def _positive(self, w):
        f = self._f
        if np.any(w < f[0]) or np.any(w > f[-1]):
            bad = w[(w < f[0]) | (w > f[-1])]
            raise ExtrapolationError(
                f"omega = {float(np.ravel(bad)[0]):.6g} rad/s outside tabulated range "
                f"[{f[0]:.6g}, {f[-1]:.6g}]")
        return np.interp(w, f, self._re) + 1j * np.interp(w, f, self._im)

    def coverage(self):
        return (float(self._f[0]), float(self._f[-1]))

    def frequency_scale(self):
        pk = self.peaks()
        if not pk:
            return float(self._f[-1])
        return max(c + 10 * hw for c, hw in pk)

    def peaks(self):
        return _peaks_on_grid(self._f, self._im)

    def kinks(self, limit, transform=None):
        v = self._re + 1j * self._im
        if transform is None:
            transform = lambda e: (e - 1) / (e + 1)  # noqa: E731
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.nan_to_num(transform(v), nan=0.0, posinf=0.0, neginf=0.0)
        return _strongest_kinks(self._f, g, limit)

    def modes(self, target):
        v = self._re + 1j * self._im - target
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.nan_to_num(-np.imag(1.0 / v), nan=0.0, posinf=0.0, neginf=0.0)
        return _peaks_on_grid(self._f, g)


# --------------------------------------------------------------------------
# particle polarizability


class PolarizabilityModel:
    """Base class for particle dipole polarizabilities (cm^3)."""

    def polarizability(self, omega):
        return _reflect(omega, self._positive)

    __call__ = polarizability

    def _positive(self, w):  # pragma: no cover - abstract
        raise NotImplementedError

    def frequency_scale(self) -> float:
        raise NotImplementedError

    def peaks(self) -> list[tuple[float, float]]:
        """Positive-frequency peaks of ``Im alpha`` as (center, half-width)."""
        raise NotImplementedError

    def coverage(self) -> tuple[float, float]:
        return (0.0, np.inf)

    def kinks(self, limit: int) -> tuple:
        """Positive frequencies where ``alpha`` has interpolation kinks."""
        return ()


@dataclass(frozen=True)
class ClausiusMossotti(PolarizabilityModel):
    """Small sphere: ``alpha = R^3 (eps - 1) / (eps + 2)``."""

    radius: float
    bulk: ResponseModel
    pole_guard: float = DEFAULT_POLE_GUARD

    def __post_init__(self):
        _check_positive("radius", self.radius)
        if not isinstance(self.bulk, ResponseModel):
            raise MaterialError("bulk must be a ResponseModel")

    def _positive(self, w):
        eps = self.bulk._positive(w)
        den = eps + 2.0
        near = np.abs(den) < self.pole_guard
        if np.any(near):
            bad = float(np.ravel(np.broadcast_to(w, near.shape)[near])[0])
            raise PoleError(f"|eps + 2| below pole guard at omega = {bad:.6g} rad/s")
        return self.radius**3 * (eps - 1.0) / den

    def frequency_scale(self):
        return self.bulk.frequency_scale()

    def peaks(self):
        return self.bulk.modes(-2.0)

    def kinks(self, limit):
        if isinstance(self.bulk, Tabulated):
            return self.bulk.kinks(limit, lambda e: (e - 1) / (e + 2))
        return ()

    def coverage(self):
        return self.bulk.coverage()


@dataclass(frozen=True)
class DirectOscillator(PolarizabilityModel):
    """``alpha = alpha0 w0^2 / (w0^2 - w^2 - i gamma w)``."""

    static_polarizability: float
    resonance: float
    damping: float

    def __post_init__(self):
        _check_positive("static_polarizability", self.static_polarizability)
        _check_positive("resonance", self.resonance)
        _check_positive("damping", self.damping)

    def _positive(self, w):
        w0sq = self.resonance**2
        return self.static_polarizability * w0sq / (w0sq - w * w - 1j * self.damping * w)

    def frequency_scale(self):
        return self.resonance + 5 * self.damping

    def peaks(self):
        return [(self.resonance, self.damping / 2)]


@dataclass(frozen=True)
class TabulatedPolarizability(PolarizabilityModel):
    """Tabulated ``alpha(w)`` in cm^3, interpolated like :class:`Tabulated`."""

    frequencies: tuple
    values: tuple
    _table: Tabulated = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        table = Tabulated(self.frequencies, self.values)
        object.__setattr__(self, "frequencies", table.frequencies)
        object.__setattr__(self, "values", table.values)
        object.__setattr__(self, "_table", table)

    def _positive(self, w):
        return self._table._positive(w)

    def coverage(self):
        return self._table.coverage()

    def frequency_scale(self):
        return self._table.frequency_scale()

    def peaks(self):
        return self._table.peaks()

    def kinks(self, limit):
        return self._table.kinks(limit, lambda a: a)


AnyModel = Union[ResponseModel, PolarizabilityModel]


# --------------------------------------------------------------------------
# operations


def eval_permittivity(model: ResponseModel, omega):
    """Complex permittivity (or permeability) at angular frequency ``omega``."""
    return model.permittivity(omega)


def surface_response(model: ResponseModel, omega, pole_guard: float = DEFAULT_POLE_GUARD):
    """Nonretarded surface response ``(eps - 1) / (eps + 1)``.

    Raises :class:`PoleError` where ``|eps + 1| < pole_guard``.
    """
    eps = np.asarray(model.permittivity(omega))
    den = eps + 1.0
    near = np.abs(den) < pole_guard
    if np.any(near):
        w = np.broadcast_to(np.asarray(omega, dtype=float), near.shape)
        raise PoleError(f"|eps + 1| below pole guard at omega = {float(w[near][0]):.6g} rad/s")
    out = (eps - 1.0) / den
    return complex(out) if out.ndim == 0 else out


def polarizability(model: PolarizabilityModel, omega):
    """Particle dipole polarizability in cm^3."""
    return model.polarizability(omega)


def check_passivity(model: AnyModel, omega_grid=None) -> list[float]:
    """Return the grid frequencies where ``omega * Im f(omega) < 0``.

    With ``omega_grid=None`` tabulated models are checked on their own grid
    and parametric models on a 200-point log grid around their scale.
    """
    if omega_grid is None:
        if isinstance(model, (Tabulated, TabulatedPolarizability)):
            omega_grid = np.asarray(model.frequencies)
            omega_grid = omega_grid[omega_grid > 0]
        else:
            s = model.frequency_scale()
            omega_grid = np.geomspace(1e-4 * s, 1e2 * s, 200)
    grid = np.asarray(omega_grid, dtype=float)
    vals = np.asarray(model(grid))
    bad = grid * vals.imag < 0
    return [float(x) for x in grid[bad]]


# --------------------------------------------------------------------------
# tabulated input


def _read_columns(path: Path, ncols: int) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for line in csv.reader(fh):
            if not line or line[0].lstrip().startswith("#"):
                continue
            try:
                row = [float(x) for x in line]
            except ValueError:
                if rows:
                    raise MaterialError(f"{path}: non-numeric row {line!r}")
                continue  # header
            if len(row) != ncols:
                raise MaterialError(f"{path}: expected {ncols} columns, got {len(row)}")
            rows.append(row)
    if not rows:
        raise MaterialError(f"{path}: no data rows")
    return np.asarray(rows)


def load_tabulated(path, imag_path=None, kind: str = "permittivity"):
    """Load tabulated data from CSV.

    Either one three-column file ``omega, Re, Im`` or two two-column files
    ``omega, Re`` and ``omega, Im`` on the same grid.  ``kind`` selects
    :class:`Tabulated` (``"permittivity"``) or
    :class:`TabulatedPolarizability` (``"polarizability"``, values in cm^3).
    """
    if imag_path is None:
        data = _read_columns(Path(path), 3)
        freqs, re, im = data[:, 0], data[:, 1], data[:, 2]
    else:
        a = _read_columns(Path(path), 2)
        b = _read_columns(Path(imag_path), 2)
        if a.shape != b.shape or np.any(a[:, 0] != b[:, 0]):
            raise MaterialError("real and imaginary files must share the frequency grid")
        freqs, re, im = a[:, 0], a[:, 1], b[:, 1]
    values = re + 1j * im
    if kind == "permittivity":
        return Tabulated(tuple(freqs), tuple(values))
    if kind == "polarizability":
        return TabulatedPolarizability(tuple(freqs), tuple(values))
    raise ValueError(f"unknown kind {kind!r}")


def tabulate(model: AnyModel, frequencies: Sequence[float]):
    """Sample a model on a grid, returning the matching tabulated model."""
    f = np.asarray(frequencies, dtype=float)
    v = np.asarray(model(f), dtype=complex)
    if f[0] == 0:
        v = v.copy()
        v[0] = v[0].real
    if isinstance(model, PolarizabilityModel):
        return TabulatedPolarizability(tuple(f), tuple(v))
    return Tabulated(tuple(f), tuple(v))


# Drude fits from Ordal et al., Appl. Opt. 24, 4493 (1985); SiC phonon
# parameters from Spitzer et al., Phys. Rev. 113, 127 (1959).
PRESETS = {
    "Au": lambda: Drude(plasma_frequency=1.372e16, damping=4.05e13),
    "Ag": lambda: Drude(plasma_frequency=1.366e16, damping=2.73e13),
    "SiC": lambda: Lorentz(resonance=1.494e14,
                           oscillator_strength=float(np.sqrt(6.7 * (1.825e14**2 - 1.494e14**2))),
                           damping=8.97e11, eps_infinity=6.7),
}


def preset(name: str) -> ResponseModel:
    try:
        return PRESETS[name]()
    except KeyError:
        raise MaterialError(f"unknown material preset {name!r}; known: {sorted(PRESETS)}") from None
