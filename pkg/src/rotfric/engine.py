"""Scenario assembly, observable dispatch, validity warnings and sweeps."""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from . import spectra
from .constants import C_LIGHT, HBAR, KB
from .materials import (PolarizabilityModel, ResponseModel, Tabulated, TabulatedPolarizability,
                        check_passivity)
from .quadrature import (KINK_BREAKPOINTS, IntegralResult, Kernel, QuadratureSpec,
                         integrate_observable, material_scales)
from .spectra import Axis, KinematicState, ThermalState

OBSERVABLE_NAMES = {"Fx": "F_x", "Fz": "F_z", "Q": "Q_dot", "M": "M"}
WEAK_RATIO = 0.1
STRONG_RATIO = 1.0


class Channels(str, enum.Enum):
    ELECTRIC = "electric"
    MAGNETIC = "magnetic"
    BOTH = "both"


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Particle:
    electric: PolarizabilityModel
    radius: float
    magnetic: Optional[PolarizabilityModel] = None


@dataclass(frozen=True)
class Surface:
    electric: ResponseModel
    magnetic: Optional[ResponseModel] = None


@dataclass(frozen=True)
class Scenario:
    particle: Particle
    surface: Surface
    kinematics: KinematicState
    thermal: ThermalState
    configuration: Axis = Axis.X
    channels: Channels = Channels.ELECTRIC

    def __post_init__(self):
        object.__setattr__(self, "configuration", Axis(self.configuration))
        object.__setattr__(self, "channels", Channels(self.channels))
        if not (math.isfinite(self.particle.radius) and self.particle.radius > 0):
            raise ScenarioError("particle radius must be > 0")
        if self.channels is not Channels.ELECTRIC:
            if self.particle.magnetic is None or self.surface.magnetic is None:
                raise ScenarioError("magnetic channel requires both a magnetic polarizability "
                                    "and a surface permeability")
        for model in self._models():
            if isinstance(model, (Tabulated, TabulatedPolarizability)):
                bad = check_passivity(model)
                if bad:
                    raise ScenarioError(f"tabulated model violates passivity at omega = {bad[0]:.6g}")

    def _models(self):
        out = [self.particle.electric, self.surface.electric]
        out += [m for m in (self.particle.magnetic, self.surface.magnetic) if m is not None]
        return out

    def channel_pairs(self):
        """``(name, surface model, particle model)`` for each requested channel."""
        pairs = []
        if self.channels in (Channels.ELECTRIC, Channels.BOTH):
            pairs.append(("electric", self.surface.electric, self.particle.electric))
        if self.channels in (Channels.MAGNETIC, Channels.BOTH):
            pairs.append(("magnetic", self.surface.magnetic, self.particle.magnetic))
        return pairs

    def replace(self, **changes) -> "Scenario":
        """Copy with kinematic/thermal parameters (z0, V, Omega, T1, T2) or fields changed."""
        kin = {k: changes.pop(k) for k in ("z0", "V", "Omega") if k in changes}
        th = {k: changes.pop(k) for k in ("T1", "T2") if k in changes}
        if kin:
            changes["kinematics"] = dataclasses.replace(self.kinematics, **kin)
        if th:
            changes["thermal"] = dataclasses.replace(self.thermal, **th)
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ObservableSet:
    F_x: IntegralResult  # dyn
    F_z: IntegralResult  # dyn
    Q_dot: IntegralResult  # erg/s
    M: IntegralResult  # dyn cm, along the rotation axis

    UNITS = {"F_x": "dyn", "F_z": "dyn", "Q_dot": "erg/s", "M": "dyn*cm"}

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.items().values())

    def items(self) -> dict:
        return {"F_x": self.F_x, "F_z": self.F_z, "Q_dot": self.Q_dot, "M": self.M}


def bind_kernel(observable: str, config: Axis, kin: KinematicState, th: ThermalState,
                surface: ResponseModel, particle: PolarizabilityModel) -> Kernel:
    """Bind one of the four integrands to a scenario for the integrator."""
    spectra.integrand_for(observable)  # validate the name early
    config = Axis(config)

    def func(omega, k, phi):
        return spectra.integrand_for(observable)(omega, k, phi, config, kin, th, surface, particle)

    return Kernel(
        func=func, z0=kin.z0, V=kin.V, Omega=kin.Omega, T1=th.T1, T2=th.T2,
        surface_features=tuple(surface.modes(-1.0)) + tuple(surface.peaks()),
        particle_features=tuple(particle.peaks()),
        scales=material_scales(surface, particle),
        omega_limits=(surface.coverage()[1], particle.coverage()[1]),
        name=observable,
        surface_kinks=surface.kinks(KINK_BREAKPOINTS),
        particle_kinks=particle.kinks(KINK_BREAKPOINTS),
    )


def _combine(results: Sequence[IntegralResult]) -> IntegralResult:
    if len(results) == 1:
        return results[0]
    return IntegralResult(
        value=sum(r.value for r in results),
        error_estimate=math.sqrt(sum(r.error_estimate**2 for r in results)),
        evaluation_count=sum(r.evaluation_count for r in results),
        converged=all(r.converged for r in results),
        abs_integral=sum(r.abs_integral for r in results),
    )


def compute_observable(scenario: Scenario, observable: str,
                       spec: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """One observable (``"Fx"``, ``"Fz"``, ``"Q"`` or ``"M"``) summed over channels."""
    results = []
    for _, surface, particle in scenario.channel_pairs():
        kernel = bind_kernel(observable, scenario.configuration, scenario.kinematics,
                             scenario.thermal, surface, particle)
        results.append(integrate_observable(kernel, spec))
    return _combine(results)


def compute(scenario: Scenario, spec: QuadratureSpec = QuadratureSpec()) -> ObservableSet:
    """All four observables; channels are integrated separately and summed."""
    return ObservableSet(**{OBSERVABLE_NAMES[o]: compute_observable(scenario, o, spec)
                            for o in spectra.OBSERVABLES})


@dataclass(frozen=True)
class PointlikeWarning:
    condition: str
    ratio: float
    level: str  # "weak" (ratio > 0.1) or "strong" (ratio > 1)

    def __str__(self):
        return (f"point-dipole approximation: {self.condition} violated: "
                f"ratio {self.ratio:.3g} ({self.level})")


def pointlike_ratios(scenario: Scenario) -> dict:
    """Ratios of the particle radius to each length it must be small against."""
    R = scenario.particle.radius
    kin, th = scenario.kinematics, scenario.thermal
    ratios = {"R << z0": R / kin.z0}
    resonances = []
    for m in scenario._models():
        resonances.append(m.frequency_scale())
        resonances += [c for c, _ in m.peaks()]
    w0 = max(resonances)
    ratios["R << 2 pi c / omega0"] = R * w0 / (2 * math.pi * C_LIGHT)
    ratios["R << 2 pi c / Omega"] = R * abs(kin.Omega) / (2 * math.pi * C_LIGHT)
    for name, T in (("T1", th.T1), ("T2", th.T2)):
        ratios[f"R << 2 pi hbar c / kB {name}"] = R * KB * T / (2 * math.pi * HBAR * C_LIGHT)
    return ratios


def validate_pointlike(scenario: Scenario) -> list[PointlikeWarning]:
    """Warnings for each point-dipole condition with ratio above 0.1."""
    out = []
    for cond, ratio in pointlike_ratios(scenario).items():
        if ratio > STRONG_RATIO:
            out.append(PointlikeWarning(cond, ratio, "strong"))
        elif ratio > WEAK_RATIO:
            out.append(PointlikeWarning(cond, ratio, "weak"))
    return out


SWEEP_PARAMETERS = ("z0", "V", "Omega", "T1", "T2")


@dataclass(frozen=True)
class SweepRow:
    value: float
    observables: ObservableSet

    @property
    def converged(self) -> bool:
        return self.observables.converged


def sweep(template: Scenario, parameter: str, values: Sequence[float],
          spec: QuadratureSpec = QuadratureSpec()) -> list[SweepRow]:
    """Compute a row per parameter value, in the given order.

    Every scenario is built before any integration, so one invalid value
    rejects the whole sweep.  Unconverged rows are kept and flagged.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ScenarioError(f"unknown sweep parameter {parameter!r}")
    values = [float(v) for v in values]
    if not values:
        raise ScenarioError("sweep needs at least one value")
    try:
        scenarios = [template.replace(**{parameter: v}) for v in values]
    except ValueError as exc:
        raise ScenarioError(f"invalid sweep value: {exc}") from exc
    return [SweepRow(v, compute(s, spec)) for v, s in zip(values, scenarios)]
