"""Fluctuation-induced forces, heating rate and torque on a small particle that
moves parallel to a flat surface while rotating, in the nonretarded limit.

Internal units are Gaussian CGS; SI conversion happens only in the CLI.
"""
from .engine import (Channels, ObservableSet, Particle, PointlikeWarning, Scenario,
                     ScenarioError, Surface, compute, compute_observable, sweep,
                     validate_pointlike)
from .materials import (ClausiusMossotti, Composite, DirectOscillator, Drude, Lorentz, Tabulated,
                        TabulatedPolarizability, eval_permittivity, polarizability,
                        surface_response)
from .quadrature import (IntegralResult, OracleGrid, QuadratureSpec, integrate_observable,
                         oracle_integrate)
from .spectra import Axis, KinematicState, ThermalState, fdt_dipole_spectrum

__version__ = "0.1.0"

__all__ = [
    "Axis", "Channels", "ClausiusMossotti", "Composite", "DirectOscillator", "Drude",
    "IntegralResult", "KinematicState", "Lorentz", "ObservableSet", "OracleGrid", "Particle",
    "PointlikeWarning", "QuadratureSpec", "Scenario", "ScenarioError", "Surface", "Tabulated",
    "TabulatedPolarizability", "ThermalState", "compute", "compute_observable",
    "eval_permittivity", "fdt_dipole_spectrum", "integrate_observable", "oracle_integrate",
    "polarizability", "surface_response", "sweep", "validate_pointlike",
]
