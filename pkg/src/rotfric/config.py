"""JSON run configuration: strict schema, SI input, conversion to a CGS scenario.

Lengths are metres, speeds m/s, angular frequencies rad/s, temperatures K and
polarizabilities m^3.  ``quadrature.abs_tol`` is in CGS observable units.
Tabulated ``file`` paths are resolved relative to the config file.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema

from . import materials as mat
from .constants import M3_TO_CM3, M_TO_CM
from .engine import Channels, Particle, Scenario, Surface
from .quadrature import QuadratureSpec
from .spectra import Axis, KinematicState, ThermalState

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_DRUDE = _obj({"model": {"const": "drude"}, "plasma_frequency": _POS, "damping": _POS},
              ["model", "plasma_frequency", "damping"])
_LORENTZ = _obj({"model": {"const": "lorentz"}, "resonance": _POS, "oscillator_strength": _NONNEG,
                 "damping": _POS, "eps_infinity": _NUM},
                ["model", "resonance", "oscillator_strength", "damping"])
_NUMLIST = {"type": "array", "items": _NUM, "minItems": 2}
_TAB_FILE = _obj({"model": {"const": "tabulated"}, "file": {"type": "string"},
                  "imag_file": {"type": "string"}}, ["model", "file"])
_TAB_INLINE = _obj({"model": {"const": "tabulated"}, "frequencies": _NUMLIST,
                    "real": _NUMLIST, "imag": _NUMLIST},
                   ["model", "frequencies", "real", "imag"])
_RESPONSE = {"oneOf": [
    _DRUDE, _LORENTZ,
    _obj({"model": {"const": "composite"}, "eps_infinity": _NUM,
          "terms": {"type": "array", "items": {"oneOf": [_DRUDE, _LORENTZ]}, "minItems": 1}},
         ["model", "terms"]),
    _TAB_FILE, _TAB_INLINE,
    _obj({"model": {"const": "preset"}, "name": {"enum": sorted(mat.PRESETS)}}, ["model", "name"]),
]}
_POLARIZABILITY = {"oneOf": [
    _obj({"model": {"const": "clausius_mossotti"}, "bulk": _RESPONSE, "radius": _POS},
         ["model", "bulk"]),
    _obj({"model": {"const": "oscillator"}, "static_polarizability": _POS, "resonance": _POS,
          "damping": _POS}, ["model", "static_polarizability", "resonance", "damping"]),
    _TAB_FILE, _TAB_INLINE,
]}

SCHEMA = _obj({
    "scenario": _obj({
        "configuration": {"enum": ["x", "y", "z"]},
        "channels": {"enum": ["electric", "magnetic", "both"]},
        "kinematics": _obj({"z0": _POS, "V": _NUM, "Omega": _NUM}, ["z0"]),
        "thermal": _obj({"T1": _NONNEG, "T2": _NONNEG}, ["T1", "T2"]),
        "particle": _obj({"radius": _POS, "electric": _POLARIZABILITY,
                          "magnetic": _POLARIZABILITY}, ["radius", "electric"]),
        "surface": _obj({"electric": _RESPONSE, "magnetic": _RESPONSE}, ["electric"]),
    }, ["configuration", "kinematics", "thermal", "particle", "surface"]),
    "quadrature": _obj({
        "rel_tol": _NONNEG, "abs_tol": _NONNEG, "u_max": _NUM, "window_factor": _NUM,
        "max_subdivisions": {"type": "integer"}, "initial_angular_nodes": {"type": "integer"},
        "max_angular_nodes": {"type": "integer"},
    }),
    "output": _obj({"path": {"type": ["string", "null"]}, "units": {"enum": ["SI", "CGS"]},
                    "precision": {"type": "integer", "minimum": 1, "maximum": 17}}),
}, ["scenario"])


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OutputOptions:
    path: Optional[str] = None
    units: str = "SI"
    precision: int = 10


@dataclass(frozen=True)
class RunConfig:
    """A validated configuration; ``scenario`` keeps the SI JSON block."""

    scenario: dict
    quadrature: QuadratureSpec = QuadratureSpec()
    output: OutputOptions = OutputOptions()
    base_dir: Path = field(default=Path("."), compare=False)

    def to_dict(self) -> dict:
        q = self.quadrature
        return {
            "scenario": copy.deepcopy(self.scenario),
            "quadrature": {"rel_tol": q.rel_tol, "abs_tol": q.abs_tol, "u_max": q.u_max,
                           "window_factor": q.window_factor,
                           "max_subdivisions": q.max_subdivisions,
                           "initial_angular_nodes": q.initial_angular_nodes,
                           "max_angular_nodes": q.max_angular_nodes},
            "output": {"path": self.output.path, "units": self.output.units,
                       "precision": self.output.precision},
        }

    def build_scenario(self, **si_overrides) -> Scenario:
        """CGS :class:`Scenario`; overrides are SI values for z0, V, Omega, T1, T2."""
        sc = copy.deepcopy(self.scenario)
        for key, value in si_overrides.items():
            block = "thermal" if key in ("T1", "T2") else "kinematics"
            sc[block][key] = value
        return _scenario_from_si(sc, self.base_dir)


def parse_config(data: dict, base_dir=".") -> RunConfig:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None
    try:
        quad = QuadratureSpec(**data.get("quadrature", {}))
        output = OutputOptions(**data.get("output", {}))
        cfg = RunConfig(copy.deepcopy(data["scenario"]), quad, output, Path(base_dir))
        cfg.build_scenario()
    except (ValueError, OSError) as exc:
        raise ConfigError(f"config error: {exc}") from exc
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(data, path.parent)


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2)


def _tabulated(spec, base_dir, kind, value_scale):
    if "file" in spec:
        imag = spec.get("imag_file")
        model = mat.load_tabulated(base_dir / spec["file"],
                                   None if imag is None else base_dir / imag, kind)
        if value_scale == 1.0:
            return model
        freqs, vals = model.frequencies, model.values
    else:
        if not len(spec["frequencies"]) == len(spec["real"]) == len(spec["imag"]):
            raise ConfigError("tabulated frequencies/real/imag must have equal lengths")
        freqs = spec["frequencies"]
        vals = [complex(r, i) for r, i in zip(spec["real"], spec["imag"])]
    vals = tuple(value_scale * complex(v) for v in vals)
    if kind == "polarizability":
        return mat.TabulatedPolarizability(tuple(freqs), vals)
    return mat.Tabulated(tuple(freqs), vals)


def _response(spec, base_dir) -> mat.ResponseModel:
    m = spec["model"]
    if m == "drude":
        return mat.Drude(spec["plasma_frequency"], spec["damping"])
    if m == "lorentz":
        return mat.Lorentz(spec["resonance"], spec["oscillator_strength"], spec["damping"],
                           spec.get("eps_infinity", 1.0))
    if m == "composite":
        return mat.Composite(tuple(_response(t, base_dir) for t in spec["terms"]),
                             spec.get("eps_infinity", 1.0))
    if m == "preset":
        return mat.preset(spec["name"])
    return _tabulated(spec, base_dir, "permittivity", 1.0)


def _polarizability(spec, base_dir, radius_cm) -> mat.PolarizabilityModel:
    m = spec["model"]
    if m == "clausius_mossotti":
        r = spec["radius"] * M_TO_CM if "radius" in spec else radius_cm
        return mat.ClausiusMossotti(r, _response(spec["bulk"], base_dir))
    if m == "oscillator":
        return mat.DirectOscillator(spec["static_polarizability"] * M3_TO_CM3,
                                    spec["resonance"], spec["damping"])
    return _tabulated(spec, base_dir, "polarizability", M3_TO_CM3)


def _scenario_from_si(sc, base_dir) -> Scenario:
    radius = sc["particle"]["radius"] * M_TO_CM
    p_mag = sc["particle"].get("magnetic")
    s_mag = sc["surface"].get("magnetic")
    kin = sc["kinematics"]
    th = sc["thermal"]
    return Scenario(
        particle=Particle(_polarizability(sc["particle"]["electric"], base_dir, radius), radius,
                          None if p_mag is None else _polarizability(p_mag, base_dir, radius)),
        surface=Surface(_response(sc["surface"]["electric"], base_dir),
                        None if s_mag is None else _response(s_mag, base_dir)),
        kinematics=KinematicState(V=kin.get("V", 0.0) * M_TO_CM, Omega=kin.get("Omega", 0.0),
                                  z0=kin["z0"] * M_TO_CM),
        thermal=ThermalState(th["T1"], th["T2"]),
        configuration=Axis(sc["configuration"]),
        channels=Channels(sc.get("channels", "electric")),
    )
