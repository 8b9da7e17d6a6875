import copy
import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from rotfric import cli
from rotfric.config import ConfigError, dump_config, load_config, parse_config
from rotfric.constants import DYN_CM_TO_N_M, DYN_TO_N, ERG_S_TO_W

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

BASE = {
    "scenario": {
        "configuration": "x",
        "kinematics": {"z0": 1e-8, "V": 1e4, "Omega": 0.0},
        "thermal": {"T1": 300.0, "T2": 300.0},
        "particle": {"radius": 5e-10,
                     "electric": {"model": "oscillator", "static_polarizability": 1e-27,
                                  "resonance": 1e14, "damping": 1.5e13}},
        "surface": {"electric": {"model": "lorentz", "resonance": 1e14,
                                 "oscillator_strength": 1.2e14, "damping": 2e13,
                                 "eps_infinity": 2.0}},
    },
    "quadrature": {"rel_tol": 1e-6},
    "output": {"units": "SI", "precision": 17},
}


def write_config(tmp_path, data=None, name="run.json", **edits):
    data = copy.deepcopy(BASE if data is None else data)
    for dotted, value in edits.items():
        *head, last = dotted.split("__")
        node = data
        for key in head:
            node = node.setdefault(key, {})
        node[last] = value
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.name)
def test_example_configs_parse(path):
    cfg = load_config(path)
    assert cfg.build_scenario().configuration.value == path.stem[-1]


def test_example_configs_cover_every_axis():
    axes = {load_config(p).scenario["configuration"] for p in CONFIG_DIR.glob("*.json")}
    assert axes == {"x", "y", "z"}


def test_round_trip_through_dict(tmp_path):
    cfg = load_config(CONFIG_DIR / "config_y.json")
    again = parse_config(json.loads(dump_config(cfg)), cfg.base_dir)
    assert again == cfg
    assert again.build_scenario() == cfg.build_scenario()


def test_si_input_converted_to_cgs(tmp_path):
    sc = load_config(write_config(tmp_path)).build_scenario()
    assert sc.kinematics.z0 == pytest.approx(1e-6, rel=1e-15)
    assert sc.kinematics.V == pytest.approx(1e6, rel=1e-15)
    assert sc.particle.radius == pytest.approx(5e-8, rel=1e-15)
    assert sc.particle.electric.static_polarizability == pytest.approx(1e-21, rel=1e-15)


@pytest.mark.parametrize("edits", [
    {"scenario__kinematics__speed": 3.0},
    {"scenario__configuration": "w"},
    {"scenario__kinematics__z0": -1e-8},
    {"scenario__thermal__T1": -3.0},
    {"output__units": "imperial"},
    {"quadrature__window_factor": 2.0},
    {"scenario__channels": "magnetic"},
    {"scenario__surface__electric": {"model": "drude", "plasma_frequency": 1e14}},
])
def test_config_errors_exit_1(tmp_path, capsys, edits):
    path = write_config(tmp_path, **edits)
    with pytest.raises(ConfigError):
        load_config(path)
    code, out, err = run(["compute", path], capsys)
    assert code == cli.EXIT_CONFIG and out == "" and "error" in err


def test_unreadable_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["compute", bad], capsys)[0] == cli.EXIT_CONFIG
    assert run(["compute", tmp_path / "missing.json"], capsys)[0] == cli.EXIT_CONFIG


def test_tabulated_file_relative_to_config(tmp_path):
    (tmp_path / "eps.csv").write_text("0,3,0\n1e14,2.5,0.5\n1e17,2,1\n")
    path = write_config(tmp_path, scenario__surface__electric={"model": "tabulated",
                                                                "file": "eps.csv"})
    model = load_config(path).build_scenario().surface.electric
    assert model(1e14) == pytest.approx(2.5 + 0.5j)


def test_compute_si_and_cgs_differ_by_exact_factors(tmp_path, capsys):
    si_path = tmp_path / "si.csv"
    cgs_path = tmp_path / "cgs.csv"
    assert run(["compute", write_config(tmp_path), "-o", si_path], capsys)[0] == 0
    cfg = write_config(tmp_path, name="cgs.json", output__units="CGS")
    assert run(["compute", cfg, "-o", cgs_path], capsys)[0] == 0
    si, cgs = rows(si_path.read_text()), rows(cgs_path.read_text())
    assert si_path.read_text().splitlines()[0] == cli.COMPUTE_HEADER
    factors = {"F_x": DYN_TO_N, "F_z": DYN_TO_N, "Q_dot": ERG_S_TO_W, "M": DYN_CM_TO_N_M}
    assert [r["observable"] for r in si] == list(factors)
    assert [r["unit"] for r in si] == ["N", "N", "W", "N*m"]
    assert [r["unit"] for r in cgs] == ["dyn", "dyn", "erg/s", "dyn*cm"]
    for a, b in zip(si, cgs):
        f = factors[a["observable"]]
        assert float(a["value"]) == float(b["value"]) * f
        assert float(a["error"]) == float(b["error"]) * f
        assert a["converged"] == b["converged"] == "true"


def test_compute_to_stdout_and_output_path(tmp_path, capsys):
    code, out, _ = run(["compute", write_config(tmp_path)], capsys)
    assert code == 0 and out.startswith(cli.COMPUTE_HEADER + "\n") and len(rows(out)) == 4
    target = tmp_path / "from_config.csv"
    code, out, _ = run(["compute", write_config(tmp_path, output__path=str(target))], capsys)
    assert code == 0 and out == "" and len(rows(target.read_text())) == 4


def test_large_radius_warns(tmp_path, capsys):
    path = write_config(tmp_path, scenario__particle__radius=1e-8)  # R = z0
    code, out, err = run(["compute", path], capsys)
    assert code == 0
    assert "point-dipole" in err and "R << z0" in err
    assert len(rows(out)) == 4


def test_nonconvergence_exit_2(tmp_path, capsys):
    path = write_config(tmp_path, quadrature={"rel_tol": 1e-13, "max_subdivisions": 1,
                                              "max_angular_nodes": 16})
    code, out, _ = run(["compute", path], capsys)
    assert code == cli.EXIT_NONCONVERGED
    assert "false" in [r["converged"] for r in rows(out)]


def test_sweep_two_points(tmp_path, capsys):
    code, out, _ = run(["sweep", write_config(tmp_path), "--param", "T1", "--from", 400,
                        "--to", 200, "--points", 2], capsys)
    assert code == 0
    assert out.splitlines()[0] == cli.SWEEP_HEADER
    table = rows(out)
    assert [float(r["param"]) for r in table] == [200.0, 400.0]
    assert all(r["converged"] == "true" for r in table)


def test_sweep_distance_slope(tmp_path, capsys):
    path = write_config(tmp_path, scenario__kinematics={"z0": 1e-8, "V": 0.0, "Omega": 2e13},
                        scenario__thermal={"T1": 400.0, "T2": 200.0})
    code, out, _ = run(["sweep", path, "--param", "z0", "--from", 1e-8, "--to", 1e-7,
                        "--points", 3, "--log"], capsys)
    assert code == 0
    table = rows(out)
    z = np.array([float(r["param"]) for r in table])
    assert z == pytest.approx([1e-8, math.sqrt(1e-15), 1e-7], rel=1e-12)
    fz = np.array([float(r["F_z"]) for r in table])
    slope = np.diff(np.log(np.abs(fz))) / np.diff(np.log(z))
    assert slope == pytest.approx([-4, -4], abs=1e-4)


def test_sweep_velocity_antisymmetry(tmp_path, capsys):
    code, out, _ = run(["sweep", write_config(tmp_path), "--param", "V", "--from", -2e4,
                        "--to", 2e4, "--points", 3, "--linear"], capsys)
    assert code == 0
    table = rows(out)
    fx = [float(r["F_x"]) for r in table]
    err = [float(r["F_x_err"]) for r in table]
    assert [float(r["param"]) for r in table] == [-2e4, 0.0, 2e4]
    assert abs(fx[0] + fx[2]) <= 2 * (err[0] + err[2])
    assert fx[2] < 0 < fx[0]


@pytest.mark.parametrize("extra", [
    ["--from", -1e-8, "--to", 1e-7, "--points", 3, "--log"],
    ["--from", 0.0, "--to", 1e-7, "--points", 3, "--log"],
    ["--from", 1e-8, "--to", 1e-7, "--points", 1],
    ["--from", 1e-8, "--to", 1e-8, "--points", 3],
    ["--from", -1e-8, "--to", 1e-8, "--points", 3],
    ["--from", 1e-8, "--to", 1e-7, "--points", 3, "--log", "--linear"],
])
def test_sweep_bad_ranges_exit_1(tmp_path, capsys, extra):
    code, out, err = run(["sweep", write_config(tmp_path), "--param", "z0", *extra], capsys)
    assert code == cli.EXIT_CONFIG and out == ""


def test_sweep_unknown_parameter(tmp_path, capsys):
    code, _, _ = run(["sweep", write_config(tmp_path), "--param", "radius", "--from", 1,
                      "--to", 2, "--points", 2], capsys)
    assert code == cli.EXIT_CONFIG


def test_sweep_values():
    assert cli.sweep_values(3.0, 1.0, 3, False).tolist() == [1.0, 2.0, 3.0]
    assert cli.sweep_values(100.0, 1.0, 3, True) == pytest.approx([1.0, 10.0, 100.0])
    for args in [(1.0, 2.0, 1, False), (1.0, math.inf, 3, False), (0.0, 1.0, 3, True)]:
        with pytest.raises(ValueError):
            cli.sweep_values(*args)


@pytest.mark.parametrize("argv", [["--help"], ["compute", "--help"], ["sweep", "--help"],
                                  ["selfcheck", "--help"]])
def test_help(argv, capsys):
    code, out, _ = run(argv, capsys)
    assert code == 0 and "usage: rotfric" in out


def test_no_command_is_usage_error(capsys):
    assert run([], capsys)[0] == cli.EXIT_CONFIG


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rotfric", "--help"], capture_output=True,
                          text=True, timeout=60)
    assert proc.returncode == 0 and "selfcheck" in proc.stdout
