import json
import os

import numpy as np
import pytest

from beamctl import cli
from beamctl.arrays import CosinePowerPattern, steering_vector
from beamctl.config import (config_hash, load_constraints, load_desired_pattern,
                            load_geometry, load_scenario, load_solver, load_tasks,
                            read_config)
from beamctl.reporting import (read_weight_csv, write_pattern_csv, write_weight_csv)

CONFIG = """\
[array]
count = 16
spacing_wavelengths = 0.5
pattern = isotropic

[desired_pattern]
beam_axis_deg = 0.0
mainlobe_deg = -8.0:8.0
sidelobe =
    -90.0:-8.0:-30.0
    8.0:90.0:-30.0

[scenario]
theta0_deg = 0.0
sigma_n2 = 1.0
interferences =
    -50.0:30.0
seed = 7
snapshots = 2000

[solver]
kind = iterative
beta_eps = 1e-10
max_steps = 25
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "demo.ini"
    path.write_text(CONFIG)
    return str(path)


def test_geometry_loading_variants(tmp_path):
    cfg = read_config_text(tmp_path, """
[array]
positions = 0.0 0.5 1.0 1.5
units = wavelengths
pattern = cosine:2.0
""")
    geom = load_geometry(cfg)
    assert geom.size == 4
    assert isinstance(geom.element_patterns[0], CosinePowerPattern)
    assert geom.element_patterns[0].exponent == 2.0
    lam = geom.wavelength
    assert np.allclose(geom.element_positions[:, 0], [0, 0.5 * lam, lam, 1.5 * lam])

    cfg2 = read_config_text(tmp_path, """
[array]
positions = 0.0, 0.7, 1.4
units = meters
""")
    geom2 = load_geometry(cfg2)
    assert np.allclose(geom2.element_positions[:, 0], [0.0, 0.7, 1.4])


def test_tabulated_pattern_loading(tmp_path):
    table = tmp_path / "pattern.csv"
    table.write_text("theta_deg,gain\n-90,0\n0,1\n90,0\n")
    cfg = read_config_text(tmp_path, f"""
[array]
count = 4
pattern = tabulated:{table}
""")
    geom = load_geometry(cfg)
    assert np.isclose(geom.element_gains(45.0)[0], 0.5)


def read_config_text(tmp_path, text):
    path = tmp_path / f"cfg{abs(hash(text)) % 10_000}.ini"
    path.write_text(text)
    return read_config(str(path))


def test_desired_scenario_solver_loading(config_file):
    cfg = read_config(config_file)
    desired = load_desired_pattern(cfg)
    assert desired.beam_axis_deg == 0.0
    assert desired.sidelobe_sectors == (((-90.0, -8.0), -30.0), ((8.0, 90.0), -30.0))

    scenario = load_scenario(cfg)
    assert scenario.sigma_s2 == pytest.approx(10.0)  # default 10 dB input SNR
    assert scenario.interferences == ((-50.0, pytest.approx(1000.0)),)
    assert scenario.seed == 7 and scenario.snapshot_count == 2000

    solver = load_solver(cfg)
    assert solver.solver == "iterative"
    assert solver.max_steps == 25
    assert solver.iterative.beta_eps == 1e-10


def test_tasks_and_constraints_loading(tmp_path):
    tasks_path = tmp_path / "tasks.json"
    tasks_path.write_text(json.dumps([
        {"theta_deg": -40.0, "level_db": -45.0},
        {"theta_deg": 25.0, "level_db": -35.0},
    ]))
    tasks = load_tasks(str(tasks_path))
    assert [t.theta_deg for t in tasks] == [-40.0, 25.0]
    assert tasks[0].level == pytest.approx(10 ** -4.5)

    constraints_path = tmp_path / "constraints.json"
    constraints_path.write_text(json.dumps({
        "angles_deg": [0.0, -20.0],
        "g": [[1.0, 0.0], [0.0, 0.1]],
        "interference_count": 2,
    }))
    spec, jr = load_constraints(str(constraints_path))
    assert jr == 2
    assert spec.g[1] == 0.1j


def test_pattern_csv_format(tmp_path):
    path = tmp_path / "pattern.csv"
    write_pattern_csv(str(path), [0.0, 0.05], [-3.0, -3.123456789])
    lines = path.read_text().splitlines()
    assert lines[0] == "theta_deg,level_db"
    assert lines[1] == "0.000000,-3.000000"
    assert lines[2] == "0.050000,-3.123457"


def test_weight_csv_round_trip(tmp_path, rng):
    path = tmp_path / "weight.csv"
    w = rng.normal(size=8) + 1j * rng.normal(size=8)
    write_weight_csv(str(path), w)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,re,im"
    assert np.array_equal(read_weight_csv(str(path)), w)  # full-precision round trip


def run_cli(*argv):
    return cli.main(list(argv))


def test_cli_synth_and_report_determinism(config_file, tmp_path):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert run_cli("synth", "--config", config_file, "--out-dir", out1) == 0
    assert run_cli("synth", "--config", config_file, "--out-dir", out2) == 0
    report1 = json.load(open(os.path.join(out1, "report.json")))
    assert report1["config_sha256"] == config_hash(config_file)
    assert report1["metrics"]["success"] is True
    # reports are byte-identical apart from the differing out-dir argument
    text1 = open(os.path.join(out1, "report.json")).read().replace(out1, "OUT")
    text2 = open(os.path.join(out2, "report.json")).read().replace(out2, "OUT")
    assert text1 == text2
    pattern = open(os.path.join(out1, "pattern.csv")).read()
    assert pattern == open(os.path.join(out2, "pattern.csv")).read()


def test_cli_control(config_file, tmp_path):
    tasks = tmp_path / "tasks.json"
    tasks.write_text(json.dumps([{"theta_deg": -40.0, "level_db": -45.0}]))
    out = str(tmp_path / "control")
    assert run_cli("control", "--config", config_file, "--tasks", str(tasks),
                   "--out-dir", out) == 0
    report = json.load(open(os.path.join(out, "report.json")))
    assert report["metrics"]["converged"] is True
    assert report["metrics"]["achieved_db"][0] == pytest.approx(-45.0, abs=1e-6)
    assert os.path.exists(os.path.join(out, "weight.csv"))


def test_cli_beamform(config_file, tmp_path):
    constraints = tmp_path / "constraints.json"
    constraints.write_text(json.dumps({
        "angles_deg": [0.0, -20.0, -18.0],
        "g": [[1.0, 0.0], [0.01, 0.0], [0.01, 0.0]],
        "interference_count": 1,
    }))
    out = str(tmp_path / "bf")
    assert run_cli("beamform", "--config", config_file, "--constraints",
                   str(constraints), "--snapshots", "20000", "--seed", "3",
                   "--out-dir", out) == 0
    report = json.load(open(os.path.join(out, "report.json")))
    assert report["metrics"]["snapshots_used"] == 20000
    assert np.isfinite(report["metrics"]["sinr_lcmv_db"])
    assert np.isfinite(report["metrics"]["sinr_qcmv_db"])
    for name in ("weight_lcmv.csv", "weight_qcmv.csv", "pattern_lcmv.csv",
                 "pattern_qcmv.csv"):
        assert os.path.exists(os.path.join(out, name))


def test_cli_quiescent_design_and_adapt(config_file, tmp_path):
    design = str(tmp_path / "design.json")
    out_d = str(tmp_path / "qd")
    assert run_cli("quiescent", "design", "--config", config_file,
                   "--design", design, "--out-dir", out_d) == 0
    data = json.load(open(design))
    assert data["format"] == "beamctl-quiescent-design-v1"
    assert data["ledger"]

    out_a = str(tmp_path / "qa")
    assert run_cli("quiescent", "adapt", "--config", config_file,
                   "--design", design, "--out-dir", out_a) == 0
    report = json.load(open(os.path.join(out_a, "report.json")))
    assert np.isfinite(report["metrics"]["sinr_db"])

    extra = tmp_path / "extra.json"
    extra.write_text(json.dumps([{"theta_deg": 58.0, "level_db": -40.0}]))
    out_e = str(tmp_path / "qe")
    assert run_cli("quiescent", "adapt", "--config", config_file,
                   "--design", design, "--out-dir", out_e,
                   "--extra-constraints", str(extra)) == 0
    w = read_weight_csv(os.path.join(out_e, "weight.csv"))
    from beamctl.arrays import response_level, ula
    geom = ula(16)
    assert 10 * np.log10(response_level(w, 58.0, 0.0, geom)) == \
        pytest.approx(-40.0, abs=1e-6)


def test_cli_sim(config_file, tmp_path):
    out = str(tmp_path / "snaps.csv")
    assert run_cli("sim", "--config", config_file, "--snapshots", "50",
                   "--seed", "1", "--out", out) == 0
    lines = open(out).read().splitlines()
    assert lines[0].startswith("t,re_0,im_0")
    assert len(lines) == 51
