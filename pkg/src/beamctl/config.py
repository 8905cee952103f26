"""Config-file and JSON artifact loading for the CLI.

The config file is INI-style with sections [array], [desired_pattern],
[scenario] and [solver]; angles are degrees, response levels and INRs are dB,
powers are linear.  See the README for a worked example.
"""

from __future__ import annotations

import configparser
import hashlib
import json

import numpy as np

from .admm import CadmmConfig
from .arrays import (DEFAULT_OMEGA, SPEED_OF_LIGHT, AngleGrid, ArrayGeometry,
                     CosinePowerPattern, IsotropicPattern, TabulatedPattern,
                     linear_array, linear_from_db, ula)
from .beamforming import ConstraintSpec
from .control import ControlTask
from .iterative import IterativeConfig
from .scenario import Scenario
from .synthesis import DesiredPattern, SynthesisConfig


def read_config(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        parser.read_file(fh)
    return parser


def config_hash(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _floats(text):
    return [float(tok) for tok in text.replace(",", " ").split()]


def _pattern_from_config(section):
    kind = section.get("pattern", "isotropic").strip()
    if kind == "isotropic":
        return IsotropicPattern()
    if kind.startswith("cosine"):
        exponent = float(kind.split(":", 1)[1]) if ":" in kind else 1.0
        return CosinePowerPattern(exponent)
    if kind.startswith("tabulated:"):
        table_path = kind.split(":", 1)[1].strip()
        rows = np.loadtxt(table_path, delimiter=",", skiprows=1, ndmin=2)
        return TabulatedPattern(tuple(rows[:, 0]), tuple(rows[:, 1]))
    raise ValueError(f"unknown element pattern '{kind}'")


def load_geometry(cfg) -> ArrayGeometry:
    sec = cfg["array"]
    omega = sec.getfloat("omega", DEFAULT_OMEGA)
    wave_speed = sec.getfloat("wave_speed", SPEED_OF_LIGHT)
    pattern = _pattern_from_config(sec)
    if "positions" in sec:
        units = sec.get("units", "meters").strip()
        return linear_array(_floats(sec["positions"]), units=units,
                            element_pattern=pattern, omega=omega, wave_speed=wave_speed)
    count = sec.getint("count")
    spacing = sec.getfloat("spacing_wavelengths", 0.5)
    return ula(count, spacing, element_pattern=pattern, omega=omega,
               wave_speed=wave_speed)


def _sectors(text):
    out = []
    for line in text.strip().splitlines():
        lo, hi, level = (float(x) for x in line.split(":"))
        out.append(((lo, hi), level))
    return tuple(out)


def _pairs(text):
    out = []
    for line in text.strip().splitlines():
        a, b = (float(x) for x in line.split(":"))
        out.append((a, b))
    return tuple(out)


def load_desired_pattern(cfg) -> DesiredPattern:
    sec = cfg["desired_pattern"]
    lo, hi = (float(x) for x in sec["mainlobe_deg"].split(":"))
    template = _pairs(sec["mainlobe_template"]) if "mainlobe_template" in sec else None
    return DesiredPattern(
        beam_axis_deg=sec.getfloat("beam_axis_deg"),
        mainlobe_deg=(lo, hi),
        sidelobe_sectors=_sectors(sec["sidelobe"]),
        mainlobe_template=template,
    )


def load_scenario(cfg) -> Scenario:
    sec = cfg["scenario"]
    interferences = tuple((angle, float(linear_from_db(inr_db)))
                          for angle, inr_db in _pairs(sec.get("interferences", "")))
    sigma_n2 = sec.getfloat("sigma_n2", 1.0)
    # default input SNR of 10 dB when the signal power is not given
    sigma_s2 = sec.getfloat("sigma_s2", 10.0 * sigma_n2)
    return Scenario(
        theta0_deg=sec.getfloat("theta0_deg"),
        sigma_s2=sigma_s2,
        interferences=interferences,
        sigma_n2=sigma_n2,
        seed=sec.getint("seed", 0),
        snapshot_count=sec.getint("snapshots", 1000),
    )


def load_solver(cfg) -> SynthesisConfig:
    if not cfg.has_section("solver"):
        return SynthesisConfig()
    sec = cfg["solver"]
    grid = AngleGrid(sec.getfloat("grid_start_deg", -90.0),
                     sec.getfloat("grid_stop_deg", 90.0),
                     sec.getfloat("grid_step_deg", 0.05))
    cap = sec.getint("control_cap") if "control_cap" in sec else None
    return SynthesisConfig(
        grid=grid,
        level_tol_db=sec.getfloat("level_tol_db", 0.5),
        max_steps=sec.getint("max_steps", 30),
        control_cap=cap,
        solver=sec.get("kind", "iterative").strip(),
        mainlobe_deviation_db=sec.getfloat("mainlobe_deviation_db", 0.5),
        transition_deg=sec.getfloat("transition_deg", 2.0),
        iterative=IterativeConfig(
            beta_eps=sec.getfloat("beta_eps", 1e-10),
            max_sweeps=sec.getint("max_sweeps", 200)),
        cadmm=CadmmConfig(
            eta=sec.getfloat("eta", 900.0),
            tol=sec.getfloat("delta", 1e-10),
            max_iter=sec.getint("max_iter", 5000)),
    )


def load_tasks(path):
    """Control tasks from JSON: [{"theta_deg": ..., "level_db": ...}, ...]."""
    with open(path) as fh:
        entries = json.load(fh)
    return [ControlTask.from_db(e["theta_deg"], e["level_db"]) for e in entries]


def load_constraints(path):
    """Constraint spec from JSON; returns (spec, interference_count or None)."""
    with open(path) as fh:
        data = json.load(fh)
    g = tuple(complex(re, im) for re, im in data["g"])
    spec = ConstraintSpec(angles_deg=tuple(data["angles_deg"]), g=g)
    jr = data.get("interference_count")
    return spec, jr
