"""beamctl command line interface.

Subcommands:

* ``synth``      pattern synthesis to a template
* ``control``    one multi-point level-control step from the quiescent start
* ``beamform``   LCMV and amplitude-constrained adaptive beamforming from data
* ``quiescent``  two-stage quiescent pattern control (design / adapt)
* ``sim``        snapshot simulation to CSV
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import reporting
from .arrays import AngleGrid, db_from_linear, pattern_over_grid, steering_vector
from .beamforming import estimate_noise_power, lcmv, qcmv, sample_covariance, sinr_report
from .config import (config_hash, load_constraints, load_desired_pattern,
                     load_geometry, load_scenario, load_solver, load_tasks, read_config)
from .covariance import identity_vcm
from .admm import solve_cadmm
from .iterative import solve_iterative
from .quiescent import adapt, adapt_with_constraints, design_quiescent, load_design, \
    save_design
from .scenario import control_metrics, generate_snapshots
from .synthesis import synthesize


def _prepare_out_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _cmd_synth(args, argv):
    cfg = read_config(args.config)
    geom = load_geometry(cfg)
    desired = load_desired_pattern(cfg)
    syn_cfg = load_solver(cfg)
    if args.solver:
        from dataclasses import replace
        syn_cfg = replace(syn_cfg, solver=args.solver)

    result = synthesize(geom, desired, syn_cfg)
    out = _prepare_out_dir(args.out_dir)
    outputs = {}
    pattern_path = os.path.join(out, "pattern.csv")
    reporting.write_pattern_csv(pattern_path, result.pattern_angles, result.pattern_db)
    outputs["pattern"] = pattern_path
    weight_path = os.path.join(out, "weight.csv")
    reporting.write_weight_csv(weight_path, result.weight)
    outputs["weight"] = weight_path

    traces = {"steps": [{
        "index": s.index,
        "angles_deg": s.angles_deg,
        "target_db": s.target_db,
        "achieved_db": s.achieved_db,
        "inrs": s.inrs,
        "solver_iterations": s.solver_iterations,
        "gain_db": s.gain_db,
    } for s in result.steps]}
    if args.trace:
        # intermediate patterns replayed from the recorded per-step INRs
        from .arrays import response_over_columns, steering_matrix
        from .covariance import BlockAssignment, apply_block_update, optimal_weight
        a0 = steering_vector(geom, desired.beam_axis_deg)
        cols = steering_matrix(geom, result.pattern_angles)
        vcm = identity_vcm(geom.size)
        for s in result.steps:
            vcm = apply_block_update(vcm, BlockAssignment.build(
                geom, s.angles_deg, s.inrs))
            w = optimal_weight(vcm, a0)
            levels = db_from_linear(response_over_columns(w, cols, a0))
            step_path = os.path.join(out, f"pattern_step_{s.index:03d}.csv")
            reporting.write_pattern_csv(step_path, result.pattern_angles, levels)
            outputs[f"pattern_step_{s.index:03d}"] = step_path

    metrics = {
        "steps_used": result.steps_used,
        "success": result.success,
        "worst_peak_deviation_db": result.worst_peak_deviation_db,
    }
    reporting.write_report(out, argv, config_hash(args.config), metrics=metrics,
                           traces=traces, outputs=outputs)
    print(f"synthesis {'qualified' if result.success else 'NOT qualified'} in "
          f"{result.steps_used} steps; worst peak deviation "
          f"{result.worst_peak_deviation_db:.4f} dB")
    return 0 if result.success else 1


def _cmd_control(args, argv):
    cfg = read_config(args.config)
    geom = load_geometry(cfg)
    desired_axis = cfg["desired_pattern"].getfloat("beam_axis_deg") \
        if cfg.has_section("desired_pattern") else cfg["scenario"].getfloat("theta0_deg")
    syn_cfg = load_solver(cfg)
    tasks = load_tasks(args.tasks)

    vcm = identity_vcm(geom.size)
    grid = syn_cfg.grid
    _, db_prev = pattern_over_grid(steering_vector(geom, desired_axis),
                                   desired_axis, grid, geom)
    solver = solve_cadmm if syn_cfg.solver == "cadmm" else solve_iterative
    solver_cfg = syn_cfg.cadmm if syn_cfg.solver == "cadmm" else syn_cfg.iterative
    result = solver(geom, vcm, desired_axis, tasks, solver_cfg)
    angles, db_curr = pattern_over_grid(result.weight, desired_axis, grid, geom)

    controlled = [t.theta_deg for t in tasks]
    on_grid = [t for t in controlled if np.min(np.abs(angles - t)) < 1e-9]
    d_metrics, j_metric = control_metrics(
        angles, 10.0 ** (db_prev / 10.0), 10.0 ** (db_curr / 10.0), on_grid)

    out = _prepare_out_dir(args.out_dir)
    outputs = {}
    for name, data in [("pattern", (angles, db_curr))]:
        path = os.path.join(out, f"{name}.csv")
        reporting.write_pattern_csv(path, *data)
        outputs[name] = path
    weight_path = os.path.join(out, "weight.csv")
    reporting.write_weight_csv(weight_path, result.weight)
    outputs["weight"] = weight_path

    metrics = {
        "converged": result.converged,
        "iterations": result.sweeps_used,
        "inrs": result.sigma_star,
        "achieved_db": [float(db_from_linear(
            abs(np.vdot(result.weight, steering_vector(geom, t.theta_deg))) ** 2 /
            abs(np.vdot(result.weight, steering_vector(geom, desired_axis))) ** 2))
            for t in tasks],
        "level_change_db": d_metrics,
        "pattern_deviation_j": j_metric,
    }
    traces = {"beta_max": result.beta_max_trace, "consensus_gap": result.gap_trace}
    reporting.write_report(out, argv, config_hash(args.config), metrics=metrics,
                           traces=traces, outputs=outputs)
    print(f"controlled {len(tasks)} angles in {result.sweeps_used} iterations "
          f"({result.method}); converged={result.converged}")
    return 0


def _cmd_beamform(args, argv):
    cfg = read_config(args.config)
    geom = load_geometry(cfg)
    scenario = load_scenario(cfg)
    if args.snapshots:
        from dataclasses import replace
        scenario = replace(scenario, snapshot_count=args.snapshots)
    if args.seed is not None:
        from dataclasses import replace
        scenario = replace(scenario, seed=args.seed)
    spec, jr = load_constraints(args.constraints)
    if jr is None:
        jr = len(scenario.interferences)

    X = generate_snapshots(scenario, geom)
    R_hat = sample_covariance(X)
    sigma_n2_hat = estimate_noise_power(R_hat, jr)

    syn_cfg = load_solver(cfg)
    w_lcmv = lcmv(R_hat, spec, geom)
    result = qcmv(R_hat, sigma_n2_hat, spec, geom, solver=syn_cfg.solver,
                  iterative_cfg=syn_cfg.iterative, cadmm_cfg=syn_cfg.cadmm)

    out = _prepare_out_dir(args.out_dir)
    grid = syn_cfg.grid
    outputs = {}
    for name, w in [("lcmv", w_lcmv), ("qcmv", result.weight)]:
        wpath = os.path.join(out, f"weight_{name}.csv")
        reporting.write_weight_csv(wpath, w)
        outputs[f"weight_{name}"] = wpath
        angles, db = pattern_over_grid(w, spec.theta0_deg, grid, geom)
        ppath = os.path.join(out, f"pattern_{name}.csv")
        reporting.write_pattern_csv(ppath, angles, db)
        outputs[f"pattern_{name}"] = ppath

    metrics = {
        "sinr_lcmv_db": sinr_report(w_lcmv, scenario, geom),
        "sinr_qcmv_db": sinr_report(result.weight, scenario, geom),
        "noise_power_estimate": sigma_n2_hat,
        "loading_inrs": result.inrs,
        "loading_angles_deg": spec.angles_deg[1:],
        "snapshots_used": scenario.snapshot_count,
        "diagnostics": {k: v for k, v in result.diagnostics.items()},
    }
    reporting.write_report(out, argv, config_hash(args.config), metrics=metrics,
                           outputs=outputs)
    print(f"SINR: lcmv {metrics['sinr_lcmv_db']:.4f} dB, "
          f"qcmv {metrics['sinr_qcmv_db']:.4f} dB")
    return 0


def _cmd_quiescent(args, argv):
    cfg = read_config(args.config)
    geom = load_geometry(cfg)
    syn_cfg = load_solver(cfg)
    out = _prepare_out_dir(args.out_dir)
    outputs = {}

    if args.mode == "design":
        desired = load_desired_pattern(cfg)
        design = design_quiescent(geom, desired, syn_cfg)
        save_design(design, args.design)
        outputs["design"] = args.design
        ppath = os.path.join(out, "pattern.csv")
        reporting.write_pattern_csv(ppath, design.pattern_angles, design.pattern_db)
        outputs["pattern"] = ppath
        wpath = os.path.join(out, "weight.csv")
        reporting.write_weight_csv(wpath, design.weight)
        outputs["weight"] = wpath
        metrics = {"steps_used": design.synthesis.steps_used,
                   "success": design.synthesis.success}
        reporting.write_report(out, argv, config_hash(args.config), metrics=metrics,
                               outputs=outputs)
        print(f"quiescent design saved to {args.design}")
        return 0 if design.synthesis.success else 1

    design = load_design(args.design, geom)
    scenario = load_scenario(cfg)
    X = generate_snapshots(scenario, geom)
    R_hat = sample_covariance(X)
    sigma_n2_hat = estimate_noise_power(R_hat, len(scenario.interferences))
    if args.extra_constraints:
        tasks = load_tasks(args.extra_constraints)
        w_a = adapt_with_constraints(design, geom, R_hat, sigma_n2_hat, tasks,
                                     syn_cfg.iterative)
    else:
        w_a = adapt(design, geom, R_hat, sigma_n2_hat)

    grid = AngleGrid(-90.0, 90.0, syn_cfg.grid.step_deg)
    angles, db_a = pattern_over_grid(w_a, design.theta0_deg, grid, geom)
    _, db_q = pattern_over_grid(design.weight, design.theta0_deg, grid, geom)
    _, j_dev = control_metrics(angles, 10.0 ** (db_q / 10.0), 10.0 ** (db_a / 10.0), [])

    ppath = os.path.join(out, "pattern.csv")
    reporting.write_pattern_csv(ppath, angles, db_a)
    outputs["pattern"] = ppath
    wpath = os.path.join(out, "weight.csv")
    reporting.write_weight_csv(wpath, w_a)
    outputs["weight"] = wpath
    metrics = {
        "noise_power_estimate": sigma_n2_hat,
        "quiescent_deviation_j": j_dev,
        "sinr_db": sinr_report(w_a, scenario, geom),
    }
    reporting.write_report(out, argv, config_hash(args.config), metrics=metrics,
                           outputs=outputs)
    print(f"adapted weight written; deviation from quiescent J={j_dev:.3e}")
    return 0


def _cmd_sim(args, argv):
    cfg = read_config(args.config)
    geom = load_geometry(cfg)
    scenario = load_scenario(cfg)
    from dataclasses import replace
    if args.snapshots:
        scenario = replace(scenario, snapshot_count=args.snapshots)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    X = generate_snapshots(scenario, geom)
    reporting.write_snapshots_csv(args.out, X)
    print(f"wrote {X.shape[0]} snapshots of {X.shape[1]} elements to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="beamctl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="pattern synthesis to a template")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--solver", choices=["iterative", "cadmm"])
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("control", help="one multi-point control step")
    p.add_argument("--config", required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_control)

    p = sub.add_parser("beamform", help="constrained adaptive beamforming")
    p.add_argument("--config", required=True)
    p.add_argument("--constraints", required=True)
    p.add_argument("--snapshots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_beamform)

    p = sub.add_parser("quiescent", help="quiescent pattern control")
    p.add_argument("mode", choices=["design", "adapt"])
    p.add_argument("--config", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--extra-constraints")
    p.set_defaults(func=_cmd_quiescent)

    p = sub.add_parser("sim", help="snapshot simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--snapshots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sim)

    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    return args.func(args, ["beamctl"] + argv)


if __name__ == "__main__":
    sys.exit(main())
