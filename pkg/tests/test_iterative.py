import numpy as np
import pytest

from beamctl.arrays import response_level, steering_matrix, steering_vector, ula
from beamctl.control import ControlTask
from beamctl.covariance import (BlockAssignment, apply_block_update, h_from_sigma,
                                identity_vcm, modified_weight, optimal_weight)
from beamctl.errors import DegreesOfFreedomError, InvalidTaskError, SolverAbortError
from beamctl.iterative import IterativeConfig, solve_iterative

BENCH_TASKS = [ControlTask.from_db(-40.0, -45.0),
               ControlTask.from_db(25.0, -35.0),
               ControlTask.from_db(50.0, -30.0)]


def test_already_satisfied_tasks_converge_immediately():
    geom = ula(8)
    vcm = identity_vcm(8)
    w0 = steering_vector(geom, 0.0)
    tasks = [ControlTask(theta, response_level(w0, theta, 0.0, geom))
             for theta in (18.0, -47.0)]
    res = solve_iterative(geom, vcm, 0.0, tasks)
    assert res.sweeps_used == 1
    assert res.converged
    assert np.all(res.sigma_star == 0.0)
    assert res.beta_max_trace == (0.0,)
    assert res.vcm_out is vcm


def test_three_task_benchmark_converges():
    geom = ula(16)
    res = solve_iterative(geom, identity_vcm(16), 0.0, BENCH_TASKS)
    assert res.converged
    assert res.sweeps_used <= 30
    assert np.all(np.isfinite(res.beta_max_trace))
    assert res.beta_max_trace[-1] <= 1e-10
    for task in BENCH_TASKS:
        achieved_db = 10 * np.log10(response_level(res.weight, task.theta_deg, 0.0, geom))
        assert achieved_db == pytest.approx(task.level_db, abs=1e-6)


def test_result_weight_is_optimal_for_output_covariance():
    geom = ula(16)
    res = solve_iterative(geom, identity_vcm(16), 0.0, BENCH_TASKS)
    a0 = steering_vector(geom, 0.0)
    assert np.array_equal(res.weight, optimal_weight(res.vcm_out, a0))


def test_replaying_total_assignment_reproduces_covariance():
    geom = ula(16)
    vcm_in = identity_vcm(16)
    res = solve_iterative(geom, vcm_in, 0.0, BENCH_TASKS)
    assign = BlockAssignment.build(geom, [t.theta_deg for t in BENCH_TASKS],
                                   res.sigma_star)
    replayed = apply_block_update(vcm_in, assign)
    assert np.linalg.norm(replayed.matrix - res.vcm_out.matrix) <= \
        1e-9 * np.linalg.norm(res.vcm_out.matrix)


def test_weight_matches_closed_form_from_total_inrs():
    geom = ula(16)
    vcm_in = identity_vcm(16)
    res = solve_iterative(geom, vcm_in, 0.0, BENCH_TASKS)
    a0 = steering_vector(geom, 0.0)
    A = steering_matrix(geom, [t.theta_deg for t in BENCH_TASKS])
    h = h_from_sigma(vcm_in, A, res.sigma_star, a0)
    w_closed = modified_weight(vcm_in, optimal_weight(vcm_in, a0), A, h)
    assert np.linalg.norm(w_closed - res.weight) <= 1e-9 * np.linalg.norm(res.weight)


def test_sweep_inrs_sum_to_sigma_star():
    geom = ula(16)
    res = solve_iterative(geom, identity_vcm(16), 0.0, BENCH_TASKS)
    totals = np.sum(np.array(res.sweep_inrs), axis=0)
    assert np.allclose(totals, res.sigma_star, rtol=0, atol=1e-15)
    assert all(max(abs(b) for b in sweep) == bm
               for sweep, bm in zip(res.sweep_inrs, res.beta_max_trace))


def test_task_validation():
    geom = ula(4)
    vcm = identity_vcm(4)
    many = [ControlTask.from_db(a, -20.0) for a in (10.0, 20.0, 30.0, 40.0)]
    with pytest.raises(DegreesOfFreedomError):
        solve_iterative(geom, vcm, 0.0, many)
    with pytest.raises(InvalidTaskError):
        solve_iterative(geom, vcm, 0.0, [ControlTask.from_db(10.0, -20.0)] * 2)
    with pytest.raises(InvalidTaskError):
        solve_iterative(geom, vcm, 0.0, [ControlTask.from_db(0.0, -20.0)])
    with pytest.raises(InvalidTaskError):
        solve_iterative(geom, vcm, 0.0, [])


def test_mid_sweep_infeasibility_aborts_with_trace():
    geom = ula(8)
    vcm = identity_vcm(8)
    # raising an exact quiescent null is infeasible and must abort the solve
    null_angle = float(np.degrees(np.arcsin(0.25)))
    tasks = [ControlTask.from_db(null_angle, -20.0), ControlTask.from_db(40.0, -30.0)]
    with pytest.raises(SolverAbortError) as excinfo:
        solve_iterative(geom, vcm, 0.0, tasks)
    trace = excinfo.value.trace
    assert trace["sweep"] == 1 and trace["task_index"] == 0
    assert len(trace["sigma_partial"]) == 2
    assert trace["beta_max_trace"] == ()


def test_sweep_cap_warns_and_returns_near_feasible():
    geom = ula(16)
    cfg = IterativeConfig(beta_eps=1e-10, max_sweeps=1)
    with pytest.warns(RuntimeWarning):
        res = solve_iterative(geom, identity_vcm(16), 0.0, BENCH_TASKS, cfg)
    assert not res.converged
    assert res.sweeps_used == 1
    for task in BENCH_TASKS:  # single sweep already lands in the neighbourhood
        achieved_db = 10 * np.log10(response_level(res.weight, task.theta_deg, 0.0, geom))
        assert achieved_db == pytest.approx(task.level_db, abs=3.0)
