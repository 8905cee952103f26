import numpy as np
import pytest

from beamctl.arrays import AngleGrid, db_from_linear, pattern_over_grid, \
    response_level, response_over_columns, steering_matrix, steering_vector, ula
from beamctl.synthesis import (DesiredPattern, SynthesisConfig, audit_sidelobe_peaks,
                               detect_sidelobe_peaks, rank_and_truncate,
                               select_mainlobe_angles, synthesize)

UNIFORM_30 = DesiredPattern(
    beam_axis_deg=0.0,
    mainlobe_deg=(-8.0, 8.0),
    sidelobe_sectors=(((-90.0, -8.0), -30.0), ((8.0, 90.0), -30.0)),
)


def test_desired_pattern_validation():
    with pytest.raises(ValueError):  # axis outside mainlobe
        DesiredPattern(20.0, (-8.0, 8.0), (((-90.0, -8.0), -30.0),))
    with pytest.raises(ValueError):  # overlapping sectors
        DesiredPattern(0.0, (-8.0, 8.0),
                       (((-90.0, 0.0), -30.0), ((-10.0, 90.0), -30.0)))
    with pytest.raises(ValueError):  # nonnegative sidelobe level
        DesiredPattern(0.0, (-8.0, 8.0), (((8.0, 90.0), 3.0),))
    with pytest.raises(ValueError):  # template outside mainlobe
        DesiredPattern(0.0, (-8.0, 8.0), (((8.0, 90.0), -30.0),),
                       mainlobe_template=((30.0, -1.0),))


def test_peaks_empty_for_monotone_samples():
    angles = np.linspace(10.0, 20.0, 101)
    levels = np.linspace(0.0, 1.0, 101)
    assert detect_sidelobe_peaks(angles, levels, [(10.0, 20.0)]).size == 0


def test_peaks_symmetric_for_symmetric_pattern():
    geom = ula(16)
    w = steering_vector(geom, 0.0)
    grid = AngleGrid(-90.0, 90.0, 0.05)
    angles = grid.angles()
    levels = response_over_columns(w, steering_matrix(geom, angles),
                                   steering_vector(geom, 0.0))
    peaks = detect_sidelobe_peaks(angles, levels, [(-90.0, -5.0), (5.0, 90.0)])
    assert peaks.size > 0
    assert np.allclose(np.sort(peaks), np.sort(-peaks), atol=1e-9)


def test_peak_count_matches_brute_force():
    geom = ula(16)
    w = steering_vector(geom, 0.0)
    angles = AngleGrid(-90.0, 90.0, 0.05).angles()
    levels = response_over_columns(w, steering_matrix(geom, angles),
                                   steering_vector(geom, 0.0))
    sectors = [(-90.0, -5.0), (5.0, 90.0)]
    peaks = detect_sidelobe_peaks(angles, levels, sectors)
    brute = [angles[i] for i in range(1, angles.size - 1)
             if levels[i] > levels[i - 1] and levels[i] > levels[i + 1]
             and any(a <= angles[i] <= b for a, b in sectors)]
    assert np.allclose(peaks, brute)


def test_mainlobe_selection():
    geom = ula(16)
    w = steering_vector(geom, 0.0)
    on_target = float(db_from_linear(response_level(w, 2.0, 0.0, geom)))
    desired = DesiredPattern(
        beam_axis_deg=0.0, mainlobe_deg=(-8.0, 8.0),
        sidelobe_sectors=(((8.0, 90.0), -30.0),),
        mainlobe_template=((2.0, on_target), (5.0, -1.0)))
    picked = select_mainlobe_angles(geom, w, desired, 0.5)
    assert [angle for angle, _, _ in picked] == [5.0]

    unconstrained = DesiredPattern(
        beam_axis_deg=0.0, mainlobe_deg=(-8.0, 8.0),
        sidelobe_sectors=(((8.0, 90.0), -30.0),))
    assert select_mainlobe_angles(geom, w, unconstrained, 0.5) == []


def test_rank_and_truncate_semantics():
    cands = [(1.0, -30.0, -27.0), (2.0, -30.0, -21.0), (3.0, -30.0, -29.0)]
    ranked = rank_and_truncate(cands, None)
    assert [c[0] for c in ranked] == [2.0, 1.0, 3.0]  # deviations 9, 3, 1
    assert [c[0] for c in rank_and_truncate(cands, 2)] == [2.0, 1.0]
    assert rank_and_truncate([], 5) == []


def test_synthesize_terminates_immediately_when_matched():
    geom = ula(16)
    w0 = steering_vector(geom, 0.0)
    grid = AngleGrid(-90.0, 90.0, 0.05)
    angles = grid.angles()
    levels = response_over_columns(w0, steering_matrix(geom, angles), w0)
    peaks = detect_sidelobe_peaks(angles, levels, [(-90.0, -10.0), (10.0, 90.0)])
    levels_db = db_from_linear(levels)
    sectors = tuple(((float(p) - 0.4, float(p) + 0.4),
                     float(levels_db[np.argmin(np.abs(angles - p))]))
                    for p in peaks)
    desired = DesiredPattern(beam_axis_deg=0.0, mainlobe_deg=(-8.0, 8.0),
                             sidelobe_sectors=sectors)
    res = synthesize(geom, desired, SynthesisConfig())
    assert res.success
    assert res.steps_used == 0
    assert np.allclose(res.weight, w0)


def test_synthesize_uniform_sidelobes():
    geom = ula(16)
    cfg = SynthesisConfig()
    res = synthesize(geom, UNIFORM_30, cfg)
    assert res.success
    worst, report = audit_sidelobe_peaks(geom, res.weight, UNIFORM_30, cfg)
    assert worst <= cfg.level_tol_db
    # every step's controlled angles were hit exactly
    for step in res.steps:
        for target, achieved in zip(step.target_db, step.achieved_db):
            assert achieved == pytest.approx(target, abs=1e-6)
    # the axis stays the reference
    assert response_level(res.weight, 0.0, 0.0, geom) == pytest.approx(1.0, abs=1e-12)
    # control sets never exceed the array freedom and avoid the transition band
    for step in res.steps:
        assert len(step.angles_deg) < geom.size
        assert all(abs(a) >= 8.0 + cfg.transition_deg or -8.0 - cfg.transition_deg >= a
                   for a in step.angles_deg)


def test_synthesize_respects_control_cap():
    geom = ula(80)
    desired = DesiredPattern(
        beam_axis_deg=50.0, mainlobe_deg=(47.0, 53.0),
        sidelobe_sectors=(((-90.0, 47.0), -35.0), ((53.0, 90.0), -25.0)))
    cfg = SynthesisConfig(control_cap=20, max_steps=20)
    res = synthesize(geom, desired, cfg)
    assert res.success
    assert all(len(s.angles_deg) <= 20 for s in res.steps)
    assert max(len(s.angles_deg) for s in res.steps) == 20


def test_synthesize_with_mainlobe_template():
    geom = ula(16)
    desired = DesiredPattern(
        beam_axis_deg=0.0, mainlobe_deg=(-8.0, 8.0),
        sidelobe_sectors=(((-90.0, -8.0), -30.0), ((8.0, 90.0), -30.0)),
        mainlobe_template=((-2.5, -1.0), (2.5, -1.0)))
    res = synthesize(geom, desired, SynthesisConfig(max_steps=40))
    assert res.success
    for angle, target in desired.mainlobe_template:
        db = 10 * np.log10(response_level(res.weight, angle, 0.0, geom))
        assert db == pytest.approx(target, abs=0.5)


def test_synthesize_cadmm_solver_smoke():
    geom = ula(12)
    desired = DesiredPattern(
        beam_axis_deg=0.0, mainlobe_deg=(-10.0, 10.0),
        sidelobe_sectors=(((-90.0, -10.0), -25.0), ((10.0, 90.0), -25.0)))
    cfg = SynthesisConfig(solver="cadmm", max_steps=12)
    res = synthesize(geom, desired, cfg)
    assert res.success
    worst, _ = audit_sidelobe_peaks(geom, res.weight, desired, cfg)
    assert worst <= cfg.level_tol_db


def test_synthesis_warns_when_step_capped():
    geom = ula(16)
    cfg = SynthesisConfig(max_steps=1)
    with pytest.warns(RuntimeWarning):
        res = synthesize(geom, UNIFORM_30, cfg)
    assert not res.success
    assert res.steps_used == 1
