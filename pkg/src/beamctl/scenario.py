"""Scenario simulation: snapshots, ground-truth covariance and control metrics.

Snapshot generation is exactly reproducible across platforms.  The uniform
source is SplitMix64 used as a counter-based generator: draw ``i`` (0-based)
of the stream with a given 64-bit ``seed`` is

    mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)   (mod 2^64)

with the standard finalizer ``mix64`` (xor-shift 30 / multiply
0xBF58476D1CE4E5B9 / xor-shift 27 / multiply 0x94D049BB133111EB /
xor-shift 31).  Reference vectors for seed 0: draws 0..2 are
0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F.

Uniforms map a draw to ``((raw >> 11) + 1) * 2**-53`` in (0, 1]; one complex
circular Gaussian consumes two consecutive uniforms through Box-Muller
(``sqrt(-ln(u1)) * exp(j*2*pi*u2)`` gives unit complex variance).  Snapshot
``t`` consumes the ``2*(Q+N)`` draws starting at index ``t*2*(Q+N)``: first
two per interference source in listed order, then two per element of noise.
Because draw indices are absolute, generation can be sharded by snapshot
index with bitwise-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import ArrayGeometry, steering_matrix
from .errors import GridMismatchError

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed, start, count) -> np.ndarray:
    """Raw 64-bit draws ``start .. start+count-1`` of the seeded stream."""
    idx = np.arange(int(start) + 1, int(start) + int(count) + 1, dtype=np.uint64)
    z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def uniform_draws(seed, start, count) -> np.ndarray:
    """Uniforms in (0, 1] from the counter-based stream."""
    return ((splitmix64(seed, start, count) >> np.uint64(11)).astype(np.float64)
            + 1.0) * 2.0**-53


def complex_normals(seed, start_pair, count) -> np.ndarray:
    """Unit-variance circular complex Gaussians; pair i uses draws 2i, 2i+1."""
    u = uniform_draws(seed, 2 * int(start_pair), 2 * int(count))
    u1, u2 = u[0::2], u[1::2]
    return np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)


@dataclass(frozen=True)
class Scenario:
    """True signal/interference/noise description for simulation and scoring."""

    theta0_deg: float
    sigma_s2: float
    interferences: tuple  # ((angle_deg, inr_linear), ...)
    sigma_n2: float = 1.0
    seed: int = 0
    snapshot_count: int = 1000

    def __post_init__(self):
        if not (self.sigma_s2 > 0 and self.sigma_n2 > 0):
            raise ValueError("signal and noise powers must be positive")
        entries = tuple((float(a), float(b)) for a, b in self.interferences)
        for angle, inr in entries:
            if not -90.0 <= angle <= 90.0:
                raise ValueError("interference angles must lie in [-90, 90]")
            if not inr > 0:
                raise ValueError("interference INRs must be positive")
        if self.snapshot_count < 1:
            raise ValueError("need at least one snapshot")
        object.__setattr__(self, "interferences", entries)


def true_covariance(scenario: Scenario, geom: ArrayGeometry) -> np.ndarray:
    """Exact interference-plus-noise covariance sigma_n^2 (I + sum inr a a^H)."""
    T = np.eye(geom.size, dtype=complex)
    for angle, inr in scenario.interferences:
        a = steering_matrix(geom, [angle])[:, 0]
        T += inr * np.outer(a, a.conj())
    return scenario.sigma_n2 * T


def generate_snapshots(scenario: Scenario, geom: ArrayGeometry, count=None,
                       first_snapshot=0) -> np.ndarray:
    """Interference-plus-noise snapshots, stacked as rows (T, N).

    ``first_snapshot`` selects a shard starting at that snapshot index; the
    rows are bitwise identical to the same rows of a full sequential run.
    """
    n = geom.size
    q = len(scenario.interferences)
    t_count = scenario.snapshot_count if count is None else int(count)
    pairs_per_snapshot = q + n

    start_pair = int(first_snapshot) * pairs_per_snapshot
    z = complex_normals(scenario.seed, start_pair, t_count * pairs_per_snapshot)
    z = z.reshape(t_count, pairs_per_snapshot)

    noise = np.sqrt(scenario.sigma_n2) * z[:, q:]
    x = noise
    if q:
        amp = np.sqrt(np.array([inr for _, inr in scenario.interferences])
                      * scenario.sigma_n2)
        A = steering_matrix(geom, [angle for angle, _ in scenario.interferences])
        x = x + (z[:, :q] * amp) @ A.T
    return x


def control_metrics(angles_deg, levels_prev, levels_curr, controlled_angles_deg):
    """Per-controlled-angle dB differences and the RMS linear deviation J.

    Both patterns must be sampled on the same grid and every controlled angle
    must land on a grid point.
    """
    angles = np.asarray(angles_deg, dtype=float)
    prev = np.asarray(levels_prev, dtype=float)
    curr = np.asarray(levels_curr, dtype=float)
    if angles.shape != prev.shape or angles.shape != curr.shape:
        raise GridMismatchError("patterns are not sampled on the same grid")

    diffs = []
    for theta in controlled_angles_deg:
        idx = np.argmin(np.abs(angles - theta))
        if abs(angles[idx] - theta) > 1e-9:
            raise GridMismatchError(f"controlled angle {theta} deg is off-grid")
        diffs.append(abs(10.0 * np.log10(curr[idx] / prev[idx])))
    j = float(np.sqrt(np.mean(np.abs(curr - prev) ** 2)))
    return np.array(diffs), j
