"""Single-point precise level control.

Given the current virtual covariance T with optimal weight ``w = T^-1 a0``,
assigning one virtual interference with INR ``b`` at angle ``theta_c`` changes
the weight along ``T^-1 a_c`` (Sherman-Morrison).  Writing

    q = a_c^H T^-1 a_c,   v = a_c^H T^-1 a0,   p = a0^H T^-1 a0,

the updated responses are ``w(b)^H a_c = conj(v) / (1 + b q)`` and
``w(b)^H a0 = (p + b s) / (1 + b q)`` with ``s = p q - |v|^2 >= 0``
(Cauchy-Schwarz in the T^-1 inner product).  The level constraint
``|w^H a_c|^2 = rho |w^H a0|^2`` therefore reduces, after the common
``(1 + b q)^2`` cancels, to the real quadratic

    s^2 b^2 + 2 p s b + (p^2 - |v|^2 / rho) = 0

with closed-form roots ``b = (-p +/- |v|/sqrt(rho)) / s``.  Admissibility
(``1 + b q > 0`` so the covariance stays positive definite) kills the minus
root; the array gain ``a0^H T(b)^-1 a0 = p - b |v|^2 / (1 + b q)`` is strictly
decreasing in ``b`` on the admissible branch, so the smallest admissible root
is automatically the gain-maximizing one.  Levels are reachable exactly when
``rho < q^2 / |v|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import ArrayGeometry, linear_from_db, steering_vector
from .covariance import BlockAssignment, VirtualCovariance, apply_block_update, optimal_weight
from .errors import DegenerateGeometryError, InfeasibleLevelError

# relative slack under which "already at the target" returns an exact zero INR
_LEVEL_MATCH_RTOL = 1e-12


@dataclass(frozen=True)
class ControlTask:
    """One (angle, desired level) pair; the level is a linear power ratio."""

    theta_deg: float
    level: float

    def __post_init__(self):
        if not self.level > 0:
            raise ValueError("desired level must be a positive linear ratio")
        if not np.isfinite(self.theta_deg):
            raise ValueError("control angle must be finite")

    @classmethod
    def from_db(cls, theta_deg, level_db) -> "ControlTask":
        return cls(float(theta_deg), float(linear_from_db(level_db)))

    @property
    def level_db(self):
        return 10.0 * np.log10(self.level)


def _control_scalars(vcm: VirtualCovariance, a0, a_c):
    x = vcm.inverse @ a_c
    q = np.vdot(a_c, x).real
    v = np.vdot(a_c, vcm.inverse @ a0)
    p = np.vdot(a0, vcm.inverse @ a0).real
    return q, v, p


def solve_single_beta(vcm: VirtualCovariance, a0, a_c, level) -> float:
    """INR that moves the response at a_c exactly to ``level`` (linear).

    Among the real roots of the level constraint that keep the covariance
    positive definite, returns the one maximizing the array gain (ties, which
    only occur at coincident roots, resolve to the smaller magnitude).
    """
    if not level > 0:
        raise ValueError("desired level must be positive")
    q, v, p = _control_scalars(vcm, a0, a_c)
    if p <= 0 or q <= 0:
        raise DegenerateGeometryError("covariance lost positive definiteness")

    s = p * q - abs(v) ** 2
    current = abs(v) ** 2 / p**2
    if abs(current - level) <= _LEVEL_MATCH_RTOL * max(current, level):
        return 0.0
    if s <= 1e-12 * p * q:
        # steering vectors collinear under T^-1: the level cannot be moved
        raise DegenerateGeometryError(
            "control and beam-axis steering vectors are collinear")

    r = abs(v) / np.sqrt(level)
    roots = [(-p + r) / s, (-p - r) / s]
    # the positive-definiteness margin rejects roots that sit on the boundary
    # to round-off (e.g. raising an exact pattern null)
    admissible = [b for b in roots if 1.0 + b * q > 1e-11 * max(1.0, abs(b) * q)]
    if not admissible:
        if abs(v) ** 2 <= 1e-24 * p * q:
            raise InfeasibleLevelError(
                "response at the control angle is an exact null and cannot be raised")
        raise InfeasibleLevelError(
            f"level {level:.6g} unreachable; levels must stay below "
            f"{q**2 / abs(v)**2:.6g}")
    # gain decreases monotonically in the INR, so the smallest admissible root
    # maximizes it; a gain tie can only happen at coincident roots
    return min(admissible)


@dataclass(frozen=True)
class SingleControlResult:
    """Outcome of one single-point control step."""

    inr: float
    vcm: VirtualCovariance
    weight: np.ndarray
    gain_coefficient: complex  # h-coefficient: w_new = w_old + coeff * T^-1 a_c


def control_single(geom: ArrayGeometry, vcm: VirtualCovariance, theta0_deg,
                   task: ControlTask) -> SingleControlResult:
    """Set the response level at one angle, updating covariance and weight."""
    if task.theta_deg == float(theta0_deg):
        raise ValueError("cannot control the beam axis level itself")
    a0 = steering_vector(geom, theta0_deg)
    a_c = steering_vector(geom, task.theta_deg)
    beta = solve_single_beta(vcm, a0, a_c, task.level)
    if beta == 0.0:
        return SingleControlResult(0.0, vcm, optimal_weight(vcm, a0), 0.0 + 0.0j)
    q, v, _ = _control_scalars(vcm, a0, a_c)
    gamma = -beta * v / (1.0 + beta * q)
    vcm_new = apply_block_update(
        vcm, BlockAssignment(angles_deg=(task.theta_deg,),
                             inrs=np.array([beta]),
                             matrix=a_c[:, None]))
    return SingleControlResult(beta, vcm_new, optimal_weight(vcm_new, a0), gamma)
