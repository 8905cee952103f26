"""Multi-constraint adaptive beamforming.

Two beamformers over the same constraint specification:

* LCMV: exact complex constraints ``C^H w = g`` with the closed form
  ``w = R^-1 C (C^H R^-1 C)^-1 g``;
* the quadratic variant (amplitude-only constraints ``|(C^H w)_d|^2 =
  |(g)_d|^2``), solved by running multi-point level control with the
  data-normalized covariance ``R_hat / sigma_n^2`` as the starting virtual
  covariance.  The result equals ``(T + Delta)^-1 a(theta0)`` up to a positive
  scale, where the loading ``Delta`` is the structured (non-diagonal) matrix
  assembled from the solver's virtual-interference INRs.

Exact nulls would need unbounded interference power, so zero amplitude
targets are floored at ``null_floor`` (default -160 dB), deep enough that the
weight matches the exact-null optimum to well below 1e-6 dB in SINR.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .admm import CadmmConfig, solve_cadmm
from .arrays import ArrayGeometry, output_sinr, steering_matrix, steering_vector
from .control import ControlTask
from .covariance import VirtualCovariance, optimal_weight
from .errors import ConstraintDegeneracyError, DegreesOfFreedomError
from .iterative import IterativeConfig, solve_iterative

DEFAULT_NULL_FLOOR = 1e-16


@dataclass(frozen=True)
class ConstraintSpec:
    """Constraint directions and response vector; the first angle is the axis.

    ``g`` must have first component exactly 1; for d >= 2 only the amplitude
    ``|g_d|`` is meaningful to the quadratic beamformer.
    """

    angles_deg: tuple
    g: tuple

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles_deg)
        g = tuple(complex(x) for x in self.g)
        if len(angles) != len(g) or len(angles) < 1:
            raise ValueError("need one g entry per constraint angle")
        if len(set(angles)) != len(angles):
            raise ValueError("constraint angles must be distinct")
        if abs(g[0] - 1.0) > 1e-12:
            raise ValueError("the first response entry must be 1")
        object.__setattr__(self, "angles_deg", angles)
        object.__setattr__(self, "g", g)

    @property
    def order(self):
        return len(self.angles_deg)

    @property
    def theta0_deg(self):
        return self.angles_deg[0]

    def side_levels(self):
        """Linear amplitude-squared targets for the non-axis constraints."""
        return np.array([abs(x) ** 2 for x in self.g[1:]])


def sample_covariance(snapshots) -> np.ndarray:
    """(1/T) sum_t x(t) x(t)^H for snapshots stacked as rows (T, N)."""
    X = np.atleast_2d(np.asarray(snapshots, dtype=complex))
    R = X.T @ X.conj() / X.shape[0]
    return 0.5 * (R + R.conj().T)


def estimate_noise_power(R_hat, interference_count: int) -> float:
    """Average of the smallest N - J eigenvalues of the sample covariance."""
    R_hat = np.asarray(R_hat)
    n = R_hat.shape[0]
    if not 0 <= interference_count < n:
        raise ValueError("interference count must lie in [0, N)")
    eigenvalues = np.linalg.eigvalsh(R_hat)  # ascending
    return float(eigenvalues[: n - interference_count].mean())


def lcmv(R, spec: ConstraintSpec, geom: ArrayGeometry) -> np.ndarray:
    """Linearly constrained minimum variance weight R^-1 C (C^H R^-1 C)^-1 g."""
    R = np.asarray(R, dtype=complex)
    C = steering_matrix(geom, spec.angles_deg)
    sv = np.linalg.svd(C, compute_uv=False)
    if sv.min() <= 1e-10 * sv.max():
        raise ConstraintDegeneracyError("constraint matrix is rank deficient")
    RC = np.linalg.solve(R, C)
    small = C.conj().T @ RC
    return RC @ np.linalg.solve(small, np.asarray(spec.g, dtype=complex))


@dataclass(frozen=True)
class QcmvResult:
    weight: np.ndarray
    loading: np.ndarray          # Delta = sum_d inr_d a_d a_d^H
    inrs: np.ndarray
    vcm_out: VirtualCovariance
    diagnostics: dict


def qcmv(R_hat, sigma_n2_hat, spec: ConstraintSpec, geom: ArrayGeometry,
         solver: str = "iterative", iterative_cfg: IterativeConfig = IterativeConfig(),
         cadmm_cfg: CadmmConfig = CadmmConfig(),
         null_floor: float = DEFAULT_NULL_FLOOR) -> QcmvResult:
    """Amplitude-constrained minimum variance via multi-point level control.

    The returned weight is scaled so that ``w^H a(theta0) = 1``, which leaves
    every amplitude constraint and the output SINR unchanged.
    """
    if spec.order - 1 >= geom.size:
        raise DegreesOfFreedomError("more side constraints than array freedoms")
    R_hat = np.asarray(R_hat, dtype=complex)
    if sigma_n2_hat <= 0:
        raise ValueError("noise power must be positive")

    # tiny diagonal regularization keeps short-sample estimates invertible
    ridge = 1e-8 * np.trace(R_hat).real / geom.size
    T_ni = (R_hat + ridge * np.eye(geom.size)) / sigma_n2_hat
    vcm0 = VirtualCovariance.from_matrix(T_ni)
    theta0 = spec.theta0_deg
    a0 = steering_vector(geom, theta0)

    diagnostics = {"ridge": ridge, "null_floored": 0, "solver": solver}
    if spec.order == 1:
        w = optimal_weight(vcm0, a0)
        w = w / np.vdot(a0, w)
        return QcmvResult(weight=w, loading=np.zeros_like(T_ni),
                          inrs=np.array([]), vcm_out=vcm0, diagnostics=diagnostics)

    levels = spec.side_levels()
    floored = levels < null_floor
    diagnostics["null_floored"] = int(floored.sum())
    levels = np.where(floored, null_floor, levels)
    tasks = [ControlTask(angle, float(level))
             for angle, level in zip(spec.angles_deg[1:], levels)]

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if solver == "cadmm":
            result = solve_cadmm(geom, vcm0, theta0, tasks, cadmm_cfg)
        else:
            result = solve_iterative(geom, vcm0, theta0, tasks, iterative_cfg)
    diagnostics["converged"] = result.converged
    diagnostics["solver_iterations"] = result.sweeps_used
    diagnostics["warnings"] = [str(w.message) for w in caught]

    A = steering_matrix(geom, spec.angles_deg[1:])
    loading = (A * result.sigma_star) @ A.conj().T
    w = result.weight / np.vdot(a0, result.weight)
    return QcmvResult(weight=w, loading=loading, inrs=result.sigma_star,
                      vcm_out=result.vcm_out, diagnostics=diagnostics)


def sinr_report(w, scenario, geom: ArrayGeometry) -> float:
    """Output SINR of a weight against a scenario's true covariance, in dB."""
    from .scenario import true_covariance

    R = true_covariance(scenario, geom)
    value = output_sinr(w, R, scenario.sigma_s2, scenario.theta0_deg, geom)
    return float(10.0 * np.log10(value))
