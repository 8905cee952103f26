"""Multi-point level control as a real-lifted nonconvex QCQP via consensus ADMM.

The weight modification coefficients ``h`` (length M) parameterize the update
``w = w_prev + T^-1 A h``.  Maximizing the array gain under the M level
constraints is, after substituting the update, a quadratic objective with M
quadratic equality constraints in ``h``; lifting ``z = [Re(h); Im(h)]`` turns
it into a real QCQP.  Consensus ADMM splits the constraints across per-copy
variables ``p_m``:

    z-step:  z = (C + eta*M/2 I)^-1 (c - 1/2 sum_m (lam_m - eta p_m))
    p-step:  p_m = projection of z + lam_m/eta onto its quadric
    dual:    lam_m += eta (z - p_m)

until ``max_m ||z - p_m||`` drops below the tolerance.  Each p-step is a
single-constraint QCQP solved through the scalar secular equation of
``p(mu) = (I + mu D)^-1 (zeta + mu d)``, searching the intervals delimited by
``-1/eig(D)`` with bisection plus a Newton polish.

The M projections within a p-step are independent (parallelizable in
principle); this implementation runs them sequentially which is bitwise
identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import ArrayGeometry, steering_matrix, steering_vector
from .control import control_single
from .covariance import (BlockAssignment, VirtualCovariance, apply_block_update,
                         modified_weight, optimal_weight, sigma_from_h)
from .errors import DefinitenessError, ProjectionInfeasibleError, SolverAbortError
from .iterative import MultiPointResult, validate_tasks


@dataclass(frozen=True)
class CadmmConfig:
    """Penalty, consensus-gap tolerance and iteration cap for the ADMM solver."""

    eta: float = 900.0
    tol: float = 1e-10
    max_iter: int = 5000

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("penalty must be positive")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


def lift_vector(x):
    """Real lift [Re(x); Im(x)] of a complex vector."""
    x = np.asarray(x, dtype=complex)
    return np.concatenate([x.real, x.imag])


def lift_matrix(X):
    """Real lift [[Re, -Im], [Im, Re]] of a complex matrix."""
    X = np.asarray(X, dtype=complex)
    return np.block([[X.real, -X.imag], [X.imag, X.real]])


def delift_vector(z):
    """Invert :func:`lift_vector`."""
    z = np.asarray(z, dtype=float)
    m = z.size // 2
    return z[:m] + 1j * z[m:]


def _symmetrize(a):
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class RealQCQP:
    """min z^T C z - 2 c^T z  s.t.  z^T D_m z - 2 d_m^T z = alpha_m."""

    C: np.ndarray
    c: np.ndarray
    D: tuple      # per-constraint symmetric matrices
    d: tuple      # per-constraint vectors
    alpha: tuple  # per-constraint right-hand sides

    @property
    def n_constraints(self):
        return len(self.D)

    def constraint_residuals(self, z):
        z = np.asarray(z, dtype=float)
        return np.array([z @ D @ z - 2.0 * d @ z - a
                         for D, d, a in zip(self.D, self.d, self.alpha)])


def build_real_qcqp(vcm: VirtualCovariance, a0, w_prev, A, levels) -> RealQCQP:
    """Assemble the lifted QCQP for tasks with steering block A and linear levels."""
    a0 = np.asarray(a0, dtype=complex)
    w_prev = np.asarray(w_prev, dtype=complex)
    A = np.asarray(A, dtype=complex)
    levels = np.asarray(levels, dtype=float)
    if A.shape[0] != a0.size or A.shape[1] != levels.size:
        raise ValueError("steering block and level count do not agree")

    B = vcm.inverse @ A                      # T^-1 A
    y = B.conj().T @ a0                      # (T^-1 A)^H a0
    axis = np.vdot(a0, w_prev)               # a0^H w_prev
    C_c = -np.outer(y, y.conj())             # objective curvature (NSD, rank 1)
    c_c = y * axis

    Ds, ds, alphas = [], [], []
    for m in range(levels.size):
        a_m = A[:, m]
        # S_m = a_m a_m^H - rho_m a0 a0^H encodes the level constraint
        Sw = a_m * np.vdot(a_m, w_prev) - levels[m] * a0 * np.vdot(a0, w_prev)
        SB = (np.outer(a_m, a_m.conj()) - levels[m] * np.outer(a0, a0.conj())) @ B
        D_m = B.conj().T @ SB
        D_m = 0.5 * (D_m + D_m.conj().T)
        d_m = -B.conj().T @ Sw
        alpha_m = -np.vdot(w_prev, Sw).real
        Ds.append(_symmetrize(lift_matrix(D_m)))
        ds.append(lift_vector(d_m))
        alphas.append(float(alpha_m))

    return RealQCQP(C=_symmetrize(lift_matrix(C_c)), c=lift_vector(c_c),
                    D=tuple(Ds), d=tuple(ds), alpha=tuple(alphas))


@dataclass
class ConsensusState:
    """Mutable ADMM state: shared variable, per-constraint copies and duals."""

    z: np.ndarray
    p: list
    lam: list
    eta: float
    iteration: int = 0
    delta_max: float = np.inf


def initialize_consensus(geom: ArrayGeometry, vcm: VirtualCovariance, theta0_deg,
                         tasks, eta) -> ConsensusState:
    """Feasible start: copy m solves its own single-point problem.

    ``p_m`` lifts the coefficient vector that moves only angle m to its target
    level, which satisfies constraint m exactly.
    """
    m_count = len(tasks)
    p = []
    for m, task in enumerate(tasks):
        gamma = control_single(geom, vcm, theta0_deg, task).gain_coefficient
        h = np.zeros(m_count, dtype=complex)
        h[m] = gamma
        p.append(lift_vector(h))
    return ConsensusState(z=np.zeros(2 * m_count), p=p,
                          lam=[np.zeros(2 * m_count) for _ in range(m_count)],
                          eta=float(eta))


class SecularProjector:
    """Nearest point on the quadric p^T D p - 2 d^T p = alpha.

    The eigendecomposition of D is done once; each projection solves the
    scalar secular equation phi(mu) = 0 over the intervals delimited by the
    reciprocal eigenvalues.
    """

    _SAMPLES = 129            # per finite interval, endpoint-clustered
    _BISECT_ITERS = 60

    def __init__(self, D, d, alpha):
        D = np.asarray(D, dtype=float)
        self.d = np.asarray(d, dtype=float)
        self.alpha = float(alpha)
        self.lam, self.Q = np.linalg.eigh(_symmetrize(D))
        self.dt = self.Q.T @ self.d
        lmax = np.abs(self.lam).max()
        active = np.abs(self.lam) > max(lmax, 1.0) * 1e-14
        poles = np.unique(-1.0 / self.lam[active])
        # merge poles that coincide to round-off
        keep = []
        for pole in poles:
            if not keep or abs(pole - keep[-1]) > 1e-12 * max(1.0, abs(pole)):
                keep.append(pole)
        self.poles = np.array(keep)
        self.feas_tol = 1e-9 * (1.0 + abs(self.alpha))

    def _phi(self, mu, zt):
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        denom = 1.0 + np.outer(mu, self.lam)
        pt = (zt[None, :] + np.outer(mu, self.dt)) / denom
        return (pt * pt) @ self.lam - 2.0 * (pt @ self.dt) - self.alpha

    def _phi_prime(self, mu, zt):
        denom = 1.0 + mu * self.lam
        pt = (zt + mu * self.dt) / denom
        dpt = (self.dt - self.lam * zt) / denom**2
        return float(2.0 * np.sum((self.lam * pt - self.dt) * dpt))

    def _point(self, mu, zt):
        return self.Q @ ((zt + mu * self.dt) / (1.0 + mu * self.lam))

    def _sample_pieces(self):
        """Candidate abscissae, one piece per interval between the poles."""
        pieces = []
        t = np.linspace(0.0, 1.0, self._SAMPLES)
        cluster = 0.5 * (1.0 - np.cos(np.pi * t))  # dense near both ends
        if self.poles.size:
            for a, b in zip(self.poles[:-1], self.poles[1:]):
                margin = 1e-11 * max(1.0, abs(a), abs(b))
                lo, hi = a + margin, b - margin
                if lo < hi:
                    pieces.append(lo + (hi - lo) * cluster)
            first, last = self.poles[0], self.poles[-1]
            step = np.exp2(np.arange(82, dtype=float))
            w_lo = 1e-9 * max(1.0, abs(first))
            w_hi = 1e-9 * max(1.0, abs(last))
            pieces.append((first - w_lo * step)[::-1])
            pieces.append(last + w_hi * step)
        else:
            # no curvature poles: phi is (near-)polynomial in mu
            pieces.append(np.concatenate([-np.exp2(np.arange(82, dtype=float))[::-1],
                                          [0.0], np.exp2(np.arange(82, dtype=float))]))
        return pieces

    def _pole_candidates(self, zt):
        """Feasible points at the poles themselves (degenerate KKT branch).

        When the minimizer sits at mu = -1/lambda_i the regular secular root
        disappears; the components on the singular eigenspace become free and
        are set here to restore feasibility.
        """
        candidates = []
        lmax = max(np.abs(self.lam).max(), 1.0)
        for i, lam_i in enumerate(self.lam):
            if abs(lam_i) <= 1e-14 * lmax:
                continue
            mu = -1.0 / lam_i
            denom = 1.0 + mu * self.lam
            free = np.abs(denom) <= 1e-9
            if not np.any(free):
                continue
            fixed = ~free
            pt = np.zeros_like(zt)
            pt[fixed] = (zt[fixed] + mu * self.dt[fixed]) / denom[fixed]
            base = float((self.lam[fixed] * pt[fixed] ** 2).sum()
                         - 2.0 * (self.dt[fixed] * pt[fixed]).sum())
            for j in np.nonzero(free)[0]:
                a2 = self.lam[j]
                b1 = -2.0 * self.dt[j]
                c0 = base - self.alpha
                disc = b1 * b1 - 4.0 * a2 * c0
                if disc < 0 or a2 == 0.0:
                    continue
                for sgn in (1.0, -1.0):
                    p_free = pt.copy()
                    p_free[j] = (-b1 + sgn * np.sqrt(disc)) / (2.0 * a2)
                    candidates.append(self.Q @ p_free)
        return candidates

    def project(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        zt = self.Q.T @ zeta
        if abs(self._phi(0.0, zt)[0]) <= self.feas_tol:
            return zeta.copy()

        lo_list, hi_list, flo_list, exact_list = [], [], [], []
        for mus in self._sample_pieces():
            vals = self._phi(mus, zt)
            finite = np.isfinite(vals)
            mus, vals = mus[finite], vals[finite]
            if mus.size == 0:
                continue
            exact_list.append(mus[vals == 0.0])
            sign_change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
            lo_list.append(mus[sign_change])
            hi_list.append(mus[sign_change + 1])
            flo_list.append(vals[sign_change])
        lo = np.concatenate(lo_list) if lo_list else np.array([])
        hi = np.concatenate(hi_list) if hi_list else np.array([])
        flo = np.concatenate(flo_list) if flo_list else np.array([])
        exact = np.concatenate(exact_list) if exact_list else np.array([])
        pole_points = self._pole_candidates(zt)
        if lo.size == 0 and exact.size == 0 and not pole_points:
            raise ProjectionInfeasibleError(
                "secular equation has no root; constraint set looks empty")
        for _ in range(self._BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            fmid = self._phi(mid, zt)
            left = np.sign(fmid) == np.sign(flo)
            lo = np.where(left, mid, lo)
            flo = np.where(left, fmid, flo)
            hi = np.where(left, hi, mid)

        candidates = list(pole_points)
        brackets = list(zip(lo, hi)) + [(mu, mu) for mu in exact]
        for a, b in brackets:
            mu = 0.5 * (a + b)
            # Newton polish within the bracket
            for _ in range(20):
                f = self._phi(mu, zt)[0]
                fp = self._phi_prime(mu, zt)
                if fp == 0.0:
                    break
                step = f / fp
                nxt = mu - step
                if not a <= nxt <= b or abs(step) <= 1e-16 * max(1.0, abs(mu)):
                    break
                mu = nxt
            candidates.append(self._point(mu, zt))

        best = None
        for p in candidates:
            resid = abs(p @ (self.Q @ (self.lam * (self.Q.T @ p))) - 2.0 * self.d @ p
                        - self.alpha)
            if resid <= self.feas_tol:
                dist = np.linalg.norm(p - zeta)
                if best is None or dist < best[0]:
                    best = (dist, p)
        if best is None:
            raise ProjectionInfeasibleError(
                "no feasible projection met the residual tolerance")
        return best[1]


def project_qcqp1(zeta, D, d, alpha):
    """One-shot nearest-point projection onto a single quadric constraint."""
    return SecularProjector(D, d, alpha).project(zeta)


def run_cadmm(qcqp: RealQCQP, init: ConsensusState, tol=1e-10, max_iter=5000):
    """Consensus iterations on the lifted QCQP.

    Returns ``(h_star, gap_trace, iterations, converged)`` where ``h_star`` is
    the de-lifted complex coefficient vector of the final shared variable.
    """
    m_count = qcqp.n_constraints
    eta = init.eta
    ridge = qcqp.C + 0.5 * eta * m_count * np.eye(qcqp.C.shape[0])
    if np.linalg.eigvalsh(ridge).min() <= 0:
        raise DefinitenessError(
            "z-step system not positive definite; increase the penalty")
    solve_z = np.linalg.inv(ridge)
    projectors = [SecularProjector(D, d, a)
                  for D, d, a in zip(qcqp.D, qcqp.d, qcqp.alpha)]

    z = init.z.copy()
    p = [pm.copy() for pm in init.p]
    lam = [lm.copy() for lm in init.lam]
    trace = []
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        g = qcqp.c - 0.5 * sum(lam[m] - eta * p[m] for m in range(m_count))
        z = solve_z @ g
        try:
            for m in range(m_count):
                p[m] = projectors[m].project(z + lam[m] / eta)
        except ProjectionInfeasibleError as exc:
            raise SolverAbortError(
                f"projection failed at iteration {iterations}: {exc}",
                trace={"gap_trace": tuple(trace)}) from exc
        for m in range(m_count):
            lam[m] = lam[m] + eta * (z - p[m])
        delta_max = max(np.linalg.norm(z - p[m]) for m in range(m_count))
        trace.append(delta_max)
        if delta_max <= tol:
            converged = True
            break

    init.z, init.p, init.lam = z, p, lam
    init.iteration, init.delta_max = iterations, trace[-1]
    return delift_vector(z), tuple(trace), iterations, converged


def recover(geom: ArrayGeometry, vcm: VirtualCovariance, a0, w_prev, A, angles_deg,
            h_star):
    """Map a coefficient solution back to (INRs, updated covariance, weight)."""
    weight = modified_weight(vcm, w_prev, A, h_star)
    sigma = sigma_from_h(vcm, A, h_star, a0)
    vcm_out = apply_block_update(
        vcm, BlockAssignment(angles_deg=tuple(angles_deg), inrs=sigma,
                             matrix=np.asarray(A, dtype=complex)))
    return sigma, vcm_out, weight


def solve_cadmm(geom: ArrayGeometry, vcm: VirtualCovariance, theta0_deg, tasks,
                cfg: CadmmConfig = CadmmConfig()) -> MultiPointResult:
    """Full multi-point step through the consensus solver."""
    tasks = list(tasks)
    validate_tasks(vcm.size, theta0_deg, tasks)
    a0 = steering_vector(geom, theta0_deg)
    angles = [t.theta_deg for t in tasks]
    A = steering_matrix(geom, angles)
    levels = np.array([t.level for t in tasks])
    w_prev = optimal_weight(vcm, a0)

    qcqp = build_real_qcqp(vcm, a0, w_prev, A, levels)
    state = initialize_consensus(geom, vcm, theta0_deg, tasks, cfg.eta)
    h_star, trace, iterations, converged = run_cadmm(qcqp, state, cfg.tol, cfg.max_iter)
    sigma, vcm_out, weight = recover(geom, vcm, a0, w_prev, A, angles, h_star)

    return MultiPointResult(
        sigma_star=sigma,
        vcm_out=vcm_out,
        weight=weight,
        beta_max_trace=(),
        sweeps_used=iterations,
        converged=converged,
        gap_trace=trace,
        method="cadmm",
    )
