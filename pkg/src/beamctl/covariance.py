"""Virtual normalized covariance maintenance.

The virtual covariance is the noise-normalized interference-plus-noise matrix
``T = I + sum_l inr_l * a(theta_l) a(theta_l)^H`` built from assigned virtual
interferences.  Its inverse is maintained incrementally: a rank-M block update
``T + A S A^H`` (S the diagonal of INRs) updates the inverse through the
generalized Woodbury identity

    T_new^-1 = T^-1 - T^-1 A (I + S A^H T^-1 A)^-1 S A^H T^-1

so no dense re-inversion happens on the update path.  A periodic dense refresh
(every 64 block updates) bounds round-off drift.

Negative INRs are admitted (they raise a level instead of lowering it); the
update is accepted only while the capacitance matrix ``I + S A^H T^-1 A`` has
strictly positive eigenvalues, which is equivalent to the updated matrix
staying positive definite.

VirtualCovariance values are immutable; updates return new values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .arrays import ArrayGeometry, steering_matrix
from .errors import DefinitenessError, UpdateSingularError, BijectionSingularityError, \
    ConsistencyError

_REFRESH_PERIOD = 64


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def _hermitize(a):
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True)
class VirtualCovariance:
    """Hermitian PD normalized covariance with maintained inverse and ledger.

    ``ledger`` is the ordered record of assigned virtual interferences as
    ``(theta_deg, inr)`` pairs; replaying it from the identity reproduces
    ``matrix`` whenever the value was built from the identity.
    """

    matrix: np.ndarray
    inverse: np.ndarray
    ledger: tuple = ()
    base_is_identity: bool = True
    updates_since_refresh: int = 0

    def __post_init__(self):
        object.__setattr__(self, "matrix", _readonly(self.matrix))
        object.__setattr__(self, "inverse", _readonly(self.inverse))

    @property
    def size(self):
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, n: int) -> "VirtualCovariance":
        if n < 2:
            raise ValueError("covariance size must be at least 2")
        eye = np.eye(n, dtype=complex)
        return cls(matrix=eye, inverse=eye.copy(), ledger=())

    @classmethod
    def from_matrix(cls, T) -> "VirtualCovariance":
        """Wrap an externally supplied normalized covariance (e.g. from data)."""
        T = np.asarray(T, dtype=complex)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValueError("covariance must be square")
        scale = np.linalg.norm(T)
        if np.linalg.norm(T - T.conj().T) > 1e-12 * scale:
            raise ConsistencyError("covariance is not Hermitian")
        T = _hermitize(T)
        if np.linalg.eigvalsh(T).min() <= 0:
            raise DefinitenessError("covariance is not positive definite")
        return cls(matrix=T, inverse=_hermitize(np.linalg.inv(T)),
                   ledger=(), base_is_identity=False)


def identity_vcm(n: int) -> VirtualCovariance:
    """Fresh virtual covariance T = I with an empty ledger."""
    return VirtualCovariance.identity(n)


@dataclass(frozen=True)
class BlockAssignment:
    """One block of simultaneous virtual interferences.

    ``matrix`` stacks the steering vectors as columns (N x M), ``inrs`` holds
    the per-angle INRs, and ``angles_deg`` keeps the source angles for the
    ledger.  The steering block must have full column rank.
    """

    angles_deg: tuple
    inrs: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        inrs = np.asarray(self.inrs, dtype=float)
        A = np.asarray(self.matrix, dtype=complex)
        if A.ndim != 2 or A.shape[1] != inrs.size or len(self.angles_deg) != inrs.size:
            raise ValueError("angles, INRs and steering columns must agree in count")
        if not np.all(np.isfinite(inrs)):
            raise ValueError("INRs must be finite and real")
        sv = np.linalg.svd(A, compute_uv=False)
        if sv.min() <= 1e-10 * sv.max():
            raise ValueError("steering block is rank deficient")
        object.__setattr__(self, "angles_deg", tuple(float(a) for a in self.angles_deg))
        object.__setattr__(self, "inrs", _readonly(inrs))
        object.__setattr__(self, "matrix", _readonly(A))

    @classmethod
    def build(cls, geom: ArrayGeometry, angles_deg, inrs) -> "BlockAssignment":
        angles = tuple(float(a) for a in np.atleast_1d(angles_deg))
        return cls(angles_deg=angles, inrs=np.atleast_1d(inrs),
                   matrix=steering_matrix(geom, angles))


def _capacitance(vcm: VirtualCovariance, A, inrs):
    """K = I + S A^H T^-1 A along with T^-1 A, validating invertibility/PD."""
    X = vcm.inverse @ A
    G = A.conj().T @ X
    K = np.eye(inrs.size, dtype=complex) + inrs[:, None] * G
    lam = np.linalg.eigvals(K)
    lmax = max(np.abs(lam).max(), 1.0)
    if np.abs(lam).min() <= 1e-12 * lmax:
        raise UpdateSingularError("capacitance matrix of the block update is singular")
    # eigenvalues of K are real in exact arithmetic; a negative one means the
    # updated covariance would lose positive definiteness
    if lam.real.min() <= 0:
        raise DefinitenessError("block update would destroy positive definiteness")
    return K, X


def apply_block_update(vcm: VirtualCovariance, assign: BlockAssignment) -> VirtualCovariance:
    """Return the covariance after adding the block's virtual interferences."""
    A = assign.matrix
    inrs = np.asarray(assign.inrs, dtype=float)
    if A.shape[0] != vcm.size:
        raise ValueError("assignment dimension does not match covariance")
    if not np.any(inrs):
        return vcm

    K, X = _capacitance(vcm, A, inrs)
    T_new = _hermitize(vcm.matrix + (A * inrs) @ A.conj().T)
    correction = X @ np.linalg.solve(K, inrs[:, None] * X.conj().T)
    T_inv_new = _hermitize(vcm.inverse - correction)

    count = vcm.updates_since_refresh + 1
    if count >= _REFRESH_PERIOD:
        T_inv_new = _hermitize(np.linalg.inv(T_new))
        count = 0

    new_entries = tuple((theta, float(b)) for theta, b in zip(assign.angles_deg, inrs)
                        if b != 0.0)
    return VirtualCovariance(matrix=T_new, inverse=T_inv_new,
                             ledger=vcm.ledger + new_entries,
                             base_is_identity=vcm.base_is_identity,
                             updates_since_refresh=count)


def optimal_weight(vcm: VirtualCovariance, a0) -> np.ndarray:
    """Gain-optimal weight w = T^-1 a0 from the maintained inverse."""
    return vcm.inverse @ np.asarray(a0)


def h_from_sigma(vcm: VirtualCovariance, A, inrs, a0) -> np.ndarray:
    """Weight-modification coefficients h for a block of INRs.

    ``h = -(I + S A^H T^-1 A)^-1 S A^H T^-1 a0``; the post-update optimal
    weight equals ``w_prev + T^-1 A h``.
    """
    A = np.asarray(A, dtype=complex)
    inrs = np.asarray(inrs, dtype=float)
    K, X = _capacitance(vcm, A, inrs)
    return -np.linalg.solve(K, inrs * (X.conj().T @ np.asarray(a0)))


def sigma_from_h(vcm: VirtualCovariance, A, h, a0) -> np.ndarray:
    """Invert the INR -> h map: S = Diag(-h / (A^H T^-1 (a0 + A h))).

    The ratios must come out real; a relative imaginary residue above 1e-8
    means ``h`` is not in the image of any real INR assignment.
    """
    A = np.asarray(A, dtype=complex)
    h = np.asarray(h, dtype=complex)
    denom = A.conj().T @ (vcm.inverse @ (np.asarray(a0) + A @ h))
    scale = np.abs(denom).max()
    if np.any(np.abs(denom) <= 1e-14 * max(scale, 1.0)):
        raise BijectionSingularityError("zero denominator in the h -> INR map")
    ratios = -h / denom
    tol = 1e-8 * max(np.abs(ratios).max(), 1.0)
    if np.any(np.abs(ratios.imag) > tol):
        raise ConsistencyError("h does not correspond to real INRs")
    return ratios.real


def modified_weight(vcm: VirtualCovariance, w_prev, A, h) -> np.ndarray:
    """Weight update w_prev + T^-1 A h shared by both multi-point solvers."""
    return np.asarray(w_prev) + vcm.inverse @ (np.asarray(A) @ np.asarray(h))


def replay_ledger(geom: ArrayGeometry, ledger, n=None) -> VirtualCovariance:
    """Rebuild a covariance from the identity by replaying ledger entries.

    Entries are applied one by one in order, so the result is a deterministic
    (bit-stable) function of the ledger and the geometry.
    """
    vcm = VirtualCovariance.identity(n if n is not None else geom.size)
    for theta_deg, inr in ledger:
        vcm = apply_block_update(vcm, BlockAssignment.build(geom, [theta_deg], [inr]))
    return vcm


def serialize_ledger(vcm: VirtualCovariance) -> str:
    """Ledger as a JSON record; requires an identity-based covariance."""
    if not vcm.base_is_identity:
        raise ValueError("only identity-based covariances have a replayable ledger")
    entries = [{"theta_deg": theta, "inr_linear": inr} for theta, inr in vcm.ledger]
    return json.dumps({"entries": entries}, indent=2)


def deserialize_ledger(text: str) -> tuple:
    """Parse a ledger record back into (theta_deg, inr) pairs."""
    data = json.loads(text)
    return tuple((float(e["theta_deg"]), float(e["inr_linear"])) for e in data["entries"])
