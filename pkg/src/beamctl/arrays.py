"""Array geometry, steering vectors and beampattern functionals.

Conventions used throughout the package:

* angles are degrees at every public interface and radians internally;
* angles are measured from broadside, and for a linear array along x the
  plane-wave unit direction is ``(sin(theta), 0, 0)``, so the element delay is
  ``tau_n = x_n * sin(theta) / wave_speed``;
* response levels are linear power ratios internally and dB at interfaces.

All types here are immutable values and all operations are pure functions, so
everything is safe to share across threads and to evaluate point-parallel.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import AngleDomainError, DefinitenessError, DegenerateBeamError

SPEED_OF_LIGHT = 2.99792458e8
DEFAULT_OMEGA = 6e8 * np.pi  # rad/s

# Linear levels below this floor render as -300 dB instead of -inf.
_DB_FLOOR = 1e-30


def db_from_linear(level):
    """Convert a linear power ratio to dB, flooring exact nulls at -300 dB."""
    return 10.0 * np.log10(np.maximum(level, _DB_FLOOR))


def linear_from_db(level_db):
    """Convert dB to a linear power ratio."""
    return 10.0 ** (np.asarray(level_db, dtype=float) / 10.0)


class IsotropicPattern:
    """Unit gain in every direction."""

    kind = "isotropic"

    def gain(self, theta_deg):
        return np.ones_like(np.asarray(theta_deg, dtype=float))

    def _fingerprint_parts(self):
        return ("isotropic",)

    def __repr__(self):
        return "IsotropicPattern()"


@dataclass(frozen=True)
class CosinePowerPattern:
    """Gain ``cos(theta)**exponent`` (amplitude), the usual soft element taper."""

    exponent: float = 1.0
    kind = "cosine"

    def gain(self, theta_deg):
        theta = np.radians(np.asarray(theta_deg, dtype=float))
        return np.cos(theta) ** self.exponent

    def _fingerprint_parts(self):
        return ("cosine", repr(float(self.exponent)))


@dataclass(frozen=True)
class TabulatedPattern:
    """Gain given on an angle grid, interpolated linearly in angle."""

    angles_deg: tuple
    gains: tuple
    kind = "tabulated"

    def __post_init__(self):
        ang = np.asarray(self.angles_deg, dtype=float)
        g = np.asarray(self.gains, dtype=float)
        if ang.ndim != 1 or ang.shape != g.shape or ang.size < 2:
            raise ValueError("tabulated pattern needs matching 1-D angle/gain tables")
        if np.any(np.diff(ang) <= 0):
            raise ValueError("tabulated pattern angles must be strictly increasing")
        if ang[0] > -90.0 or ang[-1] < 90.0:
            raise ValueError("tabulated pattern must cover [-90, 90] degrees")
        if np.any(~np.isfinite(g)) or np.any(g < 0):
            raise ValueError("tabulated gains must be finite and nonnegative")
        object.__setattr__(self, "angles_deg", tuple(float(a) for a in ang))
        object.__setattr__(self, "gains", tuple(float(x) for x in g))

    def gain(self, theta_deg):
        return np.interp(np.asarray(theta_deg, dtype=float), self.angles_deg, self.gains)

    def _fingerprint_parts(self):
        return ("tabulated",) + tuple(
            repr(x) for pair in zip(self.angles_deg, self.gains) for x in pair
        )


def _as_readonly(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ArrayGeometry:
    """Element positions [m], per-element gain patterns and operating frequency.

    ``element_patterns`` holds one pattern object per element; the convenience
    constructors accept a single pattern shared by all elements.
    """

    element_positions: np.ndarray  # (N, 3) meters
    element_patterns: tuple
    omega: float = DEFAULT_OMEGA
    wave_speed: float = SPEED_OF_LIGHT

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.element_positions, dtype=float))
        if pos.shape[1] == 1:
            pos = np.hstack([pos, np.zeros((pos.shape[0], 2))])
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError("element positions must be (N, 3) coordinates in meters")
        if pos.shape[0] < 2:
            raise ValueError("an array needs at least 2 elements")
        if not np.all(np.isfinite(pos)):
            raise ValueError("element positions must be finite")
        if self.omega <= 0 or self.wave_speed <= 0:
            raise ValueError("omega and wave_speed must be positive")
        pats = self.element_patterns
        if not isinstance(pats, (tuple, list)):
            pats = (pats,) * pos.shape[0]
        if len(pats) == 1:
            pats = tuple(pats) * pos.shape[0]
        if len(pats) != pos.shape[0]:
            raise ValueError("need one element pattern, or one per element")
        # spot-check pattern sanity over the visible region
        probe = np.linspace(-90.0, 90.0, 37)
        for p in set(id(q) for q in pats):
            pat = next(q for q in pats if id(q) == p)
            g = np.asarray(pat.gain(probe), dtype=float)
            if np.any(~np.isfinite(g)) or np.any(g < 0):
                raise ValueError("element pattern must be finite and nonnegative on [-90, 90]")
        object.__setattr__(self, "element_positions", _as_readonly(pos))
        object.__setattr__(self, "element_patterns", tuple(pats))

    @property
    def size(self):
        return self.element_positions.shape[0]

    @property
    def wavelength(self):
        return 2.0 * np.pi * self.wave_speed / self.omega

    def element_gains(self, theta_deg):
        """Per-element amplitude gains g_n(theta); shape (N,) for scalar theta."""
        theta = np.asarray(theta_deg, dtype=float)
        gains = [np.asarray(p.gain(theta), dtype=float) for p in self.element_patterns]
        return np.stack(gains, axis=0)

    def fingerprint(self):
        """Stable hash of the geometry, used to pin persisted designs to it."""
        h = hashlib.sha256()
        h.update(self.element_positions.tobytes())
        h.update(repr(float(self.omega)).encode())
        h.update(repr(float(self.wave_speed)).encode())
        for p in self.element_patterns:
            for part in p._fingerprint_parts():
                h.update(part.encode())
        return h.hexdigest()


def ula(count, spacing_wavelengths=0.5, element_pattern=None, omega=DEFAULT_OMEGA,
        wave_speed=SPEED_OF_LIGHT):
    """Uniform linear array along x with the given spacing in wavelengths."""
    if count < 2:
        raise ValueError("an array needs at least 2 elements")
    lam = 2.0 * np.pi * wave_speed / omega
    x = np.arange(count, dtype=float) * spacing_wavelengths * lam
    pos = np.zeros((count, 3))
    pos[:, 0] = x
    pattern = element_pattern if element_pattern is not None else IsotropicPattern()
    return ArrayGeometry(pos, pattern, omega=omega, wave_speed=wave_speed)


def linear_array(x_positions, units="meters", element_pattern=None, omega=DEFAULT_OMEGA,
                 wave_speed=SPEED_OF_LIGHT):
    """Linear array along x from explicit positions in meters or wavelengths."""
    x = np.asarray(x_positions, dtype=float)
    if units == "wavelengths":
        x = x * (2.0 * np.pi * wave_speed / omega)
    elif units != "meters":
        raise ValueError("units must be 'meters' or 'wavelengths'")
    pos = np.zeros((x.size, 3))
    pos[:, 0] = x
    pattern = element_pattern if element_pattern is not None else IsotropicPattern()
    return ArrayGeometry(pos, pattern, omega=omega, wave_speed=wave_speed)


@dataclass(frozen=True)
class AngleGrid:
    """Inclusive uniform angle grid in degrees."""

    start_deg: float = -90.0
    stop_deg: float = 90.0
    step_deg: float = 0.1

    def __post_init__(self):
        if self.step_deg <= 0:
            raise ValueError("grid step must be positive")
        if not self.start_deg < self.stop_deg:
            raise ValueError("grid start must precede stop")

    def angles(self):
        """Grid points; both endpoints are included to within half a step."""
        n = int(round((self.stop_deg - self.start_deg) / self.step_deg))
        return self.start_deg + self.step_deg * np.arange(n + 1)


def _check_angle(theta_deg):
    theta = float(theta_deg)
    if not -90.0 <= theta <= 90.0 or not np.isfinite(theta):
        raise AngleDomainError(f"angle {theta_deg} deg outside [-90, 90]")
    return theta


def steering_vector(geom: ArrayGeometry, theta_deg) -> np.ndarray:
    """Complex array response a(theta) = g_n(theta) * exp(-j*omega*tau_n(theta))."""
    theta = _check_angle(theta_deg)
    rad = np.radians(theta)
    direction = np.array([np.sin(rad), 0.0, 0.0])
    tau = geom.element_positions @ direction / geom.wave_speed
    gains = geom.element_gains(theta)
    return gains * np.exp(-1j * geom.omega * tau)


def steering_matrix(geom: ArrayGeometry, thetas_deg) -> np.ndarray:
    """Steering vectors for many angles, stacked as columns (N x len(thetas))."""
    thetas = np.asarray(thetas_deg, dtype=float)
    if thetas.size and (thetas.min() < -90.0 or thetas.max() > 90.0):
        raise AngleDomainError("angle grid outside [-90, 90]")
    rad = np.radians(thetas)
    tau = np.outer(geom.element_positions[:, 0], np.sin(rad)) / geom.wave_speed
    gains = geom.element_gains(thetas)
    return gains * np.exp(-1j * geom.omega * tau)


def _axis_power(w, a0):
    denom = abs(np.vdot(w, a0)) ** 2
    if denom <= 0.0 or not np.isfinite(denom):
        raise DegenerateBeamError("weight has zero response at the beam axis")
    return denom


def response_level(w, theta_deg, theta0_deg, geom: ArrayGeometry) -> float:
    """Normalized power response |w^H a(theta)|^2 / |w^H a(theta0)|^2."""
    w = np.asarray(w)
    denom = _axis_power(w, steering_vector(geom, theta0_deg))
    num = abs(np.vdot(w, steering_vector(geom, theta_deg))) ** 2
    return num / denom


def response_over_columns(w, columns, a0):
    """Normalized power response against precomputed steering columns."""
    denom = _axis_power(w, a0)
    num = np.abs(np.conjugate(w) @ columns) ** 2
    return num / denom


def pattern_over_grid(w, theta0_deg, grid: AngleGrid, geom: ArrayGeometry):
    """Evaluate the response on a grid; returns (angles_deg, levels_db)."""
    angles = grid.angles()
    levels = response_over_columns(np.asarray(w), steering_matrix(geom, angles),
                                   steering_vector(geom, theta0_deg))
    return angles, db_from_linear(levels)


def _quadratic_form(w, T):
    val = np.vdot(w, T @ w)
    scale = abs(val) + 1e-300
    if abs(val.imag) > 1e-10 * scale:
        raise DefinitenessError("quadratic form is not real; matrix is not Hermitian")
    return val.real


def array_gain(w, T, theta0_deg, geom: ArrayGeometry) -> float:
    """Array gain |w^H a0|^2 / (w^H T w) against a normalized covariance.

    ``T`` may be a VirtualCovariance or a plain Hermitian matrix.
    """
    mat = getattr(T, "matrix", T)
    w = np.asarray(w)
    num = _axis_power(w, steering_vector(geom, theta0_deg))
    denom = _quadratic_form(w, mat)
    if denom <= 0.0:
        raise DefinitenessError("covariance is not positive definite at this weight")
    return num / denom


def output_sinr(w, R, sigma_s2, theta0_deg, geom: ArrayGeometry) -> float:
    """Output SINR sigma_s^2 |w^H a0|^2 / (w^H R w) as a linear ratio."""
    if sigma_s2 <= 0:
        raise ValueError("signal power must be positive")
    w = np.asarray(w)
    num = sigma_s2 * _axis_power(w, steering_vector(geom, theta0_deg))
    denom = _quadratic_form(w, np.asarray(R))
    if denom <= 0.0:
        raise DefinitenessError("covariance is not positive definite at this weight")
    return num / denom
