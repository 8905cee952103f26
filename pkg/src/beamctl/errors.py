"""Exception taxonomy for beamctl.

Every beamctl-specific failure derives from :class:`BeamctlError`; most also
derive from ``ValueError`` so that generic callers can catch bad inputs the
usual way.
"""


class BeamctlError(Exception):
    """Base class for all beamctl errors."""


class AngleDomainError(BeamctlError, ValueError):
    """Angle outside the supported [-90, 90] degree domain."""


class DegenerateBeamError(BeamctlError, ValueError):
    """Weight has (numerically) zero response at the beam axis."""


class DefinitenessError(BeamctlError, ValueError):
    """A matrix required to be positive definite is not."""


class UpdateSingularError(BeamctlError, ValueError):
    """The small capacitance system of a low-rank covariance update is singular."""


class BijectionSingularityError(BeamctlError, ValueError):
    """The gain-vector -> INR map hit a zero denominator component."""


class ConsistencyError(BeamctlError, ValueError):
    """A quantity that must be real carries a non-negligible imaginary part."""


class InfeasibleLevelError(BeamctlError, ValueError):
    """Requested response level is unreachable with any admissible interference power."""


class DegenerateGeometryError(BeamctlError, ValueError):
    """Steering vectors are collinear; the level-control problem degenerates."""


class DegreesOfFreedomError(BeamctlError, ValueError):
    """More simultaneous control points than the array can support (at most N-1)."""


class InvalidTaskError(BeamctlError, ValueError):
    """Control task list malformed (duplicate angles, beam axis included, ...)."""


class SolverAbortError(BeamctlError, RuntimeError):
    """A multi-point solve aborted mid-run; carries the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ProjectionInfeasibleError(BeamctlError, ValueError):
    """The single-constraint projection has an empty constraint set."""


class ConstraintDegeneracyError(BeamctlError, ValueError):
    """Constraint matrix is rank deficient."""


class GridMismatchError(BeamctlError, ValueError):
    """Two pattern samplings do not share the same angle grid."""


class FingerprintMismatchError(BeamctlError, ValueError):
    """A persisted design does not match the live array geometry."""
