"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets its own class,
all rooted at SpecjumpError so a bare ``except SpecjumpError`` catches any
domain failure without swallowing genuine bugs.
"""


class SpecjumpError(Exception):
    """Base class for all domain errors raised by this package."""


class NonHermitianInput(SpecjumpError):
    """A matrix that must be Hermitian is not, beyond tolerance."""


class WrongRepresentation(SpecjumpError):
    """A field arrived in the wrong representation for the operation."""


class GridMismatch(SpecjumpError):
    """Two objects that must share a grid do not."""


class NonCommensurateShift(SpecjumpError):
    """A shift or time step is not an integer multiple of the grid spacing."""


class UnsupportedInput(SpecjumpError):
    """Initial data violates a support precondition."""


class SkippedPrecondition(SpecjumpError):
    """A model fails the structural precondition of the requested check."""


class NotInHardyClass(SpecjumpError):
    """A field is not a member of the required boundary class."""


class NotInInductiveClass(SpecjumpError):
    """A field or parameter falls outside the inductive momentum family."""


class UnnormalizedAmplitudes(SpecjumpError):
    """Momentum amplitudes were required to be normalized and are not."""


class SupportViolation(SpecjumpError):
    """Momentum support extends past the declared cutoff."""


class NonpositiveTolerance(SpecjumpError):
    """A tolerance parameter must be strictly positive."""


class DegenerateDensity(SpecjumpError):
    """A jump-time density is unusable: negative, zero, or over-normalized."""


class EmptyRecords(SpecjumpError):
    """A report was requested for an empty record list."""


class ConfigError(SpecjumpError):
    """A scenario configuration is malformed. CLI exit code 2."""


class NumericalAssertionFailure(SpecjumpError):
    """A scenario-level numerical assertion failed. CLI exit code 1."""
