"""Custom exceptions for the pole_decoherence package."""

from __future__ import annotations

from typing import Optional


class InvalidEnumValueError(ValueError):
    """Raised when a string does not name a member of an enum."""

    def __init__(
        self: InvalidEnumValueError,
        message: str = "Invalid enum value",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class ScenarioError(ValueError):
    """Base for errors caused by the physical scenario rather than the code.

    The command line maps every subclass to the "invalid scenario" exit code.
    """

    def __init__(
        self: ScenarioError,
        message: str = "Invalid scenario",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class InvalidScenarioError(ScenarioError):
    """Raised when a scenario file cannot be parsed or fails validation."""

    def __init__(
        self: InvalidScenarioError,
        message: str = "Invalid scenario file",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class InvalidFockSpaceError(ValueError):
    """Raised when a Fock space has fewer than one level."""

    def __init__(
        self: InvalidFockSpaceError,
        message: str = "Fock space dimension must be at least 1",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class SpaceMismatchError(ValueError):
    """Raised when operands live on Fock spaces of different dimension."""

    def __init__(
        self: SpaceMismatchError,
        message: str = "Operands belong to different Fock spaces",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class TruncationInadequateError(ScenarioError):
    """Raised when a Fock space is too small for a coherent label."""

    def __init__(
        self: TruncationInadequateError,
        message: str = "Fock space too small for the coherent label",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class ZeroStateError(ScenarioError):
    """Raised when a superposition has (numerically) zero norm."""

    def __init__(
        self: ZeroStateError,
        message: str = "Superposition has zero norm",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class InvalidDensityMatrixError(ValueError):
    """Raised when a matrix violates a density-matrix invariant."""

    def __init__(
        self: InvalidDensityMatrixError,
        message: str = "Matrix is not a valid density matrix",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class NonHermitianObservableError(ValueError):
    """Raised when an observable matrix is not Hermitian."""

    def __init__(
        self: NonHermitianObservableError,
        message: str = "Observable is not Hermitian",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class NonOrthonormalBasisError(ValueError):
    """Raised when a basis is not orthonormal or does not carry the state."""

    def __init__(
        self: NonOrthonormalBasisError,
        message: str = "Basis is not orthonormal",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class InvalidSpectralDensityError(ScenarioError):
    """Raised when a spectral density has invalid parameters or samples."""

    def __init__(
        self: InvalidSpectralDensityError,
        message: str = "Invalid spectral density",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class OutOfHullError(ScenarioError):
    """Raised when a tabulated density is queried outside its grid."""

    def __init__(
        self: OutOfHullError,
        message: str = "Frequency outside the tabulated grid",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class NotAResonanceError(ScenarioError):
    """Raised when a frequency lies outside the support of the density."""

    def __init__(
        self: NotAResonanceError,
        message: str = "Frequency is not embedded in the continuum",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class QuadratureConvergenceError(ValueError):
    """Raised when a quadrature error estimate exceeds its tolerance."""

    def __init__(
        self: QuadratureConvergenceError,
        message: str = "Quadrature did not converge",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class FreeSystemError(ScenarioError):
    """Raised when the coupling vanishes at the bare frequency."""

    def __init__(
        self: FreeSystemError,
        message: str = "Free system: the spectral density vanishes at the "
        "bare frequency, so there is no decay",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class NonDecayingPoleError(ValueError):
    """Raised when a pole or a decay mode has a non-positive width."""

    def __init__(
        self: NonDecayingPoleError,
        message: str = "Width must be positive",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class InvalidLadderSizeError(ValueError):
    """Raised when a pole ladder is requested with fewer than one member."""

    def __init__(
        self: InvalidLadderSizeError,
        message: str = "Pole ladder needs n_max >= 1",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class LengthMismatchError(ValueError):
    """Raised when coefficient lists have different lengths."""

    def __init__(
        self: LengthMismatchError,
        message: str = "Coefficient lists have different lengths",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class AntiCausalTimeError(ValueError):
    """Raised when a decaying evolution is queried at negative time."""

    def __init__(
        self: AntiCausalTimeError,
        message: str = "Time must be non-negative",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class NegativeMagnitudeError(ValueError):
    """Raised when a squared label magnitude is negative."""

    def __init__(
        self: NegativeMagnitudeError,
        message: str = "Squared magnitude must be non-negative",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class EmptyExpansionError(ValueError):
    """Raised when an operation needs at least one decay mode."""

    def __init__(
        self: EmptyExpansionError,
        message: str = "Mode expansion has no decay modes",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class DegenerateExpansionError(ValueError):
    """Raised when the amplitude sum of an expansion vanishes."""

    def __init__(
        self: DegenerateExpansionError,
        message: str = "Amplitude sum vanishes; the effective width is undefined",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class NonPositiveAmplitudeSumError(ValueError):
    """Raised when the logarithm of a non-positive amplitude sum is needed."""

    def __init__(
        self: NonPositiveAmplitudeSumError,
        message: str = "Amplitude sum must be positive",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class InvalidModelOrderError(ValueError):
    """Raised when a mode-extraction order is smaller than one."""

    def __init__(
        self: InvalidModelOrderError,
        message: str = "Model order must be at least 1",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class InsufficientSamplesError(ValueError):
    """Raised when a signal is too short for the requested model order."""

    def __init__(
        self: InsufficientSamplesError,
        message: str = "Not enough samples for the requested model order",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class NonUniformSamplingError(ValueError):
    """Raised when samples are not uniformly spaced in time."""

    def __init__(
        self: NonUniformSamplingError,
        message: str = "Samples must be uniformly spaced",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class RankDeficiencyError(ValueError):
    """Raised when the data support fewer modes than requested."""

    def __init__(
        self: RankDeficiencyError,
        message: str = "Signal rank is below the requested model order",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class EntryExtractionError(ValueError):
    """Raised when mode extraction fails on one matrix entry."""

    def __init__(
        self: EntryExtractionError,
        message: str = "Mode extraction failed",
        index: Optional[tuple[int, int]] = None,
    ) -> None:
        """Initialize the exception."""
        self.index = index
        if index is not None:
            message = f"{message} (entry {index[0]}, {index[1]})"
        super().__init__(message)


class GridCoverageError(ScenarioError):
    """Raised when a time grid does not resolve the relaxation time."""

    def __init__(
        self: GridCoverageError,
        message: str = "Time grid must cover three decades around the "
        "relaxation time",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class GridMismatchError(ValueError):
    """Raised when two time grids that must agree differ."""

    def __init__(
        self: GridMismatchError,
        message: str = "Time grids do not match",
    ) -> None:
        """Initialize the exception."""
        super().__init__(message)


class VerificationFailedError(RuntimeError):
    """Raised when one or more acceptance criteria fail."""

    def __init__(
        self: VerificationFailedError,
        message: str = "Verification failed",
        failed: tuple[str, ...] = (),
    ) -> None:
        """Initialize the exception."""
        self.failed = failed
        if failed:
            message = f"{message}: {', '.join(failed)}"
        super().__init__(message)
