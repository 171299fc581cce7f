"""Truncated Fock-space states, density matrices, coherent states and observables."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Union

import numpy as np
from scipy.special import gammaln

from pole_decoherence.utils.enums import OnError
from pole_decoherence.utils.exceptions import (
    InvalidDensityMatrixError,
    InvalidFockSpaceError,
    NonHermitianObservableError,
    NonOrthonormalBasisError,
    SpaceMismatchError,
    TruncationInadequateError,
    ZeroStateError,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike

logger = logging.getLogger(__name__)

# Relative norm below which a superposition counts as destructive cancellation.
_ZERO_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by every structural check."""

    herm: float = 1e-10
    trace: float = 1e-10
    orth: float = 1e-10
    psd: float = 1e-8
    trunc: float = 1e-9
    degen: float = 1e-8

    def updated(self: Tolerances, **overrides: float) -> Tolerances:
        """Return a copy with some tolerances replaced."""
        return replace(self, **{key: float(value) for key, value in overrides.items()})


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class FockSpace:
    """Number states |0⟩ … |dim − 1⟩ of a single bosonic mode."""

    dim: int

    def __post_init__(self: FockSpace) -> None:
        """Validate the dimension."""
        if isinstance(self.dim, bool) or int(self.dim) != self.dim or self.dim < 1:
            raise InvalidFockSpaceError
        object.__setattr__(self, "dim", int(self.dim))


@dataclass(frozen=True)
class CoherentLabel:
    """Complex displacement α labelling the coherent state |α⟩."""

    alpha: complex

    def __post_init__(self: CoherentLabel) -> None:
        """Coerce the label to a finite complex number."""
        value = complex(self.alpha)
        if not np.isfinite(value):
            msg = f"Coherent label must be finite, got {self.alpha!r}"
            raise ValueError(msg)
        object.__setattr__(self, "alpha", value)

    @property
    def magnitude_sq(self: CoherentLabel) -> float:
        """|α|², the mean excitation number of the coherent state."""
        return abs(self.alpha) ** 2


def _frozen(values: ArrayLike, shape: tuple[int, ...]) -> np.ndarray:
    array = np.array(values, dtype=complex)
    if array.shape != shape:
        msg = f"Expected shape {shape}, got {array.shape}"
        raise SpaceMismatchError(msg)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    """Fock-basis amplitudes of a (possibly unnormalized) state."""

    components: np.ndarray
    space: FockSpace

    def __post_init__(self: StateVector) -> None:
        """Freeze a copy of the components."""
        object.__setattr__(
            self,
            "components",
            _frozen(self.components, (self.space.dim,)),
        )

    @property
    def norm_sq(self: StateVector) -> float:
        """Squared norm Σ|c_n|²."""
        return float(np.vdot(self.components, self.components).real)

    def inner(self: StateVector, other: StateVector) -> complex:
        """Inner product ⟨self|other⟩."""
        if other.space != self.space:
            raise SpaceMismatchError
        return complex(np.vdot(self.components, other.components))

    def normalized(self: StateVector) -> StateVector:
        """Return the state scaled to unit norm."""
        norm = np.sqrt(self.norm_sq)
        if norm == 0:
            raise ZeroStateError
        return StateVector(self.components / norm, self.space)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density operator on a truncated Fock space.

    Construction does not validate; call :meth:`check` (or use a factory that
    does) before relying on the Hermitian, unit-trace and positivity
    invariants.
    """

    entries: np.ndarray
    space: FockSpace

    def __post_init__(self: DensityMatrix) -> None:
        """Freeze a copy of the entries."""
        dim = self.space.dim
        object.__setattr__(self, "entries", _frozen(self.entries, (dim, dim)))

    @property
    def trace(self: DensityMatrix) -> complex:
        """Tr ρ."""
        return complex(np.trace(self.entries))

    def hermiticity_error(self: DensityMatrix) -> float:
        """max|ρ − ρ†|."""
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def min_eigenvalue(self: DensityMatrix) -> float:
        """Smallest eigenvalue of the Hermitian part."""
        hermitian = (self.entries + self.entries.conj().T) / 2
        return float(np.linalg.eigvalsh(hermitian)[0])

    def check(
        self: DensityMatrix,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
        *,
        errors: Union[OnError, str] = "raise",
    ) -> bool:
        """Check the Hermitian, unit-trace and positivity invariants.

        :param tolerances: Tolerances to check against.
        :type tolerances: Tolerances
        :param errors: The error handling behavior. Defaults to "raise".
        :type errors: Union[OnError, str]
        :return: True if every invariant holds, False otherwise (ignore mode).
        :rtype: bool
        :raises InvalidDensityMatrixError: If an invariant is violated.
        """
        errors = OnError.from_any(errors)
        problems = []
        if (herm := self.hermiticity_error()) > tolerances.herm:
            problems.append(f"Hermiticity error {herm:.3e}")
        if (trace_error := abs(self.trace - 1)) > tolerances.trace:
            problems.append(f"trace error {trace_error:.3e}")
        if (lowest := self.min_eigenvalue()) < -tolerances.psd:
            problems.append(f"negative eigenvalue {lowest:.3e}")
        if not problems:
            return True
        if errors == OnError.RAISE:
            raise InvalidDensityMatrixError("; ".join(problems))
        return False

    def spectrum(
        self: DensityMatrix,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending) and eigenvectors of the Hermitian part.

        Negative eigenvalues within ``tolerances.psd`` are clipped to zero;
        larger ones raise.

        :raises InvalidDensityMatrixError: If an eigenvalue is below -psd.
        """
        hermitian = (self.entries + self.entries.conj().T) / 2
        values, vectors = np.linalg.eigh(hermitian)
        if values[0] < -tolerances.psd:
            msg = f"negative eigenvalue {values[0]:.3e}"
            raise InvalidDensityMatrixError(msg)
        return np.clip(values, 0.0, None), vectors


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator on a truncated Fock space."""

    entries: np.ndarray
    space: FockSpace
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False)

    def __post_init__(self: Observable) -> None:
        """Freeze a copy of the entries and check Hermiticity."""
        dim = self.space.dim
        entries = _frozen(self.entries, (dim, dim))
        if np.max(np.abs(entries - entries.conj().T)) > self.tolerances.herm:
            raise NonHermitianObservableError
        object.__setattr__(self, "entries", entries)


def vacuum(space: FockSpace) -> StateVector:
    """The number state |0⟩."""
    components = np.zeros(space.dim, dtype=complex)
    components[0] = 1.0
    return StateVector(components, space)


def projector(state: StateVector) -> DensityMatrix:
    """|ψ⟩⟨ψ| for a normalized ψ."""
    components = state.components
    return DensityMatrix(np.outer(components, components.conj()), state.space)


def number_operator(space: FockSpace) -> Observable:
    """N = a†a, diagonal in the Fock basis."""
    return Observable(np.diag(np.arange(space.dim, dtype=float)), space)


def identity_operator(space: FockSpace) -> Observable:
    """The identity on the truncated space."""
    return Observable(np.eye(space.dim), space)


def truncation_adequate(label: CoherentLabel, space: FockSpace) -> bool:
    """Whether dim ≥ |α|² + 8·sqrt(|α|² + 1)."""
    mean = label.magnitude_sq
    return mean + 8 * np.sqrt(mean + 1) <= space.dim


def coherent_vector(
    label: CoherentLabel,
    space: FockSpace,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> StateVector:
    """Fock expansion c_n = e^{−|α|²/2} αⁿ/sqrt(n!) of the coherent state |α⟩.

    The coefficients are evaluated in log form so large |α| does not overflow.

    :param label: The coherent label α.
    :type label: CoherentLabel
    :param space: The truncated Fock space.
    :type space: FockSpace
    :param tolerances: Tolerances; ``trunc`` bounds the leaked norm.
    :type tolerances: Tolerances
    :return: The truncated coherent state.
    :rtype: StateVector
    :raises TruncationInadequateError: If the space is too small for |α|.

    >>> coherent_vector(CoherentLabel(0), FockSpace(4)).components.real
    array([1., 0., 0., 0.])
    """
    if label.alpha == 0:
        return vacuum(space)
    if not truncation_adequate(label, space):
        needed = label.magnitude_sq + 8 * np.sqrt(label.magnitude_sq + 1)
        msg = (
            f"dim={space.dim} is too small for |alpha|^2={label.magnitude_sq:.6g}; "
            f"need at least {needed:.1f}"
        )
        raise TruncationInadequateError(msg)
    levels = np.arange(space.dim)
    log_magnitude = (
        -label.magnitude_sq / 2
        + levels * np.log(abs(label.alpha))
        - gammaln(levels + 1) / 2
    )
    components = np.exp(log_magnitude + 1j * levels * np.angle(label.alpha))
    state = StateVector(components, space)
    if abs(state.norm_sq - 1) > tolerances.trunc:
        msg = f"Leaked norm {abs(state.norm_sq - 1):.3e} exceeds {tolerances.trunc:.1e}"
        raise TruncationInadequateError(msg)
    return state


def coherent_inner(alpha: CoherentLabel, beta: CoherentLabel) -> complex:
    """Analytic overlap ⟨α|β⟩ = e^{−(|α|²+|β|²)/2 + α*β}."""
    return complex(
        np.exp(
            -(alpha.magnitude_sq + beta.magnitude_sq) / 2
            + np.conj(alpha.alpha) * beta.alpha,
        ),
    )


def superposition_density(  # noqa: PLR0913
    a: complex,
    b: complex,
    alpha1: CoherentLabel,
    alpha2: CoherentLabel,
    space: FockSpace,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> DensityMatrix:
    """Normalized projector onto a|α₁⟩ + b|α₂⟩.

    :raises ZeroStateError: If the superposition vanishes (a = b = 0 or
        destructive cancellation below the numeric floor).
    :raises TruncationInadequateError: If either label needs a larger space.
    """
    scale = abs(a) ** 2 + abs(b) ** 2
    if scale == 0:
        raise ZeroStateError
    psi = (
        a * coherent_vector(alpha1, space, tolerances=tolerances).components
        + b * coherent_vector(alpha2, space, tolerances=tolerances).components
    )
    state = StateVector(psi, space)
    if state.norm_sq <= _ZERO_NORM_FLOOR * scale:
        msg = f"Superposition norm {state.norm_sq:.3e} is below the numeric floor"
        raise ZeroStateError(msg)
    rho = projector(state.normalized())
    rho.check(tolerances)
    return rho


def equilibrium_projector(space: FockSpace) -> DensityMatrix:
    """|0⟩⟨0|."""
    return projector(vacuum(space))


def expectation(
    rho: DensityMatrix,
    obs: Observable,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """Tr(ρO), checked to be real within ``tolerances.herm``.

    :raises SpaceMismatchError: If ρ and O act on different spaces.
    :raises InvalidDensityMatrixError: If the imaginary residue is too large.
    """
    if rho.space != obs.space:
        raise SpaceMismatchError
    value = complex(np.sum(rho.entries * obs.entries.T))
    if abs(value.imag) > tolerances.herm * max(1.0, abs(value.real)):
        msg = f"Expectation value has imaginary part {value.imag:.3e}"
        raise InvalidDensityMatrixError(msg)
    return value.real


def basis_matrix(
    basis: Union[Sequence[StateVector], np.ndarray],
    space: FockSpace,
) -> np.ndarray:
    """Stack basis vectors as the columns of a dim × k matrix."""
    if isinstance(basis, np.ndarray):
        columns = np.asarray(basis, dtype=complex)
        if columns.ndim != 2 or columns.shape[0] != space.dim:  # noqa: PLR2004
            raise SpaceMismatchError
        return columns
    if any(vector.space != space for vector in basis):
        raise SpaceMismatchError
    return np.column_stack([vector.components for vector in basis])


def offdiagonal_mass(
    rho: DensityMatrix,
    basis: Union[Sequence[StateVector], np.ndarray],
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """Frobenius norm of the off-diagonal part of ρ written in ``basis``.

    :param rho: The density matrix.
    :type rho: DensityMatrix
    :param basis: Orthonormal vectors, as StateVectors or matrix columns.
    :type basis: Union[Sequence[StateVector], np.ndarray]
    :param tolerances: ``orth`` bounds the Gram error, ``trunc`` the weight of
        ρ outside the span.
    :type tolerances: Tolerances
    :return: sqrt(Σ_{i≠j} |⟨i|ρ|j⟩|²)
    :rtype: float
    :raises NonOrthonormalBasisError: If the basis is not orthonormal or does
        not carry the state.
    """
    columns = basis_matrix(basis, rho.space)
    gram = columns.conj().T @ columns
    if np.max(np.abs(gram - np.eye(gram.shape[0]))) > tolerances.orth:
        raise NonOrthonormalBasisError
    in_basis = columns.conj().T @ rho.entries @ columns
    carried = np.trace(in_basis).real
    if carried < (1 - tolerances.trunc) * rho.trace.real:
        msg = f"Basis carries only {carried:.6g} of the trace"
        raise NonOrthonormalBasisError(msg)
    off_diagonal = in_basis - np.diag(np.diag(in_basis))
    return float(np.linalg.norm(off_diagonal))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """½‖ρ − σ‖₁."""
    if rho.space != sigma.space:
        raise SpaceMismatchError
    difference = rho.entries - sigma.entries
    difference = (difference + difference.conj().T) / 2
    return float(np.sum(np.abs(np.linalg.eigvalsh(difference))) / 2)
