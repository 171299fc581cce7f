"""Non-unitary pole evolution of two coherent branches under H_eff = z₀N.

Times are in natural units (ħ = 1) unless a function takes ``hbar``.

The reduced state is written in the frame of the evolved branches
|u_i(t)⟩ = |α_i e^{−iz₀t}⟩:

    ρ_S(t) = Σ_ij C_ij(t)|u_i(t)⟩⟨u_j(t)| + δ(t)|0⟩⟨0|

with C_ij = w_i w_j*·sqrt(s_i s_j)·K_ij for the normalized weights w, the branch
survivals s_i = e^{−|α_i|²(1−e^{−γ₀t})} and the overlap factors K_ii = 1,
K₁₂ = ⟨α₂|α₁⟩/⟨α₂(t)|α₁(t)⟩. The pole evolution loses norm, and δ = 1 − Tr of
the dyad part is deposited on the vacuum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Union

import numpy as np
from scipy.stats import poisson

from pole_decoherence.mode_analysis import DecayMode, ModeExpansion
from pole_decoherence.quantum_core import (
    DEFAULT_TOLERANCES,
    CoherentLabel,
    DensityMatrix,
    FockSpace,
    StateVector,
    Tolerances,
    coherent_inner,
    coherent_vector,
    equilibrium_projector,
)
from pole_decoherence.utils.enums import OnError
from pole_decoherence.utils.exceptions import (
    AntiCausalTimeError,
    LengthMismatchError,
    NegativeMagnitudeError,
    ZeroStateError,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

    from pole_decoherence.spectral_poles import Pole

logger = logging.getLogger(__name__)

_ZERO_NORM_FLOOR = 1e-12


def _check_causal(t: float) -> None:
    if t < 0:
        msg = f"Decaying evolution queried at t = {t!r} < 0"
        raise AntiCausalTimeError(msg)


def _phase_decay(pole: Pole, t: float, hbar: float = 1.0) -> complex:
    """e^{−iz₀t/ħ}."""
    return complex(np.exp(-1j * pole.z * t / hbar))


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """H_eff = z₀N, diagonal in the Fock basis with eigenvalues n·z₀."""

    pole: Pole

    def eigenvalues(self: EffectiveHamiltonian, space: FockSpace) -> np.ndarray:
        """n·z₀ for n < dim."""
        return np.arange(space.dim) * self.pole.z

    def matrix(self: EffectiveHamiltonian, space: FockSpace) -> np.ndarray:
        """Dense (non-Hermitian) matrix of H_eff."""
        return np.diag(self.eigenvalues(space))

    def propagate(
        self: EffectiveHamiltonian,
        vector: StateVector,
        t: float,
    ) -> StateVector:
        """e^{−iH_eff t}|ψ⟩; each Fock level evolves on its own."""
        _check_causal(t)
        factors = np.exp(-1j * self.eigenvalues(vector.space) * t)
        return StateVector(vector.components * factors, vector.space)


@dataclass(frozen=True)
class EvolvedBranch:
    """Coherent branch |α⟩ carried by the pole evolution."""

    initial: CoherentLabel
    pole: Pole

    def label(self: EvolvedBranch, t: float) -> CoherentLabel:
        """α·e^{−iz₀t}, a spiral shrinking as e^{−γ₀t/2}."""
        _check_causal(t)
        return CoherentLabel(self.initial.alpha * _phase_decay(self.pole, t))

    def survival(self: EvolvedBranch, t: float) -> float:
        """Norm² of the propagated branch, e^{−|α|²(1 − e^{−γ₀t})}."""
        _check_causal(t)
        return float(np.exp(self.initial.magnitude_sq * np.expm1(-self.pole.gamma * t)))

    def vector(
        self: EvolvedBranch,
        space: FockSpace,
        t: float,
        *,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ) -> StateVector:
        """The renormalized propagated branch |α(t)⟩ in the Fock basis."""
        initial = coherent_vector(self.initial, space, tolerances=tolerances)
        propagated = EffectiveHamiltonian(self.pole).propagate(initial, t)
        return StateVector(propagated.components / np.sqrt(self.survival(t)), space)


def amplitude(
    a_coeffs: Sequence[complex],
    b_coeffs: Sequence[complex],
    pole: Pole,
    t: float,
    *,
    hbar: float = 1.0,
) -> complex:
    """Transition amplitude A(t) = Σ_n b_n a_n* e^{−inz₀t/ħ}.

    :param a_coeffs: Fock coefficients a_n.
    :type a_coeffs: Sequence[complex]
    :param b_coeffs: Fock coefficients b_n.
    :type b_coeffs: Sequence[complex]
    :param pole: The pole z₀.
    :type pole: Pole
    :param t: Time ≥ 0.
    :type t: float
    :param hbar: Reduced Planck constant.
    :type hbar: float
    :return: A(t).
    :rtype: complex
    :raises LengthMismatchError: If the coefficient lists differ in length.
    :raises AntiCausalTimeError: If t < 0.
    """
    a_coeffs = np.asarray(a_coeffs, dtype=complex)
    b_coeffs = np.asarray(b_coeffs, dtype=complex)
    if a_coeffs.shape != b_coeffs.shape:
        raise LengthMismatchError
    _check_causal(t)
    levels = np.arange(a_coeffs.size)
    phases = np.exp(-1j * levels * pole.z * t / hbar)
    return complex(np.sum(b_coeffs * a_coeffs.conj() * phases))


def coherent_overlap(
    alpha_i: CoherentLabel,
    alpha_j: CoherentLabel,
    pole: Pole,
    t: float,
    *,
    hbar: float = 1.0,
) -> complex:
    """⟨α_i|e^{−iH_eff t/ħ}|α_j⟩ = e^{−(|α_i|²+|α_j|²)/2}·e^{α_i*α_j e^{−iz₀t/ħ}}.

    :raises AntiCausalTimeError: If t < 0.
    """
    _check_causal(t)
    exponent = -(alpha_i.magnitude_sq + alpha_j.magnitude_sq) / 2 + np.conj(
        alpha_i.alpha,
    ) * alpha_j.alpha * _phase_decay(pole, t, hbar)
    return complex(np.exp(exponent))


def offdiag_factor(
    alpha2_magnitude_sq: float,
    pole: Pole,
    t: float,
    *,
    hbar: float = 1.0,
) -> float:
    """Closed-form coherence decay e^{−|α₂|²(1 − e^{−γ₀t/ħ})}.

    :raises NegativeMagnitudeError: If the squared magnitude is negative.
    :raises AntiCausalTimeError: If t < 0.
    """
    if alpha2_magnitude_sq < 0:
        raise NegativeMagnitudeError
    _check_causal(t)
    return float(np.exp(alpha2_magnitude_sq * np.expm1(-pole.gamma * t / hbar)))


def offdiag_weight_expansion(alpha2_magnitude_sq: float, pole: Pole) -> ModeExpansion:
    """Exact decay-mode expansion of :func:`offdiag_factor`.

    e^{−S(1−e^{−γ₀t})} = e^{−S}·Σ_k S^k e^{−kγ₀t}/k!, so the equilibrium is
    e^{−S} and mode k has width k·γ₀ and the Poisson weight of k. The sum is
    cut where the Poisson tail is negligible.

    :raises NegativeMagnitudeError: If the squared magnitude is negative.
    """
    if alpha2_magnitude_sq < 0:
        raise NegativeMagnitudeError
    mean = float(alpha2_magnitude_sq)
    top = int(np.ceil(mean + 12 * np.sqrt(mean) + 30))
    orders = np.arange(1, top + 1)
    weights = poisson.pmf(orders, mean) if mean > 0 else np.zeros(orders.size)
    modes = tuple(
        DecayMode(float(weight), int(order) * pole.gamma)
        for order, weight in zip(orders, weights)
        if weight > 0
    )
    return ModeExpansion(float(np.exp(-mean)), modes)


def linearized_offdiag_expansion(separation: float, pole: Pole) -> ModeExpansion:
    """Short-time form e^{−Sγ₀t} of the off-diagonal factor, one mode of width Sγ₀.

    :raises NegativeMagnitudeError: If the separation is negative.
    """
    if separation < 0:
        raise NegativeMagnitudeError
    if separation == 0:
        return ModeExpansion(1.0, ())
    return ModeExpansion(0.0, (DecayMode(1.0, float(separation) * pole.gamma),))


def _normalized_weights(
    a: complex,
    b: complex,
    alpha1: CoherentLabel,
    alpha2: CoherentLabel,
) -> tuple[complex, complex]:
    scale = abs(a) ** 2 + abs(b) ** 2
    if scale == 0:
        raise ZeroStateError
    norm_sq = scale + 2 * (a * np.conj(b) * coherent_inner(alpha2, alpha1)).real
    if norm_sq <= _ZERO_NORM_FLOOR * scale:
        msg = f"Superposition norm {norm_sq:.3e} is below the numeric floor"
        raise ZeroStateError(msg)
    norm = np.sqrt(norm_sq)
    return complex(a) / norm, complex(b) / norm


def _overlap_factor(
    alpha1: CoherentLabel,
    alpha2: CoherentLabel,
    pole: Pole,
    t: float,
) -> complex:
    """⟨α₂|α₁⟩/⟨α₂(t)|α₁(t)⟩ = e^{B(1−e^{−γ₀t})}, B = −½|α₁−α₂|² + i·Im(α₂*α₁)."""
    exponent = -abs(alpha1.alpha - alpha2.alpha) ** 2 / 2 + 1j * (
        np.conj(alpha2.alpha) * alpha1.alpha
    ).imag
    return complex(np.exp(-exponent * np.expm1(-pole.gamma * t)))


def _branch_coefficients(
    weights: tuple[complex, complex],
    alpha1: CoherentLabel,
    alpha2: CoherentLabel,
    pole: Pole,
    t: float,
) -> np.ndarray:
    """C_ij(t) = w_i w_j*·sqrt(s_i s_j)·K_ij in the evolved-branch frame."""
    amplitudes = np.array(weights, dtype=complex) * np.sqrt(
        [EvolvedBranch(alpha, pole).survival(t) for alpha in (alpha1, alpha2)],
    )
    coefficients = np.outer(amplitudes, amplitudes.conj())
    coefficients[0, 1] *= _overlap_factor(alpha1, alpha2, pole, t)
    coefficients[1, 0] = np.conj(coefficients[0, 1])
    return coefficients


@dataclass(frozen=True, eq=False)
class PoleEvolvedState:
    """Reduced state of the two-branch superposition at one time."""

    time: float
    weights: tuple[complex, complex]
    labels: tuple[CoherentLabel, CoherentLabel]
    branches: tuple[StateVector, StateVector]
    coefficients: np.ndarray
    compensation: float
    density: DensityMatrix = field(repr=False)

    @property
    def initial_coherence(self: PoleEvolvedState) -> complex:
        """C₁₂(0) = w₁w₂*."""
        return self.weights[0] * np.conj(self.weights[1])

    @property
    def coherence(self: PoleEvolvedState) -> complex:
        """C₁₂(t)."""
        return complex(self.coefficients[0, 1])

    def frame(self: PoleEvolvedState) -> np.ndarray:
        """dim × 2 matrix of the branch vectors."""
        return np.column_stack([branch.components for branch in self.branches])


def evolve_superposition(  # noqa: PLR0913
    a: complex,
    b: complex,
    alpha1: CoherentLabel,
    alpha2: CoherentLabel,
    pole: Pole,
    t: float,
    space: FockSpace,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> PoleEvolvedState:
    """Evolve a|α₁⟩ + b|α₂⟩ to time t and build the reduced state.

    The missing trace of the dyad part is added to the vacuum population.

    :raises AntiCausalTimeError: If t < 0.
    :raises ZeroStateError: If the superposition vanishes.
    :raises TruncationInadequateError: If the space is too small for a label.
    :raises InvalidDensityMatrixError: If the result violates an invariant.
    """
    _check_causal(t)
    w1, w2 = _normalized_weights(a, b, alpha1, alpha2)
    evolved = (EvolvedBranch(alpha1, pole), EvolvedBranch(alpha2, pole))
    branches = tuple(
        branch.vector(space, t, tolerances=tolerances) for branch in evolved
    )
    coefficients = _branch_coefficients((w1, w2), alpha1, alpha2, pole, t)
    frame = np.column_stack([branch.components for branch in branches])
    raw = frame @ coefficients @ frame.conj().T
    compensation = float(1 - np.trace(raw).real)
    raw[0, 0] += compensation
    density = DensityMatrix(raw, space)
    density.check(tolerances)
    logger.debug("t=%g: vacuum compensation %.3e", t, compensation)
    return PoleEvolvedState(
        time=t,
        weights=(w1, w2),
        labels=(evolved[0].label(t), evolved[1].label(t)),
        branches=branches,
        coefficients=coefficients,
        compensation=compensation,
        density=density,
    )


def reduced_state(  # noqa: PLR0913
    a: complex,
    b: complex,
    alpha1: CoherentLabel,
    alpha2: CoherentLabel,
    pole: Pole,
    t: float,
    space: FockSpace,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> DensityMatrix:
    """ρ_S(t) of the two-branch superposition, a valid density matrix for all t ≥ 0."""
    return evolve_superposition(
        a,
        b,
        alpha1,
        alpha2,
        pole,
        t,
        space,
        tolerances=tolerances,
    ).density


def coherence_ratio(
    state: PoleEvolvedState,
    *,
    errors: Union[OnError, str] = "raise",
) -> complex:
    """C₁₂(t)/C₁₂(0), the surviving coefficient of |α₁(t)⟩⟨α₂(t)|.

    For a vacuum first branch this is e^{−|α₂|²(1−e^{−γ₀t})}.

    :raises ZeroStateError: If the state never had a coherence (one branch).
    """
    errors = OnError.from_any(errors)
    initial = state.initial_coherence
    if initial == 0:
        if errors == OnError.RAISE:
            msg = "Superposition has a single branch and no coherence"
            raise ZeroStateError(msg)
        return complex("nan")
    return state.coherence / initial


def equilibrium_state(space: FockSpace) -> DensityMatrix:
    """The stationary state |0⟩⟨0| of the compensated evolution."""
    return equilibrium_projector(space)


def equilibrium_distance(  # noqa: PLR0913
    a: complex,
    b: complex,
    alpha1: CoherentLabel,
    alpha2: CoherentLabel,
    pole: Pole,
    t: float,
) -> float:
    """Trace distance of ρ_S(t) to |0⟩⟨0| without Fock truncation.

    ρ_S(t) − |0⟩⟨0| lives in the span of {|0⟩, |α₁(t)⟩, |α₂(t)⟩}; its nonzero
    eigenvalues are those of X·G with X the coefficients in that frame and G
    the analytic Gram matrix.
    """
    _check_causal(t)
    weights = _normalized_weights(a, b, alpha1, alpha2)
    labels = [
        CoherentLabel(0),
        EvolvedBranch(alpha1, pole).label(t),
        EvolvedBranch(alpha2, pole).label(t),
    ]
    gram = np.array(
        [[coherent_inner(left, right) for right in labels] for left in labels],
    )
    coefficients = np.zeros((3, 3), dtype=complex)
    coefficients[1:, 1:] = _branch_coefficients(weights, alpha1, alpha2, pole, t)
    # Vacuum compensation minus the equilibrium projector.
    coefficients[0, 0] = -np.trace(coefficients[1:, 1:] @ gram[1:, 1:]).real
    eigenvalues = np.linalg.eigvals(coefficients @ gram)
    return float(np.sum(np.abs(eigenvalues.real)) / 2)


def equilibrium_distance_closed_form(
    a: complex,
    b: complex,
    alpha2_magnitude_sq: float,
    pole: Pole,
    t: float,
) -> float:
    """Trace distance to |0⟩⟨0| for a vacuum first branch (α₁ = 0).

    With S = |α₂|², s = e^{−S(1−e^{−γ₀t})}, y = sqrt(1 − e^{−S·e^{−γ₀t}}) and
    g = e^{−S·e^{−γ₀t}/2} the distance is
    |w₂|·s·y·sqrt(|w₁|² + |w₂|² + 2g·Re(w₁w₂*)).
    """
    if alpha2_magnitude_sq < 0:
        raise NegativeMagnitudeError
    _check_causal(t)
    w1, w2 = _normalized_weights(
        a,
        b,
        CoherentLabel(0),
        CoherentLabel(np.sqrt(alpha2_magnitude_sq)),
    )
    shrunk = alpha2_magnitude_sq * np.exp(-pole.gamma * t)
    survival = offdiag_factor(alpha2_magnitude_sq, pole, t)
    spread = np.sqrt(-np.expm1(-shrunk))
    inner = (
        abs(w1) ** 2
        + abs(w2) ** 2
        + 2 * np.exp(-shrunk / 2) * (w1 * np.conj(w2)).real
    )
    return float(abs(w2) * survival * spread * np.sqrt(max(inner, 0.0)))


@dataclass(frozen=True)
class TwoBranchSystem:
    """Initial superposition a|α₁⟩ + b|α₂⟩ evolving under one pole, in natural units."""

    a: complex
    b: complex
    alpha1: CoherentLabel
    alpha2: CoherentLabel
    pole: Pole
    space: FockSpace
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False)

    @property
    def weights(self: TwoBranchSystem) -> tuple[complex, complex]:
        """Weights (w₁, w₂) normalizing the superposition."""
        return _normalized_weights(self.a, self.b, self.alpha1, self.alpha2)

    def coefficients(self: TwoBranchSystem, t: float) -> np.ndarray:
        """The branch-frame coefficients C_ij(t), without building vectors."""
        _check_causal(t)
        return _branch_coefficients(
            self.weights,
            self.alpha1,
            self.alpha2,
            self.pole,
            t,
        )

    def coherence(self: TwoBranchSystem, t: float) -> complex:
        """The branch-frame coherence C₁₂(t)."""
        return complex(self.coefficients(t)[0, 1])

    def evolve(self: TwoBranchSystem, t: float) -> PoleEvolvedState:
        """The evolved state at time t."""
        return evolve_superposition(
            self.a,
            self.b,
            self.alpha1,
            self.alpha2,
            self.pole,
            t,
            self.space,
            tolerances=self.tolerances,
        )
