"""Preferred state, moving preferred basis and its diagnostics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Union

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import linear_sum_assignment
from scipy.special import gammaln

from pole_decoherence.mode_analysis import (
    DecayMode,
    ModeExpansion,
    evaluate_expansion,
    extract_modes,
    gamma_eff,
)
from pole_decoherence.pole_evolution import EffectiveHamiltonian, EvolvedBranch
from pole_decoherence.quantum_core import (
    DEFAULT_TOLERANCES,
    CoherentLabel,
    DensityMatrix,
    FockSpace,
    Tolerances,
    coherent_vector,
    number_operator,
    offdiagonal_mass,
)
from pole_decoherence.utils.enums import GammaEffReading
from pole_decoherence.utils.exceptions import (
    AntiCausalTimeError,
    EntryExtractionError,
    GridCoverageError,
    GridMismatchError,
    RankDeficiencyError,
    SpaceMismatchError,
)

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from numpy.typing import ArrayLike

    from pole_decoherence.pole_evolution import TwoBranchSystem
    from pole_decoherence.spectral_poles import Pole

logger = logging.getLogger(__name__)

ROUND_TRIP_TOLERANCE = 1e-8
# Half-width, in decades, that a time grid must cover around the relaxation time.
COVERAGE_DECADES = 1.5

BRANCHES_COINCIDE = "branches-coincide"
DEGENERATE_LEADING_PAIR = "degenerate-leading-pair"
CLUSTER_SPLIT = "cluster-split"


@dataclass(frozen=True)
class EntryExpansion:
    """Mode expansions of the real and imaginary parts of one matrix entry."""

    real: ModeExpansion
    imag: ModeExpansion

    @classmethod
    def constant(cls: type[EntryExpansion], value: complex) -> EntryExpansion:
        """A stationary entry."""
        value = complex(value)
        return cls(ModeExpansion(value.real), ModeExpansion(value.imag))

    @classmethod
    def from_complex_modes(
        cls: type[EntryExpansion],
        equilibrium: complex,
        modes: Iterable[tuple[complex, float, float]],
    ) -> EntryExpansion:
        """Entry c₀ + Σ c·e^{−(γ + iω)t} from (c, γ, ω) triples."""
        real, imag = [], []
        for coefficient, width, omega in modes:
            if omega == 0:
                real.append(DecayMode(coefficient.real, width))
                imag.append(DecayMode(coefficient.imag, width))
            else:
                angle = float(np.angle(coefficient))
                real.append(DecayMode(abs(coefficient), width, omega, -angle))
                imag.append(
                    DecayMode(abs(coefficient), width, omega, np.pi / 2 - angle),
                )
        equilibrium = complex(equilibrium)
        return cls(
            ModeExpansion(equilibrium.real, tuple(real)),
            ModeExpansion(equilibrium.imag, tuple(imag)),
        )

    @property
    def equilibrium(self: EntryExpansion) -> complex:
        """Value as t → ∞."""
        return complex(self.real.equilibrium, self.imag.equilibrium)

    @property
    def modes(self: EntryExpansion) -> tuple[DecayMode, ...]:
        """Modes of both parts."""
        return self.real.modes + self.imag.modes

    def evaluate(self: EntryExpansion, t: float) -> complex:
        """Entry value at t."""
        return complex(
            evaluate_expansion(self.real, t),
            evaluate_expansion(self.imag, t),
        )

    def conjugate(self: EntryExpansion) -> EntryExpansion:
        """Expansion of the complex-conjugate entry."""
        return EntryExpansion(self.real, self.imag.negated())

    def envelope(self: EntryExpansion, t: float) -> float:
        """Σ|a|·e^{−γt}, bounding |entry(t) − equilibrium|."""
        return float(
            sum(abs(mode.amplitude) * np.exp(-mode.gamma * t) for mode in self.modes),
        )

    def linearized(self: EntryExpansion) -> Optional[DecayMode]:
        """One effective mode: weight Σ|a| and |a|-weighted mean width."""
        modes = self.modes
        if not modes:
            return None
        weights = np.array([abs(mode.amplitude) for mode in modes])
        widths = np.array([mode.gamma for mode in modes])
        total = float(weights.sum())
        return DecayMode(total, float(np.dot(weights, widths)) / total)


@dataclass(frozen=True)
class FockFrame:
    """The fixed number basis |0⟩ … |dim − 1⟩."""

    space: FockSpace

    @property
    def size(self: FockFrame) -> int:
        """Number of frame vectors."""
        return self.space.dim

    def vectors(self: FockFrame, t: float) -> np.ndarray:  # noqa: ARG002
        """Frame vectors as columns."""
        return np.eye(self.space.dim, dtype=complex)


@dataclass(frozen=True)
class BranchFrame:
    """The pole-evolved branches e^{−iH_eff t}|α_i⟩, of norm² s_i(t)."""

    space: FockSpace
    labels: tuple[CoherentLabel, CoherentLabel]
    pole: Pole
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False)

    @property
    def size(self: BranchFrame) -> int:
        """Number of frame vectors."""
        return 2

    def vectors(self: BranchFrame, t: float) -> np.ndarray:
        """Frame vectors as columns."""
        hamiltonian = EffectiveHamiltonian(self.pole)
        return np.column_stack(
            [
                hamiltonian.propagate(
                    coherent_vector(label, self.space, tolerances=self.tolerances),
                    t,
                ).components
                for label in self.labels
            ],
        )


ReferenceFrame = Union[FockFrame, BranchFrame]


@dataclass(frozen=True, eq=False)
class EntrywiseModeDecomposition:
    """ρ_S(t) = Σ_mn c_mn(t)|f_m(t)⟩⟨f_n(t)| + compensation·|0⟩⟨0|, c_mn in modes.

    The frame vectors need not be normalized. ``relaxation`` holds the modes
    carried by the motion of the frame itself (empty for the fixed Fock frame).
    """

    frame: ReferenceFrame
    entries: tuple[tuple[EntryExpansion, ...], ...]
    relaxation: tuple[DecayMode, ...] = ()

    def __post_init__(self: EntrywiseModeDecomposition) -> None:
        """Check the shape of the entry table."""
        size = self.frame.size
        if len(self.entries) != size or any(len(row) != size for row in self.entries):
            msg = f"Entry table must be {size} x {size}"
            raise SpaceMismatchError(msg)

    @property
    def space(self: EntrywiseModeDecomposition) -> FockSpace:
        """The Fock space of the reconstructed states."""
        return self.frame.space

    def entry(self: EntrywiseModeDecomposition, m: int, n: int) -> EntryExpansion:
        """Expansion of coefficient (m, n)."""
        return self.entries[m][n]

    def coefficients(
        self: EntrywiseModeDecomposition,
        t: float,
        fast: frozenset[tuple[int, int]] = frozenset(),
    ) -> np.ndarray:
        """Coefficient matrix at t; entries in ``fast`` keep only their equilibrium."""
        size = self.frame.size
        matrix = np.empty((size, size), dtype=complex)
        for m in range(size):
            for n in range(size):
                entry = self.entries[m][n]
                matrix[m, n] = (
                    entry.equilibrium if (m, n) in fast else entry.evaluate(t)
                )
        return matrix

    def operator(
        self: EntrywiseModeDecomposition,
        coefficients: np.ndarray,
        t: float,
    ) -> np.ndarray:
        """F(t)·C·F(t)† in the Fock basis, before compensation."""
        vectors = self.frame.vectors(t)
        return vectors @ coefficients @ vectors.conj().T

    def reconstruct(
        self: EntrywiseModeDecomposition,
        t: float,
        *,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ) -> DensityMatrix:
        """ρ_S(t) from every mode."""
        operator = self.operator(self.coefficients(t), t)
        return _compensated(operator, self.space, tolerances)[0]


def _compensated(
    raw: np.ndarray,
    space: FockSpace,
    tolerances: Tolerances,
) -> tuple[DensityMatrix, float, float]:
    """Deposit the missing trace on |0⟩⟨0| and Hermitize; return the corrections."""
    hermiticity = float(np.max(np.abs(raw - raw.conj().T))) / 2
    matrix = (raw + raw.conj().T) / 2
    trace = float(1 - np.trace(matrix).real)
    matrix[0, 0] += trace
    density = DensityMatrix(matrix, space)
    density.check(tolerances)
    return density, trace, hermiticity


def check_grid_coverage(times: ArrayLike, relaxation_time: float) -> None:
    """Require the grid to span 1.5 decades on both sides of the relaxation time.

    :raises GridCoverageError: If the grid is too narrow.
    """
    grid = np.asarray(times, dtype=float)
    factor = 10**COVERAGE_DECADES
    if grid.min() > relaxation_time / factor or grid.max() < relaxation_time * factor:
        msg = (
            f"Grid [{grid.min():.3g}, {grid.max():.3g}] does not cover "
            f"[{relaxation_time / factor:.3g}, {relaxation_time * factor:.3g}]"
        )
        raise GridCoverageError(msg)


def _coherence_modes(
    initial: complex,
    exponent: complex,
    gamma: float,
) -> tuple[complex, list[tuple[complex, float, float]]]:
    """Ladder expansion of initial·e^{B(1−e^{−γt})}.

    The coefficient is initial·e^{B}·Σ_k (−B)^k e^{−kγt}/k!.
    """
    equilibrium = initial * np.exp(exponent)
    if exponent == 0 or initial == 0:
        return initial, []
    size = abs(exponent)
    top = int(np.ceil(size + 12 * np.sqrt(size) + 30))
    orders = np.arange(1, top + 1)
    logs = exponent + orders * np.log(-exponent) - gammaln(orders + 1)
    coefficients = initial * np.exp(logs)
    return equilibrium, [
        (complex(coefficient), int(order) * gamma, 0.0)
        for order, coefficient in zip(orders, coefficients)
        if coefficient != 0
    ]


def decompose_entrywise(
    system: TwoBranchSystem,
    times: ArrayLike,
) -> EntrywiseModeDecomposition:
    """Analytic decomposition of the two-branch state in the pole-evolved frame.

    The frame vectors e^{−iH_eff t}|α_i⟩ carry the branch survival, so the
    populations |w_i|² are stationary and the coherence w₁w₂*·K₁₂(t) carries
    the pole ladder k·γ₀ with Poisson-type weights. The survival of each branch
    enters the pooled mode set as one relaxation mode of width γ₀. Each entry
    is re-evaluated on ``times`` against the closed form.

    :param system: The two-branch superposition.
    :type system: TwoBranchSystem
    :param times: Time grid covering 1.5 decades around ħ/γ₀ on both sides.
    :type times: ArrayLike
    :return: The decomposition.
    :rtype: EntrywiseModeDecomposition
    :raises GridCoverageError: If the grid is too narrow.
    :raises EntryExtractionError: If an entry misses its closed form on the grid.
    """
    grid = np.asarray(times, dtype=float)
    check_grid_coverage(grid, system.pole.lifetime)
    w1, w2 = system.weights
    exponent = complex(
        -abs(system.alpha1.alpha - system.alpha2.alpha) ** 2 / 2
        + 1j * (np.conj(system.alpha2.alpha) * system.alpha1.alpha).imag,
    )
    equilibrium, ladder = _coherence_modes(
        w1 * np.conj(w2),
        exponent,
        system.pole.gamma,
    )
    coherence = EntryExpansion.from_complex_modes(equilibrium, ladder)
    entries = (
        (EntryExpansion.constant(abs(w1) ** 2), coherence),
        (coherence.conjugate(), EntryExpansion.constant(abs(w2) ** 2)),
    )
    relaxation = tuple(
        DecayMode(abs(weight) ** 2 * -np.expm1(-label.magnitude_sq), system.pole.gamma)
        for weight, label in ((w1, system.alpha1), (w2, system.alpha2))
        if abs(weight) ** 2 * -np.expm1(-label.magnitude_sq) > 0
    )
    labels = (system.alpha1, system.alpha2)
    branches = [EvolvedBranch(label, system.pole) for label in labels]
    for t in grid:
        survival = np.sqrt(branches[0].survival(t) * branches[1].survival(t))
        error = abs(coherence.evaluate(t) * survival - system.coherence(t))
        if error > ROUND_TRIP_TOLERANCE:
            msg = f"Ladder expansion misses the closed form by {error:.3e} at t={t:g}"
            raise EntryExtractionError(msg, (0, 1))
    logger.debug(
        "branch-frame decomposition: %d coherence modes, %d relaxation modes",
        len(coherence.modes),
        len(relaxation),
    )
    frame = BranchFrame(system.space, labels, system.pole, system.tolerances)
    return EntrywiseModeDecomposition(frame, entries, relaxation)


def _extract_entry(
    times: np.ndarray,
    values: np.ndarray,
    model_order: int,
    index: tuple[int, int],
) -> ModeExpansion:
    """Extract one real signal, lowering the order while the data carry fewer modes."""
    samples = np.column_stack([times, values])
    for order in range(model_order, 0, -1):
        try:
            expansion = extract_modes(samples, order)
        except RankDeficiencyError:
            continue
        except ValueError as ex:
            raise EntryExtractionError(str(ex), index) from ex
        error = np.max(np.abs(evaluate_expansion(expansion, times) - values))
        if error > ROUND_TRIP_TOLERANCE * max(1.0, float(np.max(np.abs(values)))):
            msg = f"Extracted modes miss the samples by {error:.3e}"
            raise EntryExtractionError(msg, index)
        return expansion
    msg = "Signal supports no decay mode"
    raise EntryExtractionError(msg, index)


def decompose_trajectory(
    times: ArrayLike,
    matrices: ArrayLike,
    model_order: int,
) -> EntrywiseModeDecomposition:
    """Decompose a sampled trajectory of density matrices in the Fock frame.

    The upper triangle is extracted with :func:`extract_modes` (real and
    imaginary parts separately); the lower triangle is its conjugate mirror.

    :raises EntryExtractionError: If extraction fails on an entry; the error
        carries the entry index.
    """
    grid = np.asarray(times, dtype=float)
    stack = np.asarray(matrices, dtype=complex)
    if (
        stack.ndim != 3  # noqa: PLR2004
        or stack.shape[0] != grid.size
        or stack.shape[1] != stack.shape[2]
    ):
        msg = "Expected one square matrix per time"
        raise SpaceMismatchError(msg)
    if np.any(grid < 0):
        raise AntiCausalTimeError
    size = stack.shape[1]
    table: list[list[Optional[EntryExpansion]]] = [[None] * size for _ in range(size)]
    for m in range(size):
        for n in range(m, size):
            real = _extract_entry(grid, stack[:, m, n].real, model_order, (m, n))
            imag = _extract_entry(grid, stack[:, m, n].imag, model_order, (m, n))
            table[m][n] = EntryExpansion(real, imag)
            table[n][m] = table[m][n].conjugate()
    entries = tuple(tuple(row) for row in table)
    return EntrywiseModeDecomposition(FockFrame(FockSpace(size)), entries)


@dataclass(frozen=True)
class EntryClassification:
    """Slow/fast split of the entries of a decomposition."""

    gamma_eff: Optional[float]
    fast: frozenset[tuple[int, int]]


def classify_entries(decomp: EntrywiseModeDecomposition) -> EntryClassification:
    """Compare each entry's effective width with the pooled γ_eff.

    γ_eff averages the linearized entries and the frame relaxation modes over
    every mode; entries strictly faster than γ_eff are fast.

    :raises DegenerateExpansionError: If the pooled amplitude sum vanishes.
    """
    effective = {}
    for m, row in enumerate(decomp.entries):
        for n, entry in enumerate(row):
            if (mode := entry.linearized()) is not None:
                effective[(m, n)] = mode
    pooled = tuple(effective.values()) + decomp.relaxation
    if not pooled:
        return EntryClassification(gamma_eff=None, fast=frozenset())
    width = gamma_eff(ModeExpansion(0.0, pooled), reading=GammaEffReading.ALL)
    fast = frozenset(index for index, mode in effective.items() if mode.gamma > width)
    logger.debug("pooled gamma_eff=%.6g, %d fast entries", width, len(fast))
    return EntryClassification(gamma_eff=width, fast=fast)


@dataclass(frozen=True, eq=False)
class PreferredStateTrajectory:
    """ρ_P(t) on a time grid with the corrections applied at each time."""

    times: np.ndarray
    states: tuple[DensityMatrix, ...]
    trace_corrections: np.ndarray
    hermiticity_corrections: np.ndarray

    @property
    def space(self: PreferredStateTrajectory) -> FockSpace:
        """The Fock space of the states."""
        return self.states[0].space


def _preferred(
    decomp: EntrywiseModeDecomposition,
    t: float,
    classification: EntryClassification,
    tolerances: Tolerances,
) -> tuple[DensityMatrix, float, float]:
    if t < 0:
        raise AntiCausalTimeError
    raw = decomp.operator(decomp.coefficients(t, classification.fast), t)
    return _compensated(raw, decomp.space, tolerances)


def preferred_state(
    decomp: EntrywiseModeDecomposition,
    t: float,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> DensityMatrix:
    """ρ_P(t): equilibrium plus slow modes, vacuum-compensated and Hermitized.

    :raises AntiCausalTimeError: If t < 0.
    :raises DegenerateExpansionError: If the pooled γ_eff is undefined.
    """
    return _preferred(decomp, t, classify_entries(decomp), tolerances)[0]


def preferred_trajectory(
    decomp: EntrywiseModeDecomposition,
    times: ArrayLike,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> PreferredStateTrajectory:
    """ρ_P on a grid, recording the trace and Hermiticity corrections."""
    grid = np.asarray(times, dtype=float)
    classification = classify_entries(decomp)
    results = [_preferred(decomp, float(t), classification, tolerances) for t in grid]
    trace = np.array([result[1] for result in results])
    hermiticity = np.array([result[2] for result in results])
    if np.max(np.abs(trace)) > tolerances.trace:
        logger.warning(
            "vacuum compensation up to %.3e applied to the preferred state",
            np.max(np.abs(trace)),
        )
    return PreferredStateTrajectory(
        times=grid,
        states=tuple(result[0] for result in results),
        trace_corrections=trace,
        hermiticity_corrections=hermiticity,
    )


def truncation_bound(decomp: EntrywiseModeDecomposition, t: float) -> float:
    """Upper bound on ‖ρ_P(t) − ρ_S(t)‖_F.

    Σ over fast entries of their mode envelope times the frame-vector norms,
    plus |Tr| of the dropped part (the difference in vacuum compensation).
    """
    classification = classify_entries(decomp)
    if not classification.fast:
        return 0.0
    vectors = decomp.frame.vectors(t)
    norms = np.linalg.norm(vectors, axis=0)
    dropped = np.zeros((decomp.frame.size, decomp.frame.size), dtype=complex)
    envelope = 0.0
    for m, n in classification.fast:
        entry = decomp.entry(m, n)
        dropped[m, n] = entry.evaluate(t) - entry.equilibrium
        envelope += entry.envelope(t) * norms[m] * norms[n]
    return float(envelope + abs(np.trace(decomp.operator(dropped, t))))


@dataclass(frozen=True, eq=False)
class BasisTrajectory:
    """Moving eigenbasis of ρ_P(t).

    ``bases[k]`` holds the eigenvectors at ``times[k]`` as columns, sorted by
    descending eigenvalue. ``matches[k][i]`` is the column at step k + 1 that
    continues column i of step k and ``tracks[k][i]`` labels the continuous
    track the column belongs to.
    """

    times: np.ndarray
    eigenvalues: np.ndarray
    bases: np.ndarray
    degenerate: np.ndarray
    matches: tuple[np.ndarray, ...]
    tracks: np.ndarray
    space: FockSpace

    def basis(self: BasisTrajectory, k: int) -> np.ndarray:
        """Eigenvectors at step k as columns."""
        return self.bases[k]

    def orthonormality_error(self: BasisTrajectory) -> float:
        """max over times of max|V†V − 1|."""
        identity = np.eye(self.bases.shape[2])
        return float(
            max(
                np.max(np.abs(basis.conj().T @ basis - identity))
                for basis in self.bases
            ),
        )


def _clusters(values: np.ndarray, threshold: float) -> list[np.ndarray]:
    """Runs of consecutive eigenvalues with gaps below ``threshold``."""
    groups, start = [], 0
    for index in range(1, values.size + 1):
        if index == values.size or abs(values[index - 1] - values[index]) >= threshold:
            groups.append(np.arange(start, index))
            start = index
    return groups


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of every column real and positive."""
    pivots = np.argmax(np.abs(vectors), axis=0)
    components = vectors[pivots, np.arange(vectors.shape[1])]
    return vectors * (np.conj(components) / np.abs(components))


def _eigenbasis(
    state: DensityMatrix,
    number: np.ndarray,
    tolerances: Tolerances,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    values, vectors = state.spectrum(tolerances)
    values, vectors = values[::-1], vectors[:, ::-1]
    degenerate = np.zeros(values.size, dtype=bool)
    for cluster in _clusters(values, tolerances.degen):
        if cluster.size < 2:  # noqa: PLR2004
            continue
        degenerate[cluster] = True
        block = vectors[:, cluster]
        _, rotation = eigh(block.conj().T @ number @ block)
        vectors[:, cluster] = block @ rotation
    return values, _fix_phases(vectors), degenerate


def moving_basis(
    traj: PreferredStateTrajectory,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> BasisTrajectory:
    """Eigendecompose ρ_P(t) at every time and match eigenvectors across steps.

    Degenerate clusters (gaps below ``tolerances.degen``) are resolved by
    diagonalizing the number operator inside the cluster, ascending in ⟨N⟩,
    and flagged. Continuity between consecutive times is the assignment that
    maximizes Σ|⟨i(t_k)|j(t_{k+1})⟩|.

    :raises InvalidDensityMatrixError: If a state violates an invariant.
    """
    number = number_operator(traj.space).entries
    values, bases, flags = [], [], []
    for state in traj.states:
        state.check(tolerances)
        eigenvalues, vectors, degenerate = _eigenbasis(state, number, tolerances)
        values.append(eigenvalues)
        bases.append(vectors)
        flags.append(degenerate)
    matches = []
    tracks = [np.arange(traj.space.dim)]
    for previous, current in zip(bases[:-1], bases[1:]):
        _, columns = linear_sum_assignment(-np.abs(previous.conj().T @ current))
        matches.append(columns)
        following = np.empty_like(tracks[-1])
        following[columns] = tracks[-1]
        tracks.append(following)
    degenerate = np.array(flags)
    if degenerate.any():
        logger.debug(
            "degenerate eigenvalue clusters at %d time(s)",
            int(degenerate.any(axis=1).sum()),
        )
    return BasisTrajectory(
        times=np.asarray(traj.times, dtype=float),
        eigenvalues=np.array(values),
        bases=np.array(bases),
        degenerate=degenerate,
        matches=tuple(matches),
        tracks=np.array(tracks),
        space=traj.space,
    )


def _check_grid(times: ArrayLike, reference: np.ndarray) -> np.ndarray:
    grid = np.asarray(times, dtype=float)
    if grid.shape != reference.shape or not np.allclose(
        grid,
        reference,
        rtol=1e-12,
        atol=0,
    ):
        raise GridMismatchError
    return grid


def diagonality_report(
    states: Sequence[DensityMatrix],
    basis_traj: BasisTrajectory,
    times: ArrayLike,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> np.ndarray:
    """Off-diagonal mass of ρ_S(t_k) in the moving basis at t_k.

    :param states: ρ_S on the grid.
    :type states: Sequence[DensityMatrix]
    :param basis_traj: The moving basis on the same grid.
    :type basis_traj: BasisTrajectory
    :param times: The grid.
    :type times: ArrayLike
    :return: d(t_k) for every k.
    :rtype: np.ndarray
    :raises GridMismatchError: If the grids differ.
    """
    grid = _check_grid(times, basis_traj.times)
    if len(states) != grid.size:
        raise GridMismatchError
    return np.array(
        [
            offdiagonal_mass(state, basis_traj.basis(k), tolerances=tolerances)
            for k, state in enumerate(states)
        ],
    )


@dataclass(frozen=True)
class FidelityRecord:
    """Agreement of the leading eigenvectors with the coherent branches at one time."""

    time: float
    fidelity: float
    subspace_overlap: float
    flags: tuple[str, ...] = ()


def _lowdin(vectors: np.ndarray) -> np.ndarray:
    """Symmetric orthonormalization L·G^{−1/2}."""
    values, rotation = eigh(vectors.conj().T @ vectors)
    return vectors @ (rotation @ np.diag(values**-0.5) @ rotation.conj().T)


def coherent_basis_fidelity(  # noqa: PLR0913
    basis_traj: BasisTrajectory,
    alpha1: CoherentLabel,
    alpha2: CoherentLabel,
    pole: Pole,
    times: ArrayLike,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> list[FidelityRecord]:
    """Compare the two leading eigenvectors with {|α₁(t)⟩, |α₂(t)⟩}.

    The branches are orthonormalized symmetrically (Löwdin). When the leading
    pair is one degenerate cluster only its span is defined and the subspace
    fidelity ½‖E†L‖²_F is returned; otherwise the vector-wise fidelity
    min_i |⟨e_i|l_π(i)⟩|² for the best pairing π. Coinciding branches reduce
    to the single-vector comparison and are flagged; this includes branches
    that have merged numerically at late times.

    :raises GridMismatchError: If the grids differ.
    """
    grid = _check_grid(times, basis_traj.times)
    branches = (EvolvedBranch(alpha1, pole), EvolvedBranch(alpha2, pole))
    records = []
    for k, t in enumerate(grid):
        leading = basis_traj.basis(k)[:, :2]
        labels = [branch.label(float(t)) for branch in branches]
        vectors = [
            coherent_vector(label, basis_traj.space, tolerances=tolerances).components
            for label in labels
        ]
        values = basis_traj.eigenvalues[k]
        flags = []
        stacked = np.column_stack(vectors)
        if np.linalg.eigvalsh(stacked.conj().T @ stacked)[0] <= tolerances.orth:
            overlap = float(abs(np.vdot(leading[:, 0], vectors[0])) ** 2)
            records.append(
                FidelityRecord(float(t), overlap, overlap, (BRANCHES_COINCIDE,)),
            )
            continue
        frame = _lowdin(stacked)
        overlaps = np.abs(leading.conj().T @ frame) ** 2
        subspace = float(overlaps.sum() / 2)
        gaps = np.abs(np.diff(values[:3]))
        if gaps.size > 1 and basis_traj.degenerate[k, 1] and gaps[1] < tolerances.degen:
            flags.append(CLUSTER_SPLIT)
        if basis_traj.degenerate[k, 0] and gaps[0] < tolerances.degen:
            flags.append(DEGENERATE_LEADING_PAIR)
            fidelity = subspace
        else:
            rows, columns = linear_sum_assignment(-overlaps)
            fidelity = float(overlaps[rows, columns].min())
        records.append(FidelityRecord(float(t), fidelity, subspace, tuple(flags)))
    return records
