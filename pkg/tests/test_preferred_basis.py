"""Tests for the pole_decoherence.preferred_basis module."""

import numpy as np
import pytest

from pole_decoherence.pole_evolution import EvolvedBranch, TwoBranchSystem
from pole_decoherence.preferred_basis import (
    BRANCHES_COINCIDE,
    DEGENERATE_LEADING_PAIR,
    BranchFrame,
    EntryExpansion,
    FockFrame,
    check_grid_coverage,
    classify_entries,
    coherent_basis_fidelity,
    decompose_entrywise,
    decompose_trajectory,
    diagonality_report,
    moving_basis,
    preferred_state,
    preferred_trajectory,
    truncation_bound,
)
from pole_decoherence.quantum_core import CoherentLabel, DensityMatrix, FockSpace
from pole_decoherence.spectral_poles import Pole
from pole_decoherence.utils.exceptions import (
    AntiCausalTimeError,
    EntryExtractionError,
    GridCoverageError,
    GridMismatchError,
    SpaceMismatchError,
)

POLE = Pole(1.0, 0.1)
# Spans 1.5 decades on both sides of the relaxation time 1/0.1.
GRID = np.concatenate([[0.0], np.geomspace(0.1, 1000.0, 40)])


def _system(
    magnitude_sq: float,
    dim: int,
    a: complex = 1,
    b: complex = 1,
) -> TwoBranchSystem:
    return TwoBranchSystem(
        a,
        b,
        CoherentLabel(0),
        CoherentLabel(np.sqrt(magnitude_sq)),
        POLE,
        FockSpace(dim),
    )


def _coinciding() -> TwoBranchSystem:
    vacuum = CoherentLabel(0)
    return TwoBranchSystem(1, 1, vacuum, vacuum, POLE, FockSpace(16))


def test_entry_expansion() -> None:
    """Test EntryExpansion."""
    c0 = 0.1 + 0.2j
    modes = [(0.5 - 0.3j, 0.4, 0.0), (0.2 + 0.1j, 0.3, 1.5)]
    entry = EntryExpansion.from_complex_modes(c0, modes)
    assert entry.equilibrium == c0
    for t in (0.0, 0.7, 4.0):
        expected = c0 + sum(c * np.exp(-(g + 1j * w) * t) for c, g, w in modes)
        assert entry.evaluate(t) == pytest.approx(expected, abs=1e-14)
        conjugate = entry.conjugate().evaluate(t)
        assert conjugate == pytest.approx(np.conj(expected), abs=1e-14)
        assert abs(entry.evaluate(t) - c0) <= entry.envelope(t) + 1e-15

    linear = entry.linearized()
    weights = np.array([abs(mode.amplitude) for mode in entry.modes])
    assert linear.amplitude == pytest.approx(weights.sum())
    assert 0.3 < linear.gamma < 0.4

    constant = EntryExpansion.constant(0.5 - 0.25j)
    assert constant.modes == ()
    assert constant.linearized() is None
    assert constant.evaluate(10.0) == 0.5 - 0.25j


def test_frames() -> None:
    """Test FockFrame and BranchFrame."""
    fock = FockFrame(FockSpace(3))
    assert fock.size == 3
    assert np.array_equal(fock.vectors(1.0), np.eye(3))

    space = FockSpace(32)
    labels = (CoherentLabel(0.5), CoherentLabel(-1.0j))
    frame = BranchFrame(space, labels, POLE)
    vectors = frame.vectors(2.0)
    assert frame.size == 2
    assert vectors.shape == (32, 2)
    branch = EvolvedBranch(labels[1], POLE)
    expected = branch.vector(space, 2.0).components * np.sqrt(branch.survival(2.0))
    assert vectors[:, 1] == pytest.approx(expected, abs=1e-14)
    norms = np.linalg.norm(vectors, axis=0) ** 2
    survivals = [EvolvedBranch(label, POLE).survival(2.0) for label in labels]
    assert norms == pytest.approx(survivals, rel=1e-10)


def test_check_grid_coverage() -> None:
    """Test check_grid_coverage."""
    check_grid_coverage(GRID, 10.0)
    with pytest.raises(GridCoverageError):
        check_grid_coverage(np.linspace(0.0, 10.0, 20), 10.0)
    with pytest.raises(GridCoverageError):
        check_grid_coverage(np.linspace(1.0, 1000.0, 20), 10.0)


def test_decompose_entrywise() -> None:
    """Test decompose_entrywise."""
    system = _system(16.0, 64)
    decomp = decompose_entrywise(system, GRID)
    w1, w2 = system.weights
    assert decomp.space == system.space
    assert decomp.entry(0, 0).equilibrium == pytest.approx(abs(w1) ** 2)
    expected = w1 * np.conj(w2) * np.exp(-8.0)
    assert decomp.entry(0, 1).equilibrium == pytest.approx(expected)
    assert len(decomp.relaxation) == 1
    assert decomp.relaxation[0].gamma == POLE.gamma

    branch = EvolvedBranch(system.alpha2, POLE)
    for t in (0.0, 0.3, 5.0, 60.0):
        assert decomp.entry(0, 0).evaluate(t) == pytest.approx(abs(w1) ** 2)
        lower = decomp.entry(1, 0).evaluate(t) * np.sqrt(branch.survival(t))
        assert lower == pytest.approx(np.conj(system.coherence(t)), abs=1e-12)
        rebuilt = decomp.reconstruct(t)
        actual = system.evolve(t).density.entries
        assert rebuilt.entries == pytest.approx(actual, abs=1e-9)

    with pytest.raises(GridCoverageError):
        decompose_entrywise(system, np.linspace(0.0, 10.0, 20))


def test_classify_entries() -> None:
    """Test classify_entries."""
    decomp = decompose_entrywise(_system(16.0, 64), GRID)
    classification = classify_entries(decomp)
    assert classification.fast == frozenset({(0, 1), (1, 0)})
    assert POLE.gamma < classification.gamma_eff < 8 * POLE.gamma

    coinciding = _coinciding()
    stationary = classify_entries(decompose_entrywise(coinciding, GRID))
    assert stationary.gamma_eff is None
    assert stationary.fast == frozenset()


def test_preferred_state() -> None:
    """Test preferred_state and truncation_bound."""
    system = _system(16.0, 64)
    decomp = decompose_entrywise(system, GRID)
    for t in (0.0, 0.5, 3.0, 30.0, 300.0):
        preferred = preferred_state(decomp, t)
        assert preferred.check()
        actual = system.evolve(t).density
        distance = np.linalg.norm(preferred.entries - actual.entries)
        assert distance <= truncation_bound(decomp, t) + 1e-10
    late = preferred_state(decomp, 300.0)
    assert late.entries == pytest.approx(system.evolve(300.0).density.entries, abs=1e-9)
    with pytest.raises(AntiCausalTimeError):
        preferred_state(decomp, -1.0)


def test_preferred_trajectory() -> None:
    """Test preferred_trajectory."""
    decomp = decompose_entrywise(_system(16.0, 64), GRID)
    times = np.array([0.0, 1.0, 10.0, 1000.0])
    traj = preferred_trajectory(decomp, times)
    assert traj.space == FockSpace(64)
    assert len(traj.states) == 4
    assert traj.trace_corrections.shape == (4,)
    assert traj.trace_corrections[0] > 0
    late = _system(16.0, 64).evolve(1000.0).compensation
    assert traj.trace_corrections[-1] == pytest.approx(late, abs=1e-12)
    assert np.all(traj.hermiticity_corrections < 1e-12)
    for t, state in zip(times, traj.states):
        expected = preferred_state(decomp, t).entries
        assert state.entries == pytest.approx(expected, abs=1e-14)


def test_decompose_trajectory() -> None:
    """Test decompose_trajectory on a sampled 2 x 2 trajectory."""
    times = np.arange(30) * 0.2

    def rho(t: float) -> np.ndarray:
        coherence = (0.1 + 0.05j) * np.exp(-t)
        slow = 0.2 * np.exp(-0.5 * t)
        return np.array([[0.7 - slow, coherence], [np.conj(coherence), 0.3 + slow]])

    matrices = np.array([rho(t) for t in times])
    decomp = decompose_trajectory(times, matrices, 2)
    assert decomp.frame == FockFrame(FockSpace(2))
    assert decomp.entry(0, 0).real.widths == pytest.approx([0.5], rel=1e-8)
    assert decomp.entry(0, 1).real.widths == pytest.approx([1.0], rel=1e-8)
    assert decomp.entry(0, 0).imag.modes == ()
    lower = decomp.entry(1, 0).evaluate(1.3)
    assert lower == pytest.approx(np.conj(rho(1.3)[0, 1]), abs=1e-10)
    assert decomp.reconstruct(1.3).entries == pytest.approx(rho(1.3), abs=1e-9)
    assert classify_entries(decomp).fast == frozenset({(0, 1), (1, 0)})

    with pytest.raises(SpaceMismatchError):
        decompose_trajectory(times, matrices[:-1], 2)
    with pytest.raises(AntiCausalTimeError):
        decompose_trajectory(times - 1.0, matrices, 2)
    uneven = times.copy()
    uneven[5] += 0.05
    with pytest.raises(EntryExtractionError, match="entry") as info:
        decompose_trajectory(uneven, matrices, 2)
    assert info.value.index == (0, 0)


def test_moving_basis() -> None:
    """Test moving_basis and diagonality_report."""
    system = _system(16.0, 64)
    decomp = decompose_entrywise(system, GRID)
    times = np.array([0.0, 0.2, 1.0, 5.0, 25.0, 200.0])
    traj = preferred_trajectory(decomp, times)
    basis = moving_basis(traj)
    assert basis.bases.shape == (6, 64, 64)
    assert basis.orthonormality_error() < 1e-10
    assert np.all(np.diff(basis.eigenvalues, axis=1) <= 0)
    assert len(basis.matches) == 5
    for row in basis.tracks:
        assert sorted(row) == list(range(64))
    for columns in basis.matches:
        assert sorted(columns) == list(range(64))

    states = [system.evolve(t).density for t in times]
    masses = diagonality_report(states, basis, times)
    assert masses.shape == (6,)
    assert np.all(masses >= 0)
    assert masses[-1] < 1e-6
    with pytest.raises(GridMismatchError):
        diagonality_report(states, basis, times * 2)
    with pytest.raises(GridMismatchError):
        diagonality_report(states[:-1], basis, times)


def test_fidelity_coinciding_branches() -> None:
    """Test coherent_basis_fidelity when both branches are the vacuum."""
    system = _coinciding()
    times = np.array([0.0, 1.0, 10.0])
    basis = moving_basis(preferred_trajectory(decompose_entrywise(system, GRID), times))
    vacuum = CoherentLabel(0)
    records = coherent_basis_fidelity(basis, vacuum, vacuum, POLE, times)
    assert [record.time for record in records] == times.tolist()
    for record in records:
        assert record.flags == (BRANCHES_COINCIDE,)
        assert record.fidelity == pytest.approx(1.0)


def test_fidelity_degenerate_leading_pair() -> None:
    """Test coherent_basis_fidelity for well-separated branches at early times."""
    system = _system(50.0, 128)
    decomp = decompose_entrywise(system, GRID)
    times = np.array([0.0, 0.01, 0.05])
    basis = moving_basis(preferred_trajectory(decomp, times))
    records = coherent_basis_fidelity(
        basis,
        system.alpha1,
        system.alpha2,
        POLE,
        times,
    )
    assert DEGENERATE_LEADING_PAIR in records[0].flags
    assert records[0].fidelity == records[0].subspace_overlap
    for record in records:
        assert record.fidelity == pytest.approx(1.0, abs=1e-8)
    for record in records[1:]:
        assert DEGENERATE_LEADING_PAIR not in record.flags
    with pytest.raises(GridMismatchError):
        coherent_basis_fidelity(basis, system.alpha1, system.alpha2, POLE, times[:2])


def test_fidelity_overlapping_branches() -> None:
    """Test that overlapping branches keep the span but not the vectors."""
    system = _system(1.0, 32)
    times = np.array([0.0, 1.0])
    basis = moving_basis(preferred_trajectory(decompose_entrywise(system, GRID), times))
    records = coherent_basis_fidelity(
        basis,
        system.alpha1,
        system.alpha2,
        POLE,
        times,
    )
    for record in records:
        assert record.flags == ()
        assert record.subspace_overlap == pytest.approx(1.0, abs=1e-8)
        assert record.fidelity < 0.99


def test_vacuum_population_rises() -> None:
    """Test that the vacuum entry of the preferred state relaxes to 1."""
    system = _system(16.0, 64)
    decomp = decompose_entrywise(system, GRID)
    branch = EvolvedBranch(system.alpha2, POLE)
    weight = abs(system.weights[1]) ** 2
    times = np.array([0.0, 1.0, 5.0, 20.0, 100.0, 1000.0])
    vacuum = np.array([preferred_state(decomp, t).entries[0, 0].real for t in times])
    for t, value in zip(times, vacuum):
        spread = -np.expm1(-branch.label(t).magnitude_sq)
        expected = 1 - weight * branch.survival(t) * spread
        assert value == pytest.approx(expected, abs=1e-10)
    assert np.all(np.diff(vacuum) > 0)
    assert vacuum[0] == pytest.approx(0.5, abs=1e-3)
    assert vacuum[-1] == pytest.approx(1.0, abs=1e-9)


def test_two_pole_diagonality() -> None:
    """Test the preferred state and diagonality of a fast coherence and a slow drift."""
    times = np.arange(60) * 0.1
    coherence = 0.1 + 0.05j

    def rho(t: float) -> np.ndarray:
        fast = coherence * np.exp(-t)
        slow = 0.1 * np.exp(-0.5 * t)
        return np.array([[0.7 - slow, fast], [np.conj(fast), 0.3 + slow]])

    decomp = decompose_trajectory(times, np.array([rho(t) for t in times]), 2)
    classification = classify_entries(decomp)
    assert classification.fast == frozenset({(0, 1), (1, 0)})
    assert 0.5 < classification.gamma_eff < 1.0

    bound = truncation_bound(decomp, 5.0)
    distance = np.linalg.norm(preferred_state(decomp, 5.0).entries - rho(5.0))
    assert distance <= bound + 1e-10
    envelope = abs(coherence.real) + abs(coherence.imag)
    assert bound <= 2 * envelope * np.exp(-5.0) * (1 + 1e-3)

    decoherence_time = 1 / classification.gamma_eff
    grid = np.array([0.0, 3 * decoherence_time])
    basis = moving_basis(preferred_trajectory(decomp, grid))
    states = [DensityMatrix(rho(t), FockSpace(2)) for t in grid]
    masses = diagonality_report(states, basis, grid)
    assert masses[0] == pytest.approx(np.sqrt(2) * abs(coherence), rel=1e-6)
    assert masses[1] / masses[0] <= np.exp(-3.0) + 1e-6
