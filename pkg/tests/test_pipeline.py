"""Tests for the pole_decoherence.pipeline module."""

from pathlib import Path

import numpy as np
import pytest

from pole_decoherence import artifacts
from pole_decoherence.pipeline import (
    BASIS_FILE,
    DIAGONALITY_FILE,
    FIDELITY_FILE,
    POLES_FILE,
    REPORT_FILE,
    TIMESCALES_FILE,
    TRAJECTORY_FILE,
    analyze_basis,
    run_basis,
    run_evolve,
    run_poles,
    run_timescales,
    timescales,
)
from pole_decoherence.quantum_core import (
    CoherentLabel,
    FockSpace,
    superposition_density,
)
from pole_decoherence.scenario import Scenario, TimeGrid
from pole_decoherence.spectral_poles import OhmicDensity
from pole_decoherence.utils.exceptions import FreeSystemError, InvalidScenarioError


@pytest.fixture
def scenario() -> Scenario:
    """A small scenario that runs in a few seconds."""
    return Scenario(
        OhmicDensity(0.01, 10.0),
        fock_dim=64,
        alpha2_magnitude_sq=16.0,
        time_grid=TimeGrid(count=16),
        name="small",
    )


def test_run_poles(scenario: Scenario, tmp_path: Path) -> None:
    """Test run_poles."""
    report = run_poles(scenario, tmp_path / "out")
    assert report.command == "poles"
    assert report.check_artifacts()
    table = artifacts.read_table(
        report.artifacts[POLES_FILE],
        artifacts.POLES_COLUMNS,
    )
    assert len(table) == scenario.ladder_size
    for n, gamma in zip(table["n"], table["gamma_n"]):
        assert gamma == n * report.pole.gamma

    data = artifacts.read_json(tmp_path / "out" / REPORT_FILE)
    assert data["scenario"] == "small"
    assert data["pole"]["gamma"] == report.pole.gamma
    assert data["ladder"]["gamma_max"] == pytest.approx(8 * report.pole.gamma)

    scaled = run_poles(scenario.with_changes(omega_unit=3.0), tmp_path / "scaled")
    assert scaled.pole.gamma == pytest.approx(3 * report.pole.gamma)

    report.artifacts[POLES_FILE].unlink()
    with pytest.raises(FileNotFoundError):
        report.check_artifacts()
    with pytest.raises(FreeSystemError):
        run_poles(scenario.with_changes(density=OhmicDensity(0.0, 10.0)), tmp_path)


def test_run_evolve(scenario: Scenario, tmp_path: Path) -> None:
    """Test run_evolve."""
    report = run_evolve(scenario, tmp_path)
    assert report.check_artifacts()
    table = artifacts.read_trajectory(report.artifacts[TRAJECTORY_FILE])
    assert len(table) == 17
    assert table["time"].iloc[0] == 0.0
    assert table["compensation"].iloc[0] == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.diff(table["compensation"]) >= -1e-12)
    assert report.corrections["vacuum_compensation"] == pytest.approx(
        table["compensation"].max(),
    )
    assert report.corrections["vacuum_compensation"] > 0.4

    initial = superposition_density(
        scenario.a,
        scenario.b,
        CoherentLabel(0),
        CoherentLabel(4.0),
        FockSpace(64),
    )
    assert artifacts.trajectory_block(table, 0) == pytest.approx(
        initial.entries[:8, :8],
        abs=1e-12,
    )
    assert table["coherence_ratio"].to_numpy() == pytest.approx(
        table["offdiag_factor"].to_numpy(),
        rel=1e-9,
    )
    assert table["trace_distance"].to_numpy() == pytest.approx(
        table["trace_distance_closed_form"].to_numpy(),
        abs=1e-8,
    )
    assert table["trace_distance"].iloc[-1] < 1e-10
    assert np.all(np.diff(table["trace_distance_closed_form"]) <= 1e-15)


def test_timescales(scenario: Scenario) -> None:
    """Test timescales."""
    report = timescales(scenario)
    assert report.t_D == pytest.approx(report.t_R / 16.0, rel=1e-12)
    assert report.gamma_eff_all == pytest.approx(16.0 * report.gamma0, rel=1e-12)
    assert report.gamma_eff_faster == report.gamma_eff_all
    assert report.warnings == ()

    small = timescales(scenario.with_magnitude(2.0))
    assert small.t_D == pytest.approx(small.t_R / 2.0, rel=1e-12)
    assert small.warnings == ()
    unit = timescales(scenario.with_magnitude(1.0))
    assert unit.t_D == pytest.approx(unit.t_R, rel=1e-12)
    assert unit.warnings == ("faster-reading-has-no-faster-modes",)

    doubled = timescales(scenario.with_changes(hbar=2.0))
    assert doubled.t_R == pytest.approx(2 * report.t_R)
    assert doubled.t_D == pytest.approx(2 * report.t_D)

    with pytest.raises(InvalidScenarioError, match="coincide"):
        timescales(scenario.with_magnitude(0.0))


def test_run_timescales(scenario: Scenario, tmp_path: Path) -> None:
    """Test run_timescales."""
    report = run_timescales(scenario, tmp_path)
    assert report.check_artifacts()
    data = artifacts.read_json(report.artifacts[TIMESCALES_FILE])
    assert data["reading"] == "faster"
    assert data["alpha2_magnitude_sq"] == pytest.approx(16.0)
    assert data["t_D"] == pytest.approx(data["t_D_closed_form"], rel=1e-12)
    assert data["t_R"] == pytest.approx(1 / report.pole.gamma)
    assert set(data["gamma_eff_readings"]) == {"all", "faster"}
    ladder = data["gamma_eff_readings"]["all"] / -np.expm1(-16.0)
    assert data["gamma_eff_ladder"] == pytest.approx(ladder, rel=1e-9)
    summary = artifacts.read_json(tmp_path / REPORT_FILE)
    assert summary["timescales"]["t_D"] == data["t_D"]


def test_analyze_basis(scenario: Scenario) -> None:
    """Test analyze_basis."""
    analysis = analyze_basis(scenario)
    assert len(analysis.fidelity) == analysis.times.size == 17
    assert analysis.basis.orthonormality_error() < 1e-10
    assert analysis.masses[-1] < 1e-3
    assert np.all(analysis.bounds >= 0)
    assert analysis.decomposition.space.dim == 64


def test_run_basis(scenario: Scenario, tmp_path: Path) -> None:
    """Test run_basis, its unit invariance and determinism."""
    first = run_basis(scenario, tmp_path / "first")
    assert first.check_artifacts()
    assert set(first.artifacts) == {BASIS_FILE, DIAGONALITY_FILE, FIDELITY_FILE}
    assert first.corrections["preferred_hermiticity"] < 1e-12
    basis = artifacts.read_basis(first.artifacts[BASIS_FILE])
    assert len(basis) == 17 * scenario.basis_vectors

    again = run_basis(scenario, tmp_path / "again")
    for name in first.artifacts:
        expected = first.artifacts[name].read_bytes()
        assert again.artifacts[name].read_bytes() == expected

    rescaled = run_basis(
        scenario.with_changes(omega_unit=2.0, hbar=3.0),
        tmp_path / "rescaled",
    )
    original = artifacts.read_table(first.artifacts[DIAGONALITY_FILE])
    changed = artifacts.read_table(rescaled.artifacts[DIAGONALITY_FILE])
    expected = original["time"].to_numpy() * 1.5
    assert changed["time"].to_numpy() == pytest.approx(expected)
    assert np.array_equal(
        changed["offdiagonal_mass"].to_numpy(),
        original["offdiagonal_mass"].to_numpy(),
    )
