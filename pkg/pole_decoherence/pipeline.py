"""Scenario pipeline: poles, evolution, timescales and the moving basis."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, Optional, Union

import numpy as np

from pole_decoherence import artifacts
from pole_decoherence.mode_analysis import TimescaleReport, gamma_eff, timescale_report
from pole_decoherence.pole_evolution import (
    coherence_ratio,
    equilibrium_distance_closed_form,
    equilibrium_state,
    linearized_offdiag_expansion,
    offdiag_factor,
    offdiag_weight_expansion,
)
from pole_decoherence.preferred_basis import (
    BasisTrajectory,
    EntrywiseModeDecomposition,
    FidelityRecord,
    PreferredStateTrajectory,
    coherent_basis_fidelity,
    decompose_entrywise,
    diagonality_report,
    moving_basis,
    preferred_trajectory,
    truncation_bound,
)
from pole_decoherence.quantum_core import DensityMatrix, trace_distance
from pole_decoherence.spectral_poles import Pole, PoleLadder, pole_ladder
from pole_decoherence.utils.exceptions import InvalidScenarioError

if TYPE_CHECKING:
    from pole_decoherence.pole_evolution import TwoBranchSystem
    from pole_decoherence.scenario import Scenario

logger = logging.getLogger(__name__)

POLES_FILE = "poles.csv"
TRAJECTORY_FILE = "trajectory.csv"
TIMESCALES_FILE = "timescales.json"
BASIS_FILE = "basis.csv"
DIAGONALITY_FILE = "diagonality.csv"
FIDELITY_FILE = "fidelity.csv"
REPORT_FILE = "report.json"

_READERS: dict[str, Callable[[Path], Any]] = {
    POLES_FILE: lambda path: artifacts.read_table(path, artifacts.POLES_COLUMNS),
    TRAJECTORY_FILE: artifacts.read_trajectory,
    TIMESCALES_FILE: artifacts.read_json,
    BASIS_FILE: artifacts.read_basis,
    DIAGONALITY_FILE: lambda path: artifacts.read_table(
        path,
        artifacts.DIAGONALITY_COLUMNS,
    ),
    FIDELITY_FILE: lambda path: artifacts.read_table(path, artifacts.FIDELITY_COLUMNS),
}


@dataclass
class RunReport:
    """Summary of one pipeline command, written as report.json.

    Poles are in reported units (multiples of ``omega_unit``).
    """

    command: str
    scenario: str
    pole: Pole
    ladder: PoleLadder
    timescales: Optional[TimescaleReport] = None
    artifacts: dict[str, Path] = field(default_factory=dict)
    corrections: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self: RunReport) -> dict:
        """Plain-data view."""
        return {
            "command": self.command,
            "scenario": self.scenario,
            "pole": {
                "omega_prime": self.pole.omega_prime,
                "gamma": self.pole.gamma,
                "re_z": self.pole.z.real,
                "im_z": self.pole.z.imag,
            },
            "ladder": {
                "n_max": self.ladder.n_max,
                "gamma_max": self.ladder.member(self.ladder.n_max).gamma,
            },
            "timescales": (
                None if self.timescales is None else self.timescales.to_dict()
            ),
            "artifacts": {name: str(path) for name, path in self.artifacts.items()},
            "corrections": self.corrections,
            "warnings": self.warnings,
        }

    def check_artifacts(self: RunReport) -> bool:
        """Re-read every emitted artifact with its reader.

        :raises FileNotFoundError: If an artifact is missing.
        :raises ValueError: If an artifact does not match its schema.
        """
        for name, path in self.artifacts.items():
            if not Path(path).is_file():
                msg = f"Artifact {name} is missing at {path}"
                raise FileNotFoundError(msg)
            _READERS[name](Path(path))
        return True

    def write(self: RunReport, out_dir: Union[str, Path]) -> Path:
        """Write report.json next to the artifacts."""
        return artifacts.write_json(self.to_dict(), Path(out_dir) / REPORT_FILE)


def _prepare(out_dir: Union[str, Path]) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _base_report(command: str, scenario: Scenario, pole: Pole) -> RunReport:
    physical = scenario.physical_pole(pole)
    return RunReport(
        command=command,
        scenario=scenario.name,
        pole=physical,
        ladder=pole_ladder(physical, scenario.ladder_size),
    )


def run_poles(scenario: Scenario, out_dir: Union[str, Path]) -> RunReport:
    """Compute z₀ and the ladder z_n = n·z₀; write poles.csv.

    :raises FreeSystemError: If the coupling vanishes at the bare frequency.
    :raises NotAResonanceError: If the bare frequency is outside the support.
    """
    out = _prepare(out_dir)
    report = _base_report("poles", scenario, scenario.pole())
    report.artifacts[POLES_FILE] = artifacts.write_table(
        report.ladder.as_table(),
        out / POLES_FILE,
    )
    report.write(out)
    return report


def run_evolve(scenario: Scenario, out_dir: Union[str, Path]) -> RunReport:
    """Evolve the two-branch state on the grid; write trajectory.csv."""
    out = _prepare(out_dir)
    pole = scenario.pole()
    system = scenario.system(pole)
    separation = abs(system.alpha1.alpha - system.alpha2.alpha) ** 2
    vacuum = equilibrium_state(system.space)
    dim = min(scenario.entries_dim, system.space.dim)
    rows, compensation = [], 0.0
    for t in scenario.times(pole):
        state = system.evolve(t)
        diagnostics = (
            offdiag_factor(separation, pole, t),
            abs(coherence_ratio(state, errors="ignore")),
            trace_distance(state.density, vacuum),
            equilibrium_distance_closed_form(
                system.a,
                system.b,
                system.alpha2.magnitude_sq,
                pole,
                t,
            ),
            state.compensation,
        )
        compensation = max(compensation, abs(state.compensation))
        rows.append(
            artifacts.trajectory_row(
                scenario.to_time(t),
                state.density.entries,
                dim,
                diagnostics,
            ),
        )
    report = _base_report("evolve", scenario, pole)
    report.corrections["vacuum_compensation"] = compensation
    report.artifacts[TRAJECTORY_FILE] = artifacts.write_table(
        artifacts.trajectory_table(rows, dim),
        out / TRAJECTORY_FILE,
    )
    report.write(out)
    return report


def timescales(scenario: Scenario, pole: Optional[Pole] = None) -> TimescaleReport:
    """t_R and t_D in reported units from the short-time coherence decay.

    The off-diagonal factor decays as e^{−Sγ₀t} while γ₀t ≪ 1, so the report is
    built on that single mode and t_D = t_R/S for every separation S.

    :raises InvalidScenarioError: If the branches coincide (nothing decoheres).
    """
    pole = pole if pole is not None else scenario.pole()
    separation = _separation(scenario.system(pole))
    if separation == 0:
        msg = "Branches coincide; there is no decoherence timescale"
        raise InvalidScenarioError(msg)
    physical = scenario.physical_pole(pole)
    return timescale_report(
        linearized_offdiag_expansion(separation, physical),
        gamma0=physical.gamma,
        reading=scenario.reading,
        hbar=scenario.hbar,
    )


def _separation(system: TwoBranchSystem) -> float:
    return float(abs(system.alpha1.alpha - system.alpha2.alpha) ** 2)


def run_timescales(scenario: Scenario, out_dir: Union[str, Path]) -> RunReport:
    """Compute t_R and t_D under both γ_eff readings; write timescales.json."""
    out = _prepare(out_dir)
    pole = scenario.pole()
    report = _base_report("timescales", scenario, pole)
    report.timescales = timescales(scenario, pole)
    report.warnings.extend(report.timescales.warnings)
    magnitude = scenario.system(pole).alpha2.magnitude_sq
    data = report.timescales.to_dict()
    data["alpha2_magnitude_sq"] = magnitude
    data["t_D_closed_form"] = report.timescales.t_R / magnitude
    data["kappa"] = scenario.kappa(pole)
    # The full Poisson ladder averages to Sγ₀/(1 − e^{−S}).
    ladder = offdiag_weight_expansion(
        _separation(scenario.system(pole)),
        scenario.physical_pole(pole),
    )
    data["gamma_eff_ladder"] = gamma_eff(ladder, reading="all")
    report.artifacts[TIMESCALES_FILE] = artifacts.write_json(
        data,
        out / TIMESCALES_FILE,
    )
    report.write(out)
    return report


@dataclass(frozen=True, eq=False)
class BasisAnalysis:
    """Everything computed for the moving basis on the natural-unit grid."""

    pole: Pole
    system: TwoBranchSystem
    times: np.ndarray
    decomposition: EntrywiseModeDecomposition
    preferred: PreferredStateTrajectory
    basis: BasisTrajectory
    states: tuple[DensityMatrix, ...]
    masses: np.ndarray
    bounds: np.ndarray
    fidelity: tuple[FidelityRecord, ...]


def analyze_basis(scenario: Scenario, pole: Optional[Pole] = None) -> BasisAnalysis:
    """Preferred state, moving basis, diagonality and branch fidelity on the grid."""
    pole = pole if pole is not None else scenario.pole()
    system = scenario.system(pole)
    times = scenario.times(pole)
    decomposition = decompose_entrywise(system, times)
    preferred = preferred_trajectory(
        decomposition,
        times,
        tolerances=scenario.tolerances,
    )
    basis = moving_basis(preferred, tolerances=scenario.tolerances)
    states = tuple(system.evolve(t).density for t in times)
    masses = diagonality_report(states, basis, times, tolerances=scenario.tolerances)
    bounds = np.array([truncation_bound(decomposition, t) for t in times])
    fidelity = coherent_basis_fidelity(
        basis,
        system.alpha1,
        system.alpha2,
        pole,
        times,
        tolerances=scenario.tolerances,
    )
    return BasisAnalysis(
        pole=pole,
        system=system,
        times=times,
        decomposition=decomposition,
        preferred=preferred,
        basis=basis,
        states=states,
        masses=masses,
        bounds=bounds,
        fidelity=tuple(fidelity),
    )


def run_basis(scenario: Scenario, out_dir: Union[str, Path]) -> RunReport:
    """Write basis.csv, diagonality.csv and fidelity.csv."""
    out = _prepare(out_dir)
    analysis = analyze_basis(scenario)
    reported = scenario.to_time(analysis.times)
    report = _base_report("basis", scenario, analysis.pole)
    report.corrections["preferred_trace"] = float(
        np.max(np.abs(analysis.preferred.trace_corrections)),
    )
    report.corrections["preferred_hermiticity"] = float(
        np.max(analysis.preferred.hermiticity_corrections),
    )
    degenerate = int(analysis.basis.degenerate[:, :2].all(axis=1).sum())
    if degenerate:
        report.warnings.append(f"degenerate leading pair at {degenerate} time(s)")
    report.artifacts[BASIS_FILE] = artifacts.write_table(
        artifacts.basis_table(analysis.basis, reported, scenario.basis_vectors),
        out / BASIS_FILE,
    )
    report.artifacts[DIAGONALITY_FILE] = artifacts.write_table(
        artifacts.diagonality_table(reported, analysis.masses, analysis.bounds),
        out / DIAGONALITY_FILE,
    )
    report.artifacts[FIDELITY_FILE] = artifacts.write_table(
        artifacts.fidelity_table(analysis.fidelity, reported),
        out / FIDELITY_FILE,
    )
    report.write(out)
    return report
