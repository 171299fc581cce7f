"""Acceptance suite run by ``pole-decoherence verify``.

Each criterion is a function of the scenario returning a short detail line
on success and raising :class:`CriterionFailure` otherwise. Unexpected errors
inside a criterion count as failures of that criterion.
"""

from __future__ import annotations

import logging
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Optional, Union

import numpy as np

from pole_decoherence import artifacts
from pole_decoherence.mode_analysis import (
    DecayMode,
    ModeExpansion,
    evaluate_expansion,
    extract_modes,
    gamma_eff,
)
from pole_decoherence.pipeline import analyze_basis, timescales
from pole_decoherence.pole_evolution import (
    TwoBranchSystem,
    coherence_ratio,
    equilibrium_distance_closed_form,
    equilibrium_state,
    offdiag_factor,
)
from pole_decoherence.preferred_basis import (
    decompose_entrywise,
    preferred_state,
    truncation_bound,
)
from pole_decoherence.quantum_core import (
    CoherentLabel,
    FockSpace,
    coherent_inner,
    offdiagonal_mass,
    trace_distance,
)
from pole_decoherence.scenario import TimeGrid, default_scenario
from pole_decoherence.spectral_poles import (
    OhmicDensity,
    Pole,
    pole_ladder,
    pv_shift_oracle,
    self_energy,
)
from pole_decoherence.utils.enums import OnError
from pole_decoherence.utils.exceptions import VerificationFailedError
from pole_decoherence.utils.misc import relative_difference

if TYPE_CHECKING:
    from collections.abc import Iterable

    from pole_decoherence.quantum_core import Tolerances
    from pole_decoherence.scenario import Scenario

logger = logging.getLogger(__name__)

SEED = 20240611
WIDTH_SLACK = 1e-12
OFFDIAG_MAGNITUDES = (1.0, 16.0, 50.0)
SCALING_MAGNITUDES = (2.0, 20.0, 200.0)
EXTRACTION_TRIALS = 20
# Multiple of t_D after which the moving basis must diagonalize ρ_S. The
# off-diagonal mass is bounded by e^{−S(1−e^{−γ₀t})}, below 1e-3 from 8·t_D on
# once S ≥ 50.
DIAGONAL_ONSET = 8.0
FIDELITY_WINDOW = 3.0
SMALL_SEPARATION = 1.0
OHMIC_FAMILY = ((0.01, 10.0, 1.0), (0.05, 5.0, 2.0), (0.002, 20.0, 0.5))


class CriterionFailure(AssertionError):
    """A criterion ran and its check did not hold."""


def _require(condition: bool, message: str) -> None:  # noqa: FBT001
    if not condition:
        raise CriterionFailure(message)


def check_pole_ladder(scenario: Scenario) -> str:
    """Ladder members are exact multiples of z₀, also after a CSV round trip."""
    ladder = pole_ladder(scenario.physical_pole(scenario.pole()), scenario.ladder_size)
    with tempfile.TemporaryDirectory() as folder:
        path = artifacts.write_table(ladder.as_table(), Path(folder) / "poles.csv")
        table = artifacts.read_table(path, artifacts.POLES_COLUMNS)
    base_re, base_gamma = table["re_z"].iloc[0], table["gamma_n"].iloc[0]
    for n, re_z, gamma in zip(table["n"], table["re_z"], table["gamma_n"]):
        _require(
            re_z == n * base_re and gamma == n * base_gamma,
            f"member {n} is not {n} x z0",
        )
    return f"{len(table)} members exact"


def check_self_energy(scenario: Scenario) -> str:  # noqa: ARG001
    """Ohmic width against π·η·ω·e^{−ω/Λ}, shift against the excision oracle."""
    worst_width, worst_shift = 0.0, 0.0
    for eta, cutoff, omega in OHMIC_FAMILY:
        density = OhmicDensity(eta, cutoff)
        energy = self_energy(density, omega)
        expected = np.pi * eta * omega * np.exp(-omega / cutoff)
        worst_width = max(worst_width, abs(energy.width_part - expected) / expected)
        worst_shift = max(
            worst_shift,
            relative_difference(energy.shift, pv_shift_oracle(density, omega)),
        )
    _require(worst_width <= 1e-12, f"width off by {worst_width:.2e}")  # noqa: PLR2004
    _require(
        worst_shift <= 1e-8,  # noqa: PLR2004
        f"shift off the oracle by {worst_shift:.2e}",
    )
    return f"width {worst_width:.1e}, shift {worst_shift:.1e}"


def check_offdiag_closed_form(scenario: Scenario) -> str:
    """Coefficient of |α₁(t)⟩⟨α₂(t)| in ρ_S decays as e^{−S(1−e^{−γ₀t})}."""
    pole = scenario.pole()
    worst = 0.0
    for magnitude in OFFDIAG_MAGNITUDES:
        system = scenario.with_magnitude(magnitude).system(pole)
        for t in scenario.times(pole):
            ratio = coherence_ratio(system.evolve(t))
            worst = max(worst, abs(ratio - offdiag_factor(magnitude, pole, t)))
    _require(worst <= 1e-10, f"coherence off by {worst:.2e}")  # noqa: PLR2004
    return f"max deviation {worst:.1e}"


def check_decoherence_scaling(scenario: Scenario) -> str:
    """t_D = t_R/|α₂|² and the 1/L² exponent."""
    pole = scenario.pole()
    times = []
    for magnitude in SCALING_MAGNITUDES:
        report = timescales(scenario.with_magnitude(magnitude), pole)
        expected = report.t_R / magnitude
        error = abs(report.t_D - expected) / expected
        _require(
            error <= 1e-6,  # noqa: PLR2004
            f"t_D off t_R/S by {error:.2e} at S={magnitude:g}",
        )
        times.append(report.t_D)
    lengths = np.sqrt(SCALING_MAGNITUDES)
    exponent = float(np.polyfit(np.log(lengths), np.log(times), 1)[0])
    _require(abs(exponent + 2) <= 0.01, f"L exponent {exponent:.4f}")  # noqa: PLR2004
    return f"exponent {exponent:.4f}"


def check_relaxation(scenario: Scenario) -> str:
    """t_R = ħ/γ₀ and the trace distance to |0⟩⟨0| at t_R."""
    pole = scenario.pole()
    report = timescales(scenario, pole)
    expected = scenario.to_time(pole.lifetime)
    _require(
        abs(report.t_R - expected) <= 1e-12 * expected,  # noqa: PLR2004
        f"t_R {report.t_R!r} != {expected!r}",
    )
    system = scenario.system(pole)
    state = system.evolve(pole.lifetime)
    distance = trace_distance(state.density, equilibrium_state(system.space))
    closed = equilibrium_distance_closed_form(
        system.a,
        system.b,
        system.alpha2.magnitude_sq,
        pole,
        pole.lifetime,
    )
    _require(
        abs(distance - closed) <= 1e-8,  # noqa: PLR2004
        f"distance off by {abs(distance - closed):.2e}",
    )
    return f"t_R={report.t_R:.6g}, distance {distance:.6f}"


def random_expansion(rng: np.random.Generator) -> tuple[ModeExpansion, float]:
    """A well-separated expansion and the sampling step that resolves it."""
    order = int(rng.integers(1, 4))
    gamma = rng.uniform(0.1, 0.3)
    widths = gamma * np.cumprod([1.0, *rng.uniform(1.6, 2.5, order - 1)])
    modes = tuple(DecayMode(rng.uniform(0.5, 2.0), width) for width in widths)
    return ModeExpansion(rng.uniform(-1.0, 1.0), modes), 4.0 / (63 * gamma)


def check_mode_extraction(scenario: Scenario) -> str:  # noqa: ARG001
    """Seeded random expansions survive sampling and extraction."""
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(EXTRACTION_TRIALS):
        expansion, step = random_expansion(rng)
        times = step * np.arange(64)
        samples = np.column_stack([times, evaluate_expansion(expansion, times)])
        extracted = extract_modes(samples, len(expansion.modes))
        _require(
            len(extracted.modes) == len(expansion.modes),
            f"found {len(extracted.modes)} of {len(expansion.modes)} modes",
        )
        worst = max(
            worst,
            relative_difference(extracted.equilibrium, expansion.equilibrium),
            *(
                max(
                    abs(found.gamma - true.gamma) / true.gamma,
                    abs(found.amplitude - true.amplitude) / abs(true.amplitude),
                )
                for found, true in zip(extracted.modes, expansion.modes)
            ),
        )
    _require(worst <= 1e-6, f"parameters off by {worst:.2e}")  # noqa: PLR2004
    return f"{EXTRACTION_TRIALS} expansions, worst {worst:.1e}"


def check_diagonality(scenario: Scenario) -> str:
    """ρ_S becomes diagonal in the moving basis once decoherence is complete."""
    analysis = analyze_basis(scenario)
    pole = analysis.pole
    onset = DIAGONAL_ONSET * pole.lifetime / analysis.system.alpha2.magnitude_sq
    initial = float(analysis.masses[0])
    _require(
        analysis.times[0] == 0 and initial > 0.1,  # noqa: PLR2004
        f"initial mass {initial:.3g}",
    )
    late = analysis.masses[analysis.times >= onset]
    _require(late.size > 0, "grid ends before the onset")
    _require(
        float(late.max()) < 1e-3,  # noqa: PLR2004
        f"mass {late.max():.2e} after {DIAGONAL_ONSET:g} t_D",
    )
    return f"mass {initial:.3f} at t=0, <= {late.max():.1e} late"


def check_basis_fidelity(scenario: Scenario) -> str:
    """Leading eigenvectors coincide with the branches for large separations only."""
    analysis = analyze_basis(scenario)
    magnitude = analysis.system.alpha2.magnitude_sq
    window = FIDELITY_WINDOW * analysis.pole.lifetime / magnitude
    early = [
        record.fidelity
        for record, t in zip(analysis.fidelity, analysis.times)
        if t <= window
    ]
    _require(
        min(early) >= 1 - 1e-6,  # noqa: PLR2004
        f"fidelity {min(early):.8f} at large separation",
    )
    small = analyze_basis(scenario.with_magnitude(SMALL_SEPARATION))
    degraded = small.fidelity[0].fidelity
    _require(
        degraded < 0.99,  # noqa: PLR2004
        f"fidelity {degraded:.4f} at |alpha2|^2=1 is not degraded",
    )
    return f"min {min(early):.8f}, small separation {degraded:.4f}"


def _property_gamma_eff(rng: np.random.Generator) -> None:
    for _ in range(50):
        size = int(rng.integers(1, 6))
        modes = tuple(
            DecayMode(rng.uniform(0.1, 2.0), rng.uniform(0.01, 10.0))
            for _ in range(size)
        )
        expansion = ModeExpansion(0.0, modes)
        width = gamma_eff(expansion)
        _require(
            expansion.widths.min() * (1 - WIDTH_SLACK)
            <= width
            <= expansion.widths.max() * (1 + WIDTH_SLACK),
            "gamma_eff outside the width hull",
        )
        scaled = gamma_eff(expansion.scaled(rng.uniform(0.1, 10.0)))
        _require(
            abs(scaled - width) <= WIDTH_SLACK * width,
            "gamma_eff depends on scale",
        )


def _property_overlap(rng: np.random.Generator) -> None:
    for _ in range(50):
        left, right = (CoherentLabel(complex(*rng.normal(0, 3, 2))) for _ in range(2))
        _require(
            abs(coherent_inner(left, right)) <= 1 + 1e-15,  # noqa: PLR2004
            "overlap exceeds one",
        )


def _random_system(rng: np.random.Generator, tolerances: Tolerances) -> TwoBranchSystem:
    return TwoBranchSystem(
        a=complex(*rng.normal(size=2)),
        b=complex(*rng.normal(size=2)),
        alpha1=CoherentLabel(rng.uniform(0, 0.5) * np.exp(2j * np.pi * rng.uniform())),
        alpha2=CoherentLabel(rng.uniform(1, 3) * np.exp(2j * np.pi * rng.uniform())),
        pole=Pole(1.0, rng.uniform(0.01, 0.1)),
        space=FockSpace(64),
        tolerances=tolerances,
    )


def _property_states(rng: np.random.Generator, tolerances: Tolerances) -> None:
    for _ in range(10):
        system = _random_system(rng, tolerances)
        grid = TimeGrid().sample(system.pole.lifetime)
        decomposition = decompose_entrywise(system, grid)
        for t in rng.choice(grid, 5):
            density = system.evolve(float(t)).density
            density.check(tolerances)
            _, vectors = density.spectrum(tolerances)
            phases = np.exp(1j * rng.uniform(0, 2 * np.pi, vectors.shape[1]))
            mass = offdiagonal_mass(density, vectors, tolerances=tolerances)
            rotated = offdiagonal_mass(density, vectors * phases, tolerances=tolerances)
            _require(
                abs(mass - rotated) <= 1e-12,  # noqa: PLR2004
                "off-diagonal mass depends on phases",
            )
            gap = np.linalg.norm(
                preferred_state(decomposition, float(t), tolerances=tolerances).entries
                - density.entries,
            )
            bound = truncation_bound(decomposition, float(t))
            _require(
                gap <= bound + 1e-10,  # noqa: PLR2004
                f"preferred state gap {gap:.2e} exceeds its bound",
            )


def check_properties(scenario: Scenario) -> str:
    """Seeded property checks across the modules."""
    rng = np.random.default_rng(SEED)
    _property_gamma_eff(rng)
    _property_overlap(rng)
    _property_states(rng, scenario.tolerances)
    return "all properties hold"


@dataclass(frozen=True)
class Criterion:
    """One named acceptance criterion."""

    id: str
    title: str
    check: Callable[[Scenario], str] = field(repr=False)


CRITERIA = (
    Criterion("pole-ladder", "Pole ladder is exact", check_pole_ladder),
    Criterion("self-energy", "Self-energy width and shift", check_self_energy),
    Criterion(
        "offdiag-closed-form",
        "Off-diagonal decay closed form",
        check_offdiag_closed_form,
    ),
    Criterion(
        "decoherence-scaling",
        "t_D = t_R/|alpha2|^2 and 1/L^2 scaling",
        check_decoherence_scaling,
    ),
    Criterion(
        "relaxation",
        "Relaxation time and distance to equilibrium",
        check_relaxation,
    ),
    Criterion("mode-extraction", "Mode extraction oracle", check_mode_extraction),
    Criterion("diagonality", "Moving-basis diagonality", check_diagonality),
    Criterion(
        "basis-fidelity",
        "Large-separation basis coincidence",
        check_basis_fidelity,
    ),
    Criterion("properties", "Randomized property suites", check_properties),
)


def list_criteria() -> list[tuple[str, str]]:
    """(id, title) of every criterion, in run order."""
    return [(criterion.id, criterion.title) for criterion in CRITERIA]


@dataclass(frozen=True)
class CriterionResult:
    """Outcome of one criterion."""

    id: str
    passed: bool
    detail: str
    seconds: float


@dataclass(frozen=True)
class VerificationSummary:
    """Outcomes of one verification run."""

    results: tuple[CriterionResult, ...]

    @property
    def passed(self: VerificationSummary) -> bool:
        """Whether every criterion passed."""
        return all(result.passed for result in self.results)

    @property
    def failed(self: VerificationSummary) -> tuple[str, ...]:
        """Ids of the failed criteria."""
        return tuple(result.id for result in self.results if not result.passed)

    def to_dict(self: VerificationSummary) -> dict:
        """Plain-data view."""
        return {
            "passed": self.passed,
            "criteria": [
                {
                    "id": result.id,
                    "passed": result.passed,
                    "detail": result.detail,
                    "seconds": result.seconds,
                }
                for result in self.results
            ],
        }


def _select(only: Optional[Iterable[str]]) -> tuple[Criterion, ...]:
    if not only:
        return CRITERIA
    wanted = set(only)
    unknown = wanted - {criterion.id for criterion in CRITERIA}
    if unknown:
        msg = f"Unknown criterion: {', '.join(sorted(unknown))}"
        raise ValueError(msg)
    return tuple(criterion for criterion in CRITERIA if criterion.id in wanted)


def _run(criterion: Criterion, scenario: Scenario) -> CriterionResult:
    start = time.perf_counter()
    try:
        detail, passed = criterion.check(scenario), True
    except Exception as ex:  # noqa: BLE001
        detail, passed = f"{type(ex).__name__}: {ex}", False
    seconds = time.perf_counter() - start
    log = logger.info if passed else logger.error
    status = "passed" if passed else "FAILED"
    log("%s %s (%.1fs): %s", criterion.id, status, seconds, detail)
    return CriterionResult(criterion.id, passed, detail, seconds)


def run_verify(
    scenario: Optional[Scenario] = None,
    *,
    only: Optional[Iterable[str]] = None,
    tolerances: Optional[Tolerances] = None,
    errors: Union[OnError, str] = "raise",
) -> VerificationSummary:
    """Run the acceptance criteria against a scenario.

    :param scenario: The scenario; defaults to the packaged default scenario.
    :type scenario: Optional[Scenario]
    :param only: Ids of the criteria to run; all when empty.
    :type only: Optional[Iterable[str]]
    :param tolerances: Replaces the scenario's tolerances.
    :type tolerances: Optional[Tolerances]
    :param errors: The error handling behavior. Defaults to "raise".
    :type errors: Union[OnError, str]
    :return: The outcome of every criterion that ran.
    :rtype: VerificationSummary
    :raises ValueError: If ``only`` names an unknown criterion.
    :raises VerificationFailedError: If any criterion fails and errors is "raise".
    """
    errors = OnError.from_any(errors)
    scenario = scenario if scenario is not None else default_scenario()
    if tolerances is not None:
        scenario = scenario.with_changes(tolerances=tolerances)
    summary = VerificationSummary(
        tuple(_run(criterion, scenario) for criterion in _select(only)),
    )
    if not summary.passed and errors == OnError.RAISE:
        raise VerificationFailedError(failed=summary.failed)
    return summary
