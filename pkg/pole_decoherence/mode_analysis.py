"""Decay-mode expansions, their timescales and mode extraction from samples.

An expansion represents a signal

    f(t) = equilibrium + Σ_i a_i·cos(ω_i t/ħ + φ_i)·e^{−γ_i t/ħ}

and the functions here implement the timescale constructions on it. All
functions that take a ``reading`` default to the faster reading, which leaves
the relaxation width out of γ_eff; scenario runs select the reading explicitly.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Union

import numpy as np
from scipy.linalg import hankel, lstsq, pinv, svd

from pole_decoherence.utils.enums import GammaEffReading
from pole_decoherence.utils.exceptions import (
    AntiCausalTimeError,
    DegenerateExpansionError,
    EmptyExpansionError,
    InsufficientSamplesError,
    InvalidModelOrderError,
    NonDecayingPoleError,
    NonPositiveAmplitudeSumError,
    NonUniformSamplingError,
    RankDeficiencyError,
)
from pole_decoherence.utils.misc import uniform_step

if TYPE_CHECKING:
    from collections.abc import Iterable

    from numpy.typing import ArrayLike

logger = logging.getLogger(__name__)

# |Σa_i| below this fraction of Σ|a_i| counts as a vanishing amplitude sum.
DEGENERATE_SUM_RTOL = 1e-12
DEFAULT_RANK_RTOL = 1e-11
# Differences below this fraction of the signal scale mean "no decay present".
_CONSTANT_SIGNAL_RTOL = 1e-14


@dataclass(frozen=True)
class DecayMode:
    """One term a·cos(ωt/ħ + φ)·e^{−γt/ħ}."""

    amplitude: float
    gamma: float
    omega: float = 0.0
    phase: float = 0.0

    def __post_init__(self: DecayMode) -> None:
        """Validate the mode."""
        for name in ("amplitude", "gamma", "omega", "phase"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                msg = f"Decay mode {name} must be finite, got {value!r}"
                raise ValueError(msg)
            object.__setattr__(self, name, value)
        if self.gamma <= 0:
            msg = f"Decay width must be positive, got {self.gamma!r}"
            raise NonDecayingPoleError(msg)

    @property
    def amplitude0(self: DecayMode) -> float:
        """Value of the mode at t = 0, a·cos φ."""
        return self.amplitude * np.cos(self.phase)

    def value(self: DecayMode, t: ArrayLike, *, hbar: float = 1.0) -> np.ndarray:
        """Evaluate the mode."""
        t = np.asarray(t, dtype=float) / hbar
        oscillation = np.cos(self.omega * t + self.phase)
        return self.amplitude * oscillation * np.exp(-self.gamma * t)


@dataclass(frozen=True)
class ExtractionDiagnostics:
    """What :func:`extract_modes` saw in the data."""

    rank: int
    singular_values: tuple[float, ...] = ()
    unstable: tuple[complex, ...] = ()
    residual: float = 0.0

    @property
    def stable(self: ExtractionDiagnostics) -> bool:
        """False when an exponent with non-negative real part was recovered."""
        return not self.unstable


@dataclass(frozen=True)
class ModeExpansion:
    """Equilibrium value plus decay modes sorted by width.

    Modes with identical (γ, ω, φ) are merged by adding amplitudes and modes
    with zero amplitude are dropped, so an expansion may hold no modes at all
    (a stationary signal).
    """

    equilibrium: float
    modes: tuple[DecayMode, ...] = ()
    diagnostics: Optional[ExtractionDiagnostics] = field(
        default=None,
        compare=False,
        repr=False,
    )

    def __post_init__(self: ModeExpansion) -> None:
        """Sort, merge and freeze the modes."""
        merged: dict[tuple[float, float, float], float] = defaultdict(float)
        for mode in self.modes:
            merged[(mode.gamma, mode.omega, mode.phase)] += mode.amplitude
        modes = tuple(
            DecayMode(amplitude, gamma, omega, phase)
            for (gamma, omega, phase), amplitude in sorted(merged.items())
            if amplitude != 0
        )
        object.__setattr__(self, "equilibrium", float(self.equilibrium))
        object.__setattr__(self, "modes", modes)

    @property
    def widths(self: ModeExpansion) -> np.ndarray:
        """γ_i in ascending order."""
        return np.array([mode.gamma for mode in self.modes])

    @property
    def amplitudes0(self: ModeExpansion) -> np.ndarray:
        """a_i(0) in mode order."""
        return np.array([mode.amplitude0 for mode in self.modes])

    @property
    def total_amplitude(self: ModeExpansion) -> float:
        """Σ a_i(0)."""
        return float(np.sum(self.amplitudes0))

    def transient(
        self: ModeExpansion,
        t: ArrayLike,
        *,
        hbar: float = 1.0,
    ) -> np.ndarray:
        """The decaying part f(t) − equilibrium."""
        total = np.zeros_like(np.asarray(t, dtype=float))
        for mode in self.modes:
            total = total + mode.value(t, hbar=hbar)
        return total

    def scaled(self: ModeExpansion, factor: float) -> ModeExpansion:
        """Every value multiplied by ``factor``."""
        return ModeExpansion(
            self.equilibrium * factor,
            tuple(
                DecayMode(mode.amplitude * factor, mode.gamma, mode.omega, mode.phase)
                for mode in self.modes
            ),
        )

    def negated(self: ModeExpansion) -> ModeExpansion:
        """The expansion of −f."""
        return self.scaled(-1.0)

    def without_modes(self: ModeExpansion) -> ModeExpansion:
        """Only the equilibrium value."""
        return ModeExpansion(self.equilibrium)


def _require_modes(exp: ModeExpansion) -> None:
    if not exp.modes:
        raise EmptyExpansionError


def _check_causal(t: ArrayLike) -> None:
    if np.any(np.asarray(t) < 0):
        raise AntiCausalTimeError


def evaluate_expansion(
    exp: ModeExpansion,
    t: ArrayLike,
    *,
    hbar: float = 1.0,
) -> Union[float, np.ndarray]:
    """Evaluate an expansion at one time or an array of times.

    :param exp: The mode expansion.
    :type exp: ModeExpansion
    :param t: Time(s) ≥ 0.
    :type t: ArrayLike
    :param hbar: Reduced Planck constant in the units of ``t`` and the widths.
    :type hbar: float
    :return: The signal value(s).
    :rtype: Union[float, np.ndarray]
    :raises AntiCausalTimeError: If any time is negative.

    >>> exp = ModeExpansion(0.5, (DecayMode(0.5, 1.0),))
    >>> round(float(evaluate_expansion(exp, 1.0)), 4)
    0.6839
    """
    _check_causal(t)
    values = exp.equilibrium + exp.transient(t, hbar=hbar)
    return float(values) if np.ndim(values) == 0 else values


def relaxation_time(exp: ModeExpansion, *, hbar: float = 1.0) -> float:
    """ħ over the smallest width, the lifetime of the pole closest to the real axis.

    :raises EmptyExpansionError: If the expansion has no modes.
    """
    _require_modes(exp)
    return hbar / float(exp.widths.min())


def _averaged_modes(
    exp: ModeExpansion,
    reading: GammaEffReading,
    gamma0: Optional[float],
) -> tuple[tuple[DecayMode, ...], bool]:
    """Modes entering the weighted width, and whether the faster reading fell back."""
    if reading == GammaEffReading.ALL:
        return exp.modes, False
    threshold = float(exp.widths.min()) if gamma0 is None else gamma0
    faster = tuple(mode for mode in exp.modes if mode.gamma > threshold)
    if faster:
        return faster, False
    return exp.modes, True


def gamma_eff(
    exp: ModeExpansion,
    *,
    reading: Union[GammaEffReading, str] = GammaEffReading.FASTER,
    gamma0: Optional[float] = None,
) -> float:
    """Amplitude-weighted width Σa_i(0)γ_i / Σa_i(0).

    With the ``faster`` reading only modes strictly faster than ``gamma0``
    (default: the slowest width) are averaged; when no such mode exists the
    average falls back to every mode.

    :param exp: The mode expansion.
    :type exp: ModeExpansion
    :param reading: Summation range, ``"all"`` or ``"faster"``.
    :type reading: Union[GammaEffReading, str]
    :param gamma0: Relaxation width excluded by the faster reading.
    :type gamma0: Optional[float]
    :return: γ_eff.
    :rtype: float
    :raises EmptyExpansionError: If the expansion has no modes.
    :raises DegenerateExpansionError: If the amplitude sum vanishes.

    >>> exp = ModeExpansion(0.0, (DecayMode(3, 1), DecayMode(1, 5)))
    >>> gamma_eff(exp)
    5.0
    >>> gamma_eff(exp, reading="all")
    2.0
    """
    _require_modes(exp)
    modes, _ = _averaged_modes(exp, GammaEffReading.from_any(reading), gamma0)
    amplitudes = np.array([mode.amplitude0 for mode in modes])
    widths = np.array([mode.gamma for mode in modes])
    total = float(np.sum(amplitudes))
    scale = float(np.sum(np.abs(amplitudes)))
    if total == 0 or abs(total) <= DEGENERATE_SUM_RTOL * scale:
        raise DegenerateExpansionError
    return float(np.dot(amplitudes, widths) / total)


def decoherence_time(
    exp: ModeExpansion,
    *,
    reading: Union[GammaEffReading, str] = GammaEffReading.FASTER,
    gamma0: Optional[float] = None,
    hbar: float = 1.0,
) -> float:
    """ħ/γ_eff.

    :raises DegenerateExpansionError: If γ_eff is undefined or not positive.
    """
    width = gamma_eff(exp, reading=reading, gamma0=gamma0)
    if width <= 0:
        msg = f"Effective width {width:.6g} is not positive"
        raise DegenerateExpansionError(msg)
    return hbar / width


def classify_modes(
    exp: ModeExpansion,
    *,
    reading: Union[GammaEffReading, str] = GammaEffReading.FASTER,
    gamma0: Optional[float] = None,
) -> tuple[tuple[DecayMode, ...], tuple[DecayMode, ...]]:
    """Split the modes into slow (γ ≤ γ_eff) and fast (γ > γ_eff).

    >>> exp = ModeExpansion(0.0, (DecayMode(1, 1), DecayMode(1, 2), DecayMode(1, 6)))
    >>> slow, fast = classify_modes(exp)
    >>> [m.gamma for m in slow], [m.gamma for m in fast]
    ([1.0, 2.0], [6.0])
    """
    width = gamma_eff(exp, reading=reading, gamma0=gamma0)
    slow = tuple(mode for mode in exp.modes if mode.gamma <= width)
    fast = tuple(mode for mode in exp.modes if mode.gamma > width)
    return slow, fast


def short_time_log_expansion(
    exp: ModeExpansion,
    *,
    hbar: float = 1.0,
) -> tuple[float, float]:
    """First-order expansion g(t) ≈ g0 + g1·t of ln Σ a_i e^{−γ_i t/ħ}.

    :return: (ln Σa_i(0), −γ_eff/ħ) with γ_eff over all modes.
    :rtype: tuple[float, float]
    :raises NonPositiveAmplitudeSumError: If Σa_i(0) ≤ 0.
    """
    _require_modes(exp)
    total = exp.total_amplitude
    if total <= 0:
        raise NonPositiveAmplitudeSumError
    return float(np.log(total)), -gamma_eff(exp, reading=GammaEffReading.ALL) / hbar


@dataclass(frozen=True)
class TimescaleReport:
    """Relaxation and decoherence timescales of one expansion.

    ``t_R`` and ``t_D`` are derived from the widths and never stored.
    """

    gamma0: float
    gamma_eff: float
    reading: GammaEffReading
    gamma_eff_all: float
    gamma_eff_faster: float
    slow: tuple[DecayMode, ...]
    fast: tuple[DecayMode, ...]
    hbar: float = 1.0
    warnings: tuple[str, ...] = ()

    @property
    def t_R(self: TimescaleReport) -> float:  # noqa: N802
        """Relaxation time ħ/γ0."""
        return self.hbar / self.gamma0

    @property
    def t_D(self: TimescaleReport) -> float:  # noqa: N802
        """Decoherence time ħ/γ_eff."""
        return self.hbar / self.gamma_eff

    def to_dict(self: TimescaleReport) -> dict:
        """Plain-data view for structured output."""
        return {
            "t_R": self.t_R,
            "t_D": self.t_D,
            "gamma0": self.gamma0,
            "gamma_eff": self.gamma_eff,
            "reading": self.reading.to_str(),
            "gamma_eff_readings": {
                "all": self.gamma_eff_all,
                "faster": self.gamma_eff_faster,
            },
            "slow": [_mode_dict(mode) for mode in self.slow],
            "fast": [_mode_dict(mode) for mode in self.fast],
            "warnings": list(self.warnings),
        }


def _mode_dict(mode: DecayMode) -> dict[str, float]:
    return {
        "amplitude": mode.amplitude,
        "gamma": mode.gamma,
        "omega": mode.omega,
        "phase": mode.phase,
    }


def timescale_report(
    exp: ModeExpansion,
    *,
    gamma0: Optional[float] = None,
    reading: Union[GammaEffReading, str] = GammaEffReading.FASTER,
    hbar: float = 1.0,
) -> TimescaleReport:
    """Build a :class:`TimescaleReport` carrying both γ_eff readings.

    :param exp: The expansion whose modes define γ_eff.
    :type exp: ModeExpansion
    :param gamma0: Relaxation width; defaults to the slowest width of ``exp``.
    :type gamma0: Optional[float]
    :param reading: Reading used for t_D and the slow/fast split.
    :type reading: Union[GammaEffReading, str]
    :param hbar: Reduced Planck constant in the units of the widths and times.
    :type hbar: float
    :return: The report.
    :rtype: TimescaleReport
    """
    reading = GammaEffReading.from_any(reading)
    _require_modes(exp)
    if gamma0 is None:
        gamma0 = float(exp.widths.min())
    warnings = []
    readings = {}
    for candidate in GammaEffReading:
        readings[candidate] = gamma_eff(exp, reading=candidate, gamma0=gamma0)
    _, fell_back = _averaged_modes(exp, GammaEffReading.FASTER, gamma0)
    if fell_back:
        warnings.append("faster-reading-has-no-faster-modes")
    chosen = readings[reading]
    if np.any(exp.amplitudes0 < 0) and not (
        exp.widths.min() <= chosen <= exp.widths.max()
    ):
        warnings.append("mixed-sign-amplitudes")
    for warning in warnings:
        logger.warning("timescale report: %s", warning)
    slow, fast = classify_modes(exp, reading=reading, gamma0=gamma0)
    return TimescaleReport(
        gamma0=gamma0,
        gamma_eff=chosen,
        reading=reading,
        gamma_eff_all=readings[GammaEffReading.ALL],
        gamma_eff_faster=readings[GammaEffReading.FASTER],
        slow=slow,
        fast=fast,
        hbar=hbar,
        warnings=tuple(warnings),
    )


def _modes_from_poles(
    exponents: np.ndarray,
    residues: np.ndarray,
    roots: np.ndarray,
) -> tuple[list[DecayMode], list[complex]]:
    """Pair conjugate exponents into real modes; collect the non-decaying ones."""
    modes, unstable = [], []
    for exponent, residue, root in zip(exponents, residues, roots):
        if -exponent.real <= 0:
            unstable.append(complex(exponent))
            continue
        if root.imag == 0:
            modes.append(DecayMode(residue.real, -exponent.real, exponent.imag, 0.0))
        elif exponent.imag > 0:
            modes.append(
                DecayMode(
                    2 * abs(residue),
                    -exponent.real,
                    exponent.imag,
                    np.angle(residue),
                ),
            )
    return modes, unstable


def extract_modes(
    samples: ArrayLike,
    model_order: int,
    *,
    rank_rtol: float = DEFAULT_RANK_RTOL,
) -> ModeExpansion:
    """Recover a mode expansion from uniformly sampled values (matrix pencil).

    The constant term is removed by differencing, the exponentials are found
    from the shift-invariance of the dominant right singular vectors of the
    difference Hankel matrix (pencil parameter = samples/3), and the amplitudes
    plus the constant are fitted by least squares on the original samples.
    Conjugate exponent pairs become one oscillating mode. Exponents that do not
    decay are left out of the expansion and listed in its diagnostics.

    :param samples: (time, value) pairs, uniformly spaced in time.
    :type samples: ArrayLike
    :param model_order: Number of decay modes to look for.
    :type model_order: int
    :param rank_rtol: Singular values below ``rank_rtol`` times the largest
        count as noise.
    :type rank_rtol: float
    :return: The expansion; ``diagnostics`` describes the fit.
    :rtype: ModeExpansion
    :raises InvalidModelOrderError: If ``model_order`` < 1.
    :raises InsufficientSamplesError: If fewer than 2·order + 2 samples are given.
    :raises NonUniformSamplingError: If the times are not evenly spaced.
    :raises RankDeficiencyError: If the data support fewer modes than requested.
    """
    if (
        isinstance(model_order, bool)
        or int(model_order) != model_order
        or model_order < 1
    ):
        raise InvalidModelOrderError
    model_order = int(model_order)
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:  # noqa: PLR2004
        msg = "Samples must be (time, value) pairs"
        raise ValueError(msg)
    times, values = data[:, 0], data[:, 1]
    if times.size < 2 * model_order + 2:
        raise InsufficientSamplesError
    step = uniform_step(times)
    if step is None:
        raise NonUniformSamplingError

    differences = np.diff(values)
    scale = max(1.0, float(np.max(np.abs(values))))
    if np.max(np.abs(differences)) <= _CONSTANT_SIGNAL_RTOL * scale:
        logger.warning("signal is constant; no decaying mode recovered")
        return ModeExpansion(
            float(np.mean(values)),
            (),
            ExtractionDiagnostics(rank=0, unstable=(0j,)),
        )

    pencil = max(differences.size // 3, 1)
    rows = differences.size - pencil
    matrix = hankel(differences[:rows], differences[-pencil - 1 :])
    _, singular, right = svd(matrix)
    rank = int(np.sum(singular > rank_rtol * singular[0]))
    count = min(rank, 2 * model_order, pencil, differences.size - pencil)
    logger.debug(
        "matrix pencil: pencil=%d rank=%d exponentials=%d",
        pencil,
        rank,
        count,
    )
    if count < model_order:
        msg = f"Data support {rank} exponentials; model order {model_order} requested"
        raise RankDeficiencyError(msg)

    dominant = right[:count]
    roots = np.linalg.eigvals(dominant[:, 1:] @ pinv(dominant[:, :-1]))
    exponents = np.log(roots.astype(complex)) / step

    design = np.column_stack(
        [np.ones(times.size, dtype=complex)] + [np.exp(s * times) for s in exponents],
    )
    coefficients, *_ = lstsq(design, values.astype(complex))
    residual = float(np.max(np.abs(design @ coefficients - values)))
    modes, unstable = _modes_from_poles(exponents, coefficients[1:], roots)
    if unstable:
        logger.warning("recovered %d non-decaying exponent(s)", len(unstable))
    return ModeExpansion(
        float(coefficients[0].real),
        tuple(modes),
        ExtractionDiagnostics(
            rank=rank,
            singular_values=tuple(float(value) for value in singular[: count + 1]),
            unstable=tuple(unstable),
            residual=residual,
        ),
    )


def sample_expansion(
    exp: ModeExpansion,
    times: Iterable[float],
    *,
    hbar: float = 1.0,
) -> np.ndarray:
    """(time, value) pairs of an expansion, as :func:`extract_modes` takes them."""
    grid = np.asarray(list(times), dtype=float)
    return np.column_stack([grid, evaluate_expansion(exp, grid, hbar=hbar)])
