"""Spectral densities, second-order self-energy and the Omnès pole ladder."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Union

import numpy as np
import pandas as pd
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from pole_decoherence.utils.enums import DensityKind, OnError
from pole_decoherence.utils.exceptions import (
    FreeSystemError,
    InvalidLadderSizeError,
    InvalidSpectralDensityError,
    NonDecayingPoleError,
    NotAResonanceError,
    OutOfHullError,
    QuadratureConvergenceError,
)

if TYPE_CHECKING:
    from collections.abc import Callable, Iterator
    from pathlib import Path

    from numpy.typing import ArrayLike

logger = logging.getLogger(__name__)

MIN_TABULATED_POINTS = 8
DEFAULT_PANELS = 16
DEFAULT_NODES = 256
DEFAULT_QUADRATURE_TOLERANCE = 1e-8
# Relative floor of the quadrature error estimate (rounding of the node sums).
_ROUNDOFF_FLOOR = 1e-13


@dataclass(frozen=True)
class OhmicDensity:
    """Ohmic density with exponential cutoff, J(ω) = η·ω·e^{−ω/Λ} for ω ≥ 0."""

    eta: float
    cutoff: float

    def __post_init__(self: OhmicDensity) -> None:
        """Validate the parameters."""
        if not np.isfinite(self.eta) or self.eta < 0:
            msg = f"Coupling eta must be finite and >= 0, got {self.eta!r}"
            raise InvalidSpectralDensityError(msg)
        if not np.isfinite(self.cutoff) or self.cutoff <= 0:
            msg = f"Cutoff must be finite and > 0, got {self.cutoff!r}"
            raise InvalidSpectralDensityError(msg)

    @property
    def kind(self: OhmicDensity) -> DensityKind:
        """Representation tag."""
        return DensityKind.OHMIC

    def support(self: OhmicDensity, omega: float) -> tuple[float, float]:
        """Integration hull [0, max(10Λ, ω + 10Λ)]."""
        return 0.0, max(10 * self.cutoff, omega + 10 * self.cutoff)

    def contains(self: OhmicDensity, omega: ArrayLike) -> bool:
        """Whether every frequency is in the domain ω ≥ 0."""
        return bool(np.all(np.asarray(omega) >= 0))

    def __call__(self: OhmicDensity, omega: ArrayLike) -> np.ndarray:
        """Evaluate J at one or more frequencies inside the domain."""
        omega = np.asarray(omega, dtype=float)
        return self.eta * omega * np.exp(-omega / self.cutoff)

    def derivative(self: OhmicDensity, omega: ArrayLike) -> np.ndarray:
        """dJ/dω."""
        omega = np.asarray(omega, dtype=float)
        return self.eta * (1 - omega / self.cutoff) * np.exp(-omega / self.cutoff)


@dataclass(frozen=True, eq=False)
class TabulatedDensity:
    """Sampled density with monotone piecewise-cubic (PCHIP) interpolation.

    Interpolated values are clamped to be non-negative and queries outside the
    sampled grid are rejected.
    """

    grid: np.ndarray
    values: np.ndarray
    _interpolant: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self: TabulatedDensity) -> None:
        """Validate the samples and build the interpolant."""
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            msg = "Grid and values must be one-dimensional and of equal length"
            raise InvalidSpectralDensityError(msg)
        if grid.size < MIN_TABULATED_POINTS:
            msg = f"Tabulated density needs at least {MIN_TABULATED_POINTS} points"
            raise InvalidSpectralDensityError(msg)
        if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(values))):
            msg = "Tabulated density contains non-finite samples"
            raise InvalidSpectralDensityError(msg)
        if grid[0] < 0 or np.any(np.diff(grid) <= 0):
            msg = "Grid must be strictly increasing and non-negative"
            raise InvalidSpectralDensityError(msg)
        if np.any(values < 0):
            msg = "Spectral density values must be non-negative"
            raise InvalidSpectralDensityError(msg)
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_interpolant", PchipInterpolator(grid, values))

    @classmethod
    def from_csv(
        cls: type[TabulatedDensity],
        path: Union[str, Path],
    ) -> TabulatedDensity:
        """Read a two-column (frequency, value) CSV file."""
        try:
            table = pd.read_csv(path)
        except (OSError, pd.errors.ParserError) as ex:
            msg = f"Cannot read tabulated density {path}: {ex}"
            raise InvalidSpectralDensityError(msg) from ex
        if table.shape[1] != 2:  # noqa: PLR2004
            msg = f"Tabulated density {path} must have exactly two columns"
            raise InvalidSpectralDensityError(msg)
        return cls(table.iloc[:, 0].to_numpy(), table.iloc[:, 1].to_numpy())

    @classmethod
    def sample(
        cls: type[TabulatedDensity],
        density: OhmicDensity,
        grid: ArrayLike,
    ) -> TabulatedDensity:
        """Tabulate another density on a grid."""
        grid = np.asarray(grid, dtype=float)
        return cls(grid, density(grid))

    @property
    def kind(self: TabulatedDensity) -> DensityKind:
        """Representation tag."""
        return DensityKind.TABULATED

    def support(
        self: TabulatedDensity,
        omega: float,  # noqa: ARG002
    ) -> tuple[float, float]:
        """Integration hull, the sampled grid range."""
        return float(self.grid[0]), float(self.grid[-1])

    def contains(self: TabulatedDensity, omega: ArrayLike) -> bool:
        """Whether every frequency lies in the grid hull."""
        omega = np.asarray(omega)
        return bool(np.all((omega >= self.grid[0]) & (omega <= self.grid[-1])))

    def __call__(self: TabulatedDensity, omega: ArrayLike) -> np.ndarray:
        """Evaluate J at one or more frequencies inside the hull."""
        if not self.contains(omega):
            raise OutOfHullError
        return np.clip(self._interpolant(omega), 0.0, None)

    def derivative(self: TabulatedDensity, omega: ArrayLike) -> np.ndarray:
        """dJ/dω of the interpolant."""
        if not self.contains(omega):
            raise OutOfHullError
        return self._interpolant.derivative()(omega)


SpectralDensity = Union[OhmicDensity, TabulatedDensity]


def evaluate_density(
    density: SpectralDensity,
    omega: float,
    *,
    errors: Union[OnError, str] = "raise",
) -> float:
    """Evaluate a spectral density at one frequency.

    :param density: The spectral density.
    :type density: SpectralDensity
    :param omega: The frequency.
    :type omega: float
    :param errors: The error handling behavior. Defaults to "raise".
    :type errors: Union[OnError, str]
    :return: J(ω) ≥ 0, or NaN for an out-of-domain query in ignore mode.
    :rtype: float
    :raises OutOfHullError: If ω is outside the domain of the density.

    >>> round(evaluate_density(OhmicDensity(0.01, 10.0), 1.0), 10)
    0.0090483742
    """
    errors = OnError.from_any(errors)
    if not density.contains(omega):
        if errors == OnError.RAISE:
            msg = f"Frequency {omega!r} is outside the domain of the density"
            raise OutOfHullError(msg)
        return float("nan")
    return float(density(omega))


@dataclass(frozen=True)
class SelfEnergy:
    """Second-order self-energy at the bare frequency.

    ``shift`` is the principal-value part, ``width_part`` equals π·J(ω) and
    ``error_estimate`` is the quadrature error estimate of ``shift``.
    """

    shift: float
    width_part: float
    error_estimate: float = 0.0


def _panel_edges(
    density: SpectralDensity,
    omega: float,
    panels: int,
) -> np.ndarray:
    lower, upper = density.support(omega)
    if density.kind == DensityKind.TABULATED:
        # Knots bound the cubic pieces; ω splits the piece that holds it.
        return np.union1d(density.grid, [omega])
    return np.linspace(lower, upper, panels + 1)


def _composite_gauss_legendre(
    integrand: Callable[[np.ndarray], np.ndarray],
    edges: np.ndarray,
    nodes: int,
) -> float:
    abscissae, weights = leggauss(nodes)
    half_widths = np.diff(edges) / 2
    centres = (edges[:-1] + edges[1:]) / 2
    points = centres[:, None] + half_widths[:, None] * abscissae[None, :]
    return float(np.sum(half_widths[:, None] * weights[None, :] * integrand(points)))


def self_energy(
    density: SpectralDensity,
    omega: float,
    *,
    panels: int = DEFAULT_PANELS,
    nodes: int = DEFAULT_NODES,
    tolerance: float = DEFAULT_QUADRATURE_TOLERANCE,
) -> SelfEnergy:
    """Principal-value shift and width of ∫ J(ω′)dω′/(ω − ω′ + i0).

    The singularity is subtracted analytically,
    PV∫ J/(ω−ω′) = ∫ [J(ω′)−J(ω)]/(ω−ω′) dω′ + J(ω)·ln((ω−ω_min)/(ω_max−ω)),
    and the regular part is integrated by composite Gauss–Legendre. Panels are
    equal-width for a parametric density; for a tabulated density they are the
    interpolation pieces, split at ω, so every piece is a polynomial or a smooth
    rational function. The error estimate compares ``nodes`` against
    ``nodes // 2`` per panel.

    :param density: The spectral density.
    :type density: SpectralDensity
    :param omega: The bare frequency, strictly inside the support.
    :type omega: float
    :param panels: Number of equal-width panels for a parametric density.
    :type panels: int
    :param nodes: Gauss–Legendre nodes per panel.
    :type nodes: int
    :param tolerance: Largest acceptable error estimate, relative to max(1, |shift|).
    :type tolerance: float
    :return: The self-energy.
    :rtype: SelfEnergy
    :raises NotAResonanceError: If ω is not strictly inside the support.
    :raises QuadratureConvergenceError: If the error estimate exceeds the tolerance.
    """
    lower, upper = density.support(omega)
    if not lower < omega < upper:
        msg = f"Frequency {omega!r} is not inside the support [{lower}, {upper}]"
        raise NotAResonanceError(msg)
    at_omega = float(density(omega))
    slope = float(density.derivative(omega))

    def regular(points: np.ndarray) -> np.ndarray:
        offset = omega - points
        with np.errstate(divide="ignore", invalid="ignore"):
            values = (density(points) - at_omega) / offset
        return np.where(offset == 0, -slope, values)

    log_term = at_omega * np.log((omega - lower) / (upper - omega))
    edges = _panel_edges(density, omega, panels)
    fine = _composite_gauss_legendre(regular, edges, nodes)
    coarse = _composite_gauss_legendre(regular, edges, max(nodes // 2, 1))
    shift = fine + log_term
    error = max(abs(fine - coarse), _ROUNDOFF_FLOOR * max(1.0, abs(shift)))
    logger.debug(
        "self-energy at omega=%g: shift=%.16g width=%.16g error=%.2e",
        omega,
        shift,
        np.pi * at_omega,
        error,
    )
    if error > tolerance * max(1.0, abs(shift)):
        msg = f"Quadrature error estimate {error:.3e} exceeds {tolerance:.1e}"
        raise QuadratureConvergenceError(msg)
    return SelfEnergy(shift=shift, width_part=np.pi * at_omega, error_estimate=error)


def pv_shift_oracle(
    density: SpectralDensity,
    omega: float,
    *,
    excision: float = 1e-2,
) -> float:
    """Principal-value shift by symmetric excision and adaptive quadrature.

    The excised integral I(δ) = PV + 2J′(ω)δ + O(δ³) is evaluated at δ and
    δ/2 and combined as 2·I(δ/2) − I(δ). Independent of :func:`self_energy`;
    used to cross-check it.
    """
    lower, upper = density.support(omega)
    if not lower + excision < omega < upper - excision:
        msg = f"Frequency {omega!r} is too close to the edge of the support"
        raise NotAResonanceError(msg)

    def integrand(point: float) -> float:
        return float(density(point)) / (omega - point)

    def excised(delta: float) -> float:
        options = {"limit": 1000, "epsabs": 1e-14, "epsrel": 1e-13}
        left, _ = quad(integrand, lower, omega - delta, **options)
        right, _ = quad(integrand, omega + delta, upper, **options)
        return left + right

    return 2 * excised(excision / 2) - excised(excision)


@dataclass(frozen=True)
class Pole:
    """Complex decay mode z = ω′ − (i/2)γ with γ > 0."""

    omega_prime: float
    gamma: float

    def __post_init__(self: Pole) -> None:
        """Reject non-decaying poles."""
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            msg = f"Pole width must be positive, got {self.gamma!r}"
            raise NonDecayingPoleError(msg)

    @property
    def z(self: Pole) -> complex:
        """The complex position ω′ − iγ/2."""
        return complex(self.omega_prime, -self.gamma / 2)

    @property
    def lifetime(self: Pole) -> float:
        """1/γ in internal units (ħ = 1)."""
        return 1.0 / self.gamma

    def scaled(self: Pole, factor: float) -> Pole:
        """Pole with both coordinates multiplied by ``factor``."""
        return Pole(factor * self.omega_prime, factor * self.gamma)


def pole_second_order(
    density: SpectralDensity,
    omega: float,
    *,
    panels: int = DEFAULT_PANELS,
    nodes: int = DEFAULT_NODES,
    tolerance: float = DEFAULT_QUADRATURE_TOLERANCE,
) -> Pole:
    """Born-level pole z₀ = ω + Δ(ω) − iπJ(ω), i.e. γ₀ = 2πJ(ω).

    :raises FreeSystemError: If J(ω) = 0 (no decay).
    :raises NotAResonanceError: If ω is not strictly inside the support.
    :raises QuadratureConvergenceError: If the shift did not converge.
    """
    energy = self_energy(
        density,
        omega,
        panels=panels,
        nodes=nodes,
        tolerance=tolerance,
    )
    if energy.width_part <= 0:
        raise FreeSystemError
    pole = Pole(omega_prime=omega + energy.shift, gamma=2 * energy.width_part)
    logger.info("pole z0 = %.12g - i*%.12g/2", pole.omega_prime, pole.gamma)
    return pole


@dataclass(frozen=True)
class PoleLadder:
    """Poles z_n = n·z₀ for n = 1 … n_max."""

    base: Pole
    n_max: int

    def __post_init__(self: PoleLadder) -> None:
        """Validate the ladder size."""
        n_max = self.n_max
        if isinstance(n_max, bool) or int(n_max) != n_max or n_max < 1:
            raise InvalidLadderSizeError
        object.__setattr__(self, "n_max", int(self.n_max))

    def member(self: PoleLadder, n: int) -> Pole:
        """The n-th pole, scaled from the base by exact integer multiplication."""
        if not 1 <= n <= self.n_max:
            msg = f"Ladder index {n} outside 1..{self.n_max}"
            raise IndexError(msg)
        if n == 1:
            return self.base
        return Pole(n * self.base.omega_prime, n * self.base.gamma)

    def __iter__(self: PoleLadder) -> Iterator[Pole]:
        """Iterate over the members in order."""
        return (self.member(n) for n in range(1, self.n_max + 1))

    def __len__(self: PoleLadder) -> int:
        """Number of members."""
        return self.n_max

    def as_table(self: PoleLadder) -> pd.DataFrame:
        """One row per member with columns n, re_z, im_z, gamma_n."""
        members = list(self)
        return pd.DataFrame(
            {
                "n": np.arange(1, self.n_max + 1),
                "re_z": [pole.omega_prime for pole in members],
                "im_z": [-pole.gamma / 2 for pole in members],
                "gamma_n": [pole.gamma for pole in members],
            },
        )


def pole_ladder(base: Pole, n_max: int) -> PoleLadder:
    """The Omnès ladder z_n = n·z₀.

    :raises InvalidLadderSizeError: If n_max < 1.

    >>> [p.gamma for p in pole_ladder(Pole(1.0, 0.5), 3)]
    [0.5, 1.0, 1.5]
    """
    return PoleLadder(base, n_max)
