"""Scenario files, tolerance profiles and unit conversion."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional, Union

import numpy as np
import tomli

from pole_decoherence.pole_evolution import TwoBranchSystem
from pole_decoherence.quantum_core import (
    DEFAULT_TOLERANCES,
    CoherentLabel,
    FockSpace,
    Tolerances,
)
from pole_decoherence.spectral_poles import (
    DEFAULT_NODES,
    DEFAULT_PANELS,
    DEFAULT_QUADRATURE_TOLERANCE,
    OhmicDensity,
    Pole,
    SpectralDensity,
    TabulatedDensity,
    pole_second_order,
)
from pole_decoherence.utils.enums import DensityKind, GammaEffReading, GridSpacing
from pole_decoherence.utils.exceptions import (
    InvalidEnumValueError,
    InvalidScenarioError,
)
from pole_decoherence.utils.misc import is_numeric, to_complex

if TYPE_CHECKING:
    from collections.abc import Mapping

logger = logging.getLogger(__name__)

TOLERANCE_PROFILE_ENV = "POLE_DECOHERENCE_TOLERANCE_PROFILE"
PROFILES = ("default", "strict")
MIN_GRID_COUNT = 8
_DATA = resources.files("pole_decoherence") / "data"


def _load_toml(source: Union[str, Path, Any]) -> dict:
    """Parse a TOML file (a path or a packaged resource)."""
    try:
        with source.open("rb") as stream:
            return tomli.load(stream)
    except (OSError, tomli.TOMLDecodeError) as ex:
        msg = f"Cannot read {source}: {ex}"
        raise InvalidScenarioError(msg) from ex


def _read_tolerances(table: Mapping[str, Any], base: Tolerances) -> Tolerances:
    known = {item.name for item in fields(Tolerances)}
    unknown = set(table) - known
    if unknown:
        msg = f"Unknown tolerance(s): {', '.join(sorted(unknown))}"
        raise InvalidScenarioError(msg)
    for key, value in table.items():
        if not is_numeric(value) or float(value) <= 0:
            msg = f"Tolerance {key} must be a positive number, got {value!r}"
            raise InvalidScenarioError(msg)
    return base.updated(**table)


def tolerance_profile(name: Optional[str] = None) -> Tolerances:
    """Tolerances named by ``name`` or by the profile environment variable.

    The name is a packaged profile (``default``, ``strict``) or the path of a
    TOML file with a ``[tolerances]`` table. Without either, the built-in
    defaults are used.

    :raises InvalidScenarioError: If the profile cannot be read.
    """
    name = name if name is not None else os.environ.get(TOLERANCE_PROFILE_ENV)
    if not name:
        return DEFAULT_TOLERANCES
    if name in PROFILES:
        data = _load_toml(_DATA / f"tolerances_{name}.toml")
    else:
        data = _load_toml(Path(name))
    logger.debug("tolerance profile %s", name)
    return _read_tolerances(data.get("tolerances", {}), DEFAULT_TOLERANCES)


@dataclass(frozen=True)
class TimeGrid:
    """Sampled times, in relaxation times or in reported time units."""

    t_min: float = 1e-3
    t_max: float = 1e2
    count: int = 64
    spacing: GridSpacing = GridSpacing.LOG
    relative: bool = True
    include_zero: bool = True

    def __post_init__(self: TimeGrid) -> None:
        """Validate the grid."""
        if self.count < MIN_GRID_COUNT:
            msg = f"Time grid needs at least {MIN_GRID_COUNT} points"
            raise InvalidScenarioError(msg)
        if not 0 <= self.t_min < self.t_max:
            msg = "Time grid needs 0 <= t_min < t_max"
            raise InvalidScenarioError(msg)
        if self.spacing == GridSpacing.LOG and self.t_min <= 0:
            msg = "Logarithmic grids need t_min > 0"
            raise InvalidScenarioError(msg)

    def sample(self: TimeGrid, unit: float) -> np.ndarray:
        """Grid points multiplied by ``unit``; zero is prepended when requested."""
        if self.spacing == GridSpacing.LOG:
            points = np.geomspace(self.t_min, self.t_max, self.count)
        else:
            points = np.linspace(self.t_min, self.t_max, self.count)
        points = points * unit
        if self.include_zero and points[0] > 0:
            points = np.concatenate([[0.0], points])
        return points


@dataclass(frozen=True)
class Scenario:
    """One physical set-up and how to analyze it.

    Frequencies and widths are in units of ``omega_unit``; ħ only enters the
    reported times and the branch placement κ = sqrt(m·ω′₀/2)/ħ.
    """

    density: SpectralDensity
    omega: float = 1.0
    mass: float = 1.0
    omega_unit: float = 1.0
    hbar: float = 1.0
    fock_dim: int = 128
    a: complex = 2**-0.5
    b: complex = 2**-0.5
    separation: Optional[float] = None
    alpha2_magnitude_sq: Optional[float] = 50.0
    time_grid: TimeGrid = field(default_factory=TimeGrid)
    reading: GammaEffReading = GammaEffReading.FASTER
    ladder_size: int = 8
    quadrature_panels: int = DEFAULT_PANELS
    quadrature_nodes: int = DEFAULT_NODES
    quadrature_tolerance: float = DEFAULT_QUADRATURE_TOLERANCE
    entries_dim: int = 8
    basis_vectors: int = 4
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES)
    name: str = "scenario"

    def __post_init__(self: Scenario) -> None:
        """Validate the invariants."""
        for key in ("omega", "mass", "omega_unit", "hbar"):
            value = getattr(self, key)
            if not is_numeric(value) or float(value) <= 0:
                msg = f"{key} must be a positive number, got {value!r}"
                raise InvalidScenarioError(msg)
        if self.a == 0 and self.b == 0:
            msg = "Weights a and b are both zero"
            raise InvalidScenarioError(msg)
        if (self.separation is None) == (self.alpha2_magnitude_sq is None):
            msg = (
                "Give exactly one of branches.separation, "
                "branches.alpha2_magnitude_sq"
            )
            raise InvalidScenarioError(msg)
        if self.alpha2_magnitude_sq is not None and self.alpha2_magnitude_sq < 0:
            msg = "alpha2_magnitude_sq must be >= 0"
            raise InvalidScenarioError(msg)
        for key in ("fock_dim", "ladder_size", "entries_dim", "basis_vectors"):
            if getattr(self, key) < 1:
                msg = f"{key} must be at least 1"
                raise InvalidScenarioError(msg)

    def with_changes(self: Scenario, **changes: Any) -> Scenario:  # noqa: ANN401
        """Copy with some fields replaced."""
        return replace(self, **changes)

    def with_magnitude(self: Scenario, alpha2_magnitude_sq: float) -> Scenario:
        """Copy placing branch 2 at |α₂|² = ``alpha2_magnitude_sq``."""
        return replace(self, separation=None, alpha2_magnitude_sq=alpha2_magnitude_sq)

    def pole(self: Scenario) -> Pole:
        """Second-order pole z₀ in units of ``omega_unit``."""
        return pole_second_order(
            self.density,
            self.omega,
            panels=self.quadrature_panels,
            nodes=self.quadrature_nodes,
            tolerance=self.quadrature_tolerance,
        )

    def kappa(self: Scenario, pole: Pole) -> float:
        """Label scaling α₂ = κL with κ = mω′₀/sqrt(2mħ²ω′₀)."""
        energy = self.mass * pole.omega_prime * self.omega_unit / 2
        return float(np.sqrt(energy) / self.hbar)

    def alpha2(self: Scenario, pole: Pole) -> CoherentLabel:
        """Label of the displaced branch."""
        if self.separation is not None:
            return CoherentLabel(self.kappa(pole) * self.separation)
        return CoherentLabel(np.sqrt(self.alpha2_magnitude_sq))

    def system(self: Scenario, pole: Optional[Pole] = None) -> TwoBranchSystem:
        """The two-branch system in natural units."""
        pole = pole if pole is not None else self.pole()
        return TwoBranchSystem(
            a=self.a,
            b=self.b,
            alpha1=CoherentLabel(0),
            alpha2=self.alpha2(pole),
            pole=pole,
            space=FockSpace(self.fock_dim),
            tolerances=self.tolerances,
        )

    def times(self: Scenario, pole: Pole) -> np.ndarray:
        """The analysis grid in natural units."""
        if self.time_grid.relative:
            return self.time_grid.sample(pole.lifetime)
        return self.time_grid.sample(self.omega_unit / self.hbar)

    def to_time(
        self: Scenario,
        value: Union[float, np.ndarray],
    ) -> Union[float, np.ndarray]:
        """Natural-unit time to reported time."""
        return value * self.hbar / self.omega_unit

    def to_rate(
        self: Scenario,
        value: Union[float, np.ndarray],
    ) -> Union[float, np.ndarray]:
        """Natural-unit width or frequency to reported units."""
        return value * self.omega_unit

    def physical_pole(self: Scenario, pole: Pole) -> Pole:
        """The pole in reported units."""
        return pole.scaled(self.omega_unit)


def _table(data: Mapping[str, Any], key: str) -> dict:
    value = data.get(key, {})
    if not isinstance(value, dict):
        msg = f"[{key}] must be a table"
        raise InvalidScenarioError(msg)
    return value


def _number(table: Mapping[str, Any], key: str, default: Any) -> Any:  # noqa: ANN401
    value = table.get(key, default)
    if value is not None and not is_numeric(value):
        msg = f"{key} must be a number, got {value!r}"
        raise InvalidScenarioError(msg)
    return value


def _integer(table: Mapping[str, Any], key: str, default: int) -> int:
    value = table.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        msg = f"{key} must be an integer, got {value!r}"
        raise InvalidScenarioError(msg)
    return value


def _complex(table: Mapping[str, Any], key: str, default: complex) -> complex:
    value = table.get(key, default)
    if isinstance(value, complex):
        return value
    converted = to_complex(value)
    if converted is None:
        msg = f"{key} must be a number or a [real, imag] pair, got {value!r}"
        raise InvalidScenarioError(msg)
    return converted


def _read_density(table: Mapping[str, Any], base_dir: Path) -> SpectralDensity:
    try:
        kind = DensityKind.from_str(str(table.get("kind", "ohmic")))
    except InvalidEnumValueError as ex:
        raise InvalidScenarioError(str(ex)) from ex
    if kind == DensityKind.OHMIC:
        return OhmicDensity(
            eta=_number(table, "eta", 0.01),
            cutoff=_number(table, "lambda_cutoff", 10.0),
        )
    if "path" not in table:
        msg = "Tabulated spectral density needs a path"
        raise InvalidScenarioError(msg)
    return TabulatedDensity.from_csv(base_dir / table["path"])


def scenario_from_dict(
    data: Mapping[str, Any],
    *,
    base_dir: Union[str, Path] = ".",
    tolerances: Optional[Tolerances] = None,
) -> Scenario:
    """Build a scenario from parsed TOML data.

    :param data: The parsed document.
    :type data: Mapping[str, Any]
    :param base_dir: Directory that relative paths are resolved against.
    :type base_dir: Union[str, Path]
    :param tolerances: Base tolerances; defaults to the active profile.
    :type tolerances: Optional[Tolerances]
    :return: The scenario.
    :rtype: Scenario
    :raises InvalidScenarioError: If a value is missing, mistyped or invalid.
    """
    base = tolerances if tolerances is not None else tolerance_profile()
    system = _table(data, "system")
    branches = _table(data, "branches")
    grid = _table(data, "time_grid")
    analysis = _table(data, "analysis")
    output = _table(data, "output")
    separation = _number(branches, "separation", None)
    magnitude = _number(
        branches,
        "alpha2_magnitude_sq",
        None if separation is not None else 50.0,
    )
    try:
        time_grid = TimeGrid(
            t_min=float(_number(grid, "t_min", 1e-3)),
            t_max=float(_number(grid, "t_max", 1e2)),
            count=_integer(grid, "count", 64),
            spacing=GridSpacing.from_str(str(grid.get("spacing", "log"))),
            relative=bool(grid.get("relative", True)),
            include_zero=bool(grid.get("include_zero", True)),
        )
        reading = GammaEffReading.from_str(
            str(analysis.get("gamma_eff_reading", "faster")),
        )
    except InvalidEnumValueError as ex:
        raise InvalidScenarioError(str(ex)) from ex
    return Scenario(
        density=_read_density(_table(data, "spectral_density"), Path(base_dir)),
        omega=float(_number(system, "omega", 1.0)),
        mass=float(_number(system, "mass", 1.0)),
        omega_unit=float(_number(system, "omega_unit", 1.0)),
        hbar=float(_number(system, "hbar", 1.0)),
        fock_dim=_integer(system, "fock_dim", 128),
        a=_complex(branches, "a", 2**-0.5),
        b=_complex(branches, "b", 2**-0.5),
        separation=None if separation is None else float(separation),
        alpha2_magnitude_sq=None if magnitude is None else float(magnitude),
        time_grid=time_grid,
        reading=reading,
        ladder_size=_integer(analysis, "ladder_size", 8),
        quadrature_panels=_integer(analysis, "quadrature_panels", DEFAULT_PANELS),
        quadrature_nodes=_integer(analysis, "quadrature_nodes", DEFAULT_NODES),
        quadrature_tolerance=float(
            _number(analysis, "quadrature_tolerance", DEFAULT_QUADRATURE_TOLERANCE),
        ),
        entries_dim=_integer(output, "entries_dim", 8),
        basis_vectors=_integer(output, "basis_vectors", 4),
        tolerances=_read_tolerances(_table(data, "tolerances"), base),
        name=str(_table(data, "scenario").get("name", "scenario")),
    )


def load_scenario(
    path: Optional[Union[str, Path]] = None,
    *,
    tolerances: Optional[Tolerances] = None,
) -> Scenario:
    """Read a scenario file, or the packaged default scenario when ``path`` is None.

    :raises InvalidScenarioError: If the file cannot be read or is invalid.
    """
    if path is None:
        return scenario_from_dict(
            _load_toml(_DATA / "default_scenario.toml"),
            tolerances=tolerances,
        )
    path = Path(path)
    logger.info("loading scenario %s", path)
    return scenario_from_dict(
        _load_toml(path),
        base_dir=path.parent,
        tolerances=tolerances,
    )


def default_scenario(*, tolerances: Optional[Tolerances] = None) -> Scenario:
    """The packaged default scenario."""
    return load_scenario(tolerances=tolerances)
