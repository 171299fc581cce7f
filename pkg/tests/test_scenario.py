"""Tests for the pole_decoherence.scenario module."""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from pole_decoherence.quantum_core import DEFAULT_TOLERANCES
from pole_decoherence.scenario import (
    TOLERANCE_PROFILE_ENV,
    Scenario,
    TimeGrid,
    default_scenario,
    load_scenario,
    scenario_from_dict,
    tolerance_profile,
)
from pole_decoherence.spectral_poles import (
    OhmicDensity,
    Pole,
    TabulatedDensity,
    pole_second_order,
)
from pole_decoherence.utils.enums import GammaEffReading, GridSpacing
from pole_decoherence.utils.exceptions import InvalidScenarioError

SEPARATED = """
[spectral_density]
eta = 0.02
lambda_cutoff = 5.0

[system]
mass = 2.0
fock_dim = 64

[branches]
a = [0.0, 1.0]
b = 1.0
separation = 3.0

[time_grid]
count = 8
spacing = "linear"
relative = false
t_min = 0.0
t_max = 7.0

[analysis]
gamma_eff_reading = "all"

[tolerances]
psd = 1e-6
"""


@pytest.fixture(autouse=True)
def _no_profile(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv(TOLERANCE_PROFILE_ENV, raising=False)


def test_tolerance_profile(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test tolerance_profile."""
    assert tolerance_profile() == DEFAULT_TOLERANCES
    assert tolerance_profile("default") == DEFAULT_TOLERANCES
    strict = tolerance_profile("strict")
    assert strict.herm == 1e-12
    assert strict.psd == 1e-10

    monkeypatch.setenv(TOLERANCE_PROFILE_ENV, "strict")
    assert tolerance_profile() == strict

    path = tmp_path / "loose.toml"
    path.write_text("[tolerances]\npsd = 1e-4\n")
    monkeypatch.setenv(TOLERANCE_PROFILE_ENV, str(path))
    assert tolerance_profile().psd == 1e-4
    assert tolerance_profile().herm == DEFAULT_TOLERANCES.herm

    path.write_text("[tolerances]\nsharpness = 1e-4\n")
    with pytest.raises(InvalidScenarioError, match="sharpness"):
        tolerance_profile(str(path))
    path.write_text("[tolerances]\npsd = -1.0\n")
    with pytest.raises(InvalidScenarioError, match="positive"):
        tolerance_profile(str(path))
    with pytest.raises(InvalidScenarioError):
        tolerance_profile(str(tmp_path / "missing.toml"))


def test_time_grid() -> None:
    """Test TimeGrid."""
    grid = TimeGrid(t_min=1.0, t_max=100.0, count=8)
    points = grid.sample(10.0)
    assert points.size == 9
    assert points[0] == 0.0
    assert points[1:] == pytest.approx(np.geomspace(10.0, 1000.0, 8))

    linear = TimeGrid(t_min=0.0, t_max=7.0, count=8, spacing=GridSpacing.LINEAR)
    assert linear.sample(1.0).tolist() == list(np.arange(8.0))
    assert TimeGrid(count=8, include_zero=False).sample(1.0)[0] == pytest.approx(1e-3)

    with pytest.raises(InvalidScenarioError):
        TimeGrid(count=4)
    with pytest.raises(InvalidScenarioError):
        TimeGrid(t_min=2.0, t_max=1.0)
    with pytest.raises(InvalidScenarioError, match="Logarithmic"):
        TimeGrid(t_min=0.0)


def test_scenario_validation() -> None:
    """Test the invariants checked by Scenario."""
    density = OhmicDensity(0.01, 10.0)
    assert Scenario(density).alpha2_magnitude_sq == 50.0
    with pytest.raises(InvalidScenarioError, match="omega"):
        Scenario(density, omega=0.0)
    with pytest.raises(InvalidScenarioError, match="hbar"):
        Scenario(density, hbar=-1.0)
    with pytest.raises(InvalidScenarioError, match="both zero"):
        Scenario(density, a=0, b=0)
    with pytest.raises(InvalidScenarioError, match="exactly one"):
        Scenario(density, separation=1.0)
    with pytest.raises(InvalidScenarioError, match="exactly one"):
        Scenario(density, alpha2_magnitude_sq=None)
    with pytest.raises(InvalidScenarioError, match=">= 0"):
        Scenario(density, alpha2_magnitude_sq=-1.0)
    with pytest.raises(InvalidScenarioError, match="fock_dim"):
        Scenario(density, fock_dim=0)


def test_scenario_units() -> None:
    """Test unit conversions and the branch placement."""
    scenario = Scenario(OhmicDensity(0.01, 10.0), omega_unit=4.0, hbar=2.0, mass=2.0)
    pole = Pole(1.0, 0.1)
    assert scenario.to_time(1.0) == 0.5
    assert scenario.to_rate(0.1) == pytest.approx(0.4)
    assert scenario.physical_pole(pole) == Pole(4.0, 0.4)
    assert scenario.kappa(pole) == pytest.approx(1.0)
    assert scenario.alpha2(pole).magnitude_sq == pytest.approx(50.0)
    assert scenario.with_changes(separation=3.0, alpha2_magnitude_sq=None).alpha2(
        pole,
    ).alpha == pytest.approx(3.0)

    relative = scenario.times(pole)
    assert relative[-1] == pytest.approx(100.0 / 0.1)
    absolute = scenario.with_changes(time_grid=TimeGrid(relative=False)).times(pole)
    assert absolute[-1] == pytest.approx(100.0 * 4.0 / 2.0)

    system = scenario.with_magnitude(16.0).system(pole)
    assert system.alpha1.alpha == 0
    assert system.alpha2.magnitude_sq == pytest.approx(16.0)
    assert system.space.dim == 128
    assert system.pole is pole


def test_default_scenario() -> None:
    """Test the packaged default scenario."""
    scenario = default_scenario()
    assert scenario.name == "default"
    assert scenario.density == OhmicDensity(0.01, 10.0)
    assert scenario.alpha2_magnitude_sq == 50.0
    assert scenario.separation is None
    assert scenario.reading == GammaEffReading.FASTER
    assert scenario.time_grid == TimeGrid()
    assert scenario.tolerances == DEFAULT_TOLERANCES
    assert scenario.a == pytest.approx(2**-0.5)
    pole = scenario.pole()
    assert pole.gamma == pytest.approx(2 * np.pi * 0.01 * np.exp(-0.1), rel=1e-12)
    assert load_scenario().density == scenario.density


def test_load_scenario(tmp_path: Path) -> None:
    """Test load_scenario on a file with a separation."""
    path = tmp_path / "separated.toml"
    path.write_text(SEPARATED)
    scenario = load_scenario(path)
    assert scenario.density == OhmicDensity(0.02, 5.0)
    assert scenario.a == 1j
    assert scenario.b == 1.0
    assert scenario.separation == 3.0
    assert scenario.alpha2_magnitude_sq is None
    assert scenario.reading == GammaEffReading.ALL
    assert scenario.tolerances.psd == 1e-6
    assert scenario.time_grid.spacing == GridSpacing.LINEAR
    assert scenario.times(Pole(1.0, 0.5)).tolist() == list(np.arange(8.0))

    pole = Pole(1.0, 0.02)
    assert scenario.kappa(pole) == pytest.approx(1.0)
    assert scenario.alpha2(pole).alpha == pytest.approx(3.0)

    strict = load_scenario(path, tolerances=DEFAULT_TOLERANCES.updated(herm=1e-13))
    assert strict.tolerances.herm == 1e-13
    assert strict.tolerances.psd == 1e-6


def test_tabulated_scenario(tmp_path: Path) -> None:
    """Test a scenario with a tabulated density resolved next to the file."""
    ohmic = OhmicDensity(0.01, 10.0)
    grid = 101.0 * np.linspace(0.0, 1.0, 200) ** 2
    pd.DataFrame({"omega": grid, "j": ohmic(grid)}).to_csv(
        tmp_path / "density.csv",
        index=False,
    )
    path = tmp_path / "tabulated.toml"
    path.write_text(
        '[spectral_density]\nkind = "tabulated"\npath = "density.csv"\n',
    )
    scenario = load_scenario(path)
    assert isinstance(scenario.density, TabulatedDensity)
    expected = pole_second_order(ohmic, 1.0)
    assert scenario.pole().omega_prime == pytest.approx(expected.omega_prime, abs=1e-6)
    assert scenario.pole().gamma == pytest.approx(expected.gamma, abs=1e-6)


@pytest.mark.parametrize(
    ("text", "match"),
    [
        ("[system]\nfock_dim = 1.5\n", "fock_dim"),
        ("[system]\nomega = 'fast'\n", "omega"),
        ('[time_grid]\nspacing = "cubic"\n', "GridSpacing"),
        ('[analysis]\ngamma_eff_reading = "some"\n', "GammaEffReading"),
        ('[spectral_density]\nkind = "gaussian"\n', "DensityKind"),
        ('[spectral_density]\nkind = "tabulated"\n', "path"),
        ("[branches]\na = 'x'\n", "real, imag"),
        ("[branches]\nseparation = 1.0\nalpha2_magnitude_sq = 4.0\n", "exactly one"),
        ("system = 3\n", "table"),
        ("[tolerances]\npsd = 0\n", "positive"),
        ("[system\n", "Cannot read"),
    ],
)
def test_invalid_scenarios(tmp_path: Path, text: str, match: str) -> None:
    """Test that malformed scenario files are rejected."""
    path = tmp_path / "bad.toml"
    path.write_text(text)
    with pytest.raises(InvalidScenarioError, match=match):
        load_scenario(path)


def test_scenario_from_dict() -> None:
    """Test scenario_from_dict without a file."""
    scenario = scenario_from_dict({"branches": {"alpha2_magnitude_sq": 4.0}})
    assert scenario.alpha2_magnitude_sq == 4.0
    assert scenario.name == "scenario"
    assert scenario.fock_dim == 128
