"""Tests for the pole_decoherence.spectral_poles module."""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from pole_decoherence.spectral_poles import (
    OhmicDensity,
    Pole,
    TabulatedDensity,
    evaluate_density,
    pole_ladder,
    pole_second_order,
    pv_shift_oracle,
    self_energy,
)
from pole_decoherence.utils.enums import DensityKind
from pole_decoherence.utils.exceptions import (
    FreeSystemError,
    InvalidLadderSizeError,
    InvalidSpectralDensityError,
    NonDecayingPoleError,
    NotAResonanceError,
    OutOfHullError,
    QuadratureConvergenceError,
)


def test_ohmic_density() -> None:
    """Test OhmicDensity."""
    density = OhmicDensity(0.01, 10.0)
    assert density.kind == DensityKind.OHMIC
    assert density(1.0) == pytest.approx(0.01 * np.exp(-0.1))
    assert density(0.0) == 0.0
    assert density.support(1.0) == (0.0, 101.0)
    assert density.support(150.0) == (0.0, 250.0)
    assert density.contains([0.0, 5.0])
    assert not density.contains(-1.0)
    step = 1e-6
    numeric = (density(2.0 + step) - density(2.0 - step)) / (2 * step)
    assert density.derivative(2.0) == pytest.approx(numeric, rel=1e-8)

    with pytest.raises(InvalidSpectralDensityError):
        OhmicDensity(-0.1, 10.0)
    with pytest.raises(InvalidSpectralDensityError):
        OhmicDensity(0.1, 0.0)
    with pytest.raises(InvalidSpectralDensityError):
        OhmicDensity(float("nan"), 1.0)


def test_tabulated_density(tmp_path: Path) -> None:
    """Test TabulatedDensity."""
    ohmic = OhmicDensity(0.01, 10.0)
    grid = np.linspace(0.0, 20.0, 401)
    density = TabulatedDensity.sample(ohmic, grid)
    assert density.kind == DensityKind.TABULATED
    assert density.support(1.0) == (0.0, 20.0)
    assert density(1.02) == pytest.approx(ohmic(1.02), rel=1e-4)
    assert density(grid[7]) == pytest.approx(ohmic(grid[7]), rel=1e-12)
    assert density.derivative(1.0) == pytest.approx(ohmic.derivative(1.0), rel=1e-3)
    with pytest.raises(OutOfHullError):
        density(25.0)
    with pytest.raises(OutOfHullError):
        density.derivative(-0.5)

    path = tmp_path / "density.csv"
    pd.DataFrame({"omega": grid, "j": ohmic(grid)}).to_csv(path, index=False)
    loaded = TabulatedDensity.from_csv(path)
    assert loaded.grid == pytest.approx(grid, rel=1e-15, abs=1e-15)
    assert loaded(3.0) == pytest.approx(density(3.0))

    with pytest.raises(InvalidSpectralDensityError):
        TabulatedDensity(np.arange(4.0), np.ones(4))
    with pytest.raises(InvalidSpectralDensityError):
        TabulatedDensity(np.arange(10.0)[::-1], np.ones(10))
    with pytest.raises(InvalidSpectralDensityError):
        TabulatedDensity(np.arange(10.0), -np.ones(10))
    with pytest.raises(InvalidSpectralDensityError):
        TabulatedDensity(np.arange(10.0), np.ones(9))
    with pytest.raises(InvalidSpectralDensityError):
        TabulatedDensity.from_csv(tmp_path / "missing.csv")
    pd.DataFrame({"a": grid, "b": grid, "c": grid}).to_csv(path, index=False)
    with pytest.raises(InvalidSpectralDensityError, match="two columns"):
        TabulatedDensity.from_csv(path)


def test_evaluate_density() -> None:
    """Test evaluate_density."""
    density = TabulatedDensity(np.linspace(1.0, 2.0, 11), np.full(11, 0.5))
    assert evaluate_density(density, 1.5) == pytest.approx(0.5)
    with pytest.raises(OutOfHullError):
        evaluate_density(density, 0.5)
    assert np.isnan(evaluate_density(density, 0.5, errors="ignore"))
    assert np.isnan(evaluate_density(OhmicDensity(0.1, 1.0), -1.0, errors="ignore"))


def test_tabulated_twin() -> None:
    """Test that a 200-point tabulated ohmic density reproduces the ohmic pole."""
    ohmic = OhmicDensity(0.01, 10.0)
    _, upper = ohmic.support(1.0)
    # Quadratic spacing, fine near the resonance and coarse in the tail.
    twin = TabulatedDensity.sample(ohmic, upper * np.linspace(0.0, 1.0, 200) ** 2)
    assert twin.grid.size == 200
    assert twin.support(1.0) == pytest.approx((0.0, upper))
    assert evaluate_density(twin, 1.0) == pytest.approx(ohmic(1.0), abs=1e-6)

    energy = self_energy(twin, 1.0)
    assert energy.error_estimate < 1e-10
    expected = pole_second_order(ohmic, 1.0)
    pole = pole_second_order(twin, 1.0)
    assert pole.omega_prime == pytest.approx(expected.omega_prime, abs=1e-6)
    assert pole.gamma == pytest.approx(expected.gamma, abs=1e-6)


@pytest.mark.parametrize(
    ("eta", "cutoff", "omega"),
    [(0.01, 10.0, 1.0), (0.05, 5.0, 2.0), (0.002, 20.0, 0.5)],
)
def test_self_energy_ohmic(eta: float, cutoff: float, omega: float) -> None:
    """Test self_energy against the ohmic closed form and the excision oracle."""
    density = OhmicDensity(eta, cutoff)
    energy = self_energy(density, omega)
    assert energy.width_part == pytest.approx(
        np.pi * eta * omega * np.exp(-omega / cutoff),
        rel=1e-12,
    )
    assert energy.shift == pytest.approx(pv_shift_oracle(density, omega), abs=1e-8)
    assert energy.shift < 0
    assert 0 < energy.error_estimate < 1e-8


def test_self_energy_symmetric() -> None:
    """Test self_energy on a constant density centred on the frequency."""
    density = TabulatedDensity(np.linspace(0.5, 1.5, 11), np.full(11, 0.2))
    energy = self_energy(density, 1.0)
    assert energy.shift == pytest.approx(0.0, abs=1e-10)
    assert energy.width_part == pytest.approx(np.pi * 0.2)


def test_self_energy_errors() -> None:
    """Test the failure modes of self_energy."""
    tabulated = TabulatedDensity(np.linspace(0.5, 1.5, 11), np.full(11, 0.2))
    with pytest.raises(NotAResonanceError):
        self_energy(tabulated, 1.5)
    with pytest.raises(NotAResonanceError):
        self_energy(tabulated, 3.0)
    with pytest.raises(NotAResonanceError):
        pv_shift_oracle(tabulated, 0.505)
    with pytest.raises(QuadratureConvergenceError):
        self_energy(OhmicDensity(0.01, 10.0), 1.0, tolerance=1e-16)


def test_pole() -> None:
    """Test Pole."""
    pole = Pole(1.0, 0.02)
    assert pole.z == complex(1.0, -0.01)
    assert pole.lifetime == pytest.approx(50.0)
    scaled = pole.scaled(3.0)
    assert scaled.omega_prime == 3.0
    assert scaled.gamma == pytest.approx(0.06)
    for gamma in (0.0, -1.0, float("nan")):
        with pytest.raises(NonDecayingPoleError):
            Pole(1.0, gamma)


def test_pole_second_order() -> None:
    """Test pole_second_order."""
    density = OhmicDensity(0.01, 10.0)
    pole = pole_second_order(density, 1.0)
    energy = self_energy(density, 1.0)
    assert pole.gamma == 2 * energy.width_part
    assert pole.gamma == pytest.approx(2 * np.pi * 0.01 * np.exp(-0.1), rel=1e-12)
    assert pole.omega_prime == 1.0 + energy.shift
    assert pole.z.imag == -pole.gamma / 2

    with pytest.raises(FreeSystemError):
        pole_second_order(OhmicDensity(0.0, 10.0), 1.0)
    with pytest.raises(NotAResonanceError):
        pole_second_order(OhmicDensity(0.01, 10.0), 0.0)


def test_pole_ladder() -> None:
    """Test PoleLadder and pole_ladder."""
    base = Pole(1.25, 0.05)
    ladder = pole_ladder(base, 8)
    assert len(ladder) == 8
    assert ladder.member(1) is base
    for n, member in enumerate(ladder, start=1):
        assert member.omega_prime == n * base.omega_prime
        assert member.gamma == n * base.gamma
    assert ladder.member(3).gamma == pytest.approx(0.15)

    table = ladder.as_table()
    assert list(table.columns) == ["n", "re_z", "im_z", "gamma_n"]
    assert table["n"].tolist() == list(range(1, 9))
    assert (table["im_z"] == -table["gamma_n"] / 2).all()
    assert (table["gamma_n"] == table["n"] * base.gamma).all()

    with pytest.raises(InvalidLadderSizeError):
        pole_ladder(base, 0)
    with pytest.raises(InvalidLadderSizeError):
        pole_ladder(base, 2.5)
    with pytest.raises(IndexError):
        ladder.member(9)
