"""Tests for the pole_decoherence.utils.enums module."""

import pytest

from pole_decoherence.utils.enums import (
    DensityKind,
    GammaEffReading,
    GridSpacing,
    OnError,
)
from pole_decoherence.utils.exceptions import InvalidEnumValueError


def test_from_str() -> None:
    """Test from_str."""
    assert OnError.from_str("raise") == OnError.RAISE
    assert OnError.from_str("ignore") == OnError.IGNORE
    assert GammaEffReading.from_str("faster") == GammaEffReading.FASTER
    assert GammaEffReading.from_str(" ALL ") == GammaEffReading.ALL
    assert GridSpacing.from_str("log") == GridSpacing.LOG
    assert DensityKind.from_str("tabulated") == DensityKind.TABULATED
    with pytest.raises(InvalidEnumValueError):
        OnError.from_str("invalid")
    with pytest.raises(InvalidEnumValueError, match="GammaEffReading"):
        GammaEffReading.from_str("some")


def test_to_str() -> None:
    """Test to_str."""
    assert OnError.RAISE.to_str() == "raise"
    assert OnError.IGNORE.to_str() == "ignore"
    assert GammaEffReading.FASTER.to_str() == "faster"
    assert GridSpacing.LINEAR.to_str() == "linear"
    assert DensityKind.OHMIC.to_str() == "ohmic"


def test_from_any() -> None:
    """Test from_any."""
    assert OnError.from_any("raise") == OnError.RAISE
    assert OnError.from_any("ignore") == OnError.IGNORE
    assert OnError.from_any(OnError.RAISE) == OnError.RAISE
    assert OnError.from_any(OnError.IGNORE) == OnError.IGNORE
    assert GammaEffReading.from_any("all") == GammaEffReading.ALL
    assert GammaEffReading.from_any(GammaEffReading.FASTER) == GammaEffReading.FASTER
    with pytest.raises(InvalidEnumValueError):
        OnError.from_any("invalid")
