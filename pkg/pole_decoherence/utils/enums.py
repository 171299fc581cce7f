"""Enums for pole_decoherence."""

from __future__ import annotations

from enum import Enum
from typing import TypeVar, Union

from pole_decoherence.utils.exceptions import InvalidEnumValueError

_E = TypeVar("_E", bound="_NamedEnum")


class _NamedEnum(Enum):
    """Enum that round-trips through lowercase member names."""

    @classmethod
    def from_str(cls: type[_E], value: str) -> _E:
        """Convert a string to a member of the enum."""
        try:
            return cls[value.strip().upper()]
        except KeyError as ex:
            raise InvalidEnumValueError(
                f"Invalid value {value!r} for {cls.__name__}",
            ) from ex

    def to_str(self) -> str:
        """Convert the member to its lowercase name."""
        return self.name.lower()

    @classmethod
    def from_any(cls: type[_E], value: Union[str, _E]) -> _E:
        """Convert a string or a member to a member of the enum."""
        return cls.from_str(value) if isinstance(value, str) else value


class OnError(_NamedEnum):
    """Error handling options."""

    RAISE = 1
    IGNORE = 2


class GammaEffReading(_NamedEnum):
    """Summation range used for the amplitude-weighted width.

    ``FASTER`` excludes the slowest (relaxation) width and averages over the
    strictly faster modes, ``ALL`` averages over every mode.
    """

    FASTER = 1
    ALL = 2


class GridSpacing(_NamedEnum):
    """Spacing of a sampled time grid."""

    LINEAR = 1
    LOG = 2


class DensityKind(_NamedEnum):
    """Representation of a spectral density."""

    OHMIC = 1
    TABULATED = 2
