"""Miscellaneous utility functions."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, Optional

import numpy as np

if TYPE_CHECKING:
    from numpy.typing import ArrayLike


def is_numeric(value: Any) -> bool:  # noqa: ANN401
    """Check if a value is a finite real number (booleans excluded)."""
    if isinstance(value, bool):
        return False
    try:
        return bool(np.isfinite(float(value)))
    except (TypeError, ValueError):
        return False


def to_complex(value: Any) -> Optional[complex]:  # noqa: ANN401
    """Read a complex number written as a number or a ``[real, imag]`` pair.

    >>> to_complex(0.5)
    (0.5+0j)
    >>> to_complex([1, -2])
    (1-2j)
    >>> to_complex("abc") is None
    True
    """
    if is_numeric(value):
        return complex(float(value), 0.0)
    if (
        isinstance(value, (list, tuple))
        and len(value) == 2  # noqa: PLR2004
        and all(is_numeric(part) for part in value)
    ):
        return complex(float(value[0]), float(value[1]))
    return None


def uniform_step(times: ArrayLike, rtol: float = 1e-9) -> Optional[float]:
    """Return the common spacing of a grid, or None if it is not uniform."""
    grid = np.asarray(times, dtype=float)
    if grid.ndim != 1 or grid.size < 2:  # noqa: PLR2004
        return None
    steps = np.diff(grid)
    step = float(steps.mean())
    if step <= 0 or np.max(np.abs(steps - step)) > rtol * step:
        return None
    return step


def relative_difference(value: complex, reference: complex) -> float:
    """Relative difference with an absolute floor of one for tiny references."""
    return abs(value - reference) / max(1.0, abs(reference))
