"""Real PAM alphabets and nearest-symbol slicing.

A square M-QAM constellation is handled as two independent PAM alphabets,
one per real dimension, with unnormalized odd-integer levels.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

QAM_ORDERS = (4, 16, 64, 256)


@dataclass(frozen=True)
class Constellation:
    """Finite real symbol alphabet.

    Attributes
    ----------
    levels : tuple of float
        Strictly increasing amplitudes, symmetric about zero.
    energy : float
        Mean of the squared levels.
    """

    levels: tuple
    energy: float = field(init=False)
    points: np.ndarray = field(init=False, repr=False, compare=False)
    _midpoints: np.ndarray = field(init=False, repr=False, compare=False)
    _midpoint_list: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        levels = tuple(float(a) for a in self.levels)
        if len(levels) < 2:
            raise InvalidArgumentError("an alphabet needs at least two levels")
        pts = np.asarray(levels)
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("levels must be finite")
        if np.any(np.diff(pts) <= 0):
            raise InvalidArgumentError("levels must be strictly increasing")
        if not np.array_equal(pts, -pts[::-1]):
            raise InvalidArgumentError("levels must be symmetric about zero")
        pts.setflags(write=False)
        mids = 0.5 * (pts[1:] + pts[:-1])
        mids.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_midpoints", mids)
        object.__setattr__(self, "_midpoint_list", mids.tolist())
        object.__setattr__(self, "energy", float(np.mean(pts**2)))

    def __len__(self):
        return len(self.levels)

    def index(self, v):
        """Index of the nearest level for each entry of `v` (ties go low)."""
        v = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("cannot slice a non-finite value")
        # side="left" sends a value sitting exactly on a midpoint to the lower level
        return np.searchsorted(self._midpoints, v, side="left")

    def slice(self, v):
        """Nearest level to the scalar `v`."""
        v = float(v)
        if not math.isfinite(v):
            raise InvalidArgumentError("cannot slice a non-finite value")
        return self.levels[bisect.bisect_left(self._midpoint_list, v)]

    def slice_array(self, v):
        """Componentwise nearest levels of an array."""
        return self.points[self.index(v)]


def make_pam(size):
    """PAM alphabet {±1, ±3, ..., ±(size-1)} for even `size`."""
    if size < 2 or size % 2:
        raise InvalidArgumentError(f"PAM size must be even and >= 2, got {size}")
    return Constellation(tuple(range(-(size - 1), size, 2)))


def make_qam(order):
    """Per-dimension PAM alphabet of square `order`-QAM."""
    if order not in QAM_ORDERS:
        root = math.isqrt(order) if isinstance(order, int) and order > 0 else 0
        if root * root != order or root < 2 or (root & (root - 1)):
            raise InvalidArgumentError(f"QAM order must be a power of 4, got {order}")
    return make_pam(math.isqrt(order))
