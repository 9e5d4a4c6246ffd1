"""Rectangular box grids, symmetric-pair indexing and multilinear interpolation.

Fields live on uniform tensor-product grids as numpy arrays whose leading
axes are the grid axes (axis 1 slowest, C order) and whose trailing axes,
if any, index components.
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator


def sym_pairs(m):
    """Ordered list of index pairs (a, b), a <= b, 0-based, lexicographic."""
    return [(a, b) for a in range(m) for b in range(a, m)]


def pair_index(m, a, b):
    """Position of the unordered pair {a, b} (0-based) in sym_pairs(m)."""
    if a > b:
        a, b = b, a
    # pairs starting at a occupy a block of (m - a) slots
    return a * m - a * (a - 1) // 2 + (b - a)


def n_pairs(m):
    return m * (m + 1) // 2


def n_rows(m):
    """Number of equations m(m+3)/2 of the linearized system."""
    return m + n_pairs(m)


@dataclass(frozen=True)
class Grid:
    """Uniform grid on a box: per-axis (a, b) bounds and point counts (>= 3)."""

    bounds: tuple
    shape: tuple

    def __post_init__(self):
        bounds = tuple((float(a), float(b)) for a, b in self.bounds)
        shape = tuple(int(n) for n in self.shape)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "shape", shape)
        if len(bounds) != len(shape):
            raise ValueError("bounds and shape must have the same length")
        if len(bounds) == 0:
            raise ValueError("grid must have at least one axis")
        for (a, b), n in zip(bounds, shape):
            if n < 3:
                raise ValueError(f"need at least 3 points per axis, got {n}")
            if not b > a:
                raise ValueError(f"invalid bounds [{a}, {b}]")

    @property
    def m(self):
        return len(self.shape)

    @property
    def spacing(self):
        return tuple((b - a) / (n - 1) for (a, b), n in zip(self.bounds, self.shape))

    def axes(self):
        return tuple(
            np.linspace(a, b, n) for (a, b), n in zip(self.bounds, self.shape)
        )

    def nodes(self):
        """All grid nodes as an array of shape (*shape, m)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def n_nodes(self):
        return int(np.prod(self.shape))

    def same_as(self, other):
        return self.shape == other.shape and np.allclose(
            np.asarray(self.bounds), np.asarray(other.bounds)
        )


def expand_pairs(m, field_pairs):
    """Expand pair storage (..., m(m+1)/2) to the full symmetric (..., m, m)."""
    field_pairs = np.asarray(field_pairs)
    out = np.empty(field_pairs.shape[:-1] + (m, m))
    for k, (a, b) in enumerate(sym_pairs(m)):
        out[..., a, b] = field_pairs[..., k]
        out[..., b, a] = field_pairs[..., k]
    return out


def gradient(field, grid, axis):
    """Second-order FD derivative along a grid axis (centered inside, one-sided at faces)."""
    return np.gradient(field, grid.axes()[axis], axis=axis, edge_order=2)


class BoxInterpolator:
    """Multilinear interpolation of a grid field with clamped extension.

    Query points outside the box are clamped to the boundary; the returned
    mask records which points needed clamping.
    """

    def __init__(self, grid, values):
        self._rgi = RegularGridInterpolator(
            grid.axes(), np.asarray(values), method="linear", bounds_error=False
        )
        self._lo = np.array([a for a, _ in grid.bounds])
        self._hi = np.array([b for _, b in grid.bounds])
        # tolerance absorbs roundoff in characteristic positions at faces
        self._tol = 1e-12 * np.max(self._hi - self._lo)

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        outside = np.any(
            (points < self._lo - self._tol) | (points > self._hi + self._tol),
            axis=-1,
        )
        clamped = np.clip(points, self._lo, self._hi)
        return self._rgi(clamped), outside
