"""JSON field files: scalar / covector / vector / symtensor grids.

Flat row-major data, axis 1 slowest and component index fastest.  Floats
are written with Python's shortest round-trip repr, so write-then-read is
bit-exact.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError
from .grid import Grid, n_pairs, sym_pairs

KINDS = ("scalar", "covector", "vector", "symtensor")


def component_count(kind, m, q):
    if kind == "scalar":
        return 1
    if kind == "covector":
        return m
    if kind == "vector":
        if q is None:
            raise ValueError("vector fields need q")
        return q
    if kind == "symtensor":
        return n_pairs(m)
    raise ValueError(f"unknown field kind {kind!r}")


def default_labels(kind, m, q):
    if kind == "scalar":
        return ["value"]
    if kind == "covector":
        return [f"h_{a + 1}" for a in range(m)]
    if kind == "vector":
        return [f"c_{i + 1}" for i in range(q)]
    return [f"g_{a + 1}{b + 1}" for a, b in sym_pairs(m)]


@dataclass(frozen=True)
class FieldFile:
    kind: str
    grid: Grid
    q: int | None
    components: tuple
    data: np.ndarray  # (*shape, ncomp)

    def values(self):
        """Data with the component axis dropped for scalar fields."""
        return self.data[..., 0] if self.kind == "scalar" else self.data


def make_field(kind, grid, data, q=None, components=None):
    ncomp = component_count(kind, grid.m, q)
    data = np.asarray(data, dtype=float)
    if data.shape == grid.shape and ncomp == 1:
        data = data[..., np.newaxis]
    if data.shape != grid.shape + (ncomp,):
        raise ValueError(
            f"data shape {data.shape} incompatible with grid {grid.shape} "
            f"and kind {kind!r} ({ncomp} components)"
        )
    labels = tuple(components) if components else tuple(default_labels(kind, grid.m, q))
    if len(labels) != ncomp:
        raise ValueError(f"expected {ncomp} component labels, got {len(labels)}")
    return FieldFile(kind=kind, grid=grid, q=q, components=labels, data=data)


def write_field(path, field):
    doc = {
        "kind": field.kind,
        "m": field.grid.m,
        "q": field.q,
        "bounds": [[a, b] for a, b in field.grid.bounds],
        "shape": list(field.grid.shape),
        "components": list(field.components),
        "data": field.data.ravel(order="C").tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def read_field(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    kind = doc["kind"]
    if kind not in KINDS:
        raise ValueError(f"unknown field kind {kind!r} in {path}")
    m = int(doc["m"])
    q = doc["q"]
    grid = Grid(
        bounds=tuple((a, b) for a, b in doc["bounds"]), shape=tuple(doc["shape"])
    )
    if grid.m != m:
        raise ValueError(f"m = {m} inconsistent with {len(doc['shape'])} axes")
    ncomp = component_count(kind, m, q)
    data = np.asarray(doc["data"], dtype=float)
    expected = grid.n_nodes() * ncomp
    if data.size != expected:
        raise ValueError(f"data length {data.size} != shape x components {expected}")
    data = data.reshape(grid.shape + (ncomp,))
    return make_field(kind, grid, data, q=q, components=doc["components"])


def require_same_grid(a, b, what="fields"):
    if not a.same_as(b):
        raise GridMismatchError(f"{what} sampled on different grids")
