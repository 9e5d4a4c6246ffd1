"""Map specifications, exact second-order jets and the coefficient matrix.

Maps R^m -> R^q are given symbolically in variables x1..xm; jets are
computed by symbolic differentiation and are therefore exact to rounding.
"""

import functools
import re
from dataclasses import dataclass

import numpy as np
import sympy as sp

from .errors import ArityError, DomainError, ExpressionSyntaxError
from .grid import n_rows, pair_index, sym_pairs

_ALLOWED_FUNCS = {"exp": sp.exp, "sin": sp.sin, "cos": sp.cos, "log": sp.log}

_HEADER_RE = re.compile(r"^\s*m\s*=\s*(\d+)\s*,\s*q\s*=\s*(\d+)\s*$")


def parse_expression(text, m):
    """Parse one scalar expression over x1..xm with the allowed primitives."""
    text = text.strip()
    if not text:
        raise ExpressionSyntaxError("empty expression")
    variables = {f"x{i + 1}": sp.Symbol(f"x{i + 1}") for i in range(m)}
    local = dict(variables)
    local.update(_ALLOWED_FUNCS)
    try:
        expr = sp.parse_expr(text.replace("^", "**"), local_dict=local)
    except Exception as exc:
        raise ExpressionSyntaxError(f"cannot parse {text!r}: {exc}") from None
    allowed_syms = set(variables.values())
    for sym in expr.free_symbols:
        if sym not in allowed_syms:
            raise ArityError(f"unknown variable {sym} in {text!r} (m={m})")
    allowed = tuple(_ALLOWED_FUNCS.values())
    for fn in expr.atoms(sp.Function):
        if not isinstance(fn, allowed):
            raise ExpressionSyntaxError(f"unsupported function {fn.func} in {text!r}")
    return expr


@dataclass(frozen=True)
class MapSpec:
    """Symbolic map R^m -> R^q: q component expressions in x1..xm."""

    m: int
    q: int
    components: tuple
    component_text: tuple = None

    def __post_init__(self):
        if self.m < 1 or self.q < 1:
            raise ArityError(f"need positive dimensions, got m={self.m}, q={self.q}")
        if len(self.components) != self.q:
            raise ArityError(
                f"declared q={self.q} but got {len(self.components)} components"
            )
        if self.component_text is None:
            object.__setattr__(
                self, "component_text", tuple(str(c) for c in self.components)
            )

    @property
    def critical_q(self):
        """Target dimension at which the system has exactly one extra equation."""
        return n_rows(self.m) - 1

    @property
    def n_equations(self):
        return n_rows(self.m)

    def to_text(self):
        return f"m={self.m},q={self.q}; " + "; ".join(self.component_text)


def parse_map_spec(text):
    """Parse the map-spec format: ``m=<int>,q=<int>; expr1; ...; exprq``."""
    chunks = [c for c in (s.strip() for s in text.split(";")) if c]
    if not chunks:
        raise ExpressionSyntaxError("empty map specification")
    header = _HEADER_RE.match(chunks[0])
    if header is None:
        raise ExpressionSyntaxError(
            f"bad header {chunks[0]!r}, expected 'm=<int>,q=<int>'"
        )
    m, q = int(header.group(1)), int(header.group(2))
    if m < 1 or q < 1:
        raise ArityError(f"need positive dimensions, got m={m}, q={q}")
    body = chunks[1:]
    if len(body) != q:
        raise ArityError(f"declared q={q} but found {len(body)} component expressions")
    components = tuple(parse_expression(c, m) for c in body)
    return MapSpec(m=m, q=q, components=components, component_text=tuple(body))


@dataclass(frozen=True)
class Jet2:
    """Second-order jet of a map at a point.

    d2 is stored once per unordered index pair; the full symmetric array is
    mirrored on access, so d2[a, b] == d2[b, a] holds exactly.
    """

    m: int
    q: int
    value: np.ndarray  # (q,)
    d1: np.ndarray  # (m, q)
    d2_pairs: np.ndarray  # (m(m+1)/2, q)

    @property
    def d2(self):
        out = np.empty((self.m, self.m, self.q))
        for k, (a, b) in enumerate(sym_pairs(self.m)):
            out[a, b] = self.d2_pairs[k]
            out[b, a] = self.d2_pairs[k]
        return out

    def d2_at(self, a, b):
        """Second derivative for (possibly unordered) 0-based axis pair."""
        return self.d2_pairs[pair_index(self.m, a, b)]


class _CompiledJets:
    """Lambdified value / first / second derivative evaluators for a MapSpec."""

    def __init__(self, spec):
        xs = [sp.Symbol(f"x{i + 1}") for i in range(spec.m)]
        pairs = sym_pairs(spec.m)
        self.f = [sp.lambdify(xs, c, "numpy") for c in spec.components]
        self.d1 = [
            [sp.lambdify(xs, sp.diff(c, xs[a]), "numpy") for c in spec.components]
            for a in range(spec.m)
        ]
        self.d2 = [
            [
                sp.lambdify(xs, sp.diff(c, xs[a], xs[b]), "numpy")
                for c in spec.components
            ]
            for a, b in pairs
        ]


@functools.lru_cache(maxsize=64)
def _compiled(spec):
    return _CompiledJets(spec)


def _eval_all(funcs, coords, shape):
    out = np.empty((len(funcs),) + shape)
    with np.errstate(all="ignore"):
        for i, fn in enumerate(funcs):
            out[i] = np.broadcast_to(np.asarray(fn(*coords), dtype=float), shape)
    return out


def _jets_at(spec, coords, shape):
    """Evaluate value/d1/d2 arrays on broadcast coordinates of given shape."""
    comp = _compiled(spec)
    value = _eval_all(comp.f, coords, shape)
    d1 = np.stack([_eval_all(fs, coords, shape) for fs in comp.d1])
    d2 = np.stack([_eval_all(fs, coords, shape) for fs in comp.d2])
    # component axes last, grid axes leading
    value = np.moveaxis(value, 0, -1)
    d1 = np.moveaxis(d1, [0, 1], [-2, -1])
    d2 = np.moveaxis(d2, [0, 1], [-2, -1])
    return value, d1, d2


def eval_jet2(spec, point):
    """Exact second-order jet of the map at one point."""
    point = np.asarray(point, dtype=float)
    if point.shape != (spec.m,):
        raise ArityError(f"point must have length m={spec.m}")
    coords = [np.asarray(point[i]) for i in range(spec.m)]
    value, d1, d2 = _jets_at(spec, coords, ())
    if not (
        np.all(np.isfinite(value)) and np.all(np.isfinite(d1)) and np.all(np.isfinite(d2))
    ):
        raise DomainError(f"jet evaluation not finite at point {point.tolist()}")
    return Jet2(m=spec.m, q=spec.q, value=value, d1=d1, d2_pairs=d2)


def jet_field(spec, grid):
    """Jets at every grid node: arrays value (*shape, q), d1 (*shape, m, q),
    d2 pairs (*shape, m(m+1)/2, q)."""
    if grid.m != spec.m:
        raise ArityError(f"grid dimension {grid.m} != map dimension {spec.m}")
    mesh = np.meshgrid(*grid.axes(), indexing="ij")
    value, d1, d2 = _jets_at(spec, mesh, grid.shape)
    for arr in (value, d1, d2):
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0][: grid.m]
            raise DomainError(f"jet evaluation not finite at node index {tuple(bad)}")
    return value, d1, d2


def pullback_metric(spec, point):
    """Pullback of the Euclidean metric, g_ab = sum_i d_a f^i d_b f^i, pair storage."""
    jet = eval_jet2(spec, point)
    pairs = sym_pairs(spec.m)
    return np.array([jet.d1[a] @ jet.d1[b] for a, b in pairs])


def pullback_metric_field(spec, grid):
    """Pullback metric at every grid node, shape (*shape, m(m+1)/2)."""
    _, d1, _ = jet_field(spec, grid)
    pairs = sym_pairs(spec.m)
    return np.stack(
        [np.einsum("...i,...i->...", d1[..., a, :], d1[..., b, :]) for a, b in pairs],
        axis=-1,
    )


def coefficient_matrix(jet):
    """N x q matrix of the linearized system: first-derivative rows, then
    second-derivative rows in (a <= b) lexicographic order."""
    return np.concatenate([jet.d1, jet.d2_pairs], axis=0)


def coefficient_field(spec, grid):
    """Coefficient matrices at every grid node, shape (*shape, N, q)."""
    _, d1, d2 = jet_field(spec, grid)
    return np.concatenate([d1, d2], axis=-2)


def expression_field(texts, grid):
    """Evaluate scalar expressions in x1..xm on the grid, shape (*shape, len(texts))."""
    mesh = np.meshgrid(*grid.axes(), indexing="ij")
    xs = [sp.Symbol(f"x{i + 1}") for i in range(grid.m)]
    out = np.empty(grid.shape + (len(texts),))
    with np.errstate(all="ignore"):
        for k, text in enumerate(texts):
            expr = parse_expression(text, grid.m)
            fn = sp.lambdify(xs, expr, "numpy")
            out[..., k] = np.broadcast_to(
                np.asarray(fn(*mesh), dtype=float), grid.shape
            )
    if not np.all(np.isfinite(out)):
        raise DomainError("expression not finite somewhere on the grid")
    return out


def is_free(jet, rank_tol=1e-8):
    """True iff the N jet rows are independent (relative sigma_min test) and q >= N."""
    if not 0 < rank_tol < 1:
        raise ValueError("rank_tol must lie in (0, 1)")
    A = coefficient_matrix(jet)
    N = A.shape[0]
    if jet.q < N:
        return False
    s = np.linalg.svd(A, compute_uv=False)
    return bool(s[-1] > rank_tol * s[0])
