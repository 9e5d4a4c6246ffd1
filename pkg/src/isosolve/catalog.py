"""Built-in example maps with reference perturbations and known outcomes."""

import re
from dataclasses import dataclass

from .grid import Grid, n_pairs, n_rows, sym_pairs
from .jetcalc import parse_map_spec


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    spec_text: str
    grid: Grid
    dg_exprs: tuple  # m(m+1)/2 expressions, (a <= b) order
    expected_verdict: bool
    expected_alpha0: tuple = ()  # acceptable 1-based values, empty if unspecified
    closed_form_df: tuple = None  # expressions for the reference dg, if known
    note: str = ""

    def spec(self):
        return parse_map_spec(self.spec_text)


def _grid2(n=33):
    return Grid(bounds=((-1.0, 1.0), (-1.0, 1.0)), shape=(n, n))


def canonical_free_text(m):
    """The canonical free map R^m -> R^{m(m+3)/2}: coordinates then all
    quadratic monomials x^a x^b, a <= b."""
    comps = [f"x{a + 1}" for a in range(m)]
    comps += [f"x{a + 1}*x{b + 1}" for a, b in sym_pairs(m)]
    return f"m={m},q={n_rows(m)}; " + "; ".join(comps)


def projected_free_text(m, drop_pair=(1, 2)):
    """Canonical free map with one quadratic component removed, landing at
    the critical dimension q = m(m+3)/2 - 1."""
    a, b = drop_pair
    if not (1 <= a <= b <= m):
        raise ValueError(f"drop pair {drop_pair} out of range for m={m}")
    comps = [f"x{i + 1}" for i in range(m)]
    comps += [
        f"x{i + 1}*x{j + 1}"
        for i, j in sym_pairs(m)
        if (i + 1, j + 1) != (a, b)
    ]
    return f"m={m},q={n_rows(m) - 1}; " + "; ".join(comps)


def _zeros_dg(m, nonzero=None):
    dg = ["0"] * n_pairs(m)
    if nonzero is not None:
        k, expr = nonzero
        dg[k] = expr
    return tuple(dg)


_ENTRIES = [
    CatalogEntry(
        name="example1",
        spec_text="m=2,q=4; x1; exp(x1); x2; exp(x2)",
        grid=_grid2(),
        dg_exprs=_zeros_dg(2, (1, "1")),  # dg_xy = 1
        expected_verdict=True,
        expected_alpha0=(1, 2),
        closed_form_df=("0", "0", "x1+1", "0"),
        note="product of two free curves; mixed second derivative vanishes",
    ),
    CatalogEntry(
        name="f1",
        spec_text="m=2,q=4; x1; x2; x1*x2; x2^2",
        grid=_grid2(),
        dg_exprs=_zeros_dg(2, (0, "1")),  # dg_xx = 1
        expected_verdict=True,
        expected_alpha0=(1,),
        closed_form_df=("(x1+1)/2", "0", "0", "0"),
        note="canonical free map minus the x^2 component",
    ),
    CatalogEntry(
        name="f2",
        spec_text="m=2,q=4; x1; x2; x1^2; x2^2",
        grid=_grid2(),
        dg_exprs=_zeros_dg(2, (1, "1")),  # dg_xy = 1
        expected_verdict=True,
        expected_alpha0=(1, 2),
        closed_form_df=("0", "x1+1", "0", "0"),
        note="canonical free map minus the xy component",
    ),
    CatalogEntry(
        name="f3",
        spec_text="m=2,q=4; x1; x2; x1^2; x1*x2",
        grid=_grid2(),
        dg_exprs=_zeros_dg(2, (2, "1")),  # dg_yy = 1
        expected_verdict=True,
        expected_alpha0=(2,),
        closed_form_df=("0", "(x2+1)/2", "0", "0"),
        note="canonical free map minus the y^2 component",
    ),
    CatalogEntry(
        name="canonical-free",
        spec_text=canonical_free_text(2),
        grid=_grid2(),
        dg_exprs=_zeros_dg(2, (2, "1")),  # dg_yy = 1
        expected_verdict=False,  # not critical dimension: free branch applies
        closed_form_df=("0", "x2/2", "0", "0", "-1/4"),
        note="free branch (q = m(m+3)/2); exact pointwise solve",
    ),
    CatalogEntry(
        name="fpi-m3",
        spec_text=projected_free_text(3),
        grid=Grid(bounds=((-1.0, 1.0),) * 3, shape=(17, 17, 17)),
        dg_exprs=_zeros_dg(3, (1, "1")),  # dg_12 = 1
        expected_verdict=True,
        expected_alpha0=(1, 2),
        note="m=3 projection of the canonical free map, x1*x2 dropped",
    ),
    CatalogEntry(
        name="rank-deficient",
        spec_text="m=2,q=4; x1; x2; x1^2; x1^2",
        grid=_grid2(),
        dg_exprs=_zeros_dg(2),
        expected_verdict=False,
        note="duplicate second-order rows; kernel dimension exceeds one",
    ),
]

_BY_NAME = {e.name: e for e in _ENTRIES}

_FPI_RE = re.compile(r"^fpi-m(\d+)$")


def names():
    return [e.name for e in _ENTRIES]

def entries():
    return list(_ENTRIES)


def get(name):
    """Look up a catalog entry; fpi-m<k> entries are generated on demand."""
    if name in _BY_NAME:
        return _BY_NAME[name]
    match = _FPI_RE.match(name)
    if match:
        m = int(match.group(1))
        if m < 2:
            raise KeyError(f"fpi needs m >= 2, got {name!r}")
        n = 17 if m <= 3 else 9
        return CatalogEntry(
            name=name,
            spec_text=projected_free_text(m),
            grid=Grid(bounds=((-1.0, 1.0),) * m, shape=(n,) * m),
            dg_exprs=_zeros_dg(m, (1, "1")),
            expected_verdict=True,
            expected_alpha0=(1, 2),
            note=f"m={m} projection of the canonical free map, x1*x2 dropped",
        )
    raise KeyError(f"unknown catalog entry {name!r}")
