"""Right-hand-side assembly and pointwise linear solves for delta f.

Two branches: the critical-dimension pipeline (kernel field -> transport ->
pointwise overdetermined solve) and the trivial free-map branch (h_a = 0,
minimum-norm solve of the under/exactly-determined system).
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import NotAdmissibleError, NotFreeError, RankDeficientError
from .grid import gradient, n_rows, sym_pairs
from .jetcalc import coefficient_field
from .kernelfield import admissibility, kernel_field, lambda_derivatives
from .transport import assemble_covector, build_transport, solve_transport


@dataclass(frozen=True)
class SolverOptions:
    rank_tol: float = 1e-8
    adm_tol: float = 1e-6
    solve_tol: float | None = None  # None: 50 h^2 max(|dg|_inf, 1)
    alpha0_override: int | None = None
    substep_factor: float = 1.0

    def __post_init__(self):
        if self.rank_tol <= 0 or self.adm_tol <= 0 or self.substep_factor <= 0:
            raise ValueError("tolerances and substep factor must be positive")
        if self.solve_tol is not None and self.solve_tol <= 0:
            raise ValueError("solve_tol must be positive")


def default_solve_tol(grid, dg):
    h = max(grid.spacing)
    return 50.0 * h * h * max(float(np.max(np.abs(dg))), 1.0)


@dataclass(frozen=True)
class DeltaFField:
    """Solution field delta f with per-node solve residuals."""

    grid: object
    q: int
    df: np.ndarray  # (*shape, q)
    residual: np.ndarray  # (*shape,)
    solve_tol: float
    consistent: bool


@dataclass(frozen=True)
class PipelineReport:
    branch: str
    alpha0: int | None
    admissibility: object
    max_residual: float
    solve_tol: float
    consistent: bool
    exited_fraction: float = 0.0
    extras: dict = dc_field(default_factory=dict)

    def to_dict(self):
        return {
            "branch": self.branch,
            "alpha0": self.alpha0,
            "admissibility": None
            if self.admissibility is None
            else self.admissibility.to_dict(),
            "max_residual": self.max_residual,
            "solve_tol": self.solve_tol,
            "consistent": self.consistent,
            "exited_fraction": self.exited_fraction,
        }


def assemble_rhs(h_cov, dg, grid):
    """Pack the system right-hand side b, shape (*shape, N).

    b_a = h_a for the first m rows; pair rows are
    (d_a h_b + d_b h_a - dg_ab) / 2 with second-order FD derivatives.
    """
    m = grid.m
    pairs = sym_pairs(m)
    b = np.empty(grid.shape + (n_rows(m),))
    b[..., :m] = h_cov
    dh = np.empty(grid.shape + (m, m))  # dh[..., a, b] = d_a h_b
    for a in range(m):
        for bb in range(m):
            dh[..., a, bb] = gradient(h_cov[..., bb], grid, a)
    for k, (a, bb) in enumerate(pairs):
        b[..., m + k] = 0.5 * (dh[..., a, bb] + dh[..., bb, a] - dg[..., k])
    return b


def solve_pointwise(A, b, rank_tol=1e-8):
    """Least-squares solve of one N x q system; returns (df, residual norm).

    With full column rank the solution is unique; a nonzero residual
    measures incompatibility of b, not solver failure.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] < rank_tol * s[0]:
        raise RankDeficientError(
            f"sigma ratio {s[-1] / s[0]:.3e} below rank_tol {rank_tol:g}"
        )
    df = np.linalg.pinv(A) @ b
    return df, float(np.linalg.norm(A @ df - b))


def _solve_field(A_field, b_field, grid, rank_tol, min_rank_rows):
    """Batched minimum-norm least-squares solve at every node."""
    s = np.linalg.svd(A_field, compute_uv=False)
    ratio = s[..., min_rank_rows - 1] / s[..., 0]
    if np.min(ratio) < rank_tol:
        loc = np.unravel_index(np.argmin(ratio), grid.shape)
        raise RankDeficientError(f"rank deficient at node {loc}", location=loc)
    df = np.einsum("...ij,...j->...i", np.linalg.pinv(A_field), b_field)
    res = np.linalg.norm(
        np.einsum("...ij,...j->...i", A_field, df) - b_field, axis=-1
    )
    return df, res


def solve_linearized(spec, dg, grid, opts=SolverOptions()):
    """Full critical-dimension pipeline; returns (DeltaFField, PipelineReport)."""
    report_adm = admissibility(
        spec,
        grid,
        rank_tol=opts.rank_tol,
        adm_tol=opts.adm_tol,
        alpha0_override=opts.alpha0_override,
    )
    if not report_adm.verdict:
        raise NotAdmissibleError(report_adm.failure or "admissibility verdict false")
    alpha0 = report_adm.alpha0
    field = kernel_field(spec, grid, rank_tol=opts.rank_tol)
    derivs = lambda_derivatives(field, grid, alpha0)
    td = build_transport(field, derivs, dg, alpha0, adm_tol=opts.adm_tol)
    sol = solve_transport(td, substep_factor=opts.substep_factor)
    h_cov = assemble_covector(field, alpha0, sol.h)
    b = assemble_rhs(h_cov, dg, grid)
    A = coefficient_field(spec, grid)
    df, res = _solve_field(A, b, grid, opts.rank_tol, min_rank_rows=spec.q)
    solve_tol = opts.solve_tol or default_solve_tol(grid, dg)
    max_res = float(np.max(res))
    consistent = max_res <= solve_tol
    dff = DeltaFField(
        grid=grid, q=spec.q, df=df, residual=res,
        solve_tol=solve_tol, consistent=consistent,
    )
    rep = PipelineReport(
        branch="critical",
        alpha0=alpha0,
        admissibility=report_adm,
        max_residual=max_res,
        solve_tol=solve_tol,
        consistent=consistent,
        exited_fraction=sol.exited_fraction,
        extras={"h": sol.h, "h_cov": h_cov},
    )
    return dff, rep


def solve_free(spec, dg, grid, opts=SolverOptions()):
    """Free-map branch: h_a = 0, minimum-norm pointwise solve.

    Applies when q >= m(m+3)/2 and the jet rows are independent everywhere.
    """
    N = spec.n_equations
    if spec.q < N:
        raise NotFreeError(
            f"free branch needs q >= {N}, got q = {spec.q} (dimension count)"
        )
    A = coefficient_field(spec, grid)
    s = np.linalg.svd(A, compute_uv=False)
    ratio = s[..., -1] / s[..., 0]
    if np.min(ratio) < opts.rank_tol:
        loc = np.unravel_index(np.argmin(ratio), grid.shape)
        raise NotFreeError(f"jet rows dependent at node {loc}: map is not free")
    m = spec.m
    b = np.zeros(grid.shape + (N,))
    b[..., m:] = -0.5 * dg
    df, res = _solve_field(A, b, grid, opts.rank_tol, min_rank_rows=N)
    solve_tol = opts.solve_tol or 1e-8
    max_res = float(np.max(res))
    consistent = max_res <= solve_tol
    dff = DeltaFField(
        grid=grid, q=spec.q, df=df, residual=res,
        solve_tol=solve_tol, consistent=consistent,
    )
    rep = PipelineReport(
        branch="free",
        alpha0=None,
        admissibility=None,
        max_residual=max_res,
        solve_tol=solve_tol,
        consistent=consistent,
    )
    return dff, rep
