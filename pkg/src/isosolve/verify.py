"""Independent checks: linearized pullback residuals, Richardson ratios in
the nonlinear operator, and a single experimental Newton step."""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import gradient, sym_pairs
from .jetcalc import jet_field, pullback_metric_field
from .linsolve import SolverOptions, solve_free, solve_linearized

# below this level residuals are considered at rounding noise and
# convergence ratios are reported as degenerate
DEGENERATE_FLOOR = 1e-13


def _interior(grid):
    """Slice tuple excluding one FD-stencil margin at every face."""
    return tuple(slice(1, n - 1) for n in grid.shape)


def _fd_gradients(values, grid):
    """d_a of a component field (*shape, k) for every axis, (*shape, m, k)."""
    m = grid.m
    out = np.empty(grid.shape + (m,) + values.shape[grid.m :])
    for a in range(m):
        out[(Ellipsis, a) + (slice(None),) * (values.ndim - m)] = gradient(
            values, grid, a
        )
    return out


def pullback_fd(f_values, grid):
    """Pullback metric of a grid-sampled map using FD first derivatives,
    pair storage (*shape, m(m+1)/2)."""
    d1 = _fd_gradients(f_values, grid)  # (*shape, m, q)
    pairs = sym_pairs(grid.m)
    return np.stack(
        [np.einsum("...i,...i->...", d1[..., a, :], d1[..., b, :]) for a, b in pairs],
        axis=-1,
    )


def linearized_pullback(spec, df, grid):
    """L(df)_ab = sum_i (d_a f^i d_b df^i + d_b f^i d_a df^i), pair storage.

    df derivatives by grid FD; f derivatives exact from jets.
    """
    _, d1f, _ = jet_field(spec, grid)
    d1df = _fd_gradients(np.asarray(df), grid)
    pairs = sym_pairs(grid.m)
    return np.stack(
        [
            np.einsum("...i,...i->...", d1f[..., a, :], d1df[..., b, :])
            + np.einsum("...i,...i->...", d1f[..., b, :], d1df[..., a, :])
            for a, b in pairs
        ],
        axis=-1,
    )


@dataclass(frozen=True)
class VerificationReport:
    lin_residual_inf: float
    lin_residual_l2: float
    by_pair: tuple  # inf-norm per (a <= b) pair, interior nodes
    grid_spacing: tuple
    tol: float
    passed: bool
    richardson: object = None

    def to_dict(self):
        d = {
            "lin_residual_inf": self.lin_residual_inf,
            "lin_residual_l2": self.lin_residual_l2,
            "by_pair": list(self.by_pair),
            "grid_spacing": list(self.grid_spacing),
            "tol": self.tol,
            "passed": self.passed,
        }
        if self.richardson is not None:
            d["richardson"] = self.richardson.to_dict()
        return d


def verify_solution(spec, df, dg, grid, tol):
    """Compare L(df) with dg over interior nodes; pass iff inf-norm <= tol."""
    L = linearized_pullback(spec, df, grid)
    R = (L - dg)[_interior(grid)]
    inf = float(np.max(np.abs(R))) if R.size else 0.0
    l2 = float(np.sqrt(np.mean(R**2))) if R.size else 0.0
    by_pair = tuple(
        float(np.max(np.abs(R[..., k]))) for k in range(R.shape[-1])
    )
    return VerificationReport(
        lin_residual_inf=inf,
        lin_residual_l2=l2,
        by_pair=by_pair,
        grid_spacing=grid.spacing,
        tol=tol,
        passed=inf <= tol,
    )


@dataclass(frozen=True)
class RichardsonReport:
    t_list: tuple
    errors: tuple
    ratios: tuple  # successive error ratios; nan where degenerate
    degenerate: bool

    def to_dict(self):
        return {
            "t_list": list(self.t_list),
            "errors": list(self.errors),
            "ratios": list(self.ratios),
            "degenerate": self.degenerate,
        }


def richardson_check(spec, df, dg, grid, t_list=(1e-2, 5e-3, 2.5e-3)):
    """Defect of the nonlinear operator: |D(f + t df) - D(f) - t dg|_inf.

    Quadratic behavior shows as ratios near 4 when t halves.  Both
    pullbacks use the same FD scheme on grid-sampled maps so the FD error
    cancels in the difference.
    """
    t_list = tuple(t_list)
    if any(t2 >= t1 for t1, t2 in zip(t_list, t_list[1:])):
        raise ValueError("t_list must be strictly decreasing")
    f_vals, _, _ = jet_field(spec, grid)
    df = np.asarray(df)
    g0 = pullback_fd(f_vals, grid)
    sl = _interior(grid)
    errors = []
    for t in t_list:
        gt = pullback_fd(f_vals + t * df, grid)
        defect = (gt - g0 - t * np.asarray(dg))[sl]
        errors.append(float(np.max(np.abs(defect))) if defect.size else 0.0)
    degenerate = all(e < DEGENERATE_FLOOR for e in errors)
    ratios = tuple(
        e1 / e2 if e2 > DEGENERATE_FLOOR else float("nan")
        for e1, e2 in zip(errors, errors[1:])
    )
    return RichardsonReport(
        t_list=t_list, errors=tuple(errors), ratios=ratios, degenerate=degenerate
    )


@dataclass(frozen=True)
class NewtonReport:
    branch: str
    residual_before: float
    residual_after: float
    pipeline: object = None
    extras: dict = dc_field(default_factory=dict)

    @property
    def contraction(self):
        if self.residual_before <= DEGENERATE_FLOOR:
            return float("nan")
        return self.residual_after / self.residual_before

    def to_dict(self):
        return {
            "branch": self.branch,
            "residual_before": self.residual_before,
            "residual_after": self.residual_after,
            "contraction": self.contraction,
        }


def newton_step(spec, g_target, grid, opts=SolverOptions()):
    """One experimental Newton step towards D(f) = g_target.

    Solves the linearized system for dg = g_target - D(f) and reports the
    metric residual of the updated grid map (FD pullback).  No smoothing is
    applied; contraction is only expected for small perturbations.
    """
    g0 = pullback_metric_field(spec, grid)
    dg = np.asarray(g_target) - g0
    if spec.q >= spec.n_equations:
        dff, rep = solve_free(spec, dg, grid, opts)
        branch = "free"
    else:
        dff, rep = solve_linearized(spec, dg, grid, opts)
        branch = "critical"
    f_vals, _, _ = jet_field(spec, grid)
    f1 = f_vals + dff.df
    sl = _interior(grid)
    before = float(np.max(np.abs((g0 - g_target)[sl])))
    g1 = pullback_fd(f1, grid)
    after = float(np.max(np.abs((g1 - g_target)[sl])))
    return f1, NewtonReport(
        branch=branch,
        residual_before=before,
        residual_after=after,
        pipeline=rep,
        extras={"df": dff},
    )
