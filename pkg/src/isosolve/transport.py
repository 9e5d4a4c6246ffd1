"""Reduced first-order transport operator and its characteristic solver.

The scalar compatibility constraint, after substituting h_b = lam^{a0 b} h,
becomes zeta . grad h + lambda' h = psi.  Because the alpha0 component of
zeta is a sum of squares bounded away from zero, every hyperplane
x^{alpha0} = const is a global transversal and the equation is integrated
by marching characteristics in x^{alpha0}, starting from h = 0 on the
lower alpha0 face.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import TransversalityLostError
from .grid import BoxInterpolator, expand_pairs

DEFAULT_ADM_TOL = 1e-6


@dataclass(frozen=True)
class TransportData:
    """Coefficients of the reduced operator on the grid."""

    grid: object
    alpha0: int  # 1-based
    zeta: np.ndarray  # (*shape, m)
    lambda_prime: np.ndarray  # (*shape,)
    psi: np.ndarray  # (*shape,)


def build_transport(field, derivs, dg, alpha0, adm_tol=DEFAULT_ADM_TOL):
    """Contract the kernel field into (zeta, lambda', psi).

    derivs are the grid derivatives d_b lam^{alpha0 a} from
    kernelfield.lambda_derivatives; dg is the metric perturbation in pair
    storage (*shape, m(m+1)/2).
    """
    grid = field.grid
    m = grid.m
    a0 = alpha0 - 1
    lam = field.lam_matrix  # (*shape, a, b)
    la0 = lam[..., a0, :]  # (*shape, a)
    zeta = np.einsum("...ab,...a->...b", lam, la0)
    lambda_prime = np.einsum("...ab,...ab->...", lam, derivs) + np.einsum(
        "...a,...a->...", field.lam_first, la0
    )
    dg_full = expand_pairs(m, dg)
    psi = 0.5 * np.einsum("...ab,...ab->...", lam, dg_full)
    min_z = float(np.min(zeta[..., a0]))
    if min_z < adm_tol:
        loc = np.unravel_index(np.argmin(zeta[..., a0]), grid.shape)
        raise TransversalityLostError(
            f"zeta^alpha0 = {min_z:.3e} < adm_tol {adm_tol:g} at node {loc}"
        )
    return TransportData(
        grid=grid, alpha0=alpha0, zeta=zeta, lambda_prime=lambda_prime, psi=psi
    )


@dataclass(frozen=True)
class TransportSolution:
    """Scalar solution h plus per-node quality flags.

    quality_flag is True where the characteristic through the node left the
    box (fields were used in clamped extension); reported, not fatal.
    """

    grid: object
    h: np.ndarray
    quality_flag: np.ndarray

    @property
    def exited_fraction(self):
        return float(np.mean(self.quality_flag))


def solve_transport(td, grid=None, substep_factor=1.0):
    """March characteristics in x^{alpha0}-time with RK4 sub-steps.

    For every node the characteristic is traced back to the starting face
    (where h = 0) and the linear ODE for h integrated forward along it;
    nodes on one slice share the march and are integrated together.
    Sub-steps never exceed substep_factor times the smallest grid spacing.
    """
    grid = td.grid if grid is None else grid
    a0 = td.alpha0 - 1
    m = grid.m
    axes = grid.axes()
    s_vals = axes[a0]
    h_out = np.zeros(grid.shape)
    quality = np.zeros(grid.shape, dtype=bool)

    zeta_i = BoxInterpolator(grid, td.zeta)
    lp_i = BoxInterpolator(grid, td.lambda_prime)
    psi_i = BoxInterpolator(grid, td.psi)
    min_h = min(grid.spacing)
    max_step = substep_factor * min_h

    other = [a for a in range(m) if a != a0]
    if other:
        mesh = np.meshgrid(*[axes[a] for a in other], indexing="ij")
        n_pts = mesh[0].size
        base = np.zeros((n_pts, m))
        for k, a in enumerate(other):
            base[:, a] = mesh[k].ravel()
        slice_shape = tuple(grid.shape[a] for a in other)
    else:
        n_pts = 1
        base = np.zeros((1, m))
        slice_shape = ()

    def velocity(pts):
        z, oob = zeta_i(pts)
        v = z / z[:, a0 : a0 + 1]
        v[:, a0] = 1.0
        return v, oob

    for k in range(1, len(s_vals)):
        span = s_vals[k] - s_vals[0]
        nsub = max(1, math.ceil(span / max_step))
        delta = span / nsub
        # backward trace, stored at half-steps so RK4 stages of the h
        # integration see field values on the traced path
        pos = base.copy()
        pos[:, a0] = s_vals[k]
        path = np.empty((2 * nsub + 1, n_pts, m))
        path[0] = pos
        exited = np.zeros(n_pts, dtype=bool)
        s = s_vals[k]
        for j in range(2 * nsub):
            pos, oob = _rk4_position(pos, -delta / 2, a0, velocity)
            s -= delta / 2
            pos[:, a0] = s
            exited |= oob
            path[j + 1] = pos
        path = path[::-1]  # now runs from the face to slice k
        h = np.zeros(n_pts)
        for j in range(nsub):
            h = _rk4_scalar(
                h, path[2 * j], path[2 * j + 1], path[2 * j + 2],
                delta, a0, zeta_i, lp_i, psi_i,
            )
        idx = [slice(None)] * m
        idx[a0] = k
        h_out[tuple(idx)] = h.reshape(slice_shape)
        quality[tuple(idx)] = exited.reshape(slice_shape)
    return TransportSolution(grid=grid, h=h_out, quality_flag=quality)


def _rk4_position(pos, dt, a0, velocity):
    k1, o1 = velocity(pos)
    k2, o2 = velocity(pos + 0.5 * dt * k1)
    k3, o3 = velocity(pos + 0.5 * dt * k2)
    k4, o4 = velocity(pos + dt * k3)
    new = pos + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return new, o1 | o2 | o3 | o4


def _rk4_scalar(h, p0, pm, p1, delta, a0, zeta_i, lp_i, psi_i):
    def coeffs(p):
        z, _ = zeta_i(p)
        lp, _ = lp_i(p)
        psi, _ = psi_i(p)
        return z[:, a0], lp, psi

    z0, l0, f0 = coeffs(p0)
    zm, lm, fm = coeffs(pm)
    z1, l1, f1 = coeffs(p1)
    k1 = (f0 - l0 * h) / z0
    k2 = (fm - lm * (h + 0.5 * delta * k1)) / zm
    k3 = (fm - lm * (h + 0.5 * delta * k2)) / zm
    k4 = (f1 - l1 * (h + delta * k3)) / z1
    return h + delta / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def assemble_covector(field, alpha0, h):
    """h_b = lam^{alpha0 b} h at every node, shape (*shape, m)."""
    la0 = field.lam_matrix[..., alpha0 - 1, :]
    return la0 * h[..., np.newaxis]
