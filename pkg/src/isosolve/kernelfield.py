"""Kernel covector of the transposed coefficient matrix and admissibility.

At the critical dimension q = m(m+3)/2 - 1 the coefficient matrix has one
more row than columns and (generically) a one-dimensional left null space.
The unit kernel covector kappa is extracted per grid node and its sign made
globally continuous by breadth-first propagation.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import RankDeficientError, SignAmbiguousError, WrongShapeError
from .grid import expand_pairs, gradient, n_rows
from .jetcalc import coefficient_field

# below this |dot| between adjacent unit kernel vectors the field is not
# reliably continuous at the current resolution
_SIGN_DOT_MIN = 0.1


@dataclass(frozen=True)
class KernelVector:
    """Unit left-null vector kappa of the coefficient matrix at one point.

    The split view recovers the multipliers of the dependency relation:
    lam_first[a] multiplies d_a f and lam_matrix[a, b] (full double sum)
    multiplies d_ab f; stored pair entries are divided by (2 - delta_ab).
    """

    m: int
    q: int
    kappa: np.ndarray  # (N,)

    @property
    def lam_first(self):
        return self.kappa[: self.m]

    @property
    def lam_matrix(self):
        return expand_pairs(self.m, self.kappa[self.m :]) / _pair_weights(self.m)


def _pair_weights(m):
    """(m, m) array: 2 off the diagonal, 1 on it."""
    w = np.full((m, m), 2.0)
    np.fill_diagonal(w, 1.0)
    return w


def kernel_vector(A, rank_tol=1e-8):
    """Unit vector spanning the left null space of the (q+1) x q matrix A."""
    A = np.asarray(A, dtype=float)
    N, q = A.shape
    if N != q + 1:
        raise WrongShapeError(f"expected q+1 rows, got shape {A.shape}")
    U, s, _ = np.linalg.svd(A)
    if s[-1] < rank_tol * s[0]:
        raise RankDeficientError(
            f"sigma_q/sigma_1 = {s[-1] / s[0]:.3e} < rank_tol; kernel not one-dimensional"
        )
    m = _infer_m(N)
    return KernelVector(m=m, q=q, kappa=U[:, -1])


def _infer_m(N):
    # N = m(m+3)/2
    m = int(round((-3 + np.sqrt(9 + 8 * N)) / 2))
    if n_rows(m) != N:
        raise WrongShapeError(f"{N} rows is not of the form m(m+3)/2")
    return m


@dataclass(frozen=True)
class LambdaField:
    """Sign-continuous unit kernel covector at every grid node."""

    grid: object
    q: int
    kappa: np.ndarray  # (*shape, N)
    sign_aligned: bool = True

    @property
    def m(self):
        return self.grid.m

    @property
    def lam_first(self):
        return self.kappa[..., : self.m]

    @property
    def lam_matrix(self):
        return expand_pairs(self.m, self.kappa[..., self.m :]) / _pair_weights(self.m)

    def rescaled(self, factor):
        """Same field with kappa multiplied by a global nonzero factor.

        Breaks the unit-norm convention on purpose; used to test that the
        end-to-end solution does not depend on the kernel normalization.
        A global flip keeps adjacent-node sign continuity intact.
        """
        if factor == 0:
            raise ValueError("rescale factor must be nonzero")
        return LambdaField(
            grid=self.grid,
            q=self.q,
            kappa=self.kappa * factor,
            sign_aligned=self.sign_aligned,
        )


def _svd_field(A_field):
    U, s, _ = np.linalg.svd(A_field)
    return U, s


def kernel_field(spec, grid, rank_tol=1e-8):
    """Kernel covector at every node, signs aligned by BFS from the first node."""
    if spec.q != spec.critical_q:
        raise WrongShapeError(
            f"critical dimension requires q = {spec.critical_q}, got q = {spec.q}"
        )
    A = coefficient_field(spec, grid)
    U, s = _svd_field(A)
    ratio = s[..., -1] / s[..., 0]
    if np.min(ratio) < rank_tol:
        loc = np.unravel_index(np.argmin(ratio), grid.shape)
        raise RankDeficientError(
            f"rank deficient at node index {loc} "
            f"(sigma ratio {np.min(ratio):.3e} < rank_tol {rank_tol:g})",
            location=loc,
        )
    kappa = U[..., :, -1].copy()
    _align_signs(kappa, grid)
    return LambdaField(grid=grid, q=spec.q, kappa=kappa, sign_aligned=True)


def _align_signs(kappa, grid):
    """In-place BFS sign propagation over axis-adjacent nodes from node 0."""
    shape = grid.shape
    flat = kappa.reshape(-1, kappa.shape[-1])
    n = flat.shape[0]
    strides = np.array(
        [int(np.prod(shape[a + 1 :])) for a in range(len(shape))], dtype=int
    )
    first = flat[0]
    if first[np.argmax(np.abs(first))] < 0:
        flat[0] = -first
    visited = np.zeros(n, dtype=bool)
    visited[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        multi = np.unravel_index(i, shape)
        for a in range(len(shape)):
            for step in (-1, 1):
                ja = multi[a] + step
                if ja < 0 or ja >= shape[a]:
                    continue
                j = i + step * strides[a]
                if visited[j]:
                    continue
                d = flat[i] @ flat[j]
                if abs(d) < _SIGN_DOT_MIN:
                    raise SignAmbiguousError(
                        f"|kappa_p . kappa_p'| = {abs(d):.3f} < {_SIGN_DOT_MIN} "
                        f"between node indices {multi} and its axis-{a} neighbour",
                        location=multi,
                    )
                if d < 0:
                    flat[j] = -flat[j]
                visited[j] = True
                queue.append(j)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of the admissibility test (full rank + transversal coordinate)."""

    full_rank_ok: bool
    min_sigma_ratio: float
    worst_node: tuple
    alpha0: int | None  # 1-based coordinate index, or None
    min_transversality: float
    rank_tol: float
    adm_tol: float
    verdict: bool
    failure: str | None = None
    transversality_by_axis: tuple = field(default=())

    def to_dict(self):
        return {
            "full_rank_ok": self.full_rank_ok,
            "min_sigma_ratio": self.min_sigma_ratio,
            "worst_node": list(self.worst_node),
            "alpha0": self.alpha0,
            "min_transversality": self.min_transversality,
            "transversality_by_axis": list(self.transversality_by_axis),
            "rank_tol": self.rank_tol,
            "adm_tol": self.adm_tol,
            "verdict": self.verdict,
            "failure": self.failure,
        }


def transversality(field, alpha0):
    """Per-node sum over b of lam^{alpha0 b}^2 (alpha0 is 1-based)."""
    lam = field.lam_matrix
    return np.sum(lam[..., alpha0 - 1, :] ** 2, axis=-1)


def admissibility(spec, grid, rank_tol=1e-8, adm_tol=1e-6, alpha0_override=None):
    """Decide membership in the admissible set and select the marching coordinate.

    alpha0 is chosen to maximize the worst-node transversality sum unless
    overridden; failures are encoded in the report, never raised.
    """
    A = coefficient_field(spec, grid)
    if A.shape[-2] != A.shape[-1] + 1:
        return AdmissibilityReport(
            full_rank_ok=False,
            min_sigma_ratio=0.0,
            worst_node=(),
            alpha0=None,
            min_transversality=0.0,
            rank_tol=rank_tol,
            adm_tol=adm_tol,
            verdict=False,
            failure=f"q = {spec.q} is not the critical dimension {spec.critical_q}",
        )
    U, s = _svd_field(A)
    ratio = s[..., -1] / s[..., 0]
    worst = tuple(int(i) for i in np.unravel_index(np.argmin(ratio), grid.shape))
    min_ratio = float(ratio[worst])
    full_rank_ok = min_ratio >= rank_tol
    if not full_rank_ok:
        return AdmissibilityReport(
            full_rank_ok=False,
            min_sigma_ratio=min_ratio,
            worst_node=worst,
            alpha0=None,
            min_transversality=0.0,
            rank_tol=rank_tol,
            adm_tol=adm_tol,
            verdict=False,
            failure=f"rank deficient at node {worst}",
        )
    kappa = U[..., :, -1].copy()
    try:
        _align_signs(kappa, grid)
    except SignAmbiguousError as exc:
        return AdmissibilityReport(
            full_rank_ok=True,
            min_sigma_ratio=min_ratio,
            worst_node=worst,
            alpha0=None,
            min_transversality=0.0,
            rank_tol=rank_tol,
            adm_tol=adm_tol,
            verdict=False,
            failure=str(exc),
        )
    field = LambdaField(grid=grid, q=spec.q, kappa=kappa)
    mins = tuple(
        float(np.min(transversality(field, a + 1))) for a in range(spec.m)
    )
    if alpha0_override is not None:
        alpha0 = int(alpha0_override)
        if not 1 <= alpha0 <= spec.m:
            raise ValueError(f"alpha0 override {alpha0} out of range 1..{spec.m}")
    else:
        alpha0 = int(np.argmax(mins)) + 1
    min_t = mins[alpha0 - 1]
    ok = min_t >= adm_tol
    return AdmissibilityReport(
        full_rank_ok=True,
        min_sigma_ratio=min_ratio,
        worst_node=worst,
        alpha0=alpha0 if ok else None,
        min_transversality=min_t,
        rank_tol=rank_tol,
        adm_tol=adm_tol,
        verdict=ok,
        failure=None if ok else (
            f"transversality {min_t:.3e} below adm_tol {adm_tol:g} for every coordinate"
            if alpha0_override is None
            else f"transversality {min_t:.3e} below adm_tol for alpha0={alpha0}"
        ),
        transversality_by_axis=mins,
    )


def lambda_derivatives(field, grid, alpha0):
    """Grid FD derivatives d_b lam^{alpha0 a}, shape (*shape, m, m) with
    axes (a, b); centered second order inside, one-sided at faces."""
    if not field.sign_aligned:
        raise ValueError("lambda field must be sign-aligned before differentiation")
    la0 = field.lam_matrix[..., alpha0 - 1, :]  # (*shape, a)
    m = grid.m
    out = np.empty(grid.shape + (m, m))
    for a in range(m):
        for b in range(m):
            out[..., a, b] = gradient(la0[..., a], grid, b)
    return out
