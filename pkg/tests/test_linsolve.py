import numpy as np
import pytest

import isosolve as iso
from conftest import dg_single, make_grid


class TestAssembleRHS:
    def test_f3_case(self, f3):
        grid = make_grid(33)
        y = grid.nodes()[..., 1]
        h_cov = np.zeros(grid.shape + (2,))
        h_cov[..., 1] = (y + 1) / 2
        b = iso.assemble_rhs(h_cov, dg_single(grid, 2), grid)
        assert np.max(np.abs(b[..., 1] - (y + 1) / 2)) <= 1e-12
        for row in (0, 2, 3, 4):
            assert np.max(np.abs(b[..., row])) <= 1e-12

    def test_example1_case(self, example1):
        grid = make_grid(33)
        x = grid.nodes()[..., 0]
        h_cov = np.zeros(grid.shape + (2,))
        h_cov[..., 1] = x + 1
        b = iso.assemble_rhs(h_cov, dg_single(grid, 1), grid)
        assert np.max(np.abs(b[..., 1] - (x + 1))) <= 1e-12
        for row in (0, 2, 3, 4):
            assert np.max(np.abs(b[..., row])) <= 1e-12

    def test_all_zero(self):
        grid = make_grid(9)
        b = iso.assemble_rhs(
            np.zeros(grid.shape + (2,)), np.zeros(grid.shape + (3,)), grid
        )
        assert not b.any()


class TestSolvePointwise:
    def test_f3_origin(self, f3):
        A = iso.coefficient_matrix(iso.eval_jet2(f3, [0.0, 0.0]))
        df, res = iso.solve_pointwise(A, [0, 0.5, 0, 0, 0])
        assert df == pytest.approx([0, 0.5, 0, 0], abs=1e-12)
        assert res <= 1e-12

    def test_zero_rhs(self, f3):
        A = iso.coefficient_matrix(iso.eval_jet2(f3, [0.3, 0.7]))
        df, res = iso.solve_pointwise(A, np.zeros(5))
        assert np.max(np.abs(df)) <= 1e-12 and res <= 1e-12

    def test_incompatible_rhs_residual_one(self, f3):
        # e5 is orthogonal to the column space (last row of A is zero)
        A = iso.coefficient_matrix(iso.eval_jet2(f3, [0.0, 0.0]))
        df, res = iso.solve_pointwise(A, [0, 0, 0, 0, 1.0])
        assert np.max(np.abs(df)) <= 1e-12
        assert res == pytest.approx(1.0, abs=1e-12)

    def test_rank_deficient(self, degenerate):
        A = iso.coefficient_matrix(iso.eval_jet2(degenerate, [0.0, 0.0]))
        with pytest.raises(iso.RankDeficientError):
            iso.solve_pointwise(A, np.zeros(5))


class TestSolveLinearized:
    def test_f3_closed_form(self, f3):
        grid = make_grid(33)
        dff, rep = iso.solve_linearized(f3, dg_single(grid, 2), grid)
        y = grid.nodes()[..., 1]
        exact = np.zeros(grid.shape + (4,))
        exact[..., 1] = (y + 1) / 2
        h2 = grid.spacing[0] ** 2
        assert np.max(np.abs(dff.df - exact)) <= 50 * h2
        assert rep.branch == "critical" and rep.alpha0 == 2
        assert rep.consistent

    def test_example1_closed_form(self, example1):
        grid = make_grid(33)
        dff, rep = iso.solve_linearized(example1, dg_single(grid, 1), grid)
        x = grid.nodes()[..., 0]
        exact = np.zeros(grid.shape + (4,))
        exact[..., 2] = x + 1
        assert np.max(np.abs(dff.df - exact)) <= 50 * grid.spacing[0] ** 2

    def test_f1_closed_form(self, f1):
        grid = make_grid(33)
        dff, rep = iso.solve_linearized(f1, dg_single(grid, 0), grid)
        x = grid.nodes()[..., 0]
        exact = np.zeros(grid.shape + (4,))
        exact[..., 0] = (x + 1) / 2
        assert np.max(np.abs(dff.df - exact)) <= 50 * grid.spacing[0] ** 2
        assert rep.alpha0 == 1

    def test_zero_dg_zero_df(self, f3):
        grid = make_grid(17)
        dff, _ = iso.solve_linearized(f3, np.zeros(grid.shape + (3,)), grid)
        assert np.max(np.abs(dff.df)) <= 1e-13
        assert np.max(dff.residual) <= 1e-13

    def test_not_admissible(self, degenerate):
        grid = make_grid(9)
        with pytest.raises(iso.NotAdmissibleError):
            iso.solve_linearized(degenerate, np.zeros(grid.shape + (3,)), grid)

    def test_linearity(self, example1):
        grid = make_grid(17)
        x1, x2 = grid.nodes()[..., 0], grid.nodes()[..., 1]
        dg_a = np.stack([np.sin(x1), x1 * x2, np.cos(x1 + x2)], axis=-1)
        dg_b = np.stack([x2**2, np.cos(x1), x1], axis=-1)
        c = 0.3
        df_sum = iso.solve_linearized(example1, dg_a + c * dg_b, grid)[0].df
        df_sep = (
            iso.solve_linearized(example1, dg_a, grid)[0].df
            + c * iso.solve_linearized(example1, dg_b, grid)[0].df
        )
        scale = max(np.max(np.abs(df_sum)), 1.0)
        assert np.max(np.abs(df_sum - df_sep)) <= 1e-9 * scale

    def test_kernel_normalization_invariance(self, example1):
        # rerun the downstream stages with a rescaled/flipped kernel field
        grid = make_grid(17)
        dg = dg_single(grid, 1)
        A = np.concatenate(
            [iso.jet_field(example1, grid)[1], iso.jet_field(example1, grid)[2]],
            axis=-2,
        )

        def downstream(field):
            derivs = iso.lambda_derivatives(field, grid, 1)
            td = iso.build_transport(field, derivs, dg, 1)
            h = iso.solve_transport(td).h
            h_cov = iso.assemble_covector(field, 1, h)
            b = iso.assemble_rhs(h_cov, dg, grid)
            return np.einsum("...ij,...j->...i", np.linalg.pinv(A), b)

        field = iso.kernel_field(example1, grid)
        base = downstream(field)
        for c in (-1.0, 3.7):
            df = downstream(field.rescaled(c))
            scale = max(np.max(np.abs(base)), 1.0)
            assert np.max(np.abs(df - base)) <= 1e-10 * scale

    def test_residual_order_under_refinement(self, example1):
        # pointwise solve residual measures discrete compatibility error
        def max_res(n):
            grid = make_grid(n)
            x1, x2 = grid.nodes()[..., 0], grid.nodes()[..., 1]
            dg = np.stack(
                [np.zeros_like(x1), np.sin(x1) * np.cos(x2), np.zeros_like(x1)],
                axis=-1,
            )
            _, rep = iso.solve_linearized(example1, dg, grid)
            return rep.max_residual

        r33, r65 = max_res(33), max_res(65)
        assert np.log2(r33 / r65) >= 1.5


class TestThreeDimensional:
    def test_fpi_m3_pipeline(self):
        # m=3 projection of the canonical free map, x1*x2 dropped
        from isosolve.catalog import get

        entry = get("fpi-m3")
        spec, grid = entry.spec(), entry.grid
        rep = iso.admissibility(spec, grid)
        assert rep.verdict and rep.alpha0 in (1, 2)
        dg = iso.expression_field(list(entry.dg_exprs), grid)
        dff, prep = iso.solve_linearized(spec, dg, grid)
        assert prep.consistent
        vrep = iso.verify_solution(
            spec, dff.df, dg, grid, tol=50 * grid.spacing[0] ** 2
        )
        assert vrep.passed


class TestSolveFree:
    def test_canonical_free_exact(self, free5):
        grid = make_grid(33)
        dff, rep = iso.solve_free(free5, dg_single(grid, 2), grid)
        y = grid.nodes()[..., 1]
        exact = np.zeros(grid.shape + (5,))
        exact[..., 1] = y / 2
        exact[..., 4] = -0.25
        assert np.max(np.abs(dff.df - exact)) <= 1e-12
        assert rep.max_residual <= 1e-12  # no FD in the loop
        assert rep.branch == "free"

    def test_zero_dg(self, free5):
        grid = make_grid(9)
        dff, _ = iso.solve_free(free5, np.zeros(grid.shape + (3,)), grid)
        assert not dff.df.any()

    def test_q_too_small_rejected(self, example1):
        grid = make_grid(9)
        with pytest.raises(iso.NotFreeError):
            iso.solve_free(example1, np.zeros(grid.shape + (3,)), grid)

    def test_not_free_rejected(self):
        spec = iso.parse_map_spec("m=2,q=5; x1; x2; x1^2; x1^2; 0")
        grid = make_grid(9)
        with pytest.raises(iso.NotFreeError):
            iso.solve_free(spec, np.zeros(grid.shape + (3,)), grid)

    def test_first_rows_orthogonality(self, free5):
        # h_a = 0 choice: delta f orthogonal to the first-derivative rows
        grid = make_grid(9)
        dff, _ = iso.solve_free(free5, dg_single(grid, 0), grid)
        _, d1, _ = iso.jet_field(free5, grid)
        dots = np.einsum("...ai,...i->...a", d1, dff.df)
        assert np.max(np.abs(dots)) <= 1e-12
