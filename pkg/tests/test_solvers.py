import numpy as np
import pytest

from macproj.grid import (
    BoundaryTrace,
    Grid,
    ScalarField,
    VelocityField,
    laplacian_velocity,
)
from macproj.solvers import (
    SolveReport,
    SolverConfig,
    SolverError,
    helmholtz_solve,
    neumann_laplacian_apply,
    poisson_neumann_solve,
)

from conftest import observed_order, random_hom_velocity, random_scalar


def manufactured_trace(g):
    uf = lambda x, y, t: np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y) + 0.25 * x
    vf = lambda x, y, t: np.cos(2 * np.pi * x) * np.cos(np.pi * y) - 0.1 * y
    return uf, vf, BoundaryTrace.from_functions(g, uf, vf, 0.0)


class TestSolverConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(rel_tol=0.0)
        with pytest.raises(ValueError):
            SolverConfig(abs_tol=-1.0)
        with pytest.raises(ValueError):
            SolverConfig(max_iter=0)

    def test_default_max_iter(self):
        assert SolverConfig().resolve_max_iter(Grid(32, 16)) == 480


class TestHelmholtz:
    def test_nu_zero_is_diagonal(self, rng):
        g = Grid(8, 6)
        rhs = random_hom_velocity(g, rng)
        tr = BoundaryTrace.homogeneous(g)
        x, rep = helmholtz_solve(4.0, 0.0, rhs, tr)
        assert np.allclose(x.u[1:-1, :], rhs.u[1:-1, :] / 4.0, atol=1e-14)
        assert np.allclose(x.v[:, 1:-1], rhs.v[:, 1:-1] / 4.0, atol=1e-14)
        assert rep.converged

    def test_manufactured_discrete_solution(self):
        g = Grid(24, 20, 0.0, 1.0, 0.0, 1.2)
        alpha, nu = 7.0, 0.41
        uf, vf, tr = manufactured_trace(g)
        Xu, Yu = g.u_coords()
        Xv, Yv = g.v_coords()
        xstar = VelocityField(g, uf(Xu, Yu, 0), vf(Xv, Yv, 0), tr)
        lap = laplacian_velocity(xstar, tr)
        rhs = VelocityField(g, alpha * xstar.u - nu * lap.u, alpha * xstar.v - nu * lap.v)
        sol, rep = helmholtz_solve(alpha, nu, rhs, tr, SolverConfig(rel_tol=1e-12))
        assert rep.converged
        assert np.max(np.abs(sol.u - xstar.u)) < 1e-10
        assert np.max(np.abs(sol.v - xstar.v)) < 1e-10

    def test_residual_contract_random_rhs(self, rng):
        g = Grid(17, 13)
        cfg = SolverConfig(rel_tol=1e-10)
        alpha, nu = 2.0, 0.3
        tr = BoundaryTrace.homogeneous(g)
        rhs = random_hom_velocity(g, rng)
        x, rep = helmholtz_solve(alpha, nu, rhs, tr, cfg)
        lap = laplacian_velocity(x, tr)
        res_u = alpha * x.u[1:-1, :] - nu * lap.u[1:-1, :] - rhs.u[1:-1, :]
        res_v = alpha * x.v[:, 1:-1] - nu * lap.v[:, 1:-1] - rhs.v[:, 1:-1]
        rhs_norm = np.sqrt(np.sum(rhs.u[1:-1, :] ** 2) + np.sum(rhs.v[:, 1:-1] ** 2))
        res = np.sqrt(np.sum(res_u ** 2) + np.sum(res_v ** 2))
        assert res <= 2.0 * cfg.rel_tol * rhs_norm

    def test_boundary_values_imposed(self):
        g = Grid(10, 10)
        _, _, tr = manufactured_trace(g)
        x, _ = helmholtz_solve(1.0, 0.1, VelocityField.zeros(g), tr)
        assert np.array_equal(x.u[0, :], tr.u_left)
        assert np.array_equal(x.u[-1, :], tr.u_right)
        assert np.array_equal(x.v[:, 0], tr.v_bottom)
        assert np.array_equal(x.v[:, -1], tr.v_top)

    def test_nonconvergence_raises_with_report(self, rng):
        g = Grid(32, 32)
        rhs = random_hom_velocity(g, rng)
        with pytest.raises(SolverError) as err:
            helmholtz_solve(1e-6, 1.0, rhs, BoundaryTrace.homogeneous(g),
                            SolverConfig(rel_tol=1e-14, abs_tol=0.0, max_iter=2))
        assert isinstance(err.value.report, SolveReport)
        assert not err.value.report.converged

    def test_invalid_args(self, rng):
        g = Grid(4, 4)
        rhs = VelocityField.zeros(g)
        with pytest.raises(ValueError):
            helmholtz_solve(0.0, 0.1, rhs, BoundaryTrace.homogeneous(g))
        with pytest.raises(ValueError):
            helmholtz_solve(1.0, -0.1, rhs, BoundaryTrace.homogeneous(g))


class TestPoissonNeumann:
    def test_zero_rhs(self):
        g = Grid(8, 8)
        phi, rep = poisson_neumann_solve(ScalarField.zeros(g))
        assert np.all(phi.values == 0.0)
        assert rep.iterations == 0

    def test_eigenfunction_refinement(self):
        errs = []
        for n in (16, 32, 64):
            g = Grid(n, n)
            Xc, _ = g.cell_coords()
            rhs = ScalarField(g, np.pi ** 2 * np.cos(np.pi * Xc))
            phi, rep = poisson_neumann_solve(rhs, SolverConfig(rel_tol=1e-12))
            assert rep.converged
            exact = np.cos(np.pi * Xc)
            exact -= exact.mean()
            errs.append(np.max(np.abs(phi.values - exact)))
        assert min(observed_order(errs)) >= 1.9

    def test_shift_invariance(self, rng):
        g = Grid(12, 9)
        base = random_scalar(g, rng)
        shifted = ScalarField(g, base.values + 17.3)
        a, _ = poisson_neumann_solve(base)
        b, _ = poisson_neumann_solve(shifted)
        assert np.allclose(a.values, b.values, atol=1e-12)

    def test_zero_mean_discipline(self, rng):
        g = Grid(15, 11)
        phi, _ = poisson_neumann_solve(random_scalar(g, rng))
        assert abs(np.mean(phi.values)) <= 1e-12 * max(1.0, np.max(np.abs(phi.values)))

    def test_compatibility_warning(self, rng):
        g = Grid(8, 8)
        rhs = ScalarField(g, np.ones(g.cell_shape))  # pure mean: incompatible
        phi, rep = poisson_neumann_solve(rhs)
        assert rep.compatibility_warning
        assert np.allclose(phi.values, 0.0)
        balanced = random_scalar(g, rng)
        balanced = ScalarField(g, balanced.values - balanced.values.mean())
        _, rep2 = poisson_neumann_solve(balanced)
        assert not rep2.compatibility_warning

    def test_consistency_with_apply(self, rng):
        g = Grid(10, 14)
        rhs = random_scalar(g, rng)
        rhs = ScalarField(g, rhs.values - rhs.values.mean())
        cfg = SolverConfig(rel_tol=1e-11)
        phi, rep = poisson_neumann_solve(rhs, cfg)
        res = rhs.values - neumann_laplacian_apply(phi.values, g)
        assert np.sqrt(np.sum(res ** 2)) <= 2.0 * cfg.rel_tol * np.sqrt(np.sum(rhs.values ** 2))


class TestCGBehavior:
    def test_residual_history_non_increasing(self, rng):
        g = Grid(24, 24)
        cfg = SolverConfig(track_history=True)
        rhs = random_scalar(g, rng)
        rhs = ScalarField(g, rhs.values - rhs.values.mean())
        _, rep = poisson_neumann_solve(rhs, cfg)
        assert len(rep.residual_histories) == 1
        h = np.asarray(rep.residual_histories[0])
        assert len(h) > 2
        assert np.all(np.diff(h) <= 10 * np.finfo(float).eps * h[0])

        vrhs = random_hom_velocity(g, rng)
        _, vrep = helmholtz_solve(1.0, 0.5, vrhs, BoundaryTrace.homogeneous(g), cfg)
        assert len(vrep.residual_histories) == 2
        for seq in vrep.residual_histories:
            vh = np.asarray(seq)
            assert np.all(np.diff(vh) <= 10 * np.finfo(float).eps * vh[0])

    def test_bit_identical_reruns(self, rng):
        g = Grid(20, 20)
        rhs = random_scalar(g, rng)
        a, _ = poisson_neumann_solve(rhs)
        b, _ = poisson_neumann_solve(rhs)
        assert np.array_equal(a.values, b.values)

    def test_warm_start_changes_iterations_not_solution(self, rng):
        g = Grid(20, 20)
        rhs = random_scalar(g, rng)
        rhs = ScalarField(g, rhs.values - rhs.values.mean())
        cold, rep_c = poisson_neumann_solve(rhs)
        warm, rep_w = poisson_neumann_solve(rhs, x0=cold)
        assert rep_w.iterations <= rep_c.iterations
        assert np.allclose(warm.values, cold.values, atol=1e-9)


class TestReportContract:
    def test_converged_report_meets_target(self, rng):
        g = Grid(18, 12)
        cfg = SolverConfig(rel_tol=1e-9, abs_tol=1e-14)
        rhs = random_scalar(g, rng)
        rhs = ScalarField(g, rhs.values - rhs.values.mean())
        _, rep = poisson_neumann_solve(rhs, cfg)
        b_norm = np.sqrt(np.sum((rhs.values - rhs.values.mean()) ** 2))
        assert rep.converged
        assert rep.final_residual <= max(cfg.rel_tol * b_norm, cfg.abs_tol)

        vrhs = random_hom_velocity(g, rng)
        _, vrep = helmholtz_solve(3.0, 0.2, vrhs, BoundaryTrace.homogeneous(g), cfg)
        assert vrep.converged
        # component targets are private; the merged residual still obeys the
        # looser union bound against the full rhs norm
        full = np.sqrt(np.sum(vrhs.u[1:-1, :] ** 2) + np.sum(vrhs.v[:, 1:-1] ** 2))
        assert vrep.final_residual <= max(cfg.rel_tol * full, cfg.abs_tol)
