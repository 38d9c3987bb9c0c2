import math

import numpy as np
import pytest

from macproj.grid import Grid, ScalarField, VelocityField, divergence, norm_vel
from macproj.problems import (
    CenterlineProfile,
    centerline_profile,
    compute_errors,
    initial_state_from_exact,
    lattice_vortex,
    run_cavity,
    run_convergence_study,
    sample_pressure,
    sample_velocity,
)
from macproj.stepper import State


def fd_derivative(f, x, h=1e-3):
    """Fourth-order central difference."""
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


class TestLatticeVortex:
    def test_point_values(self):
        sol = lattice_vortex(0.1)
        assert sol.u(0.25, 0.25, 0.0) == pytest.approx(1.0)
        assert sol.v(0.25, 0.25, 0.0) == pytest.approx(0.0, abs=1e-15)
        assert sol.p(0.25, 0.25, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_separable_decay(self):
        sol = lattice_vortex(0.05)
        x, y, t = 0.13, 0.71, 0.37
        decay = math.exp(-8 * 0.05 * math.pi ** 2 * t)
        assert sol.u(x, y, t) == pytest.approx(sol.u(x, y, 0.0) * decay, rel=1e-13)

    def test_invalid_viscosity(self):
        with pytest.raises(ValueError):
            lattice_vortex(0.0)

    def test_momentum_residual_oracle(self, rng):
        # residual of u_t - nu*lap(u) + (u.grad)u + grad(p) at random points,
        # all derivatives by 4th-order finite differences
        nu = 0.1
        sol = lattice_vortex(nu)
        for _ in range(6):
            x = float(rng.uniform(0.1, 0.9))
            y = float(rng.uniform(0.1, 0.9))
            t = float(rng.uniform(0.0, 0.5))

            for comp in ("u", "v"):
                f = getattr(sol, comp)
                ft = fd_derivative(lambda s: f(x, y, s), t)
                fx = fd_derivative(lambda s: f(s, y, t), x)
                fy = fd_derivative(lambda s: f(x, s, t), y)
                fxx = fd_derivative(lambda s: fd_derivative(lambda r: f(r, y, t), s), x)
                fyy = fd_derivative(lambda s: fd_derivative(lambda r: f(x, r, t), s), y)
                if comp == "u":
                    pgrad = fd_derivative(lambda s: sol.p(s, y, t), x)
                else:
                    pgrad = fd_derivative(lambda s: sol.p(x, s, t), y)
                conv = sol.u(x, y, t) * fx + sol.v(x, y, t) * fy
                res = ft - nu * (fxx + fyy) + conv + pgrad
                assert abs(res) <= 1e-6, (comp, x, y, t, res)

    def test_divergence_free_spotcheck(self, rng):
        sol = lattice_vortex(0.2)
        for _ in range(4):
            x, y, t = rng.uniform(0.1, 0.9, size=3)
            ux = fd_derivative(lambda s: sol.u(s, y, t), x)
            vy = fd_derivative(lambda s: sol.v(x, s, t), y)
            assert abs(ux + vy) <= 1e-8


class TestSamplingAndErrors:
    def test_exactly_sampled_state_has_zero_errors(self):
        g = Grid(32, 32)
        sol = lattice_vortex(0.1)
        state = State(0.3, sample_velocity(g, sol, 0.3), sample_pressure(g, sol, 0.3), 1.0)
        err = compute_errors(state, sol)
        assert err.e_u == 0.0
        assert err.e_p <= 1e-14
        assert err.e_Q == 0.0

    def test_error_homogeneity(self, rng):
        g = Grid(16, 16)
        sol = lattice_vortex(0.1)
        ue = sample_velocity(g, sol, 0.0)
        pe = sample_pressure(g, sol, 0.0)
        du = rng.standard_normal(g.u_shape)
        dv = rng.standard_normal(g.v_shape)
        e1 = compute_errors(State(0.0, VelocityField(g, ue.u + du, ue.v + dv), pe, 1.0), sol)
        e2 = compute_errors(State(0.0, VelocityField(g, ue.u + 2 * du, ue.v + 2 * dv), pe, 1.0), sol)
        assert e2.e_u == pytest.approx(2.0 * e1.e_u, rel=1e-12)

    def test_pressure_constant_invariance(self):
        g = Grid(16, 16)
        sol = lattice_vortex(0.1)
        state = State(0.0, sample_velocity(g, sol, 0.0), sample_pressure(g, sol, 0.0), 1.0)
        shifted = State(0.0, state.u, ScalarField(g, state.p.values + 5.0), 1.0)
        assert compute_errors(shifted, sol).e_p == pytest.approx(
            compute_errors(state, sol).e_p, abs=1e-13)

    def test_initialization_projection_small(self):
        sol = lattice_vortex(0.1)
        shifts = []
        for n in (32, 64):
            g = Grid(n, n)
            sampled = sample_velocity(g, sol, 0.0)
            state = initial_state_from_exact(g, sol)
            diff = VelocityField(g, state.u.u - sampled.u, state.u.v - sampled.v)
            shifts.append(norm_vel(diff))
            assert np.max(np.abs(divergence(state.u).values)) <= 1e-9
        # the sampled vortex is already discretely divergence-free, so the
        # projection shift sits at solver-tolerance scale rather than O(h^2)
        assert max(shifts) <= 1e-9


class TestConvergenceStudy:
    def test_single_tau_has_empty_rates(self):
        table = run_convergence_study(nu=0.1, theta=1.0, nx=16, taus=[0.125], T=0.25)
        assert len(table.rows) == 1
        assert table.rows[0].rate_u is None

    def test_rejects_non_halving(self):
        with pytest.raises(ValueError):
            run_convergence_study(nu=0.1, theta=1.0, nx=16, taus=[0.1, 0.03], T=0.3)

    def test_rejects_non_integer_horizon(self):
        with pytest.raises(ValueError):
            run_convergence_study(nu=0.1, theta=1.0, nx=16, taus=[0.15], T=1.0)

    def test_small_study_first_order(self):
        table = run_convergence_study(nu=0.1, theta=1.0, nx=64,
                                      taus=[1 / 16, 1 / 32, 1 / 64], T=0.5)
        rates = table.observed_rates()
        assert all(r > 0.7 for r in rates["u"]), rates
        assert all(r > 0.7 for r in rates["Q"]), rates

    def test_determinism(self):
        kw = dict(nu=0.1, theta=1.0, nx=16, taus=[1 / 4, 1 / 8], T=0.5)
        t1 = run_convergence_study(**kw)
        t2 = run_convergence_study(**kw)
        for a, b in zip(t1.rows, t2.rows):
            assert (a.e_u, a.e_Q, a.e_p) == (b.e_u, b.e_Q, b.e_p)


class TestCavity:
    def test_first_steps_qualitative(self):
        res = run_cavity(Re=100.0, theta=1.0, nx=16, tau=0.01, T=0.05)
        assert res.energy_trace[-1][1] > 0.0
        assert res.diagnostics[-1].div_inf <= 1e-6

    def test_snapshots_and_profile_shapes(self):
        res = run_cavity(Re=100.0, theta=1.0, nx=16, tau=0.01, T=0.1,
                         snapshot_times=(0.05,))
        assert len(res.snapshots) == 1
        prof = res.profile
        assert prof.y[0] == 0.0 and prof.y[-1] == 1.0
        assert prof.u[-1] == 1.0  # lid value appended
        assert prof.v[0] == 0.0 and prof.v[-1] == 0.0
        assert np.all(np.diff(prof.y) > 0)

    def test_centerline_interpolation_odd_grid(self):
        # x = 0.5 falls between face columns on an odd grid
        g = Grid(5, 5)
        state = State.zeros(g)
        state.u.u[:, :] = np.linspace(0, 1, 6)[:, None]  # u = x on faces
        prof = centerline_profile(state, lid_speed=0.0)
        assert prof.u[1:-1] == pytest.approx(np.full(5, 0.5))

    def test_profile_station_interpolation(self):
        prof = CenterlineProfile(
            y=np.array([0.0, 0.5, 1.0]), u=np.array([0.0, 1.0, 0.0]),
            x=np.array([0.0, 1.0]), v=np.array([0.0, 0.0]))
        assert prof.u_at([0.25]) == pytest.approx([0.5])

    def test_invalid_re(self):
        with pytest.raises(ValueError):
            run_cavity(Re=-1.0, theta=1.0, nx=8, tau=0.01, T=0.02)
