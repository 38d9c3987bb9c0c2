"""Built-in identity suite: operator identities, quadratic roots, dense oracle.

Run via the `selftest` CLI subcommand on a fresh checkout; every check is
deterministic (fixed seeds).  Returns the number of failed checks.
"""

from __future__ import annotations

import numpy as np

from .grid import (
    BoundaryTrace,
    Grid,
    ScalarField,
    VelocityField,
    divergence,
    grad_inner_vel,
    gradient,
    inner_cell,
    inner_vel,
    laplacian_velocity,
)
from .oracle import dense_pdrlm1_step
from .solvers import SolverConfig, neumann_laplacian_apply
from .stepper import (
    SchemeConfig,
    State,
    project_divergence_free,
    solve_multiplier_quadratic,
    step_pdrlm1,
)

__all__ = ["run_selftest"]


def _random_hom_velocity(g: Grid, rng) -> VelocityField:
    u = rng.standard_normal(g.u_shape)
    v = rng.standard_normal(g.v_shape)
    u[0, :] = u[-1, :] = 0.0
    v[:, 0] = v[:, -1] = 0.0
    return VelocityField(g, u, v, BoundaryTrace.homogeneous(g))


def run_selftest(verbose: bool = True) -> int:
    rng = np.random.default_rng(20240901)
    failures = 0
    checks = 0

    def check(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures, checks
        checks += 1
        if not ok:
            failures += 1
        if verbose:
            print(f"  [{'ok' if ok else 'FAIL'}] {name}{(' ' + detail) if detail else ''}")

    g = Grid(11, 7, 0.0, 1.0, 0.0, 0.8)
    hom = BoundaryTrace.homogeneous(g)

    for trial in range(3):
        s = ScalarField(g, rng.standard_normal(g.cell_shape))
        w = _random_hom_velocity(g, rng)
        lhs = inner_vel(gradient(s), w)
        rhs = -inner_cell(s, divergence(w))
        check(f"div/grad duality #{trial}",
              abs(lhs - rhs) <= 1e-13 * max(abs(lhs), abs(rhs), 1.0))

        v = _random_hom_velocity(g, rng)
        a = -inner_vel(laplacian_velocity(v, hom), v)
        b = grad_inner_vel(v, v, hom, hom)
        check(f"laplacian/seminorm identity #{trial}", abs(a - b) <= 1e-12 * abs(a))

        w2 = _random_hom_velocity(g, rng)
        sym1 = inner_vel(laplacian_velocity(v, hom), w2)
        sym2 = inner_vel(v, laplacian_velocity(w2, hom))
        check(f"laplacian symmetry #{trial}", abs(sym1 - sym2) <= 1e-12 * max(abs(sym1), 1.0))

    s2 = ScalarField(g, rng.standard_normal(g.cell_shape))
    dg = divergence(gradient(s2)).values
    nl = -neumann_laplacian_apply(s2.values, g)
    check("div(grad) equals cell Neumann laplacian", np.max(np.abs(dg - nl)) <= 1e-11)

    for trial in range(20):
        A = float(rng.uniform(0.1, 10.0))
        B = float(rng.uniform(-10.0, 10.0))
        C = float(-rng.uniform(0.01, 10.0))
        r = solve_multiplier_quadratic(A, B, C, 1.0)
        res = abs(A * r * r + B * r + C)
        scale = abs(A * r * r) + abs(B * r) + abs(C)
        if not (r > 0 and res <= 1e-12 * scale):
            check(f"quadratic root #{trial}", False, f"r={r}, res={res}")
            break
    else:
        check("quadratic roots (20 random, C<0)", True)

    # Dense oracle vs modular pipeline on a 4x4 grid.
    g4 = Grid(4, 4)
    vel = project_divergence_free(
        _random_hom_velocity(g4, rng), SolverConfig(rel_tol=1e-14, abs_tol=1e-16))
    p0 = ScalarField(g4, rng.standard_normal(g4.cell_shape)).recentered()
    state = State(0.0, vel, p0, float(rng.uniform(0.5, 1.5)))
    cfg = SchemeConfig(tau=0.05, theta=1.0, nu=0.01,
                       solver=SolverConfig(rel_tol=1e-13, abs_tol=1e-16))
    s1, _, _ = step_pdrlm1(state, cfg)
    dense = dense_pdrlm1_step(state, cfg)
    err = max(
        float(np.max(np.abs(s1.u.u - dense.u))),
        float(np.max(np.abs(s1.u.v - dense.v))),
        float(np.max(np.abs(s1.p.values - dense.p))),
        abs(s1.Q - dense.Q),
    )
    check("dense oracle equivalence (4x4, one step)", err <= 1e-12, f"max diff {err:.2e}")

    if verbose:
        print(f"selftest: {checks - failures}/{checks} checks passed")
    return failures
