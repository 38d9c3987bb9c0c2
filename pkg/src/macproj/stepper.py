"""Time steppers: multiplier-regularized pressure correction and baselines.

Each step of the regularized first-order scheme solves two velocity
Helmholtz problems and two Neumann Poisson problems that are independent of
the scalar multiplier Q, assembles a scalar quadratic A*Q^2 + B*Q + C = 0
from inner products of the partial solutions, and recombines.  Because the
coefficients are assembled with exactly the same discrete inner products
used by the energy diagnostics, the per-step balance

    K(n+1) + theta*Q(n+1)^2 - K(n) - theta*Q(n)^2 + nu*tau*|grad uhat|^2 = 0

holds to rounding whenever the quadratic is solved exactly, and to linear
solver tolerance otherwise; with zero forcing and homogeneous walls this is
asserted every step.  K(u, p) = (|u|^2 + tau^2 |grad p|^2) / 2.

The second-order variant replaces the backward-Euler pieces by BDF2 with an
extrapolated convection velocity and a rotational pressure update; its
decomposition and quadratic follow the same pattern with BDF2 weights.  The
plain incremental pressure-correction stepper (Q fixed at 1) is kept as a
comparison baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .convection import advect, convect
from .grid import (
    BoundaryTrace,
    Grid,
    ScalarField,
    VelocityField,
    divergence,
    grad_inner_vel,
    grad_norm_pressure,
    gradient,
    inner_vel,
)
from .solvers import SolveReport, SolverConfig, helmholtz_solve, poisson_neumann_solve

__all__ = [
    "SchemeConfig",
    "State",
    "StepWorkspace",
    "QuadraticCoefficients",
    "StepDiagnostics",
    "InvariantViolation",
    "MultiplierUnsolvableError",
    "solve_multiplier_quadratic",
    "energy_K",
    "energy_modified",
    "step_pdrlm1",
    "step_pdrlm2",
    "step_baseline_pc",
    "march",
    "project_divergence_free",
]

SCHEME_KINDS = ("pdrlm1", "pdrlm2", "baseline_pc")


@dataclass(frozen=True)
class SchemeConfig:
    tau: float
    theta: float
    nu: float
    scheme_kind: str = "pdrlm1"
    include_convection: bool = True  # honored by the baseline stepper only
    assert_invariants: bool = True
    invariant_rel_tol: float = 1e-8
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.scheme_kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.scheme_kind!r}")


@dataclass
class State:
    """Solution triple at one time level: divergence-free u, zero-mean p, Q."""

    t: float
    u: VelocityField
    p: ScalarField
    Q: float

    @staticmethod
    def zeros(grid: Grid, t: float = 0.0, trace: BoundaryTrace | None = None) -> "State":
        return State(t, VelocityField.zeros(grid, trace), ScalarField.zeros(grid), 1.0)


@dataclass
class StepWorkspace:
    """Partial solutions of one step (also reused as warm starts for the next)."""

    u_hat1: VelocityField
    u_hat2: VelocityField | None
    u1: VelocityField
    u2: VelocityField | None
    p1: ScalarField
    p2: ScalarField | None
    u_hat: VelocityField
    phi1: ScalarField


@dataclass
class QuadraticCoefficients:
    A: float
    B: float
    C: float
    C_crosscheck: float

    @property
    def discriminant(self) -> float:
        return self.B * self.B - 4.0 * self.A * self.C


@dataclass
class StepDiagnostics:
    step: int
    t: float
    Q: float
    K: float
    E_mod: float
    quad: QuadraticCoefficients | None
    div_inf: float
    identity_residuals: dict[str, float]
    solver_reports: list[SolveReport]

    @property
    def cg_iters_total(self) -> int:
        return sum(r.iterations for r in self.solver_reports)


class InvariantViolation(AssertionError):
    """A per-step scheme invariant failed; carries the full StepDiagnostics."""

    def __init__(self, message: str, diagnostics: StepDiagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class MultiplierUnsolvableError(RuntimeError):
    """The multiplier quadratic has no real root (outside the f=0 regime)."""

    def __init__(self, A: float, B: float, C: float):
        super().__init__(f"no real multiplier root: A={A!r}, B={B!r}, C={C!r}")
        self.coefficients = (A, B, C)


def solve_multiplier_quadratic(A: float, B: float, C: float, Q_prev: float) -> float:
    """Root of A*Q^2 + B*Q + C = 0: the unique positive one when C < 0,
    otherwise the real root closest to Q_prev."""
    if not A > 0:
        raise ValueError(f"quadratic leading coefficient must be positive, got {A!r}")
    disc = B * B - 4.0 * A * C
    if C < 0.0:
        # disc = B^2 + 4*A*|C| > 0; stable split avoids cancellation.
        q = -0.5 * (B + math.copysign(math.sqrt(disc), B if B != 0.0 else 1.0))
        r1, r2 = q / A, C / q
        root = r1 if r1 > 0.0 else r2
        if root <= 0.0:
            raise ArithmeticError(
                f"positive root missing for C<0 (A={A!r}, B={B!r}, C={C!r}): assembly bug")
        return root
    if disc < 0.0:
        raise MultiplierUnsolvableError(A, B, C)
    sq = math.sqrt(disc)
    q = -0.5 * (B + math.copysign(sq, B if B != 0.0 else 1.0))
    if q == 0.0:  # then C == 0: roots are 0 and -B/A
        roots = (0.0, -B / A)
    else:
        roots = (q / A, C / q)
    return min(roots, key=lambda r: (abs(r - Q_prev), -r))


def energy_K(u: VelocityField, p: ScalarField, tau: float) -> float:
    """K = (|u|^2 + tau^2 |grad p|^2) / 2."""
    return 0.5 * (inner_vel(u, u) + tau ** 2 * grad_norm_pressure(p) ** 2)


def energy_modified(K: float, Q: float, theta: float) -> float:
    return K + theta * (Q * Q - 1.0)


def _sample_forcing(forcing, grid: Grid, t: float) -> VelocityField | None:
    if forcing is None:
        return None
    fu, fv = forcing(grid, t)
    return VelocityField(grid, np.asarray(fu, dtype=float), np.asarray(fv, dtype=float))


def _resolve_trace(bc, grid: Grid, t: float) -> BoundaryTrace:
    if bc is None:
        return BoundaryTrace.homogeneous(grid)
    return bc(t)


def _projection_step(u_hat: VelocityField, inv_tau_eff: float, cfg: SchemeConfig,
                     warm: ScalarField | None) -> tuple[VelocityField, ScalarField, SolveReport]:
    """Pressure projection: -lap phi = -inv_tau_eff * div(u_hat), then
    subtract grad(phi)/inv_tau_eff; returns (projected velocity, phi, report)."""
    div_hat = divergence(u_hat)
    rhs = ScalarField(u_hat.grid, -inv_tau_eff * div_hat.values)
    phi, report = poisson_neumann_solve(rhs, cfg.solver, x0=warm)
    proj = u_hat.combine(1.0, gradient(phi), -1.0 / inv_tau_eff, trace=u_hat.trace)
    return proj, phi, report


def _div_inf_bound(cfg: SchemeConfig, u: VelocityField) -> float:
    g = u.grid
    return cfg.invariant_rel_tol * max(1.0, u.max_abs() / g.min_h)


def step_pdrlm1(state: State, cfg: SchemeConfig, bc=None, forcing=None,
                ws: StepWorkspace | None = None,
                step_index: int = 0) -> tuple[State, StepDiagnostics, StepWorkspace]:
    """One step of the first-order regularized pressure-correction scheme."""
    g = state.u.grid
    tau, theta, nu = cfg.tau, cfg.theta, cfg.nu
    t1 = state.t + tau
    trace1 = _resolve_trace(bc, g, t1)
    hom = BoundaryTrace.homogeneous(g)
    f1 = _sample_forcing(forcing, g, t1)

    # Branch 1: multiplier-independent prediction with the physical bc.
    gp = gradient(state.p)
    rhs1_u = state.u.u / tau - gp.u
    rhs1_v = state.u.v / tau - gp.v
    if f1 is not None:
        rhs1_u = rhs1_u + f1.u
        rhs1_v = rhs1_v + f1.v
    u_hat1, rep1 = helmholtz_solve(
        1.0 / tau, nu, VelocityField(g, rhs1_u, rhs1_v), trace1, cfg.solver,
        x0=ws.u_hat1 if ws is not None else None)

    # Branch 2: convection carrier with homogeneous bc.
    conv = convect(state.u)
    u_hat2, rep2 = helmholtz_solve(
        1.0 / tau, nu, VelocityField(g, -conv.u, -conv.v), hom, cfg.solver,
        x0=ws.u_hat2 if ws is not None else None)

    # Projections of both branches.
    u1, phi1, rep3 = _projection_step(u_hat1, 1.0 / tau, cfg,
                                      ws.phi1 if ws is not None else None)
    p1 = ScalarField(g, state.p.values + phi1.values).recentered()
    u2, p2, rep4 = _projection_step(u_hat2, 1.0 / tau, cfg,
                                    ws.p2 if ws is not None else None)

    # Multiplier quadratic.
    gp1_sq = grad_norm_pressure(p1) ** 2
    gp2_sq = grad_norm_pressure(p2) ** 2
    gpn_sq = grad_norm_pressure(state.p) ** 2
    gs1_sq = grad_inner_vel(u_hat1, u_hat1, trace1, trace1)
    gs2_sq = grad_inner_vel(u_hat2, u_hat2, hom, hom)
    gs12 = grad_inner_vel(u_hat1, u_hat2, trace1, hom)
    gp12 = inner_vel(gradient(p1), gradient(p2))
    un_sq = inner_vel(state.u, state.u)

    A = inner_vel(u2, u2) + 2.0 * theta + tau ** 2 * gp2_sq + 2.0 * tau * nu * gs2_sq
    B = 2.0 * inner_vel(u1, u2) + 2.0 * tau ** 2 * gp12 + 4.0 * nu * tau * gs12
    C = (inner_vel(u1, u1) - un_sq + tau ** 2 * (gp1_sq - gpn_sq)
         - 2.0 * theta * state.Q ** 2 + 2.0 * tau * nu * gs1_sq)
    diff_hat1 = VelocityField(g, u_hat1.u - state.u.u, u_hat1.v - state.u.v)
    C_cross = -inner_vel(diff_hat1, diff_hat1) - 2.0 * theta * state.Q ** 2
    quad = QuadraticCoefficients(A, B, C, C_cross)

    Q1 = solve_multiplier_quadratic(A, B, C, state.Q)

    # Recombine.
    u_next = u1.combine(1.0, u2, Q1, trace=trace1)
    p_next = ScalarField(g, p1.values + Q1 * p2.values).recentered()
    u_hat = u_hat1.combine(1.0, u_hat2, Q1, trace=trace1)

    # Diagnostics.
    K_n = energy_K(state.u, state.p, tau)
    K_next = energy_K(u_next, p_next, tau)
    gs_hat_sq = grad_inner_vel(u_hat, u_hat, trace1, trace1)
    res_energy = (K_next + theta * Q1 ** 2) - (K_n + theta * state.Q ** 2) \
        + nu * tau * gs_hat_sq
    diff1 = VelocityField(g, u1.u - u_hat1.u, u1.v - u_hat1.v)
    proj_lhs = inner_vel(diff1, diff1)
    proj_rhs = tau ** 2 * grad_norm_pressure(phi1) ** 2
    div_inf = float(np.max(np.abs(divergence(u_next).values)))

    diag = StepDiagnostics(
        step=step_index, t=t1, Q=Q1, K=K_next,
        E_mod=energy_modified(K_next, Q1, theta),
        quad=quad, div_inf=div_inf,
        identity_residuals={
            "proj1": abs(proj_lhs - proj_rhs),
            "energy": res_energy,
            "quad_root": abs(A * Q1 ** 2 + B * Q1 + C),
        },
        solver_reports=[rep1, rep2, rep3, rep4],
    )

    if cfg.assert_invariants:
        _check_common(cfg, diag, u_next, proj_lhs, proj_rhs)
        energy_regime = (forcing is None and trace1.is_homogeneous()
                         and state.u.effective_trace().is_homogeneous())
        if energy_regime:
            scale = K_n + theta * max(state.Q ** 2, 1.0)
            tol = cfg.invariant_rel_tol * scale
            if C >= 0.0:
                raise InvariantViolation(f"C = {C!r} not negative with f=0, no-slip walls", diag)
            if abs(C - C_cross) > cfg.invariant_rel_tol * (abs(C) + 2.0 * theta):
                raise InvariantViolation(
                    f"C crosscheck off: C={C!r}, crosscheck={C_cross!r}", diag)
            if abs(res_energy) > tol:
                raise InvariantViolation(
                    f"energy balance residual {res_energy!r} exceeds {tol!r}", diag)

    new_state = State(t1, u_next, p_next, Q1)
    new_ws = StepWorkspace(u_hat1, u_hat2, u1, u2, p1, p2, u_hat, phi1)
    return new_state, diag, new_ws


def _check_common(cfg: SchemeConfig, diag: StepDiagnostics, u_next: VelocityField,
                  proj_lhs: float, proj_rhs: float) -> None:
    if diag.quad is not None and not diag.quad.A > 0.0:
        raise InvariantViolation(f"quadratic coefficient A={diag.quad.A!r} not positive", diag)
    bound = _div_inf_bound(cfg, u_next)
    if diag.div_inf > bound:
        raise InvariantViolation(
            f"divergence {diag.div_inf!r} above tolerance {bound!r}", diag)
    scale = max(proj_lhs, proj_rhs)
    if diag.identity_residuals["proj1"] > cfg.invariant_rel_tol * scale + 1e-300:
        raise InvariantViolation(
            f"projection identity residual {diag.identity_residuals['proj1']!r} "
            f"exceeds {cfg.invariant_rel_tol * scale!r}", diag)


def step_baseline_pc(state: State, cfg: SchemeConfig, bc=None, forcing=None,
                     ws: StepWorkspace | None = None,
                     step_index: int = 0) -> tuple[State, StepDiagnostics, StepWorkspace]:
    """Plain incremental pressure correction (Q fixed at 1), explicit convection."""
    g = state.u.grid
    tau, theta, nu = cfg.tau, cfg.theta, cfg.nu
    t1 = state.t + tau
    trace1 = _resolve_trace(bc, g, t1)
    f1 = _sample_forcing(forcing, g, t1)

    gp = gradient(state.p)
    rhs_u = state.u.u / tau - gp.u
    rhs_v = state.u.v / tau - gp.v
    if cfg.include_convection:
        conv = convect(state.u)
        rhs_u = rhs_u - conv.u
        rhs_v = rhs_v - conv.v
    if f1 is not None:
        rhs_u = rhs_u + f1.u
        rhs_v = rhs_v + f1.v
    u_hat, rep1 = helmholtz_solve(
        1.0 / tau, nu, VelocityField(g, rhs_u, rhs_v), trace1, cfg.solver,
        x0=ws.u_hat1 if ws is not None else None)

    u_next, phi, rep2 = _projection_step(u_hat, 1.0 / tau, cfg,
                                         ws.phi1 if ws is not None else None)
    u_next = replace(u_next, trace=trace1)
    p_next = ScalarField(g, state.p.values + phi.values).recentered()

    K_n = energy_K(state.u, state.p, tau)
    K_next = energy_K(u_next, p_next, tau)
    gs_hat_sq = grad_inner_vel(u_hat, u_hat, trace1, trace1)
    dhat = VelocityField(g, u_hat.u - state.u.u, u_hat.v - state.u.v)
    res_energy = K_next - K_n + nu * tau * gs_hat_sq + 0.5 * inner_vel(dhat, dhat)
    diff1 = VelocityField(g, u_next.u - u_hat.u, u_next.v - u_hat.v)
    proj_lhs = inner_vel(diff1, diff1)
    proj_rhs = tau ** 2 * grad_norm_pressure(phi) ** 2
    div_inf = float(np.max(np.abs(divergence(u_next).values)))

    diag = StepDiagnostics(
        step=step_index, t=t1, Q=1.0, K=K_next,
        E_mod=energy_modified(K_next, 1.0, theta),
        quad=None, div_inf=div_inf,
        identity_residuals={
            "proj1": abs(proj_lhs - proj_rhs),
            "energy": res_energy,
        },
        solver_reports=[rep1, rep2],
    )

    if cfg.assert_invariants:
        _check_common(cfg, diag, u_next, proj_lhs, proj_rhs)
        energy_regime = (forcing is None and not cfg.include_convection
                         and trace1.is_homogeneous()
                         and state.u.effective_trace().is_homogeneous())
        if energy_regime:
            tol = cfg.invariant_rel_tol * (K_n + 1.0)
            if abs(res_energy) > tol:
                raise InvariantViolation(
                    f"baseline energy law residual {res_energy!r} exceeds {tol!r}", diag)

    new_state = State(t1, u_next, p_next, 1.0)
    new_ws = StepWorkspace(u_hat, None, u_next, None, p_next, None, u_hat, phi)
    return new_state, diag, new_ws


def step_pdrlm2(state_n: State, state_nm1: State, cfg: SchemeConfig, bc=None,
                forcing=None, ws: StepWorkspace | None = None,
                step_index: int = 0) -> tuple[State, StepDiagnostics, StepWorkspace]:
    """One BDF2 step of the regularized scheme with rotational pressure update.

    Requires two consecutive states at spacing tau; bootstrap the first step
    with step_pdrlm1 (see march).
    """
    g = state_n.u.grid
    tau, theta, nu = cfg.tau, cfg.theta, cfg.nu
    beta = 1.5 / tau  # BDF2 leading weight 3/(2 tau)
    t1 = state_n.t + tau
    trace1 = _resolve_trace(bc, g, t1)
    hom = BoundaryTrace.homogeneous(g)
    f1 = _sample_forcing(forcing, g, t1)

    # Branch 1: BDF2 history and old pressure gradient, physical bc.
    gp = gradient(state_n.p)
    rhs1_u = (4.0 * state_n.u.u - state_nm1.u.u) / (2.0 * tau) - gp.u
    rhs1_v = (4.0 * state_n.u.v - state_nm1.u.v) / (2.0 * tau) - gp.v
    if f1 is not None:
        rhs1_u = rhs1_u + f1.u
        rhs1_v = rhs1_v + f1.v
    u_hat1, rep1 = helmholtz_solve(
        beta, nu, VelocityField(g, rhs1_u, rhs1_v), trace1, cfg.solver,
        x0=ws.u_hat1 if ws is not None else None)

    # Branch 2: extrapolated convection carrier, homogeneous bc.
    tr_n = state_n.u.effective_trace()
    tr_nm1 = state_nm1.u.effective_trace()
    tr_tilde = tr_n.combine(2.0, tr_nm1, -1.0)
    u_tilde = state_n.u.combine(2.0, state_nm1.u, -1.0, trace=tr_tilde)
    conv = advect(u_tilde, u_tilde, tr_tilde)
    u_hat2, rep2 = helmholtz_solve(
        beta, nu, VelocityField(g, -conv.u, -conv.v), hom, cfg.solver,
        x0=ws.u_hat2 if ws is not None else None)

    # Rotational projections: p1 = p^n + phi1 - nu*div(u_hat1), p2 = phi2 - nu*div(u_hat2).
    u1, phi1, rep3 = _projection_step(u_hat1, beta, cfg,
                                      ws.phi1 if ws is not None else None)
    p1 = ScalarField(
        g, state_n.p.values + phi1.values - nu * divergence(u_hat1).values).recentered()
    u2, phi2, rep4 = _projection_step(u_hat2, beta, cfg,
                                      ws.p2 if ws is not None else None)
    p2 = ScalarField(g, phi2.values - nu * divergence(u_hat2).values)

    # Quadratic from the BDF2 energy relation.
    K_n = energy_K(state_n.u, state_n.p, tau)
    K_nm1 = energy_K(state_nm1.u, state_nm1.p, tau)
    gp1_sq = grad_norm_pressure(p1) ** 2
    gp2_sq = grad_norm_pressure(p2) ** 2
    gp12 = inner_vel(gradient(p1), gradient(p2))
    gs1_sq = grad_inner_vel(u_hat1, u_hat1, trace1, trace1)
    gs2_sq = grad_inner_vel(u_hat2, u_hat2, hom, hom)
    gs12 = grad_inner_vel(u_hat1, u_hat2, trace1, hom)

    A = 1.5 * (inner_vel(u2, u2) + tau ** 2 * gp2_sq) + 3.0 * theta \
        + 2.0 * tau * nu * gs2_sq
    B = 3.0 * (inner_vel(u1, u2) + tau ** 2 * gp12) + 4.0 * tau * nu * gs12
    C = 1.5 * (inner_vel(u1, u1) + tau ** 2 * gp1_sq) + 2.0 * tau * nu * gs1_sq \
        - 4.0 * K_n + K_nm1 - 4.0 * theta * state_n.Q ** 2 + theta * state_nm1.Q ** 2

    quad = QuadraticCoefficients(A, B, C, math.nan)
    Q1 = solve_multiplier_quadratic(A, B, C, state_n.Q)

    u_next = u1.combine(1.0, u2, Q1, trace=trace1)
    p_next = ScalarField(g, p1.values + Q1 * p2.values).recentered()
    u_hat = u_hat1.combine(1.0, u_hat2, Q1, trace=trace1)

    K_next = energy_K(u_next, p_next, tau)
    gs_hat_sq = grad_inner_vel(u_hat, u_hat, trace1, trace1)
    # BDF2 balance: 3K(n+1) - 4K(n) + K(n-1) + theta*(3Q1^2 - 4Qn^2 + Qnm1^2)
    #               + 2 tau nu |grad uhat|^2 = 0
    res_energy = 3.0 * K_next - 4.0 * K_n + K_nm1 \
        + theta * (3.0 * Q1 ** 2 - 4.0 * state_n.Q ** 2 + state_nm1.Q ** 2) \
        + 2.0 * tau * nu * gs_hat_sq
    diff1 = VelocityField(g, u1.u - u_hat1.u, u1.v - u_hat1.v)
    proj_lhs = inner_vel(diff1, diff1)
    proj_rhs = grad_norm_pressure(phi1) ** 2 / beta ** 2
    div_inf = float(np.max(np.abs(divergence(u_next).values)))

    diag = StepDiagnostics(
        step=step_index, t=t1, Q=Q1, K=K_next,
        E_mod=energy_modified(K_next, Q1, theta),
        quad=quad, div_inf=div_inf,
        identity_residuals={
            "proj1": abs(proj_lhs - proj_rhs),
            "energy": res_energy,
            "quad_root": abs(A * Q1 ** 2 + B * Q1 + C),
        },
        solver_reports=[rep1, rep2, rep3, rep4],
    )

    if cfg.assert_invariants:
        _check_common(cfg, diag, u_next, proj_lhs, proj_rhs)
        energy_regime = (forcing is None and trace1.is_homogeneous()
                         and tr_n.is_homogeneous() and tr_nm1.is_homogeneous())
        if energy_regime:
            scale = K_n + K_nm1 + theta * max(state_n.Q ** 2, state_nm1.Q ** 2, 1.0)
            if abs(res_energy) > cfg.invariant_rel_tol * scale:
                raise InvariantViolation(
                    f"BDF2 energy balance residual {res_energy!r} exceeds tolerance", diag)

    new_state = State(t1, u_next, p_next, Q1)
    new_ws = StepWorkspace(u_hat1, u_hat2, u1, u2, p1, p2, u_hat, phi1)
    return new_state, diag, new_ws


def march(state0: State, cfg: SchemeConfig, n_steps: int, bc=None, forcing=None,
          on_step=None) -> tuple[State, list[StepDiagnostics]]:
    """Advance n_steps from state0; returns the final state and all diagnostics.

    For the BDF2 scheme the first step is computed with the first-order
    stepper and the multiplier is reset to 1 before continuing.
    """
    diags: list[StepDiagnostics] = []
    ws: StepWorkspace | None = None
    state = state0

    try:
        if cfg.scheme_kind == "pdrlm2":
            prev = state0
            for k in range(n_steps):
                if k == 0:
                    state, diag, ws = step_pdrlm1(state0, cfg, bc, forcing, ws, step_index=1)
                    state = State(state.t, state.u, state.p, 1.0)
                else:
                    next_state, diag, ws = step_pdrlm2(state, prev, cfg, bc, forcing, ws,
                                                       step_index=k + 1)
                    prev = state
                    state = next_state
                diags.append(diag)
                if on_step is not None:
                    on_step(k + 1, state, diag)
            return state, diags

        step_fn = step_pdrlm1 if cfg.scheme_kind == "pdrlm1" else step_baseline_pc
        for k in range(n_steps):
            state, diag, ws = step_fn(state, cfg, bc, forcing, ws, step_index=k + 1)
            diags.append(diag)
            if on_step is not None:
                on_step(k + 1, state, diag)
        return state, diags
    except Exception as exc:
        # aborts surface with the history of the steps that did complete
        exc.completed_diagnostics = diags  # type: ignore[attr-defined]
        raise


def project_divergence_free(vel: VelocityField, cfg: SolverConfig | None = None) -> VelocityField:
    """Project a velocity field onto the discretely divergence-free subspace
    (one Neumann Poisson solve); boundary-normal faces are left untouched."""
    psi, _ = poisson_neumann_solve(
        ScalarField(vel.grid, -divergence(vel).values), cfg)
    return vel.combine(1.0, gradient(psi), -1.0, trace=vel.trace)
