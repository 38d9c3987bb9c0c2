"""Conjugate-gradient solvers for the two elliptic systems of each time step.

Both systems are solved by Jacobi-preconditioned CG with residual smoothing
(minimal residual smoothing over consecutive iterates), so the reported
residual norms are non-increasing and the returned iterate honestly satisfies
the convergence contract.  The iteration loop is compiled (numba) with
sequential, fixed-order reductions, so identical inputs reproduce
bit-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._cg_kernels import KIND_HELM_U, KIND_HELM_V, KIND_NEUMANN, cg_smoothed
from .grid import (
    BoundaryTrace,
    Grid,
    ScalarField,
    VelocityField,
    laplacian_velocity,
)

__all__ = [
    "SolverConfig",
    "SolveReport",
    "SolverError",
    "helmholtz_solve",
    "poisson_neumann_solve",
    "neumann_laplacian_apply",
]


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_iter: int | None = None  # default 10*(nx+ny), resolved per solve
    track_history: bool = False

    def __post_init__(self) -> None:
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be nonnegative")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")

    def resolve_max_iter(self, grid: Grid) -> int:
        return self.max_iter if self.max_iter is not None else 10 * (grid.nx + grid.ny)


@dataclass
class SolveReport:
    iterations: int
    final_residual: float
    converged: bool
    compatibility_warning: bool = False
    # one residual-norm sequence per CG run (two for a velocity solve)
    residual_histories: list[list[float]] | None = field(default=None, repr=False)

    def merged_with(self, other: "SolveReport") -> "SolveReport":
        hist = None
        if self.residual_histories is not None or other.residual_histories is not None:
            hist = (self.residual_histories or []) + (other.residual_histories or [])
        return SolveReport(
            iterations=self.iterations + other.iterations,
            final_residual=max(self.final_residual, other.final_residual),
            converged=self.converged and other.converged,
            compatibility_warning=self.compatibility_warning or other.compatibility_warning,
            residual_histories=hist,
        )


class SolverError(RuntimeError):
    """Iterative solve failed to converge; carries the SolveReport."""

    def __init__(self, message: str, report: SolveReport):
        super().__init__(f"{message} (iters={report.iterations}, residual={report.final_residual:.3e})")
        self.report = report


def _norm(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(a * a)))


def _run_cg(kind: int, b: np.ndarray, x0: np.ndarray, inv_diag: np.ndarray,
            alpha: float, nu: float, grid: Grid, cfg: SolverConfig, max_iter: int):
    y, iters, res, converged, history, hist_len = cg_smoothed(
        kind, np.ascontiguousarray(b), np.ascontiguousarray(x0),
        np.ascontiguousarray(inv_diag), alpha, nu,
        1.0 / grid.hx ** 2, 1.0 / grid.hy ** 2,
        cfg.rel_tol, cfg.abs_tol, max_iter, cfg.track_history)
    hist = [[float(h) for h in history[:hist_len]]] if cfg.track_history else None
    return y, int(iters), float(res), bool(converged), hist


# ----------------------------------------------------------------------
# Velocity Helmholtz solve: (alpha*I - nu*lap) x = rhs, Dirichlet bc
# ----------------------------------------------------------------------

def helmholtz_solve(alpha: float, nu: float, rhs: VelocityField, trace: BoundaryTrace,
                    cfg: SolverConfig | None = None,
                    x0: VelocityField | None = None) -> tuple[VelocityField, SolveReport]:
    """Solve (alpha*I - nu*lap) x = rhs at interior faces, Dirichlet data imposed.

    The interior operator (with the reflected-ghost tangential convention) is
    SPD; inhomogeneous boundary data is folded into the right-hand side.
    Raises SolverError on non-convergence.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    cfg = cfg or SolverConfig()
    g = rhs.grid
    max_iter = cfg.resolve_max_iter(g)
    ihx2, ihy2 = 1.0 / g.hx ** 2, 1.0 / g.hy ** 2

    # Laplacian of the boundary-data-only field (zero interior), per component.
    bc_field = VelocityField.zeros(g)
    bc_field.u[0, :] = trace.u_left
    bc_field.u[-1, :] = trace.u_right
    bc_field.v[:, 0] = trace.v_bottom
    bc_field.v[:, -1] = trace.v_top
    lap_bc = laplacian_velocity(bc_field, trace)

    # u component: unknowns at faces i = 1..nx-1.
    diag_u = np.full((g.nx - 1, g.ny), alpha + nu * (2.0 * ihx2 + 2.0 * ihy2))
    diag_u[:, 0] += nu * ihy2
    diag_u[:, -1] += nu * ihy2
    b_u = rhs.u[1:-1, :] + nu * lap_bc.u[1:-1, :]
    x0_u = x0.u[1:-1, :] if x0 is not None else np.zeros_like(b_u)
    xu, it_u, res_u, ok_u, hist_u = _run_cg(
        KIND_HELM_U, b_u, x0_u, 1.0 / diag_u, alpha, nu, g, cfg, max_iter)

    # v component: unknowns at faces j = 1..ny-1.
    diag_v = np.full((g.nx, g.ny - 1), alpha + nu * (2.0 * ihx2 + 2.0 * ihy2))
    diag_v[0, :] += nu * ihx2
    diag_v[-1, :] += nu * ihx2
    b_v = rhs.v[:, 1:-1] + nu * lap_bc.v[:, 1:-1]
    x0_v = x0.v[:, 1:-1] if x0 is not None else np.zeros_like(b_v)
    xv, it_v, res_v, ok_v, hist_v = _run_cg(
        KIND_HELM_V, b_v, x0_v, 1.0 / diag_v, alpha, nu, g, cfg, max_iter)

    report = SolveReport(it_u, res_u, ok_u, residual_histories=hist_u).merged_with(
        SolveReport(it_v, res_v, ok_v, residual_histories=hist_v))
    if not report.converged:
        raise SolverError("Helmholtz solve did not converge", report)

    out = VelocityField.zeros(g, trace)
    out.u[1:-1, :] = xu
    out.u[0, :] = trace.u_left
    out.u[-1, :] = trace.u_right
    out.v[:, 1:-1] = xv
    out.v[:, 0] = trace.v_bottom
    out.v[:, -1] = trace.v_top
    return out, report


# ----------------------------------------------------------------------
# Cell-centered pure-Neumann Poisson solve: -lap phi = rhs, zero mean
# ----------------------------------------------------------------------

def neumann_laplacian_apply(s: np.ndarray, grid: Grid) -> np.ndarray:
    """-lap with homogeneous Neumann ghosts; equals -divergence(gradient(.))."""
    ihx2, ihy2 = 1.0 / grid.hx ** 2, 1.0 / grid.hy ** 2
    out = np.zeros_like(s)
    out[1:-1, :] += (2.0 * s[1:-1, :] - s[2:, :] - s[:-2, :]) * ihx2
    out[0, :] += (s[0, :] - s[1, :]) * ihx2
    out[-1, :] += (s[-1, :] - s[-2, :]) * ihx2
    out[:, 1:-1] += (2.0 * s[:, 1:-1] - s[:, 2:] - s[:, :-2]) * ihy2
    out[:, 0] += (s[:, 0] - s[:, 1]) * ihy2
    out[:, -1] += (s[:, -1] - s[:, -2]) * ihy2
    return out


def poisson_neumann_solve(rhs: ScalarField, cfg: SolverConfig | None = None,
                          x0: ScalarField | None = None) -> tuple[ScalarField, SolveReport]:
    """Solve -lap phi = rhs with pure Neumann bc on the zero-mean subspace.

    The right-hand side is projected to zero mean first (a compatibility
    warning is flagged when its mean is significant relative to its norm,
    signalling boundary-flux imbalance in the caller's data); iterates are
    re-projected each iteration and the returned phi has zero mean.
    """
    cfg = cfg or SolverConfig()
    g = rhs.grid
    max_iter = cfg.resolve_max_iter(g)
    ihx2, ihy2 = 1.0 / g.hx ** 2, 1.0 / g.hy ** 2

    b = rhs.values.copy()
    mean = float(np.mean(b))
    rhs_l2 = float(np.sqrt(g.cell_volume)) * _norm(b)
    warn = rhs_l2 > 0.0 and abs(mean) > 1e-6 * rhs_l2
    b -= mean

    diag = np.full(g.cell_shape, 2.0 * ihx2 + 2.0 * ihy2)
    diag[0, :] -= ihx2
    diag[-1, :] -= ihx2
    diag[:, 0] -= ihy2
    diag[:, -1] -= ihy2

    x0v = np.zeros(g.cell_shape) if x0 is None else (x0.values - np.mean(x0.values))
    x, iters, res, ok, hist = _run_cg(
        KIND_NEUMANN, b, x0v, 1.0 / diag, 0.0, 0.0, g, cfg, max_iter)
    report = SolveReport(iters, res, ok, compatibility_warning=warn, residual_histories=hist)
    if not ok:
        raise SolverError("Neumann Poisson solve did not converge", report)
    return ScalarField(g, x - np.mean(x)), report
