"""Dense-matrix oracle for one step of the first-order regularized scheme.

Every linear operator is assembled as an explicit dense matrix by probing
the stencil kernels with unit vectors, all solves are exact (numpy.linalg),
and the step algebra is written out independently of the production stepper.
Comparing against the modular pipeline validates the iterative solvers, the
coefficient assembly, and the recombination in one shot.  Desk-size grids
only (cost grows like the square of the unknown count).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convection import convect
from .grid import (
    BoundaryTrace,
    ScalarField,
    VelocityField,
    divergence,
    grad_inner_vel,
    gradient,
    laplacian_velocity,
)
from .stepper import SchemeConfig, State

__all__ = ["DenseStepResult", "dense_pdrlm1_step"]


@dataclass
class DenseStepResult:
    u: np.ndarray          # full u-face array
    v: np.ndarray          # full v-face array
    p: np.ndarray          # cell array, zero mean
    Q: float
    A: float
    B: float
    C: float


def _probe_matrix(apply_fn, in_size: int, out_size: int) -> np.ndarray:
    m = np.zeros((out_size, in_size))
    e = np.zeros(in_size)
    for k in range(in_size):
        e[k] = 1.0
        m[:, k] = apply_fn(e)
        e[k] = 0.0
    return m


def _probe_bilinear(form_fn, size: int) -> np.ndarray:
    s = np.zeros((size, size))
    ei = np.zeros(size)
    ej = np.zeros(size)
    for i in range(size):
        ei[i] = 1.0
        for j in range(size):
            ej[j] = 1.0
            s[i, j] = form_fn(ei, ej)
            ej[j] = 0.0
        ei[i] = 0.0
    return s


def dense_pdrlm1_step(state: State, cfg: SchemeConfig) -> DenseStepResult:
    """One homogeneous-bc step from `state`, everything dense and exact."""
    g = state.u.grid
    tau, theta, nu = cfg.tau, cfg.theta, cfg.nu
    hom = BoundaryTrace.homogeneous(g)
    nuu, nvv, nc = (g.nx + 1) * g.ny, g.nx * (g.ny + 1), g.nx * g.ny
    nvel = nuu + nvv

    def split(vec):
        return vec[:nuu].reshape(g.u_shape), vec[nuu:].reshape(g.v_shape)

    def join(u, v):
        return np.concatenate([u.ravel(), v.ravel()])

    def as_field(vec):
        u, v = split(vec)
        return VelocityField(g, u.copy(), v.copy(), hom)

    # Dense operators by probing the stencil kernels.
    div_m = _probe_matrix(
        lambda e: divergence(as_field(e)).values.ravel(), nvel, nc)
    grad_m = _probe_matrix(
        lambda e: (lambda f: join(f.u, f.v))(gradient(ScalarField(g, e.reshape(g.cell_shape)))),
        nc, nvel)
    lap_m = _probe_matrix(
        lambda e: (lambda f: join(f.u, f.v))(laplacian_velocity(as_field(e), hom)),
        nvel, nvel)
    grad_form = _probe_bilinear(
        lambda a, b: grad_inner_vel(as_field(a), as_field(b), hom, hom), nvel)

    # Inner-product weights (control volumes).
    w_vel = join(np.asarray(g.u_weights), np.asarray(g.v_weights))
    w_cell = np.full(nc, g.cell_volume)

    def ip(a, b):
        return float(np.sum(w_vel * a * b))

    # Interior-unknown selection masks for the stencil systems.
    u_mask = np.zeros(g.u_shape, dtype=bool)
    u_mask[1:-1, :] = True
    v_mask = np.zeros(g.v_shape, dtype=bool)
    v_mask[:, 1:-1] = True
    free = np.concatenate([u_mask.ravel(), v_mask.ravel()])

    # Dense Helmholtz on the interior unknowns (homogeneous walls).
    helm = (np.eye(nvel) / tau - nu * lap_m)[np.ix_(free, free)]

    def helmholtz(rhs_vec):
        x = np.zeros(nvel)
        x[free] = np.linalg.solve(helm, rhs_vec[free])
        return x

    # Dense Neumann Poisson via the KKT system [L, 1; 1^T, 0].
    neum = -div_m @ grad_m  # cell-centered -laplacian with Neumann ghosts
    kkt = np.zeros((nc + 1, nc + 1))
    kkt[:nc, :nc] = neum
    kkt[:nc, nc] = 1.0
    kkt[nc, :nc] = 1.0

    def poisson(rhs_vec):
        b = np.concatenate([rhs_vec - np.mean(rhs_vec), [0.0]])
        return np.linalg.solve(kkt, b)[:nc]

    # --- the step, spelled out ---
    un = join(state.u.u, state.u.v)
    pn = state.p.values.ravel()
    Qn = state.Q

    rhs1 = un / tau - grad_m @ pn
    uhat1 = helmholtz(rhs1)

    conv = convect(state.u)
    uhat2 = helmholtz(-join(conv.u, conv.v))

    phi1 = poisson(-(div_m @ uhat1) / tau)
    p1 = pn + phi1
    p1 -= np.mean(p1)
    u1 = uhat1 - tau * (grad_m @ phi1)

    p2 = poisson(-(div_m @ uhat2) / tau)
    u2 = uhat2 - tau * (grad_m @ p2)

    def gp_sq(p_vec):
        gp = grad_m @ p_vec
        return ip(gp, gp)

    A = ip(u2, u2) + 2.0 * theta + tau ** 2 * gp_sq(p2) \
        + 2.0 * tau * nu * float(uhat2 @ grad_form @ uhat2)
    B = 2.0 * ip(u1, u2) + 2.0 * tau ** 2 * ip(grad_m @ p1, grad_m @ p2) \
        + 4.0 * nu * tau * float(uhat1 @ grad_form @ uhat2)
    C = ip(u1, u1) - ip(un, un) + tau ** 2 * (gp_sq(p1) - gp_sq(pn)) \
        - 2.0 * theta * Qn ** 2 + 2.0 * tau * nu * float(uhat1 @ grad_form @ uhat1)

    disc = B * B - 4.0 * A * C
    q = -0.5 * (B + np.copysign(np.sqrt(disc), B if B != 0.0 else 1.0))
    r1, r2 = q / A, C / q
    Q1 = r1 if r1 > 0.0 else r2

    u_next = u1 + Q1 * u2
    p_next = p1 + Q1 * p2
    p_next -= np.mean(p_next)

    uf, vf = split(u_next)
    return DenseStepResult(u=uf.copy(), v=vf.copy(), p=p_next.reshape(g.cell_shape),
                           Q=float(Q1), A=A, B=B, C=C)
