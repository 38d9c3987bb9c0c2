"""Explicit advection on the MAC grid.

The advective form (carrier . grad) transported is evaluated at interior
faces with centered differences; the cross-component carrier value is the
4-point average onto the face.  Stencils touching a tangential wall use the
reflected ghost built from the transported field's Dirichlet trace, which
degenerates to a first-order one-sided difference through the wall value.
Boundary-normal faces of the output are zero (they are Dirichlet slots).
"""

from __future__ import annotations

import numpy as np

from .grid import (
    BoundaryTrace,
    VelocityField,
    _u_with_ghosts,
    _v_with_ghosts,
    inner_vel,
)

__all__ = ["advect", "convect", "trilinear_b"]


def advect(carrier: VelocityField, transported: VelocityField,
           trace: BoundaryTrace | None = None) -> VelocityField:
    """(carrier . grad) transported at interior faces."""
    if carrier.grid != transported.grid:
        raise ValueError("fields live on different grids")
    g = carrier.grid
    tr = trace if trace is not None else transported.effective_trace()
    cu, cv = carrier.u, carrier.v
    tu, tv = transported.u, transported.v

    out_u = np.zeros(g.u_shape)
    out_v = np.zeros(g.v_shape)

    # u faces i = 1..nx-1: u*du/dx + vbar*du/dy
    du_dx = (tu[2:, :] - tu[:-2, :]) / (2.0 * g.hx)
    ue = _u_with_ghosts(tu, tr)
    du_dy = (ue[1:-1, 2:] - ue[1:-1, :-2]) / (2.0 * g.hy)
    vbar = 0.25 * (cv[:-1, :-1] + cv[1:, :-1] + cv[:-1, 1:] + cv[1:, 1:])
    out_u[1:-1, :] = cu[1:-1, :] * du_dx + vbar * du_dy

    # v faces j = 1..ny-1: ubar*dv/dx + v*dv/dy
    dv_dy = (tv[:, 2:] - tv[:, :-2]) / (2.0 * g.hy)
    ve = _v_with_ghosts(tv, tr)
    dv_dx = (ve[2:, 1:-1] - ve[:-2, 1:-1]) / (2.0 * g.hx)
    ubar = 0.25 * (cu[:-1, :-1] + cu[1:, :-1] + cu[:-1, 1:] + cu[1:, 1:])
    out_v[:, 1:-1] = ubar * dv_dx + cv[:, 1:-1] * dv_dy

    return VelocityField(g, out_u, out_v)


def convect(vel: VelocityField, trace: BoundaryTrace | None = None) -> VelocityField:
    """Self-advection (vel . grad) vel."""
    return advect(vel, vel, trace)


def trilinear_b(u: VelocityField, v: VelocityField, w: VelocityField,
                trace_v: BoundaryTrace | None = None) -> float:
    """Diagnostic trilinear form: inner product of (u . grad) v with w."""
    return inner_vel(advect(u, v, trace_v), w)
