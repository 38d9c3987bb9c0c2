"""MAC staggered-grid fields and difference operators on a rectangle.

Layout for an nx-by-ny cell grid on [x0, x1] x [y0, y1] (axis 0 is x):

    u[i, j]  x-velocity on vertical faces,   shape (nx+1, ny)
             located at x = x0 + i*hx, y = y0 + (j+1/2)*hy
    v[i, j]  y-velocity on horizontal faces, shape (nx, ny+1)
             located at x = x0 + (i+1/2)*hx, y = y0 + j*hy
    s[i, j]  scalars on cell centers,        shape (nx, ny)

Boundary-normal faces (u at i in {0, nx}, v at j in {0, ny}) lie exactly on
the boundary and store Dirichlet data directly.  Tangential boundary values
(u along y = y0/y1, v along x = x0/x1) are imposed through reflected ghost
values, ghost = 2*g - interior.

Inner products weight each face by its control volume (hx*hy, halved on the
boundary-normal faces), which makes

  * the discrete gradient and divergence exact negative adjoints for
    velocity fields with zero normal trace, and
  * (-lap(w), w) = grad_seminorm(w)**2 exact for homogeneous-Dirichlet w,

both to rounding.  Every conservation check in the time steppers rests on
these two identities, so treat the stencils, ghost convention, and weights
here as one consistent unit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "BoundaryTrace",
    "VelocityField",
    "ScalarField",
    "divergence",
    "gradient",
    "laplacian_velocity",
    "inner_vel",
    "norm_vel",
    "inner_cell",
    "norm_cell",
    "grad_inner_vel",
    "grad_seminorm_vel",
    "grad_norm_pressure",
]


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular MAC grid."""

    nx: int
    ny: int
    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0

    def __post_init__(self) -> None:
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"need nx, ny >= 2, got {self.nx} x {self.ny}")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("domain extents must be increasing")

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / self.nx

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / self.ny

    @property
    def min_h(self) -> float:
        return min(self.hx, self.hy)

    @property
    def cell_volume(self) -> float:
        return self.hx * self.hy

    @property
    def u_shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny)

    @property
    def v_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny + 1)

    @property
    def cell_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    # Coordinate arrays (1d) for each storage location.
    @cached_property
    def x_face(self) -> np.ndarray:
        return self.x0 + self.hx * np.arange(self.nx + 1)

    @cached_property
    def x_center(self) -> np.ndarray:
        return self.x0 + self.hx * (np.arange(self.nx) + 0.5)

    @cached_property
    def y_face(self) -> np.ndarray:
        return self.y0 + self.hy * np.arange(self.ny + 1)

    @cached_property
    def y_center(self) -> np.ndarray:
        return self.y0 + self.hy * (np.arange(self.ny) + 0.5)

    def u_coords(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_face, self.y_center, indexing="ij")

    def v_coords(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_center, self.y_face, indexing="ij")

    def cell_coords(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_center, self.y_center, indexing="ij")

    # Control-volume weights for the face inner products.
    @cached_property
    def u_weights(self) -> np.ndarray:
        w = np.full(self.u_shape, self.cell_volume)
        w[0, :] *= 0.5
        w[-1, :] *= 0.5
        w.setflags(write=False)
        return w

    @cached_property
    def v_weights(self) -> np.ndarray:
        w = np.full(self.v_shape, self.cell_volume)
        w[:, 0] *= 0.5
        w[:, -1] *= 0.5
        w.setflags(write=False)
        return w


@dataclass(frozen=True)
class BoundaryTrace:
    """Dirichlet boundary data for one time level, sampled where it is used.

    Normal components are sampled on the boundary faces they occupy; the
    tangential components are sampled at the wall positions that back the
    ghost reflection (u along the bottom/top walls at the u-face abscissae,
    v along the left/right walls at the v-face ordinates).
    """

    u_left: np.ndarray    # (ny,)   u(x0, y_center)
    u_right: np.ndarray   # (ny,)   u(x1, y_center)
    u_bottom: np.ndarray  # (nx+1,) u(x_face, y0)
    u_top: np.ndarray     # (nx+1,) u(x_face, y1)
    v_bottom: np.ndarray  # (nx,)   v(x_center, y0)
    v_top: np.ndarray     # (nx,)   v(x_center, y1)
    v_left: np.ndarray    # (ny+1,) v(x0, y_face)
    v_right: np.ndarray   # (ny+1,) v(x1, y_face)

    @staticmethod
    def homogeneous(grid: Grid) -> "BoundaryTrace":
        return BoundaryTrace(
            u_left=np.zeros(grid.ny),
            u_right=np.zeros(grid.ny),
            u_bottom=np.zeros(grid.nx + 1),
            u_top=np.zeros(grid.nx + 1),
            v_bottom=np.zeros(grid.nx),
            v_top=np.zeros(grid.nx),
            v_left=np.zeros(grid.ny + 1),
            v_right=np.zeros(grid.ny + 1),
        )

    @staticmethod
    def from_functions(grid: Grid, u_fn, v_fn, t: float) -> "BoundaryTrace":
        """Sample callables u_fn(x, y, t), v_fn(x, y, t) on the boundary."""
        xf, xc = grid.x_face, grid.x_center
        yf, yc = grid.y_face, grid.y_center
        return BoundaryTrace(
            u_left=np.asarray(u_fn(grid.x0, yc, t), dtype=float) * np.ones(grid.ny),
            u_right=np.asarray(u_fn(grid.x1, yc, t), dtype=float) * np.ones(grid.ny),
            u_bottom=np.asarray(u_fn(xf, grid.y0, t), dtype=float) * np.ones(grid.nx + 1),
            u_top=np.asarray(u_fn(xf, grid.y1, t), dtype=float) * np.ones(grid.nx + 1),
            v_bottom=np.asarray(v_fn(xc, grid.y0, t), dtype=float) * np.ones(grid.nx),
            v_top=np.asarray(v_fn(xc, grid.y1, t), dtype=float) * np.ones(grid.nx),
            v_left=np.asarray(v_fn(grid.x0, yf, t), dtype=float) * np.ones(grid.ny + 1),
            v_right=np.asarray(v_fn(grid.x1, yf, t), dtype=float) * np.ones(grid.ny + 1),
        )

    @staticmethod
    def lid(grid: Grid, speed: float = 1.0) -> "BoundaryTrace":
        """No-slip box with a tangentially moving top wall."""
        tr = BoundaryTrace.homogeneous(grid)
        return replace(tr, u_top=np.full(grid.nx + 1, float(speed)))

    def is_homogeneous(self, tol: float = 0.0) -> bool:
        return all(
            np.all(np.abs(a) <= tol)
            for a in (self.u_left, self.u_right, self.u_bottom, self.u_top,
                      self.v_bottom, self.v_top, self.v_left, self.v_right)
        )

    def combine(self, c_self: float, other: "BoundaryTrace", c_other: float) -> "BoundaryTrace":
        """Linear combination c_self*self + c_other*other (for extrapolated data)."""
        return BoundaryTrace(
            *(c_self * a + c_other * b
              for a, b in zip(self._arrays(), other._arrays()))
        )

    def _arrays(self) -> tuple[np.ndarray, ...]:
        return (self.u_left, self.u_right, self.u_bottom, self.u_top,
                self.v_bottom, self.v_top, self.v_left, self.v_right)


def _check_finite(name: str, a: np.ndarray) -> None:
    if not np.all(np.isfinite(a)):
        raise FloatingPointError(f"{name} contains non-finite values")


@dataclass
class VelocityField:
    """Staggered velocity field; `trace` records the Dirichlet data it honors."""

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    trace: BoundaryTrace | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.u.shape != self.grid.u_shape or self.v.shape != self.grid.v_shape:
            raise ValueError(
                f"velocity shapes {self.u.shape}/{self.v.shape} do not match "
                f"grid {self.grid.u_shape}/{self.grid.v_shape}"
            )
        _check_finite("u", self.u)
        _check_finite("v", self.v)

    @staticmethod
    def zeros(grid: Grid, trace: BoundaryTrace | None = None) -> "VelocityField":
        return VelocityField(grid, np.zeros(grid.u_shape), np.zeros(grid.v_shape), trace)

    def effective_trace(self) -> BoundaryTrace:
        return self.trace if self.trace is not None else BoundaryTrace.homogeneous(self.grid)

    def copy(self) -> "VelocityField":
        return VelocityField(self.grid, self.u.copy(), self.v.copy(), self.trace)

    def combine(self, c_self: float, other: "VelocityField", c_other: float,
                trace: BoundaryTrace | None = None) -> "VelocityField":
        return VelocityField(
            self.grid,
            c_self * self.u + c_other * other.u,
            c_self * self.v + c_other * other.v,
            trace,
        )

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(self.u))), float(np.max(np.abs(self.v))))


@dataclass
class ScalarField:
    """Cell-centered scalar field (pressure-like)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != self.grid.cell_shape:
            raise ValueError(
                f"scalar shape {self.values.shape} does not match grid {self.grid.cell_shape}"
            )
        _check_finite("scalar", self.values)

    @staticmethod
    def zeros(grid: Grid) -> "ScalarField":
        return ScalarField(grid, np.zeros(grid.cell_shape))

    def mean(self) -> float:
        return float(np.mean(self.values))

    def recentered(self) -> "ScalarField":
        return ScalarField(self.grid, self.values - np.mean(self.values))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


# ----------------------------------------------------------------------
# Difference operators
# ----------------------------------------------------------------------

def divergence(vel: VelocityField) -> ScalarField:
    """Cell-centered divergence; boundary faces enter through the stored values."""
    g = vel.grid
    d = (vel.u[1:, :] - vel.u[:-1, :]) / g.hx + (vel.v[:, 1:] - vel.v[:, :-1]) / g.hy
    return ScalarField(g, d)


def gradient(s: ScalarField) -> VelocityField:
    """Face gradient of a cell scalar; boundary-normal faces carry 0."""
    g = s.grid
    gu = np.zeros(g.u_shape)
    gv = np.zeros(g.v_shape)
    gu[1:-1, :] = (s.values[1:, :] - s.values[:-1, :]) / g.hx
    gv[:, 1:-1] = (s.values[:, 1:] - s.values[:, :-1]) / g.hy
    return VelocityField(g, gu, gv)


def _u_with_ghosts(u: np.ndarray, trace: BoundaryTrace) -> np.ndarray:
    """u extended by one reflected ghost row below and above (shape (nx+1, ny+2))."""
    ext = np.empty((u.shape[0], u.shape[1] + 2))
    ext[:, 1:-1] = u
    ext[:, 0] = 2.0 * trace.u_bottom - u[:, 0]
    ext[:, -1] = 2.0 * trace.u_top - u[:, -1]
    return ext


def _v_with_ghosts(v: np.ndarray, trace: BoundaryTrace) -> np.ndarray:
    """v extended by one reflected ghost column left and right (shape (nx+2, ny+1))."""
    ext = np.empty((v.shape[0] + 2, v.shape[1]))
    ext[1:-1, :] = v
    ext[0, :] = 2.0 * trace.v_left - v[0, :]
    ext[-1, :] = 2.0 * trace.v_right - v[-1, :]
    return ext


def laplacian_velocity(vel: VelocityField, trace: BoundaryTrace | None = None) -> VelocityField:
    """Component-wise 5-point Laplacian at interior faces (boundary rows are 0).

    Tangential Dirichlet data enters via reflected ghosts; normal Dirichlet
    data is read off the stored boundary faces.
    """
    g = vel.grid
    tr = trace if trace is not None else vel.effective_trace()
    ihx2, ihy2 = 1.0 / g.hx ** 2, 1.0 / g.hy ** 2

    ue = _u_with_ghosts(vel.u, tr)
    lu = np.zeros(g.u_shape)
    lu[1:-1, :] = (vel.u[2:, :] - 2.0 * vel.u[1:-1, :] + vel.u[:-2, :]) * ihx2 \
        + (ue[1:-1, 2:] - 2.0 * ue[1:-1, 1:-1] + ue[1:-1, :-2]) * ihy2

    ve = _v_with_ghosts(vel.v, tr)
    lv = np.zeros(g.v_shape)
    lv[:, 1:-1] = (vel.v[:, 2:] - 2.0 * vel.v[:, 1:-1] + vel.v[:, :-2]) * ihy2 \
        + (ve[2:, 1:-1] - 2.0 * ve[1:-1, 1:-1] + ve[:-2, 1:-1]) * ihx2

    return VelocityField(g, lu, lv)


# ----------------------------------------------------------------------
# Inner products and norms
# ----------------------------------------------------------------------

def _require_same_grid(a, b) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def inner_vel(a: VelocityField, b: VelocityField) -> float:
    """Control-volume weighted L2 inner product of two velocity fields."""
    _require_same_grid(a, b)
    g = a.grid
    return float(np.sum(g.u_weights * a.u * b.u) + np.sum(g.v_weights * a.v * b.v))


def norm_vel(a: VelocityField) -> float:
    return float(np.sqrt(inner_vel(a, a)))


def inner_cell(a: ScalarField, b: ScalarField) -> float:
    _require_same_grid(a, b)
    return float(a.grid.cell_volume * np.sum(a.values * b.values))


def norm_cell(a: ScalarField) -> float:
    return float(np.sqrt(inner_cell(a, a)))


def grad_inner_vel(a: VelocityField, b: VelocityField,
                   trace_a: BoundaryTrace | None = None,
                   trace_b: BoundaryTrace | None = None) -> float:
    """Gradient inner product (grad a, grad b), including the ghost-backed wall terms.

    The wall contribution per tangential boundary entry is
    2*(value - trace)/(h) * 2*(value - trace)/(h) * vol / 2, i.e. the
    reflected ghost difference at half weight; with this bookkeeping
    (-laplacian_velocity(w), w) == grad_inner_vel(w, w) exactly for
    homogeneous-Dirichlet w, and the form stays bilinear in (field, trace).
    """
    _require_same_grid(a, b)
    g = a.grid
    ta = trace_a if trace_a is not None else a.effective_trace()
    tb = trace_b if trace_b is not None else b.effective_trace()
    vol = g.cell_volume
    ihx2, ihy2 = 1.0 / g.hx ** 2, 1.0 / g.hy ** 2

    # u component: interior differences...
    total = np.sum(np.diff(a.u, axis=0) * np.diff(b.u, axis=0)) * ihx2
    total += np.sum(np.diff(a.u, axis=1) * np.diff(b.u, axis=1)) * ihy2
    # ...plus the tangential wall terms (bottom/top).
    total += 2.0 * ihy2 * np.sum((a.u[:, 0] - ta.u_bottom) * (b.u[:, 0] - tb.u_bottom))
    total += 2.0 * ihy2 * np.sum((a.u[:, -1] - ta.u_top) * (b.u[:, -1] - tb.u_top))

    # v component.
    total += np.sum(np.diff(a.v, axis=1) * np.diff(b.v, axis=1)) * ihy2
    total += np.sum(np.diff(a.v, axis=0) * np.diff(b.v, axis=0)) * ihx2
    total += 2.0 * ihx2 * np.sum((a.v[0, :] - ta.v_left) * (b.v[0, :] - tb.v_left))
    total += 2.0 * ihx2 * np.sum((a.v[-1, :] - ta.v_right) * (b.v[-1, :] - tb.v_right))

    return float(vol * total)


def grad_seminorm_vel(a: VelocityField, trace: BoundaryTrace | None = None) -> float:
    return float(np.sqrt(max(grad_inner_vel(a, a, trace, trace), 0.0)))


def grad_norm_pressure(s: ScalarField) -> float:
    """Face-weighted norm of gradient(s) (boundary-normal faces are zero)."""
    g = s.grid
    gx = np.diff(s.values, axis=0) / g.hx
    gy = np.diff(s.values, axis=1) / g.hy
    return float(np.sqrt(g.cell_volume * (np.sum(gx * gx) + np.sum(gy * gy))))
