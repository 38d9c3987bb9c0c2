import numpy as np
import pytest

from macproj.grid import BoundaryTrace, Grid, ScalarField, VelocityField


@pytest.fixture
def rng():
    return np.random.default_rng(20250809)


def random_hom_velocity(grid: Grid, rng) -> VelocityField:
    """Random field honoring homogeneous Dirichlet data on the normal faces."""
    u = rng.standard_normal(grid.u_shape)
    v = rng.standard_normal(grid.v_shape)
    u[0, :] = u[-1, :] = 0.0
    v[:, 0] = v[:, -1] = 0.0
    return VelocityField(grid, u, v, BoundaryTrace.homogeneous(grid))


def random_scalar(grid: Grid, rng) -> ScalarField:
    return ScalarField(grid, rng.standard_normal(grid.cell_shape))


def vortex_psi_velocity(grid: Grid) -> VelocityField:
    """Stream-function vortex with zero trace: psi = sin^2(pi x) sin^2(pi y)."""
    Xu, Yu = grid.u_coords()
    Xv, Yv = grid.v_coords()
    u = np.pi * np.sin(np.pi * Xu) ** 2 * np.sin(2.0 * np.pi * Yu)
    v = -np.pi * np.sin(2.0 * np.pi * Xv) * np.sin(np.pi * Yv) ** 2
    u[0, :] = u[-1, :] = 0.0
    v[:, 0] = v[:, -1] = 0.0
    return VelocityField(grid, u, v, BoundaryTrace.homogeneous(grid))


def observed_order(errors: list[float]) -> list[float]:
    return [float(np.log2(a / b)) for a, b in zip(errors, errors[1:])]
