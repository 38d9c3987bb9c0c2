"""Experiment definitions and metrology.

Two experiments cover the solver's claims at desk scale:

  * a decaying lattice of counter-rotating vortices with a closed-form
    solution (zero forcing), used for temporal convergence studies, and
  * the lid-driven cavity, compared against published centerline data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import (
    BoundaryTrace,
    Grid,
    ScalarField,
    VelocityField,
    inner_vel,
    norm_cell,
    norm_vel,
)
from .solvers import SolverConfig
from .stepper import (
    SchemeConfig,
    State,
    StepDiagnostics,
    march,
    project_divergence_free,
)

__all__ = [
    "ExactSolution",
    "ErrorReport",
    "RateRow",
    "RateTable",
    "CenterlineProfile",
    "lattice_vortex",
    "sample_velocity",
    "sample_pressure",
    "initial_state_from_exact",
    "compute_errors",
    "run_convergence_study",
    "CavityResult",
    "run_cavity",
]


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form solution of the zero-forcing flow equations."""

    u: callable  # u(x, y, t)
    v: callable
    p: callable
    nu: float

    def trace(self, grid: Grid, t: float) -> BoundaryTrace:
        return BoundaryTrace.from_functions(grid, self.u, self.v, t)

    def bc(self, grid: Grid):
        return lambda t: self.trace(grid, t)


def lattice_vortex(nu: float) -> ExactSolution:
    """Decaying vortex lattice on the unit square.

    u =  sin(2 pi x) sin(2 pi y) exp(-8 nu pi^2 t)
    v =  cos(2 pi x) cos(2 pi y) exp(-8 nu pi^2 t)
    p =  (1 - sin^2(2 pi x) - cos^2(2 pi y)) / 2 * exp(-16 nu pi^2 t)
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    two_pi = 2.0 * np.pi
    rate = 8.0 * nu * np.pi ** 2

    def u(x, y, t):
        return np.sin(two_pi * x) * np.sin(two_pi * y) * np.exp(-rate * t)

    def v(x, y, t):
        return np.cos(two_pi * x) * np.cos(two_pi * y) * np.exp(-rate * t)

    def p(x, y, t):
        return 0.5 * (1.0 - np.sin(two_pi * x) ** 2 - np.cos(two_pi * y) ** 2) \
            * np.exp(-2.0 * rate * t)

    return ExactSolution(u, v, p, nu)


def sample_velocity(grid: Grid, exact: ExactSolution, t: float) -> VelocityField:
    Xu, Yu = grid.u_coords()
    Xv, Yv = grid.v_coords()
    return VelocityField(grid, np.asarray(exact.u(Xu, Yu, t), dtype=float),
                         np.asarray(exact.v(Xv, Yv, t), dtype=float),
                         exact.trace(grid, t))


def sample_pressure(grid: Grid, exact: ExactSolution, t: float) -> ScalarField:
    Xc, Yc = grid.cell_coords()
    return ScalarField(grid, np.asarray(exact.p(Xc, Yc, t), dtype=float)).recentered()


def initial_state_from_exact(grid: Grid, exact: ExactSolution, t0: float = 0.0,
                             solver: SolverConfig | None = None) -> State:
    """Face-sampled exact velocity projected discretely divergence-free,
    sampled zero-mean pressure, multiplier 1."""
    vel = project_divergence_free(sample_velocity(grid, exact, t0), solver)
    return State(t0, vel, sample_pressure(grid, exact, t0), 1.0)


@dataclass
class ErrorReport:
    e_u: float
    e_p: float
    e_Q: float
    t: float


def compute_errors(state: State, exact: ExactSolution) -> ErrorReport:
    """Discrete L2 errors at the state's native locations; pressure compared
    after removing both fields' means."""
    g = state.u.grid
    ue = sample_velocity(g, exact, state.t)
    diff = VelocityField(g, state.u.u - ue.u, state.u.v - ue.v)
    e_u = norm_vel(diff)

    pe = sample_pressure(g, exact, state.t)
    dp = ScalarField(g, (state.p.values - state.p.mean())
                     - (pe.values - pe.mean()))
    e_p = norm_cell(dp)
    return ErrorReport(e_u=e_u, e_p=e_p, e_Q=abs(1.0 - state.Q), t=state.t)


@dataclass
class RateRow:
    tau: float
    e_u: float
    rate_u: float | None
    e_Q: float
    rate_Q: float | None
    e_p: float
    rate_p: float | None
    failed: str | None = None


@dataclass
class RateTable:
    rows: list[RateRow]

    def observed_rates(self) -> dict[str, list[float]]:
        return {
            "u": [r.rate_u for r in self.rows if r.rate_u is not None],
            "Q": [r.rate_Q for r in self.rows if r.rate_Q is not None],
            "p": [r.rate_p for r in self.rows if r.rate_p is not None],
        }


def _check_halving(taus) -> None:
    for a, b in zip(taus, taus[1:]):
        if not math.isclose(a / b, 2.0, rel_tol=1e-12):
            raise ValueError(f"tau values must halve strictly: {taus}")


def run_convergence_study(nu: float, theta: float, nx: int, taus, T: float,
                          scheme_kind: str = "pdrlm1",
                          solver: SolverConfig | None = None,
                          assert_invariants: bool = True) -> RateTable:
    """March the vortex lattice to T for each tau and tabulate terminal errors.

    rate = log2(e(2 tau) / e(tau)) between consecutive rows.
    """
    taus = list(taus)
    _check_halving(taus)
    exact = lattice_vortex(nu)
    grid = Grid(nx, nx)
    bc = exact.bc(grid)

    rows: list[RateRow] = []
    prev: ErrorReport | None = None
    for tau in taus:
        n_steps = round(T / tau)
        if not math.isclose(n_steps * tau, T, rel_tol=1e-9):
            raise ValueError(f"T={T} is not an integer multiple of tau={tau}")
        cfg = SchemeConfig(tau=tau, theta=theta, nu=nu, scheme_kind=scheme_kind,
                           assert_invariants=assert_invariants,
                           solver=solver or SolverConfig())
        state0 = initial_state_from_exact(grid, exact, 0.0, cfg.solver)
        try:
            state, _ = march(state0, cfg, n_steps, bc=bc)
        except Exception as exc:  # noqa: BLE001 - row recorded as failed
            rows.append(RateRow(tau, math.nan, None, math.nan, None, math.nan, None,
                                failed=f"{type(exc).__name__}: {exc}"))
            prev = None
            continue
        err = compute_errors(state, exact)

        def rate(prev_e, cur_e):
            if prev_e is None or not prev_e > 0.0 or not cur_e > 0.0:
                return None
            return math.log2(prev_e / cur_e)

        rows.append(RateRow(
            tau,
            err.e_u, rate(prev.e_u if prev else None, err.e_u),
            err.e_Q, rate(prev.e_Q if prev else None, err.e_Q),
            err.e_p, rate(prev.e_p if prev else None, err.e_p),
        ))
        prev = err
    return RateTable(rows)


@dataclass
class CenterlineProfile:
    """Velocity along the two centerlines, ready for benchmark comparison."""

    y: np.ndarray        # stations for u(x=mid, y), includes walls
    u: np.ndarray
    x: np.ndarray        # stations for v(x, y=mid), includes walls
    v: np.ndarray
    source: str = "macproj"

    def u_at(self, stations) -> np.ndarray:
        return np.interp(np.asarray(stations, dtype=float), self.y, self.u)

    def v_at(self, stations) -> np.ndarray:
        return np.interp(np.asarray(stations, dtype=float), self.x, self.v)


def centerline_profile(state: State, lid_speed: float = 1.0) -> CenterlineProfile:
    """u along x = mid-domain and v along y = mid-domain, linearly interpolated
    from faces, with the wall/lid values appended at the ends."""
    g = state.u.grid
    x_mid = 0.5 * (g.x0 + g.x1)
    y_mid = 0.5 * (g.y0 + g.y1)

    # u lives on vertical faces: interpolate columns to x_mid.
    ucol = np.empty(g.ny)
    i = np.searchsorted(g.x_face, x_mid)
    if math.isclose(g.x_face[min(i, g.nx)], x_mid, abs_tol=1e-12):
        ucol[:] = state.u.u[min(i, g.nx), :]
    else:
        w = (x_mid - g.x_face[i - 1]) / g.hx
        ucol[:] = (1 - w) * state.u.u[i - 1, :] + w * state.u.u[i, :]
    y = np.concatenate(([g.y0], g.y_center, [g.y1]))
    u = np.concatenate(([0.0], ucol, [lid_speed]))

    vrow = np.empty(g.nx)
    j = np.searchsorted(g.y_face, y_mid)
    if math.isclose(g.y_face[min(j, g.ny)], y_mid, abs_tol=1e-12):
        vrow[:] = state.u.v[:, min(j, g.ny)]
    else:
        w = (y_mid - g.y_face[j - 1]) / g.hy
        vrow[:] = (1 - w) * state.u.v[:, j - 1] + w * state.u.v[:, j]
    x = np.concatenate(([g.x0], g.x_center, [g.x1]))
    v = np.concatenate(([0.0], vrow, [0.0]))

    return CenterlineProfile(y=y, u=u, x=x, v=v)


@dataclass
class CavityResult:
    final_state: State
    diagnostics: list[StepDiagnostics]
    profile: CenterlineProfile
    snapshots: list[tuple[float, State]]
    energy_trace: list[tuple[float, float]]  # (t, |u|^2)
    plateau_time: float | None               # first time the steady detector fired


def run_cavity(Re: float, theta: float, nx: int, tau: float, T: float,
               scheme_kind: str = "pdrlm1",
               snapshot_times=(), solver: SolverConfig | None = None,
               diagnostics_stride: int = 1,
               lid_speed: float = 1.0,
               plateau_rel_rate: float = 1e-4,
               on_step=None) -> CavityResult:
    """Impulsively started lid-driven cavity on the unit square.

    No-slip on three walls, tangential lid speed on y=1 from t=0; starts from
    rest with zero pressure.  The steady-state detector fires when the kinetic
    energy changes by less than `plateau_rel_rate` (relative) per unit time,
    measured over a trailing window of one time unit.
    """
    if Re <= 0:
        raise ValueError("Re must be positive")
    nu = 1.0 / Re
    grid = Grid(nx, nx)
    lid = BoundaryTrace.lid(grid, lid_speed)
    cfg = SchemeConfig(tau=tau, theta=theta, nu=nu, scheme_kind=scheme_kind,
                       assert_invariants=True, solver=solver or SolverConfig())
    state0 = State.zeros(grid, trace=lid)
    n_steps = int(round(T / tau))

    snap_left = sorted(float(s) for s in snapshot_times)
    snapshots: list[tuple[float, State]] = []
    energy_trace: list[tuple[float, float]] = []
    recorded: list[StepDiagnostics] = []
    window = max(1, int(round(1.0 / tau)))  # one time unit
    plateau_time: float | None = None

    def callback(k, state, diag):
        nonlocal plateau_time
        e = inner_vel(state.u, state.u)
        energy_trace.append((state.t, e))
        if k % diagnostics_stride == 0 or k == n_steps:
            recorded.append(diag)
        while snap_left and state.t >= snap_left[0] - 1e-9:
            snapshots.append((snap_left.pop(0), State(state.t, state.u.copy(),
                                                      state.p.copy(), state.Q)))
        if plateau_time is None and len(energy_trace) > window:
            e_old = energy_trace[-1 - window][1]
            if e > 0 and abs(e - e_old) / max(e, 1e-300) <= plateau_rel_rate:
                plateau_time = state.t
        if on_step is not None:
            on_step(k, state, diag)

    final, _ = march(state0, cfg, n_steps, bc=lambda t: lid, on_step=callback)
    profile = centerline_profile(final, lid_speed)
    return CavityResult(final, recorded, profile, snapshots, energy_trace, plateau_time)
