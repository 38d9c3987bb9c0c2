"""Command-line front end and deterministic text writers.

Subcommands:
    run       march one configured problem, write a diagnostics CSV
    converge  temporal convergence study on the vortex lattice, write rates CSV
    cavity    lid-driven cavity run: diagnostics, centerline, snapshots
    selftest  operator-identity and dense-oracle suite

Config files are INI-style with sections [grid], [scheme], [problem],
[solver], [output]; command-line flags override file values.  Time steps are
accepted as exact rationals ("1/128") so halving studies do not accumulate
decimal drift.  All writers emit LF line endings and 17-significant-digit
floats, so identical runs produce byte-identical files.  The default output
root honors $MACPROJ_OUTPUT_ROOT.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .grid import Grid
from .problems import (
    lattice_vortex,
    initial_state_from_exact,
    run_cavity,
    run_convergence_study,
)
from .selftest import run_selftest
from .solvers import SolverConfig
from .stepper import SCHEME_KINDS, SchemeConfig, State, StepDiagnostics, march

__all__ = [
    "RunConfig",
    "ReferenceTable",
    "parse_tau",
    "load_reference_table",
    "write_diagnostics_csv",
    "write_rate_table_csv",
    "write_centerline_csv",
    "write_field_snapshot",
    "main",
]

DIAG_HEADER = ("step,t,Q,K,E_mod,A,B,C,C_crosscheck,div_inf,"
               "res_proj1,res_energy,cg_iters_total")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def parse_tau(text: str) -> float:
    """Parse a time step given as a decimal or an exact rational like 1/128."""
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse time step {text!r}") from exc


@dataclass
class RunConfig:
    problem: str = "vortex"          # vortex | cavity | custom
    scheme_kind: str = "pdrlm1"
    nx: int = 64
    ny: int | None = None
    tau: float = 0.01
    theta: float = 1.0
    nu: float | None = 0.1
    Re: float | None = None
    T: float = 1.0
    out_dir: str | None = None
    snapshot_times: tuple[float, ...] = ()
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_iter: int | None = None
    assert_invariants: bool = True
    diagnostics_stride: int = 1

    def __post_init__(self) -> None:
        if self.problem not in ("vortex", "cavity", "custom"):
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.scheme_kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme {self.scheme_kind!r}")
        if (self.nu is None) == (self.Re is None):
            raise ValueError("exactly one of nu and Re must be set")
        if self.Re is not None:
            if self.Re <= 0:
                raise ValueError("Re must be positive")
            self.nu = 1.0 / self.Re
        if self.tau <= 0 or self.theta <= 0 or self.nu <= 0:
            raise ValueError("tau, theta and the viscosity must be positive")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.nx < 2 or (self.ny is not None and self.ny < 2):
            raise ValueError("grid must have at least 2 cells per axis")
        if self.diagnostics_stride < 1:
            raise ValueError("diagnostics stride must be >= 1")

    @property
    def ny_eff(self) -> int:
        return self.ny if self.ny is not None else self.nx

    def solver(self) -> SolverConfig:
        return SolverConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol,
                            max_iter=self.max_iter)

    def scheme(self) -> SchemeConfig:
        return SchemeConfig(tau=self.tau, theta=self.theta, nu=self.nu,
                            scheme_kind=self.scheme_kind,
                            assert_invariants=self.assert_invariants,
                            solver=self.solver())

    def resolve_out_dir(self) -> Path:
        root = self.out_dir or os.environ.get("MACPROJ_OUTPUT_ROOT", "out")
        path = Path(root)
        path.mkdir(parents=True, exist_ok=True)
        return path


@dataclass
class ReferenceTable:
    source: str
    coords: np.ndarray
    values: np.ndarray


def load_reference_table(path) -> ReferenceTable:
    """Load a `coord,value` CSV with `# source:` comment lines."""
    source = ""
    coords: list[float] = []
    values: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if body.lower().startswith("source:"):
                    source = body[len("source:"):].strip()
                continue
            if line.lower().startswith("coord"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'coord,value', got {line!r}")
            try:
                c, v = float(parts[0]), float(parts[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric entry {line!r}") from exc
            if not (np.isfinite(c) and np.isfinite(v)):
                raise ValueError(f"{path}:{lineno}: non-finite entry {line!r}")
            coords.append(c)
            values.append(v)
    arr_c = np.asarray(coords)
    if arr_c.size == 0:
        raise ValueError(f"{path}: no data rows")
    if np.any(np.diff(arr_c) <= 0):
        raise ValueError(f"{path}: coordinates must be strictly increasing")
    if arr_c[0] < 0.0 or arr_c[-1] > 1.0:
        raise ValueError(f"{path}: coordinates must lie within [0, 1]")
    return ReferenceTable(source=source, coords=arr_c, values=np.asarray(values))


def bundled_reference(name: str) -> Path:
    """Path of a reference table shipped with the package (e.g. ghia1982_re1000_u)."""
    return Path(__file__).parent / "data" / f"{name}.csv"


def write_diagnostics_csv(diags, path) -> None:
    """One row per recorded step; quadratic columns are nan for the baseline."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(DIAG_HEADER + "\n")
        for d in diags:
            quad = d.quad
            a, b, c, cc = (quad.A, quad.B, quad.C, quad.C_crosscheck) if quad \
                else (float("nan"),) * 4
            row = [
                str(d.step), _fmt(d.t), _fmt(d.Q), _fmt(d.K), _fmt(d.E_mod),
                _fmt(a), _fmt(b), _fmt(c), _fmt(cc), _fmt(d.div_inf),
                _fmt(d.identity_residuals.get("proj1", float("nan"))),
                _fmt(d.identity_residuals.get("energy", float("nan"))),
                str(d.cg_iters_total),
            ]
            fh.write(",".join(row) + "\n")


def write_rate_table_csv(table, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("tau,e_u,rate_u,e_Q,rate_Q,e_p,rate_p\n")
        for r in table.rows:
            cells = [_fmt(r.tau)]
            for e, rate in ((r.e_u, r.rate_u), (r.e_Q, r.rate_Q), (r.e_p, r.rate_p)):
                cells.append(_fmt(e))
                cells.append(_fmt(rate) if rate is not None else "")
            fh.write(",".join(cells) + "\n")


def write_centerline_csv(coords, values, path, source: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# source: {source}\n")
        fh.write("coord,value\n")
        for c, v in zip(coords, values):
            fh.write(f"{_fmt(float(c))},{_fmt(float(v))}\n")


def write_field_snapshot(state: State, path) -> None:
    """Self-describing ASCII table of cell-centered quantities.

    Velocity components are averaged from faces onto centers; columns are
    x, y, u, v, p, |u|.
    """
    g = state.u.grid
    uc = 0.5 * (state.u.u[:-1, :] + state.u.u[1:, :])
    vc = 0.5 * (state.u.v[:, :-1] + state.u.v[:, 1:])
    speed = np.sqrt(uc * uc + vc * vc)
    Xc, Yc = g.cell_coords()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# macproj field snapshot\n")
        fh.write(f"# grid: nx={g.nx} ny={g.ny} x0={_fmt(g.x0)} x1={_fmt(g.x1)} "
                 f"y0={_fmt(g.y0)} y1={_fmt(g.y1)}\n")
        fh.write(f"# t: {_fmt(state.t)}\n")
        fh.write(f"# Q: {_fmt(state.Q)}\n")
        fh.write("x,y,u,v,p,speed\n")
        for i in range(g.nx):
            for j in range(g.ny):
                fh.write(",".join(_fmt(val) for val in (
                    Xc[i, j], Yc[i, j], uc[i, j], vc[i, j],
                    state.p.values[i, j], speed[i, j])) + "\n")


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def _load_config_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file {path!r} not found")
    out: dict = {}
    try:
        if parser.has_section("grid"):
            g = parser["grid"]
            if "nx" in g:
                out["nx"] = g.getint("nx")
            if "ny" in g:
                out["ny"] = g.getint("ny")
        if parser.has_section("scheme"):
            s = parser["scheme"]
            if "kind" in s:
                out["scheme_kind"] = s.get("kind")
            if "tau" in s:
                out["tau"] = parse_tau(s.get("tau"))
            if "theta" in s:
                out["theta"] = s.getfloat("theta")
            if "nu" in s:
                out["nu"] = s.getfloat("nu")
            if "re" in s:
                out["Re"] = s.getfloat("re")
        if parser.has_section("problem"):
            p = parser["problem"]
            if "kind" in p:
                out["problem"] = p.get("kind")
            if "t" in p:
                out["T"] = p.getfloat("t")
            if "snapshots" in p:
                out["snapshot_times"] = tuple(
                    float(s) for s in p.get("snapshots").split(",") if s.strip())
        if parser.has_section("solver"):
            s = parser["solver"]
            if "rel_tol" in s:
                out["rel_tol"] = s.getfloat("rel_tol")
            if "abs_tol" in s:
                out["abs_tol"] = s.getfloat("abs_tol")
            if "max_iter" in s:
                out["max_iter"] = s.getint("max_iter")
        if parser.has_section("output"):
            o = parser["output"]
            if "dir" in o:
                out["out_dir"] = o.get("dir")
            if "stride" in o:
                out["diagnostics_stride"] = o.getint("stride")
    except ValueError as exc:
        raise ValueError(f"config file {path!r}: {exc}") from exc
    return out


def _build_run_config(args) -> RunConfig:
    kwargs: dict = {}
    if args.config:
        kwargs.update(_load_config_file(args.config))
    for key in ("problem", "scheme_kind", "nx", "ny", "theta", "T", "out_dir",
                "rel_tol", "diagnostics_stride"):
        val = getattr(args, key, None)
        if val is not None:
            kwargs[key] = val
    if getattr(args, "tau", None) is not None:
        kwargs["tau"] = parse_tau(args.tau)
    if getattr(args, "nu", None) is not None:
        kwargs["nu"] = args.nu
        kwargs.pop("Re", None)
    if getattr(args, "Re", None) is not None:
        kwargs["Re"] = args.Re
        kwargs["nu"] = None
    if "Re" in kwargs and kwargs.get("Re") is not None:
        kwargs.setdefault("nu", None)
    return RunConfig(**kwargs)


def _cmd_run(args) -> int:
    cfg = _build_run_config(args)
    out = cfg.resolve_out_dir()
    n_steps = int(round(cfg.T / cfg.tau))
    if not np.isclose(n_steps * cfg.tau, cfg.T, rtol=1e-9):
        raise ValueError(f"T={cfg.T} is not an integer multiple of tau={cfg.tau}")

    if cfg.problem == "cavity":
        return _cmd_cavity(args)
    if cfg.problem != "vortex":
        raise ValueError("`run` supports the vortex and cavity problems")

    exact = lattice_vortex(cfg.nu)
    grid = Grid(cfg.nx, cfg.ny_eff)
    recorded: list[StepDiagnostics] = []

    def on_step(k, state, diag):
        if k % cfg.diagnostics_stride == 0 or k == n_steps:
            recorded.append(diag)

    diag_path = out / "diagnostics.csv"
    try:
        state0 = initial_state_from_exact(grid, exact, 0.0, cfg.solver())
        final, _ = march(state0, cfg.scheme(), n_steps, bc=exact.bc(grid), on_step=on_step)
    except Exception as exc:  # noqa: BLE001 - failed runs still leave diagnostics
        _write_failure_diagnostics(exc, recorded, diag_path)
        print(f"run failed: {exc}", file=sys.stderr)
        print(f"wrote {diag_path} (partial, with the failing step when available)",
              file=sys.stderr)
        return 1
    write_diagnostics_csv(recorded, diag_path)
    from .problems import compute_errors
    err = compute_errors(final, exact)
    print(f"vortex run: {n_steps} steps to T={cfg.T}; "
          f"e_u={err.e_u:.6e} e_p={err.e_p:.6e} e_Q={err.e_Q:.6e}")
    print(f"wrote {diag_path}")
    return 0


def _cmd_converge(args) -> int:
    taus = [parse_tau(s) for s in args.taus.split(",")]
    table = run_convergence_study(
        nu=args.nu, theta=args.theta, nx=args.nx, taus=taus, T=args.T,
        scheme_kind=args.scheme_kind,
        solver=SolverConfig(rel_tol=args.rel_tol) if args.rel_tol else None)
    out = Path(args.out_dir or os.environ.get("MACPROJ_OUTPUT_ROOT", "out"))
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"rates_{args.scheme_kind}.csv"
    write_rate_table_csv(table, path)
    print("tau        e_u          rate     e_Q          rate     e_p          rate")
    for r in table.rows:
        if r.failed:
            print(f"{r.tau:<10.6g} FAILED: {r.failed}")
            continue
        print(f"{r.tau:<10.6g} {r.e_u:<12.5e} {r.rate_u if r.rate_u is not None else float('nan'):<8.4f} "
              f"{r.e_Q:<12.5e} {r.rate_Q if r.rate_Q is not None else float('nan'):<8.4f} "
              f"{r.e_p:<12.5e} {r.rate_p if r.rate_p is not None else float('nan'):<8.4f}")
    print(f"wrote {path}")
    return 0 if not any(r.failed for r in table.rows) else 1


def _write_failure_diagnostics(exc: Exception, recorded, path) -> None:
    """Failed runs still leave a diagnostics file; an invariant violation
    contributes the failing step's full record."""
    rows = list(getattr(exc, "completed_diagnostics", None) or recorded)
    failing = getattr(exc, "diagnostics", None)
    if failing is not None:
        rows.append(failing)
    write_diagnostics_csv(rows, path)


def _cmd_cavity(args) -> int:
    cfg = _build_run_config(args)
    out = cfg.resolve_out_dir()
    snaps = cfg.snapshot_times
    if getattr(args, "snapshots", None):
        snaps = tuple(float(s) for s in args.snapshots.split(",") if s.strip())
    try:
        result = run_cavity(Re=(cfg.Re if cfg.Re is not None else 1.0 / cfg.nu),
                            theta=cfg.theta, nx=cfg.nx, tau=cfg.tau, T=cfg.T,
                            scheme_kind=cfg.scheme_kind, snapshot_times=snaps,
                            solver=cfg.solver(),
                            diagnostics_stride=cfg.diagnostics_stride)
    except Exception as exc:  # noqa: BLE001 - failed runs still leave diagnostics
        _write_failure_diagnostics(exc, [], out / "diagnostics.csv")
        print(f"cavity run failed: {exc}", file=sys.stderr)
        print(f"wrote {out / 'diagnostics.csv'} (partial)", file=sys.stderr)
        return 1
    write_diagnostics_csv(result.diagnostics, out / "diagnostics.csv")
    prof = result.profile
    write_centerline_csv(prof.y, prof.u, out / "centerline_u.csv", "macproj cavity run")
    write_centerline_csv(prof.x, prof.v, out / "centerline_v.csv", "macproj cavity run")
    for t_req, snap_state in result.snapshots:
        write_field_snapshot(snap_state, out / f"snapshot_t{t_req:g}.csv")
    e_final = result.energy_trace[-1][1]
    plateau = f"{result.plateau_time:.4g}" if result.plateau_time is not None else "not reached"
    print(f"cavity run: T={cfg.T}, |u|^2={e_final:.6f}, steady plateau at t={plateau}")
    print(f"wrote {out / 'diagnostics.csv'}, centerline_u.csv, centerline_v.csv, "
          f"{len(result.snapshots)} snapshots")
    return 0


def _cmd_selftest(_args) -> int:
    failures = run_selftest(verbose=True)
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="macproj",
        description="Energy-stable multiplier-regularized projection solver (2D MAC grid)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--problem", choices=("vortex", "cavity"))
        p.add_argument("--scheme", dest="scheme_kind", choices=SCHEME_KINDS)
        p.add_argument("--nx", type=int)
        p.add_argument("--ny", type=int)
        p.add_argument("--tau", help="time step, decimal or rational like 1/128")
        p.add_argument("--theta", type=float)
        p.add_argument("--nu", type=float)
        p.add_argument("--Re", type=float)
        p.add_argument("--T", type=float)
        p.add_argument("--out", dest="out_dir")
        p.add_argument("--rel-tol", dest="rel_tol", type=float)
        p.add_argument("--stride", dest="diagnostics_stride", type=int)

    p_run = sub.add_parser("run", help="march one configured problem")
    add_common(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_conv = sub.add_parser("converge", help="vortex temporal convergence study")
    p_conv.add_argument("--nu", type=float, default=0.1)
    p_conv.add_argument("--theta", type=float, default=1.0)
    p_conv.add_argument("--nx", type=int, default=128)
    p_conv.add_argument("--taus", default="1/32,1/64,1/128,1/256",
                        help="comma-separated, strictly halving")
    p_conv.add_argument("--T", type=float, default=1.0)
    p_conv.add_argument("--scheme", dest="scheme_kind", choices=SCHEME_KINDS,
                        default="pdrlm1")
    p_conv.add_argument("--out", dest="out_dir")
    p_conv.add_argument("--rel-tol", dest="rel_tol", type=float)
    p_conv.set_defaults(fn=_cmd_converge)

    p_cav = sub.add_parser("cavity", help="lid-driven cavity benchmark")
    add_common(p_cav)
    p_cav.add_argument("--snapshots", help="comma-separated snapshot times")
    p_cav.set_defaults(fn=_cmd_cavity, problem="cavity")

    p_self = sub.add_parser("selftest", help="identity and oracle checks")
    p_self.set_defaults(fn=_cmd_selftest)

    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
