"""Command-line front end: ``ballcurv {verify,solve,continue,kwcheck}``.

Exit codes: 0 success, 1 configuration error, 2 a check failed, 3 the solver failed.
Results go to ``--out`` as CSV traces plus one JSON summary per run.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .curvature import (
    DegenerateFitError,
    find_critical_points,
    flatness_fit,
    kazdan_warner_check,
    profile_from_spec,
)
from .solver import SolverConfig, continuation, mountain_pass, rescale_to_solution
from .spectral import AxisymmetricFunction, make_grid, residual_norm
from .verify import run_checks

SCHEMA = 1
EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_SOLVER = 0, 1, 2, 3
DEFAULT_FRACTIONS = (0.90, 0.925, 0.95, 0.975, 0.999)

log = logging.getLogger("ballcurv")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int = 3
    grid: int = 256
    kmax: int | None = None
    profile: dict = field(default_factory=lambda: {"name": "two_bump", "params": {}})
    p: float | None = None
    p_schedule: list[float] | None = None
    rho0: float | None = None
    solver: dict = field(default_factory=dict)
    out: str = "."

    @property
    def tau(self) -> float:
        return self.n / (self.n - 2)

    def exponent(self) -> float:
        return 0.95 * self.tau if self.p is None else float(self.p)

    def schedule(self) -> list[float]:
        if self.p_schedule is None:
            return [f * self.tau for f in DEFAULT_FRACTIONS]
        return [float(p) for p in self.p_schedule]

    def solver_config(self) -> SolverConfig:
        known = {f.name for f in fields(SolverConfig)}
        unknown = set(self.solver) - known
        if unknown:
            raise ConfigError(f"unknown solver options {sorted(unknown)}")
        try:
            return SolverConfig(**{**self.solver, "rho0": self.rho0})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def validate(self) -> None:
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 3:
            raise ConfigError(f"dimension n must be an integer >= 3 (gamma_n = 0 at n = 2), got {self.n!r}")
        if not isinstance(self.grid, int) or self.grid < 8:
            raise ConfigError(f"grid size must be an integer >= 8, got {self.grid!r}")
        if self.kmax is not None and not 0 <= self.kmax <= self.grid - 1:
            raise ConfigError(f"kmax must lie in [0, grid-1], got {self.kmax}")
        if self.p is not None and not 1 < self.p < self.tau:
            raise ConfigError(f"p must lie in (1, tau) = (1, {self.tau}), got {self.p}")
        sched = self.schedule()
        if any(not 1 < p < self.tau for p in sched):
            raise ConfigError(f"schedule values must lie in (1, {self.tau})")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ConfigError("schedule must be strictly increasing")
        if self.rho0 is not None and not self.rho0 > 0:
            raise ConfigError("rho0 must be positive")
        self.solver_config()
        try:
            profile_from_spec(self.profile)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad profile: {exc}") from None


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    cfg = RunConfig(**data)
    if args.n is not None:
        cfg.n = args.n
    if args.grid is not None:
        cfg.grid = args.grid
    if args.out is not None:
        cfg.out = args.out
    if args.profile:
        name, *pairs = args.profile
        params = {}
        for pair in pairs:
            if "=" not in pair:
                raise ConfigError(f"profile parameter {pair!r} is not of the form k=v")
            k, v = pair.split("=", 1)
            params[k] = _parse_value(v)
        cfg.profile = {"name": name, "params": params}
    if getattr(args, "p", None) is not None:
        cfg.p = args.p
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# output


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(format(x, ".17g")) if math.isfinite(x) else None
    return obj


def write_summary(path: Path, command: str, cfg: RunConfig, payload: dict) -> None:
    doc = {"schema": SCHEMA, "command": command, "config": asdict(cfg), **payload}
    path.write_text(json.dumps(_jsonable(doc), indent=2) + "\n")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def load_solution(summary_path) -> tuple[AxisymmetricFunction, dict]:
    """Rebuild the solution ``w`` written by ``solve`` from its summary and CSV."""
    summary = json.loads(Path(summary_path).read_text())
    g = summary["grid"]
    grid = make_grid(g["n"], g["M"], g["kmax"])
    if g["dilation"] != 1.0:
        grid = grid.dilated(g["dilation"], g["pole"])
    with (Path(summary_path).parent / summary["files"]["solution"]).open() as fh:
        rows = list(csv.DictReader(fh))
    w = np.array([float(r["w"]) for r in rows])
    return AxisymmetricFunction(grid, w), summary


# ---------------------------------------------------------------------------
# commands


def cmd_verify(cfg: RunConfig) -> int:
    profile = profile_from_spec(cfg.profile)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        results = run_checks(cfg.n, cfg.grid, cfg.kmax, profile, cfg.rho0)
    for r in results:
        print(r.line())
    out = _outdir(cfg)
    write_csv(
        out / "verify.csv",
        ["check", "passed", "value", "tolerance", "detail"],
        [(r.name, r.passed, r.value, r.tolerance, r.detail) for r in results],
    )
    ok = all(r.passed for r in results)
    write_summary(out / "verify.json", "verify", cfg, {"passed": ok, "checks": [r.to_dict() for r in results]})
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_solve(cfg: RunConfig) -> int:
    h = profile_from_spec(cfg.profile)
    kw = kazdan_warner_check(h)
    if not kw.satisfied:
        print("warning: h fails the Kazdan-Warner sign condition; a solution may not exist", file=sys.stderr)
    grid = make_grid(cfg.n, cfg.grid, cfg.kmax)
    p = cfg.exponent()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = mountain_pass(h, p, config=cfg.solver_config(), grid=grid)
    out = _outdir(cfg)
    ok = res.converged and res.mu > 0
    payload = {"converged": ok, "p": p, "kazdan_warner": kw.to_dict(), **res.summary()}
    if res.mu > 0:
        w = rescale_to_solution(res.u, res.mu, p)
        g = w.grid
        payload["solution_residual"] = residual_norm(w, h, p, 1.0)
        payload["solution_sup"] = w.sup()
        payload["grid"] = {"n": g.n, "M": g.M, "kmax": g.kmax, "dilation": g.dilation, "pole": g.pole}
        payload["files"] = {"solution": "solution.csv"}
        write_csv(out / "solution.csv", ["r", "u", "w"], zip(g.nodes, res.u.values, w.values))
    else:
        payload["diagnostics"] = res.diagnostics
    write_summary(out / "solve.json", "solve", cfg, payload)
    print(
        f"{res.kind}: c_p={res.c_p:.10g} mu={res.mu:.10g} residual={res.residual:.3e} "
        f"sup u={res.u.sup():.6g} converged={ok}"
    )
    return EXIT_OK if ok else EXIT_SOLVER


CONTINUATION_COLUMNS = ["step", "p", "c_p", "sup", "lam_conc", "lam_star", "q_n", "residual", "mu", "kind", "converged",
                        "dilation", "error"]


def cmd_continue(cfg: RunConfig) -> int:
    h = profile_from_spec(cfg.profile)
    grid = make_grid(cfg.n, cfg.grid, cfg.kmax)
    scfg = cfg.solver_config()
    sched = cfg.schedule()
    if sched[-1] > cfg.tau - scfg.eps_final:
        raise ConfigError(f"final p must not exceed tau - {scfg.eps_final}")
    rep = continuation(h, sched, grid, scfg)
    out = _outdir(cfg)
    rows = [[i] + [getattr(s, c) for c in CONTINUATION_COLUMNS[1:]] for i, s in enumerate(rep.steps)]
    write_csv(out / "continuation.csv", CONTINUATION_COLUMNS, rows)
    all_ok = all(s.converged for s in rep.steps)
    write_summary(
        out / "continue.json",
        "continue",
        cfg,
        {
            "concentration": rep.concentration,
            "flag_step": rep.flag_step,
            "all_converged": all_ok,
            "steps": [s.to_dict() for s in rep.steps],
            "files": {"trace": "continuation.csv"},
        },
    )
    for s in rep.steps:
        print(f"p={s.p:.6f} sup={s.sup:.6g} lam*={s.lam_star:.4g} residual={s.residual:.2e} converged={s.converged}")
    if rep.concentration:
        print(f"CONCENTRATION flagged at step {rep.flag_step}")
    return EXIT_OK if all_ok else EXIT_SOLVER


def cmd_kwcheck(cfg: RunConfig) -> int:
    h = profile_from_spec(cfg.profile)
    kw = kazdan_warner_check(h)
    points = sorted([cp.r0 for cp in h.critical_points] + find_critical_points(h))
    points = [r for i, r in enumerate(points) if i == 0 or r - points[i - 1] > 1e-9]
    table = []
    for r0 in points:
        cp = next((c for c in h.critical_points if abs(c.r0 - r0) <= 1e-9), None)
        try:
            fit = flatness_fit(h, r0, cfg.n)
            row = [r0, fit.alpha, fit.a, fit.stderr, fit.admissible, cp.alpha if cp else None, ""]
        except (DegenerateFitError, ValueError) as exc:
            row = [r0, None, None, None, False, cp.alpha if cp else None, str(exc)]
        table.append(row)
    out = _outdir(cfg)
    header = ["r0", "alpha_hat", "a_hat", "stderr", "admissible", "declared_alpha", "note"]
    write_csv(out / "kwcheck.csv", header, table)
    write_summary(
        out / "kwcheck.json",
        "kwcheck",
        cfg,
        {"kazdan_warner": kw.to_dict(), "flatness": [dict(zip(header, row)) for row in table]},
    )
    print(f"Kazdan-Warner condition: {'satisfied' if kw.satisfied else 'violated'}"
          f" (witnesses h'>0 at {kw.increasing_witness}, h'<0 at {kw.decreasing_witness})")
    for row in table:
        print(f"  r0={row[0]:.6f} alpha_hat={_fmt(row[1]) or '-'} admissible={row[4]} {row[6]}")
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "solve": cmd_solve, "continue": cmd_continue, "kwcheck": cmd_kwcheck}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ballcurv", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--n", type=int, help="dimension of the ball")
        sp.add_argument("--grid", type=int, help="number of quadrature nodes M")
        sp.add_argument("--profile", nargs="+", metavar="NAME [k=v ...]", help="curvature profile and parameters")
        if name == "solve":
            sp.add_argument("--p", type=float, help="exponent (default 0.95 tau)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
