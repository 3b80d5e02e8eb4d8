"""Config-driven experiment runner.

Usage::

    hybridopt --config run.toml --out results/run1 [--threads 4] [--verbose]

The config names a ``command`` and carries a ``[system]`` block plus one block
per command; see README.md for the keys. Every run writes
``<out>_manifest.json``; failures also write ``<out>_error.json`` and exit
nonzero (2 config, 3 infeasible single solve, 4 numeric failure).
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np
import tomli

from . import __version__
from .closeness import eps_to_csv, graphical_convergence_report, min_eps
from .hysys import JumpCommand, Priority, SimulationError, SolverConfig, simulate
from .hytime import arc_to_csv
from .models import (BallParams, ConfigError, ThermoParams, params_from_config,
                     system_from_config)
from .optctrl import (BallFamily, Infeasible, OptimizerConfig, SolverError, ThermostatFamily,
                      solve_ball, solve_thermostat, sweep_to_csv,
                      value_sweep)
from .reach import reach_interval, reach_sample, reach_to_csv

log = logging.getLogger("hybridopt")

COMMANDS = ("simulate", "sweep", "reach", "closeness", "fig1", "fig2", "thermostat-demo")
EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4


class RunError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code, self.kind = code, kind


# ---------------------------------------------------------------------------
# config helpers
# ---------------------------------------------------------------------------

def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise RunError(EXIT_CONFIG, "ConfigError", f"cannot read config: {exc}") from None
    try:
        if path.suffix.lower() == ".json":
            return json.loads(raw)
        return tomli.loads(raw.decode())
    except (ValueError, tomli.TOMLDecodeError) as exc:
        raise RunError(EXIT_CONFIG, "ConfigError", f"cannot parse {path.name}: {exc}") from None


def _solver_config(block: dict) -> SolverConfig:
    block = dict(block or {})
    try:
        if "priority" in block:
            block["priority"] = Priority[str(block["priority"]).upper()]
        return SolverConfig(**block)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"[solver]: {exc}") from None


def _optimizer_config(block: dict) -> OptimizerConfig:
    try:
        return OptimizerConfig(**(block or {}))
    except TypeError as exc:
        raise ConfigError(f"[optimizer]: {exc}") from None


def _example_params(cfg: dict, example: str):
    block = _section(cfg, "system")
    if block.get("example", example) != example:
        raise ConfigError(f"this command needs the {example} example")
    return params_from_config({"example": example, **block})


def _floats(v, name):
    try:
        return [float(x) for x in v]
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a list of numbers") from None


def _section(cfg: dict, name: str) -> dict:
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _commands(sec: dict, params) -> list[JumpCommand]:
    if "times" in sec:
        return [JumpCommand.at(t) for t in _floats(sec["times"], "times")]
    if "params" in sec:
        return [JumpCommand.forced(u) for u in _floats(sec["params"], "params")]
    if isinstance(params, BallParams):
        return [JumpCommand.forced(params.u_min)] * int(sec.get("J", 0))
    return []


def _write(out: str, suffix: str, text: str, written: list[str]):
    path = f"{out}_{suffix}"
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    written.append(path)


def _rows_csv(header, rows) -> str:
    def cell(v):
        if isinstance(v, float):
            return "inf" if v == math.inf else repr(v)
        return str(v)
    lines = [",".join(header)] + [",".join(cell(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg, out, threads, written):
    system, params = system_from_config(_section(cfg, "system"))
    sec = _section(cfg, "simulate")
    x0 = _floats(sec.get("x0", [1.0, 0.0]), "x0")
    T, J = float(sec.get("T", 1.0)), int(sec.get("J", 0))
    arc, status = simulate(system, x0, _commands(sec, params), (T, J),
                           _solver_config(_section(cfg, "solver")))
    _write(out, "arc.csv", arc_to_csv(arc), written)
    return {"outcome": status.outcome.value, "final_time": list(status.final_time)}


def _grid_points(sec):
    if "points" in sec:
        return [(p["xi"], p["T"], p["J"], p.get("delta", 0.0)) for p in sec["points"]]
    axes = [sec[k] for k in ("xi_1", "xi_2", "T", "J")]
    deltas = sec.get("delta", [0.0])
    return [((a, b), t, int(j), d) for a, b, t, j, d in itertools.product(*axes, deltas)]


def _family(params, opt):
    if isinstance(params, BallParams):
        return BallFamily(params, opt=opt)
    return ThermostatFamily(params, opt=opt)


def cmd_sweep(cfg, out, threads, written):
    params = params_from_config(_section(cfg, "system"))
    try:
        grid = _grid_points(_section(cfg, "sweep"))
    except KeyError as exc:
        raise ConfigError(f"[sweep] needs 'points' or axes xi_1, xi_2, T, J; missing {exc}") from None
    rows = value_sweep(_family(params, _optimizer_config(_section(cfg, "optimizer"))), grid,
                       _solver_config(_section(cfg, "solver")), threads=threads)
    _write(out, "sweep.csv", sweep_to_csv(rows), written)
    return {"rows": len(rows), "feasible": sum(r.feasible for r in rows)}


def cmd_reach(cfg, out, threads, written):
    system, params = system_from_config(_section(cfg, "system"))
    sec = _section(cfg, "reach")
    x0 = _floats(sec.get("x0", [1.0, 0.0]), "x0")
    J = int(sec.get("J", 0))
    mode = sec.get("mode", "forced" if isinstance(params, BallParams) else "at")
    if "params" in sec:
        grid = [tuple(_floats(row, "params")) for row in sec["params"]]
    else:
        lo, hi = (params.u_min, params.u_max) if isinstance(params, BallParams) else (0.0, 1.0)
        axis = np.linspace(float(sec.get("lo", lo)), float(sec.get("hi", hi)), int(sec.get("points", 25)))
        grid = list(itertools.product(axis.tolist(), repeat=J))
    solver = _solver_config(_section(cfg, "solver"))
    if "T_lo" in sec:
        sample = reach_interval(system, x0, float(sec["T_lo"]), float(sec["T_hi"]), J, grid,
                                _floats(sec.get("time_grid", [sec["T_lo"]]), "time_grid"),
                                solver, mode)
    else:
        sample = reach_sample(system, x0, float(sec.get("T", 1.0)), J, grid, solver, mode)
    _write(out, "reach.csv", reach_to_csv(sample, J), written)
    return {"points": len(sample.decisions), "feasible": sample.feasible}


def cmd_closeness(cfg, out, threads, written):
    system, params = system_from_config(_section(cfg, "system"))
    sec = _section(cfg, "closeness")
    solver = _solver_config(_section(cfg, "solver"))
    arcs = []
    for key in ("a", "b"):
        sub = sec.get(key)
        if not isinstance(sub, dict):
            raise ConfigError(f"[closeness.{key}] is required")
        arc, _ = simulate(system, _floats(sub["x0"], "x0"), _commands(sub, params),
                          (float(sub["T"]), int(sub["J"])), solver)
        arcs.append(arc)
        _write(out, f"arc_{key}.csv", arc_to_csv(arc), written)
    tau = float(sec.get("tau", max(a.T + a.J for a in arcs)))
    grid = _floats(sec.get("eps_grid", np.logspace(-4, 0, 41).tolist()), "eps_grid")
    report = min_eps(arcs[0], arcs[1], tau, grid)
    _write(out, "closeness.csv", eps_to_csv([report.eps_star]), written)
    return {"tau": tau, "eps_star": report.eps_star}


def fig1_surface(params: BallParams, T_axis, p_axis, J=2, opt=None, threads=1):
    grid = [((p, 0.0), T, J, 0.0) for T in T_axis for p in p_axis]
    return value_sweep(BallFamily(params, opt=opt or OptimizerConfig()), grid, threads=threads)


def fig1_sequence(params: BallParams, n=6, J=2, T0=4.0, p0=1.0, opt=None):
    """Optimal inputs along ``(T0, p0) + 2^-i (1, 1)``; last row is the nominal point."""
    nominal = solve_ball(params, (p0, 0.0), T0, J, opt=opt)
    rows = []
    for i in range(1, n + 1):
        e = 2.0 ** -i
        sol = solve_ball(params, (p0 + e, 0.0), T0 + e, J, opt=opt)
        rows.append((i, T0 + e, p0 + e, sol.decisions, float(np.linalg.norm(sol.decisions - nominal.decisions))))
    return nominal, rows


def cmd_fig1(cfg, out, threads, written):
    params = _example_params(cfg, "ball")
    sec = _section(cfg, "fig1")
    opt = _optimizer_config(_section(cfg, "optimizer"))
    J = int(sec.get("J", 2))
    T_axis = np.linspace(*_floats(sec.get("T_range", [3.5, 4.5]), "T_range"), int(sec.get("T_points", 11)))
    p_axis = np.linspace(*_floats(sec.get("p_range", [0.5, 1.5]), "p_range"), int(sec.get("p_points", 11)))
    rows = fig1_surface(params, T_axis.tolist(), p_axis.tolist(), J, opt, threads)
    _write(out, "fig1_surface.csv",
           _rows_csv(["T", "p", "h"], [(r.point.T, r.point.xi[0], r.h) for r in rows]), written)
    nominal, seq = fig1_sequence(params, int(sec.get("n_seq", 6)), J, opt=opt)
    header = ["i", "T", "p"] + [f"u_{k + 1}" for k in range(J)] + ["dist"]
    body = [(i, T, p, *map(float, u), d) for i, T, p, u, d in seq]
    body.append(("inf", 4.0, 1.0, *map(float, nominal.decisions), 0.0))
    _write(out, "fig1_inputs.csv", _rows_csv(header, body), written)
    return {"nominal_cost": nominal.cost, "nominal_input": nominal.decisions.tolist(),
            "finite_surface": all(r.feasible for r in rows)}


def fig2_arcs(params: BallParams, n=6, J=1, T0=2.0, p0=2.0, cfg=None, opt=None):
    limit = solve_ball(params, (p0, 0.0), T0, J, cfg=cfg, opt=opt).arc
    seq = []
    for i in range(1, n + 1):
        e = 2.0 ** -i
        seq.append(solve_ball(params, (p0 + e, 0.0), T0 + e, J, cfg=cfg, opt=opt).arc)
    return limit, seq


def cmd_fig2(cfg, out, threads, written):
    params = _example_params(cfg, "ball")
    sec = _section(cfg, "fig2")
    J = int(sec.get("J", 1))
    T0 = float(sec.get("T", 2.0))
    limit, seq = fig2_arcs(params, int(sec.get("n_seq", 6)), J, T0, float(sec.get("p", 2.0)),
                           _solver_config(_section(cfg, "solver")), _optimizer_config(_section(cfg, "optimizer")))
    tau = float(sec.get("tau", T0 + J + 1))
    grid = _floats(sec.get("eps_grid", np.logspace(-4, 0, 401).tolist()), "eps_grid")
    report = graphical_convergence_report(seq, limit, tau, grid, float(sec.get("threshold", 0.05)))
    _write(out, "fig2_limit.csv", arc_to_csv(limit), written)
    for i, arc in enumerate(seq, start=1):
        _write(out, f"fig2_arc_{i}.csv", arc_to_csv(arc), written)
    _write(out, "fig2_eps.csv", eps_to_csv(report.eps_star), written)
    return {"eps_star": report.eps_star, "verdict": report.verdict}


def cmd_thermostat_demo(cfg, out, threads, written):
    base = _example_params(cfg, "thermostat")
    sec = _section(cfg, "thermostat")
    xi = _floats(sec.get("xi", [base.z_min - 1.0, 0.0]), "xi")
    T = float(sec.get("T", 3.0))
    Js = [int(j) for j in sec.get("J", [0, 1, 2])]
    costs = _floats(sec.get("switch_costs", [0.0, 1.0, 10.0]), "switch_costs")
    solver = _solver_config(_section(cfg, "solver"))
    opt = _optimizer_config(_section(cfg, "optimizer"))
    jmax = max(Js)
    rows, best = [], {}
    for c in costs:
        params = ThermoParams(**{**base.__dict__, "c_on": c, "c_off": c})
        hs = []
        for J in Js:
            try:
                sol = solve_thermostat(params, xi, T, J, solver, opt)
                h, d = sol.cost, [float(t) for t in sol.decisions]
            except Infeasible:
                h, d = math.inf, []
            hs.append(h)
            rows.append((c, J, int(math.isfinite(h)), h, *(d + [""] * (jmax - len(d)))))
        best[repr(c)] = Js[int(np.argmin(hs))] if any(map(math.isfinite, hs)) else None
    header = ["switch_cost", "J", "feasible", "h"] + [f"t_{k + 1}" for k in range(jmax)]
    _write(out, "thermostat.csv", _rows_csv(header, rows), written)
    return {"best_J": best}


HANDLERS = {
    "simulate": cmd_simulate, "sweep": cmd_sweep, "reach": cmd_reach,
    "closeness": cmd_closeness, "fig1": cmd_fig1, "fig2": cmd_fig2,
    "thermostat-demo": cmd_thermostat_demo,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def run(cfg: dict, out: str, threads: int = 1) -> tuple[int, dict]:
    """Execute one experiment; returns ``(exit_code, manifest)``."""
    start = time.perf_counter()
    written: list[str] = []
    manifest = {"version": __version__, "config": cfg, "outputs": written}
    try:
        command = cfg.get("command")
        if command not in HANDLERS:
            raise ConfigError(f"command must be one of {', '.join(COMMANDS)}; got {command!r}")
        if "seed" in cfg and not isinstance(cfg["seed"], int):
            raise ConfigError("seed must be an integer")
        summary = HANDLERS[command](cfg, out, threads, written)
        code = EXIT_OK
        manifest["summary"] = summary
    except (ConfigError, TypeError, KeyError) as exc:
        code, err = EXIT_CONFIG, exc
    except (Infeasible, SimulationError) as exc:
        code, err = EXIT_INFEASIBLE, exc
    except (SolverError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        code, err = EXIT_NUMERIC, exc
    if code != EXIT_OK:
        record = {"error": type(err).__name__, "message": str(err), "exit_code": code}
        manifest["error"] = record
        _write(out, "error.json", json.dumps(record, indent=2) + "\n", written)
        print(json.dumps(record), file=sys.stderr)
    manifest["wall_time_s"] = time.perf_counter() - start
    _write(out, "manifest.json", json.dumps(manifest, indent=2, default=str) + "\n", written)
    return code, manifest


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="hybridopt", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="TOML or JSON experiment config")
    ap.add_argument("--out", default="hybridopt_out", help="output path prefix")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except RunError as exc:
        record = {"error": exc.kind, "message": str(exc), "exit_code": exc.code}
        print(json.dumps(record), file=sys.stderr)
        return exc.code
    code, manifest = run(cfg, args.out, max(1, args.threads))
    log.info("wrote %d files in %.2fs", len(manifest["outputs"]), manifest["wall_time_s"])
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
