"""Command-line front end.

    netrisk exact   --config scenario.json --out results/
    netrisk sweep   --config sweep.json    --out results/
    netrisk poisson --config scenario.json --out results/
    netrisk mc      --config scenario.json --out results/ --replicates 1000000 --seed 7
    netrisk figures --out results/

Exit codes: 0 success, 2 invalid input (a JSON error document is printed to
stderr), 3 a Monte Carlo check fell outside its confidence interval,
1 any other failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import config as cfgmod
from . import exact, poisson, sweeps
from . import montecarlo as mc
from .model import ScenarioError, validate_scenario

SUBCOMMANDS = ("exact", "sweep", "poisson", "mc", "figures")
EXIT_OK, EXIT_FAILURE, EXIT_INVALID, EXIT_MC_FAILED = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netrisk", description="Extreme-risk constants for random insurance networks.")
    p.add_argument("command", nargs="?", choices=SUBCOMMANDS, help="analysis to run")
    p.add_argument("--subcommand", choices=SUBCOMMANDS, help="same as the positional command")
    p.add_argument("--config", help="JSON configuration document")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--seed", type=int, help="Monte Carlo seed (unsigned 64-bit)")
    p.add_argument("--replicates", type=int, help="Monte Carlo replicates")
    p.add_argument("--tol", type=float, help="truncation tolerance for Poisson series")
    return p


def _subcommand(args) -> str:
    if args.command and args.subcommand and args.command != args.subcommand:
        raise UsageError(f"conflicting subcommands {args.command!r} and {args.subcommand!r}")
    cmd = args.command or args.subcommand
    if cmd is None:
        raise UsageError("no subcommand given")
    return cmd


def _engine(doc) -> exact.EngineConfig:
    e = doc.get("engine", {})
    known = {"sphere_cap", "graph_cap", "support_cap", "allow_monte_carlo", "mc_graphs", "mc_seed"}
    unknown = set(e) - known
    if unknown:
        raise cfgmod.ConfigError(f"unknown engine keys {sorted(unknown)}", "engine")
    return exact.EngineConfig(**e)


def _sim_config(doc, args) -> mc.SimConfig:
    m = doc.get("mc", {})
    seed = args.seed if args.seed is not None else int(m.get("seed", 0))
    if not 0 <= seed < 2 ** 64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    reps = args.replicates if args.replicates is not None else int(m.get("replicates", 1_000_000))
    th = m.get("thresholds")
    return mc.SimConfig(replicates=reps, seed=seed,
                        thresholds=None if th is None else tuple(cfgmod.numbers(th, "mc.thresholds")),
                        confidence=cfgmod.number(m.get("confidence", 0.99), "mc.confidence"))


def _tol(doc, args) -> float:
    tol = args.tol if args.tol is not None else cfgmod.number(doc.get("tol", poisson.DEFAULT_TOL), "tol")
    if not tol > 0:
        raise UsageError("tol must be positive")
    return tol


def _scenario(doc):
    if "scenario" not in doc:
        raise cfgmod.ConfigError("missing 'scenario' section")
    s = cfgmod.parse_scenario(doc["scenario"])
    bad = validate_scenario(s)
    if bad:
        raise ScenarioError(bad)
    return s


def _sweep_spec(doc) -> sweeps.SweepSpec:
    sw = doc.get("sweep")
    if not isinstance(sw, dict):
        raise cfgmod.ConfigError("missing 'sweep' section")
    grid = sw.get("grid")
    if isinstance(grid, dict):
        grid = sweeps.decimal_grid(grid["start"], grid["stop"], grid.get("step", "0.01"))
    else:
        grid = cfgmod.numbers(grid, "sweep.grid")
    agents = sw.get("agents")
    try:
        return sweeps.SweepSpec(sw.get("parameter"), grid, sw.get("outputs", ["C_i_ind"]),
                                root=bool(sw.get("root", False)),
                                agents=None if agents is None else tuple(int(a) - 1 for a in agents))
    except ValueError as exc:
        raise cfgmod.ConfigError(str(exc), "sweep") from None


def _figure_settings(doc) -> sweeps.FigureSettings:
    f = doc.get("figures", {})
    kw = {}
    if "step" in f:
        kw["step"] = str(f["step"])
    for k in ("q", "d"):
        if k in f:
            kw[k] = int(f[k])
    if "alphas" in f:
        kw["alphas"] = tuple(cfgmod.numbers(f["alphas"], "figures.alphas"))
    return sweeps.FigureSettings(**kw)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cmd = _subcommand(args)
        doc = cfgmod.load(args.config) if args.config else {"schema_version": cfgmod.SCHEMA_VERSION}
        if cmd != "figures" and not args.config:
            raise UsageError(f"'{cmd}' needs --config")
        os.makedirs(args.out, exist_ok=True)
        engine = _engine(doc)
        tol = _tol(doc, args)
        status = EXIT_OK
        if cmd == "exact":
            s = _scenario(doc)
            outputs = [o for o in sweeps.Output if o not in (sweeps.Output.POISSON_APPROX, sweeps.Output.MC_CHECK)]
            rows = sweeps.evaluate_point(s, outputs, config=engine)
            written = [_write(args.out, "exact.csv", rows)]
        elif cmd == "sweep":
            s = _scenario(doc)
            spec = _sweep_spec(doc)
            rows = sweeps.run_sweep(s, spec, config=engine, tol=tol, mc_cfg=_sim_config(doc, args))
            written = [_write(args.out, "sweep.csv", rows)]
        elif cmd == "poisson":
            s = _scenario(doc)
            rows = sweeps.evaluate_point(s, [sweeps.Output.POISSON_APPROX], config=engine, tol=tol)
            written = [_write(args.out, "poisson.csv", rows)]
        elif cmd == "mc":
            s = _scenario(doc)
            rows, ok = sweeps.mc_rows(s, _sim_config(doc, args), config=engine)
            written = [_write(args.out, "mc.csv", rows)]
            status = EXIT_OK if ok else EXIT_MC_FAILED
        else:
            jobs = sweeps.figure_jobs(_figure_settings(doc))
            only = doc.get("figures", {}).get("only")
            written, manifest = [], {}
            for name, group in jobs.items():
                if only and name not in only:
                    continue
                written.append(_write(args.out, f"{name}.csv", sweeps.figure_rows(group, config=engine, tol=tol)))
                manifest[name] = sorted({j.label for j in group})
            with open(os.path.join(args.out, "figures.json"), "w", encoding="utf-8", newline="\n") as fh:
                json.dump({"schema_version": cfgmod.SCHEMA_VERSION, "series": manifest}, fh, indent=2, sort_keys=True)
                fh.write("\n")
        print(json.dumps({"status": "ok" if status == EXIT_OK else "mc_check_failed", "files": written}))
        return status
    except (ScenarioError, cfgmod.ConfigError, UsageError, exact.CapExceeded, ValueError, KeyError) as exc:
        _error(exc)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - report anything else as JSON too
        _error(exc)
        return EXIT_FAILURE


def _write(out, name, rows) -> str:
    path = os.path.join(out, name)
    sweeps.write_csv(path, rows)
    return path


def _error(exc) -> None:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    violations = getattr(exc, "violations", None)
    if violations:
        doc["violations"] = [v.to_dict() for v in violations]
    json.dump(doc, sys.stderr, default=lambda x: x if not isinstance(x, float) or math.isfinite(x) else str(x))
    sys.stderr.write("\n")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
