"""Command-line entry point: ``quadsmc run`` and ``quadsmc compare``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .artifacts import write_run
from .config import CLI_SCENARIOS, ConfigError, RunConfig, load_config
from .control import CONTROLLERS
from .engine import SimConfig, run_scenario
from .metrics import ComparisonReport

log = logging.getLogger("quadsmc")

EXIT_OK, EXIT_CONFIG, EXIT_FAILED, EXIT_ABORT = 0, 1, 2, 3
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    name = os.environ.get("QUADSMC_LOG_LEVEL", "warn").lower()
    level = LOG_LEVELS.get(name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if name not in LOG_LEVELS:
        log.warning("unknown QUADSMC_LOG_LEVEL %r, using warn", name)


def _choice(value: str, valid, what: str) -> str:
    if value not in valid:
        raise ConfigError(f"unknown {what} {value!r}; valid ids: {', '.join(valid)}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadsmc", description="Quadrotor sliding-mode control benchmarks.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scenario", required=True, help="flip | flip-inverted | lemniscate")
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--duration", type=float)
        sp.add_argument("--dt-physics", type=float)
        sp.add_argument("--dt-control", type=float)
        sp.add_argument("--no-disturbance", action="store_true")
        sp.add_argument("--no-uncertainty", action="store_true")
        sp.add_argument("--plots", action="store_true", help="also render PNG figures")

    run = sub.add_parser("run", help="simulate one controller")
    run.add_argument("--controller", required=True,
                     help="proposed | geometric | euler-smc | quat-pd")
    common(run)
    cmp_ = sub.add_parser("compare", help="run all four controllers on one scenario")
    common(cmp_)
    cmp_.add_argument("--jobs", type=int, default=1, help="parallel runs (default 1)")
    return p


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.duration is not None:
        if not args.duration > 0:
            raise ConfigError("--duration must be positive")
        cfg.duration = args.duration
    if args.dt_physics is not None or args.dt_control is not None:
        try:
            cfg.sim = replace(cfg.sim,
                              dt_physics=args.dt_physics if args.dt_physics is not None else cfg.sim.dt_physics,
                              dt_control=args.dt_control if args.dt_control is not None else cfg.sim.dt_control)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if args.no_disturbance:
        cfg.disturbance = False
    if args.no_uncertainty:
        cfg.uncertainty = False
    return cfg


def _run_one(cfg: RunConfig, scenario: str, controller: str, out: Path, plots: bool):
    sc = cfg.scenario(scenario)
    simlog = run_scenario(sc, controller, cfg.gains_for(controller), cfg.sim, cfg.plant, cfg.believed)
    metrics = write_run(simlog, out)
    if plots:
        from .plotting import plot_run
        plot_run(simlog, out, f"{scenario} / {controller}")
    return simlog, metrics


def _status(simlog) -> int:
    if simlog.aborted:
        return EXIT_ABORT
    if simlog.failed.any():
        return EXIT_FAILED
    return EXIT_OK


def _prepare(args) -> RunConfig:
    _choice(args.scenario, CLI_SCENARIOS, "scenario")
    cfg = _apply_overrides(load_config(args.config), args)
    try:
        cfg.scenario(args.scenario)  # validates duration against dt
        if cfg.duration is not None:
            n = cfg.duration / cfg.sim.dt_physics
            if abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ConfigError("duration must be an integer multiple of dt_physics")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def cmd_run(args) -> int:
    cfg = _prepare(args)
    _choice(args.controller, CONTROLLERS, "controller")
    try:
        simlog, metrics = _run_one(cfg, args.scenario, args.controller, Path(args.out), args.plots)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(json.dumps(metrics.to_dict(), sort_keys=True))
    if simlog.aborted:
        log.error("integrator abort: %s", simlog.abort_reason)
    return _status(simlog)


def _compare_job(item):
    cfg, scenario, controller, out, plots = item
    simlog, metrics = _run_one(cfg, scenario, controller, out, plots)
    return controller, simlog, metrics


def cmd_compare(args) -> int:
    cfg = _prepare(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, args.scenario, c, out / c, args.plots) for c in CONTROLLERS]
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=min(args.jobs, len(jobs))) as ex:
                results = list(ex.map(_compare_job, jobs))
        else:
            results = [_compare_job(j) for j in jobs]
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = ComparisonReport(args.scenario, {c: m for c, _, m in results})
    doc = report.to_dict()
    doc["status"] = {c: {"aborted": lg.aborted, "failed": bool(lg.failed.any())} for c, lg, _ in results}
    (out / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.plots:
        from .plotting import plot_comparison
        plot_comparison({c: lg for c, lg, _ in results}, out, args.scenario)
    for c, _, m in results:
        print(f"{c:10s} rmse_pos={m.rmse_position:.4f} rmse_att={m.rmse_attitude:.4f} "
              f"effort={m.control_effort:.4f} sat={m.saturation_fraction:.4f} failed={m.failed}")
    # a flagged benchmark failure is an expected comparison outcome, an abort is not
    return EXIT_ABORT if any(lg.aborted for _, lg, _ in results) else EXIT_OK


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_compare(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
