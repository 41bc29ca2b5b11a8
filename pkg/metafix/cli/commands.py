# -*- coding: utf-8; -*-
"""The subcommands of `metafix`: `solve`, `simulate` and `sweep`.

Each command takes the parsed `argparse` namespace and returns an exit code:
0 on success, 2 when a solver fails numerically. Usage and configuration
problems propagate as exceptions; `metafix.cli.main` maps them to exit code 1.
"""

__all__ = ["cmd_solve", "cmd_simulate", "cmd_sweep", "SOLVERS", "MAX_SWEEP_CELLS",
           "trajectory_rows", "TRAJECTORY_COLUMNS", "SUMMARY_COLUMNS"]

import itertools
import logging
import math
import pathlib
import sys

import numpy as np

from ..colorizer import ColorScheme, colorize
from ..config import load_config
from ..diagnostics import analyze, self_model_accuracy
from ..errors import BudgetExhausted, NumericalFailure, SizeError
from ..goalspace import total_variation
from ..fixpoint import (SurrogateSearchConfig, banach_iterate, grid_fixed_point_search,
                        markov_invariant, surrogate_guided_search)
from ..metagoal import GLOBAL_VARIANTS
from ..simulator import run_scenario
from ..testmaps import get_map
from ..utils import child_seed, format_float, format_vector, parallel_map
from .io import RunManifest, digest_of, load_kernel_csv, write_csv, write_report

logger = logging.getLogger(__name__)

SOLVERS = ("banach", "markov", "grid", "surrogate")
MAX_SWEEP_CELLS = 1024

TRAJECTORY_COLUMNS = ("interval", "mode", "goal_step", "satisfaction",
                      "goals_ok", "metagoal_ok", "metric_ok", "moderated_ok", "overall_ok",
                      "violation_rate", "residual_w1", "residual_tv", "mpv", "evaluations")

SUMMARY_COLUMNS = ("cell", "replication", "seed", "params",
                   "plateau_level", "plateau_onset", "mean_empirical_c", "violation_rate",
                   "self_model_accuracy")


def _say(text, color=None):
    if color is not None and sys.stdout.isatty():
        text = colorize(text, color)
    print(text)


def _outdir(args):
    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------------
# solve

def _solve_settings(args):
    return {"solver": args.solver, "map": args.map, "kernel": args.kernel,
            "start": args.start, "tol": args.tol, "epsilon": args.epsilon,
            "budget": args.budget, "seed": args.seed, "sampler": args.sampler}


def cmd_solve(args):
    """Run one fixed-point solver on a built-in test map or a kernel file; write `solve.json`."""
    if args.solver not in SOLVERS:
        raise ValueError(f"unknown solver {args.solver!r}; expected one of {SOLVERS}")
    outdir = _outdir(args)
    settings = _solve_settings(args)
    if args.kernel is not None:
        settings["kernel"] = pathlib.Path(args.kernel).name
    manifest = RunManifest("solve", digest_of(settings), args.seed)
    report_path = outdir / "solve.json"
    manifest = manifest.with_outputs(report_path)

    try:
        body = _run_solver(args)
        status = 0
    except NumericalFailure as err:
        logger.warning(f"solve: {type(err).__name__}: {err}")
        body = {"status": type(err).__name__, "message": str(err),
                "point": _as_list(err.point),
                "residual": err.residual, "iterations": err.iterations,
                "evaluations": err.evaluations}
        if isinstance(err, BudgetExhausted) and err.best is not None:
            body["best"] = {"point": list(err.best.point), "residual": err.best.residual}
        status = 2
    body = {"settings": settings, **body}
    write_report(report_path, manifest, body)
    if status == 0:
        shown = body.get("point") or body.get("distribution")
        _say(f"{args.solver}: residual {format_float(body['residual'])}, "
             f"{body['iterations']} iterations, {body['evaluations']} evaluations", ColorScheme.SUCCESS)
        _say(f"  {format_vector(shown)}")
    else:
        _say(f"{args.solver}: {body['status']}: {body['message']}", ColorScheme.FAILURE)
    return status


def _as_list(point):
    if point is None:
        return None
    if hasattr(point, "probs"):  # a distribution
        return point.probs.tolist()
    return [float(x) for x in point]


def _run_solver(args):
    if args.solver == "markov":
        if args.kernel is None:
            raise ValueError("the markov solver needs --kernel")
        T = load_kernel_csv(args.kernel)
        mu = markov_invariant(T, tol=args.tol, max_iter=args.budget)
        residual = total_variation(T.push(mu), mu)
        return {"status": "ok", "distribution": mu.probs.tolist(), "residual": residual,
                "iterations": None, "evaluations": None}
    if args.map is None:
        raise ValueError(f"the {args.solver} solver needs --map")
    F = get_map(args.map)
    if args.solver == "banach":
        start = args.start if args.start is not None else F.start
        result = banach_iterate(F, np.array(start, dtype=float), tol=args.tol, max_iter=args.budget)
    elif args.solver == "grid":
        result = grid_fixed_point_search(F, F.domain, args.epsilon, args.budget)
    else:
        cfg = SurrogateSearchConfig(max_evaluations=args.budget, seed=args.seed, sampler=args.sampler)
        result = surrogate_guided_search(F, F.domain, args.epsilon, cfg)
    return {"status": "ok", "point": list(result.point), "residual": result.residual,
            "iterations": result.iterations, "evaluations": result.evaluations,
            "empirical_contraction": result.empirical_contraction}


# --------------------------------------------------------------------------------
# simulate

def trajectory_rows(traj):
    """One row per interval, keyed by `TRAJECTORY_COLUMNS`. `violation_rate` is cumulative."""
    rows = []
    checked = violated = 0
    for m in traj.intervals:
        checks = m.check_dict
        if "overall" in checks:
            checked += 1
            violated += not checks["overall"]
        rows.append({"interval": m.index, "mode": m.mode, "goal_step": m.goal_step,
                     "satisfaction": m.satisfaction,
                     "goals_ok": checks.get("goals"), "metagoal_ok": checks.get("metagoal"),
                     "metric_ok": checks.get("metric"), "moderated_ok": checks.get("moderated"),
                     "overall_ok": checks.get("overall"),
                     "violation_rate": (violated / checked) if checked else 0.0,
                     "residual_w1": m.residual_w1, "residual_tv": m.residual_tv,
                     "mpv": m.mpv, "evaluations": m.evaluations})
    return rows


def _summarize(cfg, traj, metric, queries):
    report = analyze(traj, metric)
    accuracy = None
    if cfg.metagoal.variant in GLOBAL_VARIANTS:
        accuracy = self_model_accuracy(cfg, traj, queries, cfg.seed)
    return report, accuracy


def cmd_simulate(args):
    """Run a scenario; write `trajectory.csv` and `report.json`."""
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    outdir = _outdir(args)
    csv_path, report_path = outdir / "trajectory.csv", outdir / "report.json"
    manifest = RunManifest("simulate", cfg.digest(), cfg.seed).with_outputs(csv_path, report_path)

    traj = run_scenario(cfg)
    report, accuracy = _summarize(cfg, traj, args.metric, args.queries)
    write_csv(csv_path, manifest, TRAJECTORY_COLUMNS, trajectory_rows(traj))
    write_report(report_path, manifest, {"config": cfg.to_mapping(),
                                         "report": report.as_dict(),
                                         "self_model_accuracy": accuracy})
    _say(f"{cfg.metagoal.variant.value}: {len(traj)} intervals, plateau {format_float(report.plateau_level)} "
         f"from interval {report.plateau_onset}, violation rate {format_float(report.condition_violation_rate)}",
         ColorScheme.SUCCESS)
    return 0


# --------------------------------------------------------------------------------
# sweep

def _cell_seed(master, index):
    """Cell 0 keeps the master seed; the others get independent seeds derived from `(master, index)`."""
    if index == 0:
        return master
    return int(child_seed(master, index).generate_state(1)[0])


def sweep_cells(cfg, replications=None):
    """The list of `(overrides, replication)` pairs of a sweep, in cell-index order."""
    replications = replications or cfg.sweep.replications
    keys = [key for key, _ in cfg.sweep.params]
    grids = [values for _, values in cfg.sweep.params]
    combos = list(itertools.product(*grids)) if grids else [()]
    cells = [(dict(zip(keys, combo)), r) for combo in combos for r in range(replications)]
    if len(cells) > MAX_SWEEP_CELLS:
        raise SizeError(f"sweep has {len(cells)} cells, cap is {MAX_SWEEP_CELLS}")
    return cells


def cmd_sweep(args):
    """Run every cell of the config's `[sweep]`; write `summary.csv` and `sweep.json`."""
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    cells = sweep_cells(cfg, args.replications)
    outdir = _outdir(args)
    csv_path, report_path = outdir / "summary.csv", outdir / "sweep.json"
    manifest = RunManifest("sweep", cfg.digest(), cfg.seed).with_outputs(csv_path, report_path)

    def run_cell(item):
        index, (overrides, replication) = item
        cell_cfg = cfg.with_overrides(overrides).with_seed(_cell_seed(cfg.seed, index))
        traj = run_scenario(cell_cfg)
        report, accuracy = _summarize(cell_cfg, traj, args.metric, args.queries)
        logger.info(f"sweep cell {index}: {overrides}, replication {replication} done")
        return {"cell": index, "replication": replication, "seed": cell_cfg.seed,
                "params": ";".join(f"{k}={v}" for k, v in overrides.items()),
                "plateau_level": report.plateau_level, "plateau_onset": report.plateau_onset,
                "mean_empirical_c": report.mean_empirical_c,
                "violation_rate": report.condition_violation_rate,
                "self_model_accuracy": accuracy}

    rows = parallel_map(run_cell, list(enumerate(cells)))
    write_csv(csv_path, manifest, SUMMARY_COLUMNS, rows)
    write_report(report_path, manifest, {"config": cfg.to_mapping(), "cells": rows})
    finite = [r["plateau_level"] for r in rows if not math.isnan(r["plateau_level"])]
    _say(f"sweep: {len(rows)} cells, median plateau {format_float(float(np.median(finite))) if finite else 'n/a'}",
         ColorScheme.SUCCESS)
    return 0
