"""Command line entry points.

`stablelab run <config>` executes one experiment and writes a CSV of
estimates plus a JSON sidecar echoing the fully resolved configuration;
`stablelab validate <config>` prints every diagnostic and exits nonzero
if there are any.  Exit codes: 0 success, 1 configuration problem,
2 runtime failure.

Estimate columns of the CSV depend only on the config and the seed, never
on the thread count; wall_time_s is the one column allowed to vary.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config, resolve_config, validate_config
from .drivers import path_stream, sample_stable_increment
from .errors import ConfigurationError, StableLabError
from .estimators import (
    EstimateReport,
    estimate_big_jump_exit,
    estimate_exit_time,
    estimate_hitting,
    estimate_targeted_jump,
    estimate_tube_probability,
    fit_holder_exponent,
    harmonic_evaluate,
    oscillation_decay,
)
from .engine import SimulationConfig
from .estimators import _scale_config  # shared scale-to-clock convention
from .geometry import AnisotropicBox
from .operator import dynkin_check, levy_system_check
from . import svg

OUT_ENV = "STABLELAB_OUT"

CSV_HEADER = ["experiment", "param_name", "param_value", "estimate",
              "std_error", "ci95_lo", "ci95_hi", "n_samples",
              "censored_fraction", "seed", "wall_time_s"]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return format(v, ".10g")
    return str(v)


def _row(rep: EstimateReport) -> list:
    return [rep.experiment, rep.param_name, rep.param_value, rep.estimate,
            rep.std_error, rep.ci_low, rep.ci_high, rep.n_samples,
            rep.censored_fraction, rep.seed, rep.wall_time_s]


def _stat_row(experiment, param_name, param_value, estimate, std_error,
              ci_lo, ci_hi, n_samples, seed, wall) -> list:
    return [experiment, param_name, param_value, estimate, std_error,
            ci_lo, ci_hi, n_samples, float("nan"), seed, wall]


def _report_dict(rep: EstimateReport) -> dict:
    d = dataclasses.asdict(rep)
    d["param_value"] = None if math.isnan(rep.param_value) else rep.param_value
    return d


# ---------------------------------------------------------------------------
# experiment runners: each returns (rows, results, plot_spec or None)


def _run_exit_time(rc):
    study = estimate_exit_time(
        rc["x0"], rc["field"], rc["indices"], rc["r_list"], rc["n_paths"],
        rc["seed"], k=rc["k"], dt_steps=rc["dt_steps"],
        horizon_steps=rc["horizon_steps"], n_threads=rc["n_threads"])
    rows = [_row(rep) for rep in study.reports]
    wall = sum(rep.wall_time_s for rep in study.reports)
    fit = study.fit
    rows.append(_stat_row("exit-time", "slope", float("nan"), fit.slope,
                          fit.slope_se, fit.slope - 1.96 * fit.slope_se,
                          fit.slope + 1.96 * fit.slope_se, fit.n_points,
                          rc["seed"], wall))
    results = {
        "slope": fit.slope, "slope_se": fit.slope_se,
        "intercept": fit.intercept, "alpha_max": rc["indices"].alpha_max,
        "reports": [_report_dict(rep) for rep in study.reports],
        "warnings": list(study.warnings),
    }
    plot = {
        "xs": [rep.param_value for rep in study.reports],
        "ys": [rep.estimate for rep in study.reports],
        # the WLS fit lives in natural-log coordinates; the plot is log10
        "fit": (fit.slope, fit.intercept / math.log(10.0)),
        "title": "mean exit time vs box scale",
        "xlabel": "r", "ylabel": "mean exit time", "loglog": True,
    }
    return rows, results, plot


def _run_jump_exit(rc):
    study = estimate_big_jump_exit(
        rc["x0"], rc["field"], rc["indices"], rc["r"], rc["R_list"],
        rc["n_paths"], rc["seed"], k=rc["k"], dt_steps=rc["dt_steps"],
        horizon_steps=rc["horizon_steps"], n_threads=rc["n_threads"])
    rows = [_row(rep) for rep in study.reports]
    wall = sum(rep.wall_time_s for rep in study.reports)
    fit = study.fit
    rows.append(_stat_row("jump-exit", "slope", float("nan"), fit.slope,
                          fit.slope_se, fit.slope - 1.96 * fit.slope_se,
                          fit.slope + 1.96 * fit.slope_se, fit.n_points,
                          rc["seed"], wall))
    results = {
        "slope": fit.slope, "slope_se": fit.slope_se,
        "n_exits": study.n_exits, "alpha_max": rc["indices"].alpha_max,
        "reports": [_report_dict(rep) for rep in study.reports],
        "warnings": list(study.warnings),
    }
    pos = [(rep.param_value, rep.estimate) for rep in study.reports
           if rep.estimate > 0.0]
    plot = None
    if len(pos) >= 2:
        plot = {
            "xs": [p[0] for p in pos], "ys": [p[1] for p in pos],
            "fit": (fit.slope, fit.intercept / math.log(10.0)),
            "title": "far-landing probability vs outer scale",
            "xlabel": "R", "ylabel": "P(land beyond R)", "loglog": True,
        }
    return rows, results, plot


def _run_targeted_jump(rc):
    study = estimate_targeted_jump(
        rc["x0"], rc["field"], rc["indices"], rc["driver_axis"],
        rc["jump_size"], rc["tube"], rc["horizon"], rc["n_paths"],
        rc["seed"], rc["dt"], rc["jump_threshold"],
        n_threads=rc["n_threads"])
    rows = [_row(study.report)]
    results = {"probability": study.report.estimate,
               "ci95_lo": study.report.ci_low,
               "n_success": study.n_success,
               "reports": [_report_dict(study.report)],
               "warnings": list(study.warnings)}
    return rows, results, None


def _run_tube(rc):
    study = estimate_tube_probability(
        rc["x0"], rc["field"], rc["indices"], rc["phi_times"],
        rc["phi_points"], rc["eps"], rc["n_paths"], rc["seed"], rc["dt"],
        rc["jump_threshold"], n_threads=rc["n_threads"])
    rows = [_row(study.report)]
    results = {"probability": study.report.estimate,
               "ci95_lo": study.report.ci_low,
               "n_success": study.n_success,
               "reports": [_report_dict(study.report)],
               "warnings": list(study.warnings)}
    return rows, results, None


def _run_hit(rc):
    box = rc["box"]
    config = _scale_config(box.r, rc["indices"], rc["dt_steps"],
                           rc["horizon_steps"], rc["n_threads"])
    if rc["jump_threshold"] is not None:
        config = dataclasses.replace(config,
                                     jump_threshold=rc["jump_threshold"])
    study = estimate_hitting(rc["x0"], rc["field"], rc["indices"],
                             rc["target"], box, rc["n_paths"], rc["seed"],
                             config)
    rows = [_row(study.report)]
    results = {"probability": study.report.estimate,
               "ci95_lo": study.report.ci_low,
               "n_hits": study.n_hits,
               "reports": [_report_dict(study.report)],
               "warnings": list(study.warnings)}
    return rows, results, None


def _harmonic_config(rc):
    config = _scale_config(rc["domain"].r, rc["indices"], rc["dt_steps"],
                           rc["horizon_steps"], rc["n_threads"])
    if rc.get("jump_threshold") is not None:
        config = dataclasses.replace(config,
                                     jump_threshold=rc["jump_threshold"])
    return config


def _run_harmonic(rc):
    hf = harmonic_evaluate(rc["payoff"], rc["domain"], rc["points"],
                           rc["field"], rc["indices"], rc["n_paths"],
                           rc["seed"], _harmonic_config(rc))
    rows = [_row(rep) for rep in hf.reports]
    results = {"points": hf.points.tolist(), "values": hf.values.tolist(),
               "std_errors": hf.std_errors.tolist(),
               "reports": [_report_dict(rep) for rep in hf.reports],
               "warnings": list(hf.warnings)}
    return rows, results, None


def _run_holder(rc):
    grid = AnisotropicBox(center=rc["domain"].center, r=rc["grid_r"],
                          indices=rc["indices"],
                          k=1.0).lattice(rc["points_per_axis"])
    hf = harmonic_evaluate(rc["payoff"], rc["domain"], grid, rc["field"],
                           rc["indices"], rc["n_paths"], rc["seed"],
                           _harmonic_config(rc))
    fit = fit_holder_exponent(hf, rc["grid_r"], rc["indices"],
                              min_pairs=rc["min_pairs"], snr=rc["snr"])
    rows = [_row(rep) for rep in hf.reports]
    wall = sum(rep.wall_time_s for rep in hf.reports)
    rows.append(_stat_row("holder", "beta", float("nan"), fit.beta_hat,
                          fit.beta_se, fit.beta_ci_low,
                          fit.beta_hat + 1.96 * fit.beta_se,
                          fit.pairs_used, rc["seed"], wall))
    results = {"beta_hat": fit.beta_hat, "beta_se": fit.beta_se,
               "beta_ci_low": fit.beta_ci_low, "c_hat": fit.c_hat,
               "pairs_used": fit.pairs_used, "r_scale": fit.r_scale,
               "residual": fit.residual,
               "reports": [_report_dict(rep) for rep in hf.reports],
               "warnings": list(hf.warnings)}
    return rows, results, None


def _run_oscillation(rc):
    study = oscillation_decay(
        rc["x0"], rc["field"], rc["indices"], rc["payoff"], rc["rho"],
        rc["k_max"], rc["n_paths"], rc["seed"], domain_r=rc["domain_r"],
        k=rc["k"], dt_steps=rc["dt_steps"],
        horizon_steps=rc["horizon_steps"],
        points_per_axis=rc["points_per_axis"], n_threads=rc["n_threads"])
    wall = sum(rep.wall_time_s for rep in study.reports)
    rows = []
    for r, osc, se in zip(study.radii, study.oscillation,
                          study.oscillation_se):
        rows.append(_stat_row("oscillation", "scale_r", float(r), float(osc),
                              float(se), float(osc - 1.96 * se),
                              float(osc + 1.96 * se), rc["n_paths"],
                              rc["seed"], wall / len(study.radii)))
    rows.append(_stat_row("oscillation", "decay_ratio", float("nan"),
                          study.decay_ratio, float("nan"), float("nan"),
                          study.decay_ratio_upper95, study.n_scales_used,
                          rc["seed"], wall))
    results = {"radii": study.radii.tolist(),
               "oscillation": study.oscillation.tolist(),
               "oscillation_se": study.oscillation_se.tolist(),
               "decay_ratio": study.decay_ratio,
               "decay_ratio_upper95": study.decay_ratio_upper95,
               "n_scales_used": study.n_scales_used,
               "warnings": list(study.warnings)}
    plot = {
        "xs": study.radii[:study.n_scales_used].tolist(),
        "ys": study.oscillation[:study.n_scales_used].tolist(),
        "fit": None,
        "title": "harmonic oscillation vs box scale",
        "xlabel": "box scale", "ylabel": "oscillation", "loglog": True,
    }
    return rows, results, plot


def _run_levy_system(rc):
    config = SimulationConfig(dt=rc["dt"], horizon=rc["horizon"],
                              jump_threshold=rc["jump_threshold"],
                              n_threads=rc["n_threads"])
    t0 = time.perf_counter()
    rep = levy_system_check(rc["x0"], rc["field"], rc["indices"], rc["box"],
                            rc["target"], config, rc["n_paths"], rc["seed"])
    wall = time.perf_counter() - t0
    rows = [
        _stat_row("levy-system", "mean_count", float("nan"), rep.mean_count,
                  float("nan"), float("nan"), float("nan"), rep.n_paths,
                  rc["seed"], wall),
        _stat_row("levy-system", "mean_integral", float("nan"),
                  rep.mean_integral, float("nan"), float("nan"),
                  float("nan"), rep.n_paths, rc["seed"], wall),
        _stat_row("levy-system", "z_score", float("nan"), rep.z_score,
                  rep.se_diff, float("nan"), float("nan"), rep.n_paths,
                  rc["seed"], wall),
    ]
    results = {"mean_count": rep.mean_count,
               "mean_integral": rep.mean_integral,
               "z_score": rep.z_score, "se_diff": rep.se_diff,
               "threshold": rep.threshold, "gap": rep.gap,
               "degenerate": rep.degenerate,
               "warnings": (["both sides are exactly zero; the identity "
                             "was not exercised"] if rep.degenerate else [])}
    return rows, results, None


def _run_dynkin(rc):
    from .operator import CosineRidge

    f = CosineRidge(np.asarray(rc["w"], dtype=float), anchor=rc["x0"])
    t0 = time.perf_counter()
    reports = dynkin_check(f, rc["x0"], rc["field"], rc["indices"],
                           rc["t_list"], rc["n_paths"], rc["seed"],
                           steps_per_horizon=rc["steps_per_horizon"],
                           jump_threshold=rc["jump_threshold"],
                           n_threads=rc["n_threads"])
    wall = time.perf_counter() - t0
    rows = []
    for rep in reports:
        rows.append(_stat_row("dynkin", "t", rep.horizon, rep.quotient,
                              rep.quotient_se,
                              rep.quotient - 1.96 * rep.quotient_se,
                              rep.quotient + 1.96 * rep.quotient_se,
                              rep.n_paths, rc["seed"],
                              wall / len(reports)))
    gen = reports[0]
    rows.append(_stat_row("dynkin", "generator", float("nan"),
                          gen.generator_value, gen.generator_bound,
                          gen.generator_value - gen.generator_bound,
                          gen.generator_value + gen.generator_bound,
                          gen.n_paths, rc["seed"], wall))
    results = {"generator_value": gen.generator_value,
               "generator_bound": gen.generator_bound,
               "quotients": [{"t": rep.horizon, "quotient": rep.quotient,
                              "se": rep.quotient_se, "z": rep.z_score}
                             for rep in reports],
               "warnings": []}
    return rows, results, None


def _run_driver_selftest(rc):
    rows = []
    cells = []
    n = rc["n_samples"]
    worst = 0.0
    cell_index = 0
    for g in rc["gammas"]:
        for xi in rc["xi_list"]:
            rng = path_stream(rc["seed"], cell_index)
            cell_index += 1
            t0 = time.perf_counter()
            y = sample_stable_increment(g, 1.0, rng, size=n)
            emp = float(np.mean(np.cos(xi * y)))
            se = float(np.std(np.cos(xi * y), ddof=1)) / math.sqrt(n)
            wall = time.perf_counter() - t0
            target = math.exp(-xi ** g)
            z = (emp - target) / se if se > 0.0 else 0.0
            worst = max(worst, abs(z))
            rows.append(_stat_row("driver-selftest", f"cf[gamma={g:g}]",
                                  xi, emp, se, emp - 1.96 * se,
                                  emp + 1.96 * se, n, rc["seed"], wall))
            cells.append({"gamma": g, "xi": xi, "empirical": emp,
                          "target": target, "se": se, "z": z})
    results = {"cells": cells, "max_abs_z": worst,
               "warnings": ([f"max |z| = {worst:.2f} exceeds 3"]
                            if worst > 3.0 else [])}
    return rows, results, None


_RUNNERS = {
    "exit-time": _run_exit_time,
    "jump-exit": _run_jump_exit,
    "targeted-jump": _run_targeted_jump,
    "tube": _run_tube,
    "hit": _run_hit,
    "harmonic": _run_harmonic,
    "holder": _run_holder,
    "oscillation": _run_oscillation,
    "levy-system": _run_levy_system,
    "dynkin": _run_dynkin,
    "driver-selftest": _run_driver_selftest,
}


# ---------------------------------------------------------------------------
# output


def _write_csv(path: Path, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _write_sidecar(path: Path, resolved, results, wall_total) -> None:
    doc = {"version": __version__, "config": resolved, "results": results,
           "total_wall_time_s": wall_total}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _out_dir(args) -> Path:
    if args.out is not None:
        return Path(args.out)
    env = os.environ.get(OUT_ENV)
    return Path(env) if env else Path.cwd()


# ---------------------------------------------------------------------------
# commands


def _cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    diags = validate_config(cfg)
    for d in diags:
        print(d)
    if diags:
        print(f"{len(diags)} problem(s) found", file=sys.stderr)
        return 1
    print("ok")
    return 0


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        diags = validate_config(cfg)
        if diags:
            for d in diags:
                print(d, file=sys.stderr)
            return 1
        rc = resolve_config(cfg, seed=args.seed, n_threads=args.threads)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out_dir = _out_dir(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config).stem

    t0 = time.perf_counter()
    try:
        rows, results, plot = _RUNNERS[rc["experiment"]](rc)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except StableLabError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    wall_total = time.perf_counter() - t0

    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    _write_csv(csv_path, rows)
    _write_sidecar(json_path, rc["resolved"], results, wall_total)
    written = [csv_path, json_path]
    if args.plot and plot is not None:
        svg_path = out_dir / f"{stem}.svg"
        svg.scatter_plot(svg_path, plot["xs"], plot["ys"],
                         title=plot["title"], xlabel=plot["xlabel"],
                         ylabel=plot["ylabel"], fit=plot["fit"],
                         loglog=plot["loglog"])
        written.append(svg_path)

    for w in results.get("warnings", []):
        print(f"warning: {w}", file=sys.stderr)
    for p in written:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablelab",
        description="Monte Carlo experiments for systems driven by "
                    "independent symmetric stable noises")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment config")
    run.add_argument("config", help="path to a .json or .yaml experiment "
                                    "file")
    run.add_argument("--plot", action="store_true",
                     help="also write an SVG plot when the experiment "
                          "has one")
    run.add_argument("--threads", type=int, default=None, metavar="N",
                     help="worker threads (overrides the config; results "
                          "are identical for any value)")
    run.add_argument("--seed", type=int, default=None, metavar="S",
                     help="master seed (overrides the config)")
    run.add_argument("--out", default=None, metavar="DIR",
                     help=f"output directory (default: ${OUT_ENV} or the "
                          "working directory)")

    val = sub.add_parser("validate", help="check a config and list every "
                                          "problem")
    val.add_argument("config", help="path to a .json or .yaml experiment "
                                    "file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_run(args)
    except StableLabError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 2


if __name__ == "__main__":
    sys.exit(main())
