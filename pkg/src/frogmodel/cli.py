"""Command-line entry point: config handling, orchestration, CSV/JSON output.

Every subcommand reads a JSON config (plus a few flag overrides), writes a
CSV of results and a JSON metadata sidecar (config echo, seeds, build id,
wall clock), and exits 0 on success, 2 on validation errors, 3 when any
result was capped or censored.  Reruns with the same config and seed are
byte-identical except for wall-clock fields, which live only in the
sidecar.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import verify_reach_tail_lower, verify_sandwich
from .conditions import check_explosion, check_nonexplosion, check_speed_series
from .distributions import dist_from_config
from .frogsim import FrogConfig, regime_diagnostic, simulate
from .rng import parallel_map, substream
from .speed import SpeedFunction
from .tadibp import (dry_frequency, dry_probability, no_overshoot_frequency,
                     overshoot_sequence, sample_grain_fields, wet_mask)
from .walks import binomial_stderr, estimate_reach_tail

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3

OUTPUT_ENV = "FROGMODEL_OUT"


class ConfigError(Exception):
    pass


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")


def _check_keys(cfg: dict, known: set, required: set, where: str) -> None:
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"{where}: unknown config keys: {sorted(unknown)}")
    missing = required - set(cfg)
    if missing:
        raise ConfigError(f"{where}: missing required keys: {sorted(missing)}")


def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             cwd=Path(__file__).parent, capture_output=True,
                             text=True, timeout=5)
        return out.stdout.strip() or "unknown"
    except Exception:
        return "unknown"


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path: Path, fieldnames: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in fieldnames])


def _write_outputs(outdir: Path, name: str, fieldnames: list, rows: list,
                   meta: dict, wall: float) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    _write_csv(outdir / f"{name}.csv", fieldnames, rows)
    sidecar = {"subcommand": name, "version": __version__,
               "build": _git_describe(), **meta, "wall_clock_s": wall}
    with open(outdir / f"{name}_meta.json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _speed_from(cfg: dict, horizon: int) -> SpeedFunction:
    return SpeedFunction.from_config(cfg, horizon=horizon)


# -- subcommands ---------------------------------------------------------------

_FROG_KEYS = {"dist", "right_horizon", "left_mode", "left_horizon",
              "particle_cap", "time_cap", "event_cap", "prune_window",
              "cohort_cap", "seed", "replicas", "origin_boost"}


def _frog_config(cfg: dict, seed: int) -> FrogConfig:
    keys = set(cfg) - {"dist", "replicas", "seed"}
    return FrogConfig(dist=dist_from_config(cfg["dist"]), seed=seed,
                      **{k: cfg[k] for k in keys})


def _run_one_frog(args):
    cfg, replica = args
    base_seed = cfg.get("seed", 0)
    rep_seed = int(substream(base_seed, "replica", replica).integers(1 << 62))
    return simulate(_frog_config(cfg, rep_seed))


def cmd_sim_frog(cfg: dict, outdir: Path, workers: int) -> int:
    _check_keys(cfg, _FROG_KEYS, {"dist", "right_horizon"}, "sim-frog")
    replicas = int(cfg.get("replicas", 1))
    t0 = time.perf_counter()
    records = parallel_map(_run_one_frog, [(cfg, r) for r in range(replicas)],
                           workers)
    rows = []
    for r, rec in enumerate(records):
        for site in range(1, rec.right_horizon + 1):
            reached = not math.isnan(rec.theta[site])
            rows.append({"replica": r, "site": site,
                         "theta": rec.theta[site] if reached else float("nan"),
                         "reached": int(reached)})
    capped = any(rec.stop_reason not in ("reached-horizon", "starved")
                 for rec in records)
    meta = {"config": cfg,
            "stop_reasons": [rec.stop_reason for rec in records],
            "flags": [rec.flags for rec in records],
            "n_events": [rec.n_events for rec in records],
            "exit_code": EXIT_PARTIAL if capped else EXIT_OK}
    _write_outputs(outdir, "sim-frog", ["replica", "site", "theta", "reached"],
                   rows, meta, time.perf_counter() - t0)
    return EXIT_PARTIAL if capped else EXIT_OK


_TADIBP_KEYS = {"dist", "speed", "horizon", "fields", "reach_cap",
                "traj_cap", "seed"}


def cmd_sim_tadibp(cfg: dict, outdir: Path, workers: int) -> int:
    _check_keys(cfg, _TADIBP_KEYS, {"dist", "speed", "horizon"}, "sim-tadibp")
    horizon = int(cfg["horizon"])
    cap = int(cfg.get("reach_cap", 64))
    traj_cap = int(cfg.get("traj_cap", 100_000))
    n_fields = int(cfg.get("fields", 1))
    seed = int(cfg.get("seed", 0))
    dist = dist_from_config(cfg["dist"])
    speed = _speed_from(cfg["speed"], horizon + cap)
    t0 = time.perf_counter()
    fields = sample_grain_fields(speed, dist, horizon, substream(seed, "tadibp"),
                                 n_fields=n_fields, cap=cap, traj_cap=traj_cap)
    rows = []
    any_saturated = False
    for f, psi in enumerate(fields):
        y = overshoot_sequence(psi)
        wet = wet_mask(psi)
        for site in range(horizon + 1):
            sat = bool(psi.value_saturated[site])
            trunc = bool(psi.count_truncated[site])
            any_saturated = any_saturated or sat or trunc
            rows.append({"field": f, "site": site, "psi": int(psi.lengths[site]),
                         "overshoot": int(y[site]), "wet": int(wet[site]),
                         "value_saturated": int(sat), "count_truncated": int(trunc)})
    meta = {"config": cfg, "reach_cap": cap, "traj_cap": traj_cap,
            "censoring_note": f"connectivity statements are horizon-censored at {horizon}",
            "exit_code": EXIT_PARTIAL if any_saturated else EXIT_OK}
    _write_outputs(outdir, "sim-tadibp",
                   ["field", "site", "psi", "overshoot", "wet",
                    "value_saturated", "count_truncated"], rows, meta,
                   time.perf_counter() - t0)
    return EXIT_PARTIAL if any_saturated else EXIT_OK


_DRY_KEYS = {"dist", "speed", "sites", "reach_replicas", "fields",
             "reach_cap", "traj_cap", "seed"}


def cmd_dry_prob(cfg: dict, outdir: Path, workers: int) -> int:
    """Product formula with MC tail inputs vs empirical event frequencies.

    Emits both the frequency of the product's own event (no germ left of m
    overgrows past m) and the classical dry frequency (thresholds tighter
    by one); the two differ and the columns say which is which.
    """
    _check_keys(cfg, _DRY_KEYS, {"dist", "speed", "sites"}, "dry-prob")
    sites = [int(m) for m in cfg["sites"]]
    reach_reps = int(cfg.get("reach_replicas", 100_000))
    n_fields = int(cfg.get("fields", 10_000))
    m_max = max(sites)
    cap = int(cfg.get("reach_cap", m_max + 16))
    traj_cap = int(cfg.get("traj_cap", 100_000))
    seed = int(cfg.get("seed", 0))
    dist = dist_from_config(cfg["dist"])
    speed = _speed_from(cfg["speed"], m_max + cap + 1)
    t0 = time.perf_counter()

    fields = sample_grain_fields(speed, dist, m_max - 1, substream(seed, "fields"),
                                 n_fields=n_fields, cap=cap, traj_cap=traj_cap)
    lengths = np.stack([f.lengths for f in fields])

    rows = []
    for m in sites:
        r_vals = np.empty(m)
        r_vars = np.empty(m)
        for i in range(m):
            est = estimate_reach_tail(speed, i, m - i, dist, reach_reps,
                                      substream(seed, "tail", m, i),
                                      cap=cap, traj_cap=traj_cap)
            r_vals[i] = est.p
            r_vars[i] = est.stderr ** 2
        formula = dry_probability(m, r_vals)
        with np.errstate(divide="ignore"):
            se_formula = formula * math.sqrt(float(
                np.sum(r_vars / np.maximum((1.0 - r_vals) ** 2, 1e-30))))
        ev_freq = no_overshoot_frequency(lengths, m)
        dry_freq = dry_frequency(lengths, m)
        rows.append({"m": m, "formula_p": formula, "formula_se": se_formula,
                     "no_overshoot_freq": ev_freq,
                     "no_overshoot_se": binomial_stderr(ev_freq, n_fields),
                     "dry_freq": dry_freq,
                     "dry_se": binomial_stderr(dry_freq, n_fields),
                     "fields": n_fields, "reach_replicas": reach_reps})
    meta = {"config": cfg, "reach_cap": cap,
            "note": ("formula_p multiplies complements of P{reach from i past m}; "
                     "its event is no_overshoot (thresholds m-i), the classical "
                     "dry event tightens thresholds by one"),
            "exit_code": EXIT_OK}
    _write_outputs(outdir, "dry-prob",
                   ["m", "formula_p", "formula_se", "no_overshoot_freq",
                    "no_overshoot_se", "dry_freq", "dry_se", "fields",
                    "reach_replicas"], rows, meta, time.perf_counter() - t0)
    return EXIT_OK


_ELL_KEYS = {"dist", "speed", "x", "j", "replicas", "reach_cap", "traj_cap", "seed"}


def cmd_ell_tail(cfg: dict, outdir: Path, workers: int) -> int:
    _check_keys(cfg, _ELL_KEYS, {"dist", "speed", "x", "j"}, "ell-tail")
    xs = [int(v) for v in np.atleast_1d(cfg["x"])]
    js = [int(v) for v in np.atleast_1d(cfg["j"])]
    replicas = int(cfg.get("replicas", 100_000))
    cap = int(cfg.get("reach_cap", max(js) + 16))
    traj_cap = int(cfg.get("traj_cap", 100_000))
    seed = int(cfg.get("seed", 0))
    dist = dist_from_config(cfg["dist"])
    speed = _speed_from(cfg["speed"], max(xs) + cap + 1)
    t0 = time.perf_counter()
    rows = []
    truncated_any = False
    for x in xs:
        for j in js:
            est = estimate_reach_tail(speed, x, j, dist, replicas,
                                      substream(seed, "ell", x, j),
                                      cap=cap, traj_cap=traj_cap)
            truncated_any = truncated_any or est.truncated_draws > 0
            rows.append({"x": x, "j": j, "p": est.p, "stderr": est.stderr,
                         "replicas": replicas, "cap": cap,
                         "truncated_draws": est.truncated_draws})
    meta = {"config": cfg, "exit_code": EXIT_PARTIAL if truncated_any else EXIT_OK}
    _write_outputs(outdir, "ell-tail",
                   ["x", "j", "p", "stderr", "replicas", "cap", "truncated_draws"],
                   rows, meta, time.perf_counter() - t0)
    return EXIT_PARTIAL if truncated_any else EXIT_OK


_COND_KEYS = {"dist", "speed", "rho", "horizon", "checks"}


def cmd_check_conditions(cfg: dict, outdir: Path, workers: int) -> int:
    _check_keys(cfg, _COND_KEYS, {"dist", "speed"}, "check-conditions")
    dist = dist_from_config(cfg["dist"])
    horizon = int(cfg.get("horizon", 0)) or None
    speed_horizon = max(horizon or 0, 1 << 17)
    speed = _speed_from(cfg["speed"], speed_horizon)
    checks = cfg.get("checks", ["speed-series", "nonexplosion", "explosion"])
    t0 = time.perf_counter()
    reports = {}
    if "speed-series" in checks:
        reports["speed-series"] = check_speed_series(speed, horizon).to_dict()
    if "nonexplosion" in checks:
        reports["nonexplosion"] = check_nonexplosion(dist, speed, horizon).to_dict()
    if "explosion" in checks:
        rho = cfg.get("rho")
        if rho is None:
            raise ConfigError("check-conditions: explosion check needs rho > 1")
        reports["explosion"] = check_explosion(dist, speed, float(rho),
                                               horizon).to_dict()
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "check-conditions.json", "w") as fh:
        json.dump({"config": cfg, "reports": reports}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    meta = {"config": cfg, "exit_code": EXIT_OK}
    rows = [{"check": name, "verdict": rep.get("verdict", "?")}
            for name, rep in reports.items()]
    _write_outputs(outdir, "check-conditions", ["check", "verdict"], rows,
                   meta, time.perf_counter() - t0)
    print(f"{'check':<16} verdict")
    for row in rows:
        print(f"{row['check']:<16} {row['verdict']}")
    return EXIT_OK


_BOUNDS_KEYS = {"speed", "i_values", "j_values", "walks_per_cell",
                "tail_lower", "seed"}


def cmd_bounds(cfg: dict, outdir: Path, workers: int) -> int:
    _check_keys(cfg, _BOUNDS_KEYS, {"speed"}, "bounds")
    seed = int(cfg.get("seed", 0))
    i_values = [int(v) for v in cfg.get("i_values", [0, 1, 2])]
    j_values = [int(v) for v in cfg.get("j_values", [1, 2, 3])]
    walks = int(cfg.get("walks_per_cell", 100_000))
    speed = _speed_from(cfg["speed"], max(i_values) + max(j_values) + 256)
    t0 = time.perf_counter()
    checks = verify_sandwich(speed, i_values, j_values, walks,
                             substream(seed, "sandwich"))
    tl = cfg.get("tail_lower")
    if tl:
        dist = dist_from_config(tl["dist"])
        checks += verify_reach_tail_lower(
            dist, speed, [int(v) for v in tl.get("i_values", i_values)],
            [int(v) for v in tl.get("m_values", [5, 10])],
            int(tl.get("replicas", 10_000)), substream(seed, "tail-lower"))
    rows = []
    fieldnames = ["bound_id", "i", "j", "m", "dist", "bound_value",
                  "comparison_value", "comparison_stderr", "direction",
                  "satisfied", "note"]
    for chk in checks:
        row = {k: "" for k in fieldnames}
        row.update(chk.row())
        row["satisfied"] = int(chk.satisfied)
        rows.append(row)
    unsatisfied = sum(1 for c in checks if not c.satisfied)
    meta = {"config": cfg, "unsatisfied": unsatisfied, "exit_code": EXIT_OK}
    _write_outputs(outdir, "bounds", fieldnames, rows, meta,
                   time.perf_counter() - t0)
    return EXIT_OK


_SWEEP_KEYS = {"dists", "right_horizons", "replicas", "levels", "frog",
               "seed", "emit_gnuplot"}


def _run_sweep_cell(args):
    cell_id, cfg, replicas, levels = args
    try:
        records = [_run_one_frog((cfg, r)) for r in range(replicas)]
        report = regime_diagnostic(records, levels=levels)
        capped = any(rec.stop_reason not in ("reached-horizon", "starved")
                     for rec in records)
        return cell_id, records, report, capped, ""
    except Exception as exc:  # cell failures recorded, sweep continues
        return cell_id, [], None, True, f"{type(exc).__name__}: {exc}"


def cmd_sweep(cfg: dict, outdir: Path, workers: int) -> int:
    _check_keys(cfg, _SWEEP_KEYS, {"dists", "right_horizons"}, "sweep")
    replicas = int(cfg.get("replicas", 10))
    levels = int(cfg.get("levels", 5))
    base_frog = dict(cfg.get("frog", {}))
    seed = int(cfg.get("seed", 0))
    cells = []
    cell_id = 0
    for dist_spec in cfg["dists"]:
        for r_hor in cfg["right_horizons"]:
            cell_cfg = {**base_frog, "dist": dist_spec,
                        "right_horizon": int(r_hor),
                        "seed": int(substream(seed, "cell", cell_id).integers(1 << 62))}
            cells.append((cell_id, cell_cfg, replicas, levels))
            cell_id += 1
    t0 = time.perf_counter()
    results = parallel_map(_run_sweep_cell, cells, workers)
    rows = []
    any_flagged = False
    curves = {}
    for (cid, cell_cfg, _, _), (cid2, records, report, capped, err) in zip(cells, results):
        any_flagged = any_flagged or capped or bool(err)
        row = {"cell_id": cid, "dist": json.dumps(cell_cfg["dist"], sort_keys=True),
               "right_horizon": cell_cfg["right_horizon"],
               "label": report.label if report else "error",
               "slope": report.slope if report else float("nan"),
               "agreement": report.agreement if report else 0.0,
               "replicas_used": len(report.labels) if report else 0,
               "excluded": report.excluded if report else replicas,
               "capped": int(capped), "error": err}
        rows.append(row)
        if records:
            stacked = np.stack([rec.theta for rec in records])
            med = np.full(stacked.shape[1], np.nan)
            some = ~np.all(np.isnan(stacked), axis=0)
            med[some] = np.nanmedian(stacked[:, some], axis=0)
            curves[cid] = med
    meta = {"config": cfg, "exit_code": EXIT_PARTIAL if any_flagged else EXIT_OK}
    fieldnames = ["cell_id", "dist", "right_horizon", "label", "slope",
                  "agreement", "replicas_used", "excluded", "capped", "error"]
    _write_outputs(outdir, "sweep", fieldnames, rows, meta,
                   time.perf_counter() - t0)
    if cfg.get("emit_gnuplot"):
        _emit_gnuplot(outdir, curves)
    return EXIT_PARTIAL if any_flagged else EXIT_OK


def _emit_gnuplot(outdir: Path, curves: dict) -> None:
    """Median first-visit curves per cell plus a ready-to-run plot script."""
    for cid, theta in curves.items():
        rows = [{"site": s, "theta": theta[s]} for s in range(theta.size)
                if not math.isnan(theta[s])]
        _write_csv(outdir / f"theta_cell{cid}.csv", ["site", "theta"], rows)
    lines = ["set datafile separator ','", "set key left top",
             "set xlabel 'site'", "set ylabel 'median first-visit time'",
             "set logscale y"]
    plots = [f"'theta_cell{cid}.csv' using 1:2 skip 1 with lines title 'cell {cid}'"
             for cid in sorted(curves)]
    if plots:
        lines.append("plot " + ", \\\n     ".join(plots))
    (outdir / "theta_curves.gp").write_text("\n".join(lines) + "\n")


# -- entry point ---------------------------------------------------------------

_COMMANDS = {
    "sim-frog": cmd_sim_frog,
    "sim-tadibp": cmd_sim_tadibp,
    "dry-prob": cmd_dry_prob,
    "ell-tail": cmd_ell_tail,
    "check-conditions": cmd_check_conditions,
    "bounds": cmd_bounds,
    "sweep": cmd_sweep,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frogmodel",
        description="Frog-model simulation, TADIBP percolation, and "
                    "explosion-regime diagnostics")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--replicas", type=int, default=None,
                       help="override the config replica count")
        p.add_argument("--horizon", type=int, default=None,
                       help="override the config horizon")
        p.add_argument("--output", default=None,
                       help=f"output directory (default ${OUTPUT_ENV} or ./out)")
        p.add_argument("--workers", type=int,
                       default=max(1, min(os.cpu_count() or 1, 8)))
    return parser


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    try:
        cfg = _load_config(args.config)
        if not isinstance(cfg, dict):
            raise ConfigError(f"{args.config}: top level must be a JSON object")
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.replicas is not None:
            if args.subcommand == "sim-tadibp":
                cfg["fields"] = args.replicas
            else:
                cfg["replicas"] = args.replicas
        if args.horizon is not None:
            key = "right_horizon" if args.subcommand in ("sim-frog",) else "horizon"
            cfg[key] = args.horizon
        outdir = Path(args.output or os.environ.get(OUTPUT_ENV, "out"))
        return _COMMANDS[args.subcommand](cfg, outdir, args.workers)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
