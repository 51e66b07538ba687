"""Command-line driver: scenario runs, solver benchmarks, standalone assignment.

Outputs are deterministic functions of (config, seed): every CSV gets a
header row, '.' decimals, LF line endings; JSON summaries carry a schema
version.  Timing JSONs hold wall-clock measurements and are the only
outputs excluded from byte-reproducibility.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
"""

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, replace
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import association
from .core import empty_density, estimate_state
from .filtering import FilterConfig, TrackingModels, default_backend, joint_step, particle_backend
from .scenarios import (
    OspaParams,
    custom_scenario,
    customize,
    linear_scenario,
    nonlinear_scenario,
    ospa_parts,
    simulate,
)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "linear"          # linear | nonlinear | path to a config file
    solver: str = "gibbs"
    h_max: int = 1000
    mc_trials: int = 1
    seed: int = 0
    output_dir: str = "out"
    backend: str = "gm"               # gm | smc
    particles: int = 1000
    scans: int = 0                    # 0 = scenario default duration
    clutter_scale: float = 1.0
    ospa_cutoff: float = 100.0
    ospa_order: float = 1.0
    workers: int = 0                  # 0 = one per CPU (capped by trials)

    def __post_init__(self):
        if self.mc_trials < 1:
            raise ValueError("mc_trials must be >= 1")


CONFIG_KEYS = {f.name for f in RunConfig.__dataclass_fields__.values()}


def parse_config_file(path):
    """Key = value lines, '#' comments; keys match RunConfig fields."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key '{key}'")
        converter = type(getattr(RunConfig, key))
        try:
            values[key] = converter(val)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad value for '{key}': {val}") from exc
    return values


def build_scenario(config):
    if config.scenario == "linear":
        spec = linear_scenario()
    elif config.scenario == "nonlinear":
        spec = nonlinear_scenario()
    elif Path(config.scenario).is_file():
        spec = custom_scenario(json.loads(Path(config.scenario).read_text()))
    else:
        raise ValueError(
            f"unknown scenario '{config.scenario}' (use linear, nonlinear, or a custom file)"
        )
    if config.clutter_scale != 1.0:
        spec = customize(spec, clutter_scale=config.clutter_scale)
    if config.scans:
        spec = replace(spec, duration=min(config.scans, spec.duration))
    return spec


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x):
    return repr(float(x))


def run_trial(args):
    """One Monte Carlo trial; returns per-scan curves (worker-safe)."""
    config, trial = args
    spec = build_scenario(config)
    sim = simulate(spec, seed=(config.seed, trial, 1))
    models = TrackingModels(spec.motion, spec.measurement)
    fc = FilterConfig(
        h_max=config.h_max,
        solver=config.solver,
        rng_seed=config.seed + trial,
        temper_birth_factor=spec.temper_birth_factor,
        temper_ps_factor=spec.temper_ps_factor,
        temper_pd_factor=spec.temper_pd_factor,
    )
    backend = (
        particle_backend(models, config.particles)
        if config.backend == "smc"
        else default_backend(models)
    )
    params = OspaParams(config.ospa_cutoff, config.ospa_order)

    density = empty_density(0)
    pos_idx = list(spec.pos_idx)
    tracks_rows, ospa_rows, card_rows = [], [], []
    diag = []
    estimates_by_scan = []
    t_start = time.perf_counter()
    for scan in range(1, spec.duration + 1):
        density = joint_step(density, sim.measurements[scan - 1], models, fc, backend, diag_sink=diag)
        est = estimate_state(density)
        estimates_by_scan.append(est)
        est_pos = np.array([x[pos_idx] for _, x in est]) if est else np.empty((0, len(pos_idx)))
        total, loc, card = ospa_parts(sim.true_positions(scan), est_pos, params)
        ospa_rows.append([scan, _fmt(total), _fmt(loc), _fmt(card)])
        card_rows.append([scan, sim.true_count(scan), len(est)])
        for label, x in est:
            tracks_rows.append([scan, str(label)] + [_fmt(v) for v in x])
    runtime = time.perf_counter() - t_start

    out = Path(config.output_dir) / f"trial_{trial:03d}"
    out.mkdir(parents=True, exist_ok=True)
    state_dim = len(spec.truth[0].x0)
    _write_csv(out / "tracks.csv", ["scan", "label"] + [f"s{i}" for i in range(state_dim)], tracks_rows)
    _write_csv(out / "ospa.csv", ["scan", "ospa", "ospa_loc", "ospa_card"], ospa_rows)
    _write_csv(out / "cardinality.csv", ["scan", "true_n", "est_n"], card_rows)
    _write_csv(
        out / "truth.csv",
        ["scan", "label"] + [f"s{i}" for i in range(state_dim)],
        [
            [scan, str(label)] + [_fmt(v) for v in x]
            for scan in range(1, spec.duration + 1)
            for label, x in sim.truth_states[scan - 1]
        ],
    )
    z_dim = spec.measurement.region.shape[0]
    _write_csv(
        out / "measurements.csv",
        ["scan", "source"] + [f"z{i}" for i in range(z_dim)],
        [
            [scan, str(src) if src is not None else "clutter"] + [_fmt(v) for v in z]
            for scan in range(1, spec.duration + 1)
            for z, src in zip(sim.measurements[scan - 1], sim.sources[scan - 1])
        ],
    )
    solver_times = [d["solver_time_s"] for d in diag]
    (out / "timing.json").write_text(
        json.dumps(
            {
                "schema": SCHEMA_VERSION,
                "per_scan_solver_s": solver_times,
                "total_solver_s": sum(solver_times),
                "total_s": runtime,
            },
            indent=2,
        )
        + "\n"
    )
    with open(out / "diagnostics.jsonl", "w", encoding="utf-8") as fh:
        for d in diag:
            fh.write(json.dumps(d) + "\n")
    (out / "final_density.json").write_text(json.dumps(density_to_dict(density), indent=2) + "\n")

    return {
        "trial": trial,
        "ospa": [float(r[1]) for r in ospa_rows],
        "ospa_loc": [float(r[2]) for r in ospa_rows],
        "ospa_card": [float(r[3]) for r in ospa_rows],
        "true_n": [r[1] for r in card_rows],
        "est_n": [r[2] for r in card_rows],
        "runtime_s": runtime,
        "solver_time_s": sum(solver_times),
    }


def density_to_dict(density):
    """JSON form of the filter state: labels, log weights, track summaries."""
    return {
        "schema": SCHEMA_VERSION,
        "scan": density.scan_time,
        "degenerate": density.degenerate,
        "components": [
            {
                "labels": [[l.birth_time, l.index] for l in c.labels],
                "log_weight": c.log_weight,
                "tracks": [
                    {
                        "label": [l.birth_time, l.index],
                        "mean": [float(v) for v in c.densities[l].mean()],
                        "kind": type(c.densities[l]).__name__,
                    }
                    for l in c.labels
                ],
            }
            for c in density.components
        ],
    }


def run(config):
    """Execute the Monte Carlo batch and write the aggregate summary."""
    build_scenario(config)  # validate the scenario/config before spending work
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(config, t) for t in range(config.mc_trials)]
    results, failures = [], []
    if config.mc_trials > 1:
        workers = config.workers or None
        with get_context("fork").Pool(processes=workers) as pool:
            for res in pool.imap_unordered(_safe_trial, jobs):
                (results if "error" not in res else failures).append(res)
    else:
        for job in jobs:
            res = _safe_trial(job)
            (results if "error" not in res else failures).append(res)
    results.sort(key=lambda r: r["trial"])

    if results:
        n_scans = len(results[0]["ospa"])
        summary = {
            "schema": SCHEMA_VERSION,
            "scenario": config.scenario,
            "solver": config.solver,
            "backend": config.backend,
            "h_max": config.h_max,
            "seed": config.seed,
            "trials": len(results),
            "failed_trials": [f["trial"] for f in failures],
            "mean_ospa": _mean_curve(results, "ospa", n_scans),
            "mean_ospa_loc": _mean_curve(results, "ospa_loc", n_scans),
            "mean_ospa_card": _mean_curve(results, "ospa_card", n_scans),
            "true_n": results[0]["true_n"],
            "mean_est_n": _mean_curve(results, "est_n", n_scans),
            "mean_abs_card_error": [
                float(np.mean([abs(r["est_n"][k] - r["true_n"][k]) for r in results]))
                for k in range(n_scans)
            ],
            "mean_runtime_s": float(np.mean([r["runtime_s"] for r in results])),
            "mean_solver_time_s": float(np.mean([r["solver_time_s"] for r in results])),
        }
        (out_dir / "mc_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    for f in failures:
        print(f"trial {f['trial']} failed: {f['error']}", file=sys.stderr)
    return 0 if results else 1


def _mean_curve(results, key, n_scans):
    return [float(np.mean([r[key][k] for r in results])) for k in range(n_scans)]


def _safe_trial(job):
    try:
        return run_trial(job)
    except Exception as exc:  # trial failures are contained, the batch goes on
        return {"trial": job[1], "error": f"{type(exc).__name__}: {exc}"}


def synthetic_problem(n_rows, n_meas, seed):
    """Tracking-like association table for benchmarking.

    Each row carries a death and a miss column of moderate mass, a few
    strong gated measurement columns overlapping its neighbors' gates
    (contention, as tracks crossing in clutter produce), and weak mass
    on the remaining columns.
    """
    rng = np.random.default_rng(seed)
    log_eta = rng.uniform(-8.0, -6.0, (n_rows, n_meas + 2))
    log_eta[:, 0] = rng.uniform(-3.0, -1.0, n_rows)    # death / not born
    log_eta[:, 1] = rng.uniform(-1.5, -0.5, n_rows)    # missed detection
    for i in range(n_rows):
        for d in range(3):
            log_eta[i, 2 + (i + d) % n_meas] = rng.uniform(2.0, 5.0)
    return association.AssociationProblem(log_eta, n_rows)


def _time_solver(solver, problem, n_samples, repeats=1):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        if solver == "gibbs":
            association.gibbs_sample(problem, np.zeros(problem.P, dtype=int), n_samples, 0)
        else:
            association.murty_ranked(problem, n_samples)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_scaling(
    n_samples=100,
    m_sweep=(10, 20, 40, 80, 160, 320),
    p_sweep=(10, 20, 40, 80),
    p_fixed=20,
    m_fixed=40,
    race_point=(40, 160),
    murty_samples=10,
    repeats=2,
    seed=0,
):
    """Measure solver wall-times over problem-size sweeps.

    Returns fitted log-log slopes: Gibbs vs M at fixed P, Gibbs vs P at
    fixed M, Murty vs the combined size 2P+M (its per-solution cost is
    size-driven, so its sweep uses a smaller sample count), plus both
    solvers' times at the head-to-head point with equal sample counts.
    """
    gibbs_m = [(m, _time_solver("gibbs", synthetic_problem(p_fixed, m, seed), n_samples, repeats)) for m in m_sweep]
    gibbs_p = [(p, _time_solver("gibbs", synthetic_problem(p, m_fixed, seed), n_samples, repeats)) for p in p_sweep]
    murty_n = [
        (2 * p + m, _time_solver("murty", synthetic_problem(p, m, seed), murty_samples, repeats))
        for p, m in [(20, 40), (40, 80), (80, 160), (80, 320)]
    ]
    p_race, m_race = race_point
    race_problem = synthetic_problem(p_race, m_race, seed)
    race = {
        "gibbs_s": _time_solver("gibbs", race_problem, n_samples, repeats),
        "murty_s": _time_solver("murty", race_problem, n_samples, repeats),
    }
    race["speedup"] = race["murty_s"] / race["gibbs_s"]

    def slope(points):
        x = np.log([p[0] for p in points])
        y = np.log([p[1] for p in points])
        return float(np.polyfit(x, y, 1)[0])

    return {
        "schema": SCHEMA_VERSION,
        "n_samples": n_samples,
        "gibbs_vs_m": {"points": gibbs_m, "slope": slope(gibbs_m), "fixed_p": p_fixed},
        "gibbs_vs_p": {"points": gibbs_p, "slope": slope(gibbs_p), "fixed_m": m_fixed},
        "murty_vs_size": {"points": murty_n, "slope": slope(murty_n)},
        "race": {"p": p_race, "m": m_race, **race},
    }


def read_eta_csv(path):
    """Positive eta table, P rows x (M+2) columns ordered -1, 0, 1..M."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            try:
                values = [float(v) for v in row]
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise ValueError(f"{path}:{lineno}: non-numeric entry")
            if any(v <= 0 for v in values):
                raise ValueError(f"{path}:{lineno}: eta entries must be positive")
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}:1: empty table")
    if len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: ragged rows")
    if len(rows[0]) < 2:
        raise ValueError(f"{path}:1: need at least 2 columns (-1 and 0)")
    return np.array(rows)


def assign(eta_path, n_best, solver, out_path=None, seed=0):
    """Rank assignments for a standalone eta table; writes CSV."""
    eta = read_eta_csv(eta_path)
    problem = association.AssociationProblem.from_eta(eta, eta.shape[0])
    if solver == "murty":
        gammas = association.murty_ranked(problem, n_best)
    else:
        samples = association.gibbs_sample(
            problem, np.zeros(problem.P, dtype=int), max(n_best * 20, 200), seed
        )
        gammas = association.dedup_rank(samples, problem)[:n_best]
    header = [f"g{i}" for i in range(problem.P)] + ["log_weight"]
    rows = [list(map(int, g)) + [_fmt(association.weight_of(problem, g))] for g in gammas]
    if out_path:
        _write_csv(out_path, header, rows)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(prog="glmbtrack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a tracking scenario (Monte Carlo batch)")
    p_run.add_argument("--config", help="key=value config file; flags override")
    p_run.add_argument("--scenario", help="linear, nonlinear, or a custom-scenario JSON file")
    p_run.add_argument("--solver", choices=["gibbs", "murty"])
    p_run.add_argument("--h-max", type=int, dest="h_max")
    p_run.add_argument("--mc", type=int, dest="mc_trials")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--output-dir", dest="output_dir")
    p_run.add_argument("--backend", choices=["gm", "smc"])
    p_run.add_argument("--particles", type=int)
    p_run.add_argument("--scans", type=int, help="truncate the scenario to this many scans")
    p_run.add_argument("--clutter-scale", type=float, dest="clutter_scale")
    p_run.add_argument("--ospa-cutoff", type=float, dest="ospa_cutoff")
    p_run.add_argument("--ospa-order", type=float, dest="ospa_order")
    p_run.add_argument("--workers", type=int)

    p_bench = sub.add_parser("bench", help="solver complexity sweep")
    p_bench.add_argument("--samples", type=int, default=100)
    p_bench.add_argument("--out", help="write the JSON report here")

    p_assign = sub.add_parser("assign", help="rank assignments for an eta table CSV")
    p_assign.add_argument("eta_csv")
    p_assign.add_argument("--t", type=int, default=10, help="number of assignments")
    p_assign.add_argument("--solver", choices=["gibbs", "murty"], default="murty")
    p_assign.add_argument("--seed", type=int, default=0)
    p_assign.add_argument("--out", help="output CSV (default stdout)")
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            values = parse_config_file(args.config) if args.config else {}
            for key in CONFIG_KEYS:
                flag = getattr(args, key, None)
                if flag is not None:
                    values[key] = flag
            config = RunConfig(**values)
            return run(config)
        if args.command == "bench":
            report = bench_scaling(n_samples=args.samples)
            text = json.dumps(report, indent=2)
            if args.out:
                Path(args.out).write_text(text + "\n")
            print(text)
            return 0
        if args.command == "assign":
            return assign(args.eta_csv, args.t, args.solver, args.out, args.seed)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - unexpected runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
