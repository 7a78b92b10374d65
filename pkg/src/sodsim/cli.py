"""Scenario-driven command line front end.

Subcommands: ``plan`` (peak-hour fleet plans), ``schedule`` (detour budgets,
schedules, CDF tables), ``simulate`` (seeded replications of one variant),
``sweep`` (route-form grid times driver shares), and ``report`` (render a
sweep directory). Exit codes: 0 success, 1 config error, 2 infeasibility
diagnostic, 3 I/O error.
"""
from __future__ import annotations

import csv
import functools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import __version__
from .detour import DetourParams, detour_cdf
from .errors import ConfigError, InfeasibleError
from .metrics import (CostCoefficients, aggregate, replication_summary,
                      sweep_analysis)
from .planning import FULL_SAV, TRANSITION, plan_route
from .scenario import (ScenarioConfig, World, build_run_schedule, build_world,
                       derive_budget, load_route_table, load_scenario,
                       make_cost_coefficients, make_settings)
from .sim import run_replication, write_run_csv, write_trip_csv, write_vehicle_csv

LOG = logging.getLogger(__name__)

PLAN_ALPHAS = (0.75, 1.0)


def _exit_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(1)
        except InfeasibleError as exc:
            click.echo(f"infeasible: {exc}", err=True)
            sys.exit(2)
        except OSError as exc:
            click.echo(f"i/o error: {exc}", err=True)
            sys.exit(3)
    return wrapper


@click.group()
@click.version_option(version=__version__, prog_name="sodsim")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def main(verbose: bool) -> None:
    """Semi-on-demand transit planning and simulation."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


def _outdir(cfg: ScenarioConfig, override: str | None) -> Path:
    out = Path(override) if override else cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


@main.command()
@click.argument("config", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help="Output directory override.")
@_exit_codes
def plan(config: str, out: str | None) -> None:
    """Write peak-hour fleet plans for every route and driver share."""
    cfg = load_scenario(config)
    routes = load_route_table(cfg.route_file)
    out_dir = _outdir(cfg, out)
    rows = []
    any_infeasible = False
    for route in routes:
        plans = [plan_route(route, cfg.cost_table, FULL_SAV)]
        for alpha in PLAN_ALPHAS:
            plans.append(plan_route(route, cfg.cost_table, TRANSITION, alpha=alpha))
        for p in plans:
            any_infeasible |= p.binding == "infeasible"
            rows.append([p.route_id, p.scenario,
                         "" if p.alpha is None else p.alpha,
                         p.vehicle_size, p.headway_min, p.fleet_size,
                         "" if p.added_vehicles is None else round(p.added_vehicles, 3),
                         round(p.cost_per_h, 4), p.binding, p.diagnostic])
    path = out_dir / "plans.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["route_id", "scenario", "alpha", "vehicle_size", "headway_min",
                    "fleet_size", "added_vehicles", "cost_per_h", "binding", "diagnostic"])
        w.writerows(rows)
    click.echo(f"wrote {path}")
    if any_infeasible:
        raise InfeasibleError("some plans violate capacity/budget bounds for every "
                              "vehicle size; see the binding column")


@main.command()
@click.argument("config", type=click.Path(exists=True))
@click.option("--alpha", "alphas", type=float, multiple=True,
              help="Driver share(s); defaults to the scenario's list.")
@click.option("--out", type=click.Path(), default=None)
@_exit_codes
def schedule(config: str, alphas: tuple[float, ...], out: str | None) -> None:
    """Derive detour budgets and write schedules plus CDF tables."""
    cfg = load_scenario(config)
    world = build_world(cfg)
    out_dir = _outdir(cfg, out)
    summary_rows = []
    for alpha in alphas or cfg.alphas:
        for xf in cfg.xf_grid_km:
            info = derive_budget(world, alpha, xf)
            if info.budget_cap_min == 0.0 and xf > 0:
                LOG.warning("alpha=%s xf=%s: zero budget cap (headway at peak level)",
                            alpha, xf)
            sched = build_run_schedule(world, alpha, xf)
            tag = f"a{alpha:g}_xf{xf:g}"
            sched_path = out_dir / f"schedule_{tag}.json"
            with open(sched_path, "w", encoding="utf-8") as fh:
                json.dump({
                    "route_id": sched.route_id,
                    "flexible_km": sched.flexible_length_km,
                    "headway_min": sched.headway_min,
                    "detour_budget_min": sched.detour_budget_min,
                    "required_budget_min": info.required_budget_min,
                    "budget_cap_min": info.budget_cap_min,
                    "request_rate": info.request_rate,
                    "fleet_size": info.fleet_size,
                    "stops": [{
                        "node": s.node,
                        "chainage_km": s.chainage_km,
                        "earliest_start_s": s.earliest_start_s,
                        "latest_start_s": s.latest_start_s,
                        "duration_s": s.duration_s,
                        "reentry": s.reentry,
                    } for s in sched.stops],
                }, fh, indent=2, sort_keys=True)
            params = DetourParams(request_rate=info.request_rate,
                                  max_walk_m=cfg.max_walk_m,
                                  speed_kmh=cfg.planning_speed_kmh,
                                  dwell_s=cfg.dwell_s, confidence=cfg.confidence)
            cdf_path = out_dir / f"detour_cdf_{tag}.csv"
            with open(cdf_path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["t_min", "probability"])
                if info.request_rate > 0:
                    t = 0.0
                    horizon = max(info.required_budget_min * 1.5, 1.0)
                    while t <= horizon + 1e-9:
                        w.writerow([f"{t:.2f}", f"{detour_cdf(t, params):.6f}"])
                        t += 0.25
            summary_rows.append([alpha, xf, info.request_rate, info.required_budget_min,
                                 info.budget_cap_min, info.budget_min, info.fleet_size])
    path = out_dir / "budgets.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "x_f_km", "request_rate", "required_budget_min",
                    "budget_cap_min", "budget_min", "fleet_size"])
        w.writerows(summary_rows)
    click.echo(f"wrote {path}")


_WORLD_CACHE: dict[str, World] = {}


def _cached_world(cfg_path: str) -> World:
    world = _WORLD_CACHE.get(cfg_path)
    if world is None:
        world = build_world(load_scenario(cfg_path))
        _WORLD_CACHE[cfg_path] = world
    return world


def _one_replication(args):
    cfg_path, alpha, xf, seed, rep, records_dir = args
    world = _cached_world(cfg_path)
    settings = make_settings(world, alpha, xf)
    coeffs = make_cost_coefficients(world, alpha)
    result = run_replication(world.net, world.route, world.demand, settings,
                             seed, rep)
    if records_dir is not None:
        rd = Path(records_dir)
        write_trip_csv(rd / f"rep{rep:03d}_trips.csv", result.trips)
        write_vehicle_csv(rd / f"rep{rep:03d}_vehicles.csv", result.vehicles)
        write_run_csv(rd / f"rep{rep:03d}_runs.csv", result.runs)
    return replication_summary(rep, result.trips, result.vehicles, coeffs,
                               world.cfg.walk_speed_kmh)


def _run_replications(cfg_path: str, alpha: float, xf: float, seed: int, reps: int,
                      jobs: int, records_dir: Path | None):
    tasks = [(cfg_path, alpha, xf, seed, rep, str(records_dir) if records_dir else None)
             for rep in range(reps)]
    if jobs <= 1:
        summaries = [_one_replication(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_one_replication, tasks))
    return sorted(summaries, key=lambda s: s.replication)


def _write_aggregate(path: Path, summary) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)


@main.command()
@click.argument("config", type=click.Path(exists=True))
@click.option("--alpha", type=float, default=None, help="Driver share (default: first configured).")
@click.option("--xf", type=float, default=None, help="Flexible length km (default: first grid point).")
@click.option("--reps", type=int, default=None, help="Replication count override.")
@click.option("--seed", type=int, default=None, help="Base seed override.")
@click.option("--jobs", type=int, default=1, help="Parallel replication workers.")
@click.option("--out", type=click.Path(), default=None)
@_exit_codes
def simulate(config, alpha, xf, reps, seed, jobs, out) -> None:
    """Run seeded replications of one service variant and write records."""
    cfg = load_scenario(config)
    if seed is not None:
        cfg.base_seed = seed
    alpha = cfg.alphas[0] if alpha is None else alpha
    xf = cfg.xf_grid_km[0] if xf is None else xf
    reps = cfg.replications if reps is None else reps
    out_dir = _outdir(cfg, out) / f"sim_a{alpha:g}_xf{xf:g}"
    out_dir.mkdir(parents=True, exist_ok=True)
    _WORLD_CACHE.clear()
    world = _cached_world(config)
    info = derive_budget(world, alpha, xf)
    LOG.info("budget %.2f min (required %.2f, cap %.2f), fleet %d",
             info.budget_min, info.required_budget_min, info.budget_cap_min,
             info.fleet_size)
    summaries = _run_replications(config, alpha, xf, cfg.base_seed, reps, jobs, out_dir)
    _write_aggregate(out_dir / "aggregate.json", aggregate(summaries))
    click.echo(f"wrote {out_dir}/aggregate.json ({reps} replications)")


@main.command()
@click.argument("config", type=click.Path(exists=True))
@click.option("--alpha", "alphas", type=float, multiple=True)
@click.option("--reps", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--jobs", type=int, default=1)
@click.option("--records/--no-records", default=False,
              help="Also write per-replication record CSVs.")
@click.option("--out", type=click.Path(), default=None)
@_exit_codes
def sweep(config, alphas, reps, seed, jobs, records, out) -> None:
    """Sweep the flexible-length grid (and driver shares) and normalize."""
    cfg = load_scenario(config)
    if seed is not None:
        cfg.base_seed = seed
    reps = cfg.replications if reps is None else reps
    out_dir = _outdir(cfg, out)
    _WORLD_CACHE.clear()
    sweep_summary = {}
    for alpha in alphas or cfg.alphas:
        by_xf = {}
        for xf in cfg.xf_grid_km:
            records_dir = None
            if records:
                records_dir = out_dir / f"sim_a{alpha:g}_xf{xf:g}"
                records_dir.mkdir(parents=True, exist_ok=True)
            summaries = _run_replications(config, alpha, xf, cfg.base_seed, reps, jobs, records_dir)
            summary = aggregate(summaries)
            by_xf[xf] = summary
            _write_aggregate(out_dir / f"aggregate_a{alpha:g}_xf{xf:g}.json", summary)
        result = sweep_analysis(by_xf)
        path = out_dir / f"sweep_a{alpha:g}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["x_f_km", "metric", "median", "q25", "q75", "normalized_pct"])
            for row in result.rows:
                w.writerow([row["x_f_km"], row["metric"], f"{row['median']:.6f}",
                            f"{row['q25']:.6f}", f"{row['q75']:.6f}",
                            f"{row['normalized_pct']:.4f}"])
        sweep_summary[f"{alpha:g}"] = {
            "best_flexible_km": result.best_flexible_km,
            "pax_from_terminus_per_run_at_best": result.pax_terminus_at_best,
        }
        click.echo(f"wrote {path} (best x_f = {result.best_flexible_km:g} km)")
    with open(out_dir / "sweep_summary.json", "w", encoding="utf-8") as fh:
        json.dump(sweep_summary, fh, indent=2, sort_keys=True)


@main.command()
@click.argument("outdir", type=click.Path(exists=True))
@_exit_codes
def report(outdir) -> None:
    """Print the key figures of a sweep output directory."""
    out = Path(outdir)
    summary_path = out / "sweep_summary.json"
    if not summary_path.exists():
        raise ConfigError(f"{out} contains no sweep_summary.json; run `sodsim sweep` first")
    summary = json.loads(summary_path.read_text())
    for alpha, entry in sorted(summary.items()):
        click.echo(f"alpha={alpha}: best flexible length {entry['best_flexible_km']:g} km, "
                   f"terminus boardings/run at best {entry['pax_from_terminus_per_run_at_best']:.2f}")
    for sweep_file in sorted(out.glob("sweep_a*.csv")):
        click.echo(f"\n{sweep_file.name}:")
        with open(sweep_file, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.DictReader(fh) if r["metric"] == "generalized_cost"]
        for r in rows:
            click.echo(f"  x_f={r['x_f_km']:>4} km  generalized cost {float(r['median']):10.2f} "
                       f"({float(r['normalized_pct']):6.1f}% of fixed route)")


if __name__ == "__main__":
    main()
