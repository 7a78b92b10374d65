"""Scenario files: loading, validation, and wiring into module inputs.

A scenario is a JSON file referencing the network, route, stop, and OD
tables, plus the cost table and per-driver-share service settings. All paths
are resolved relative to the scenario file, so a scenario directory is
self-contained and relocatable.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .demand import AccessDecay, DemandSpec, ODRate, flexible_event_rate
from .detour import (DetourParams, build_schedule, compute_stop_offsets,
                     max_detour_budget, required_detour_budget)
from .errors import ConfigError
from .metrics import CostCoefficients
from .network import Network, load_network
from .planning import CostTable, RouteSpec, RouteStop
from .sim import ObjectiveCoeffs, ServiceSettings

LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlphaService:
    """Service settings of one driver-share variant."""

    headway_min: float
    peak_headway_min: float
    vehicle_size: int
    fleet_size: int | None = None  # None: smallest fleet covering cycle + budget


@dataclass
class ScenarioConfig:
    name: str
    root: Path
    nodes_file: Path
    edges_file: Path
    route_file: Path
    stops_file: Path
    od_file: Path
    cost_table: CostTable
    decay: AccessDecay
    catchment_m: float
    max_walk_m: float
    confidence: float
    dwell_s: float
    max_wait_min: float
    ride_factor: float
    walk_speed_kmh: float
    planning_speed_kmh: float
    access_weight: float
    by_alpha: dict[float, AlphaService]
    alphas: list[float]
    xf_grid_km: list[float]
    replications: int
    base_seed: int
    horizon_s: float
    warmup_s: float
    out_dir: Path
    step_s: float = 1.0

    def service_for(self, alpha: float) -> AlphaService:
        try:
            return self.by_alpha[alpha]
        except KeyError:
            raise ConfigError(f"no service settings for alpha={alpha}") from None


def _resolve(root: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else root / p


def load_scenario(path) -> ScenarioConfig:
    """Parse and validate a scenario JSON file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    root = path.parent
    try:
        net = raw["network"]
        ct_raw = raw.get("cost_table", {})
        cost_table = CostTable(
            sizes=tuple(ct_raw.get("sizes", CostTable().sizes)),
            operational_cost={int(k): float(v) for k, v in ct_raw.get(
                "operational_cost", CostTable().operational_cost).items()},
            operating_cost={int(k): float(v) for k, v in ct_raw.get(
                "operating_cost", CostTable().operating_cost).items()},
            current_operational_cost=float(ct_raw.get("current_operational_cost", 36.3)),
            current_operating_cost=float(ct_raw.get("current_operating_cost", 24.8)),
            driver_cost=float(ct_raw.get("driver_cost", 15.3)),
            value_of_time=float(ct_raw.get("value_of_time", 16.5)),
            waiting_weight=float(ct_raw.get("waiting_weight", 1.5)),
            capacity_buffer=float(ct_raw.get("capacity_buffer", 0.9)),
        )
        cost_table.validate()
        dem = raw.get("demand", {})
        decay_raw = dem.get("decay", {})
        decay = AccessDecay(
            kind=decay_raw.get("kind", "linear"),
            p_min=float(decay_raw.get("p_min", 0.5)),
            midpoint_m=float(decay_raw.get("midpoint_m", 250.0)),
            scale_m=float(decay_raw.get("scale_m", 100.0)),
        )
        decay.validate()
        svc = raw.get("service", {})
        by_alpha = {}
        for key, entry in svc.get("by_alpha", {}).items():
            fleet = entry.get("fleet_size")
            by_alpha[float(key)] = AlphaService(
                headway_min=float(entry["headway_min"]),
                peak_headway_min=float(entry["peak_headway_min"]),
                vehicle_size=int(entry["vehicle_size"]),
                fleet_size=int(fleet) if fleet is not None else None,
            )
        if not by_alpha:
            raise ConfigError("service.by_alpha must define at least one variant")
        cfg = ScenarioConfig(
            name=raw.get("name", path.stem),
            root=root,
            nodes_file=_resolve(root, net["nodes"]),
            edges_file=_resolve(root, net["edges"]),
            route_file=_resolve(root, raw["route_file"]),
            stops_file=_resolve(root, raw["stops_file"]),
            od_file=_resolve(root, raw["od_file"]),
            cost_table=cost_table,
            decay=decay,
            catchment_m=float(dem.get("catchment_m", 350.0)),
            max_walk_m=float(dem.get("max_walk_m", 500.0)),
            confidence=float(svc.get("confidence", 0.95)),
            dwell_s=float(svc.get("dwell_s", 30.0)),
            max_wait_min=float(svc.get("max_wait_min", 15.0)),
            ride_factor=float(svc.get("ride_factor", 2.0)),
            walk_speed_kmh=float(svc.get("walk_speed_kmh", 5.0)),
            planning_speed_kmh=float(svc.get("planning_speed_kmh", 40.0)),
            access_weight=float(svc.get("access_weight", 2.0)),
            by_alpha=by_alpha,
            alphas=[float(a) for a in raw.get("alphas", [0.0])],
            xf_grid_km=[float(x) for x in raw.get("xf_grid_km", [0.0])],
            replications=int(raw.get("replications", 100)),
            base_seed=int(raw.get("base_seed", 1)),
            horizon_s=float(raw.get("horizon_s", 10800.0)),
            warmup_s=float(raw.get("warmup_s", 3600.0)),
            out_dir=_resolve(root, raw.get("out_dir", "out")),
            step_s=float(raw.get("step_s", 1.0)),
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: missing required field {exc}") from exc
    if cfg.replications < 1:
        raise ConfigError("replications must be at least 1")
    if not cfg.horizon_s > cfg.warmup_s >= 0:
        raise ConfigError("horizon must exceed warm-up")
    for a in cfg.alphas:
        cfg.service_for(a)
    for f in (cfg.nodes_file, cfg.edges_file, cfg.route_file, cfg.stops_file, cfg.od_file):
        if not f.exists():
            raise ConfigError(f"referenced file does not exist: {f}")
    return cfg


def load_route_table(path) -> list[RouteSpec]:
    """Route rows: one line per route with service and demand figures."""
    routes = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                routes.append(RouteSpec(
                    route_id=row["route_id"],
                    length_km=float(row["length_km"]),
                    cycle_time_min=float(row["cycle_time_min"]),
                    peak_demand_pax_h=float(row["peak_demand_pax_h"]),
                    peak_load_pax_h=float(row["peak_load_pax_h"]) if row.get("peak_load_pax_h") else None,
                    offpeak_demand_pax_h=float(row["offpeak_demand_pax_h"]) if row.get("offpeak_demand_pax_h") else None,
                    headway_min=float(row["headway_min"]),
                    fleet_size=float(row["fleet_size"]),
                ))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"{path}:{lineno}: malformed route row ({exc})") from exc
    if not routes:
        raise ConfigError(f"{path}: no routes")
    return routes


def load_stops(path) -> tuple[RouteStop, ...]:
    stops = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                stops.append(RouteStop(int(row["node_id"]), float(row["chainage_km"])))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"{path}:{lineno}: malformed stop row ({exc})") from exc
    if len(stops) < 2:
        raise ConfigError(f"{path}: need at least two stops")
    return tuple(stops)


def load_od_table(path) -> tuple[ODRate, ...]:
    rates = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                rates.append(ODRate(int(row["origin_stop"]), int(row["destination_stop"]),
                                    float(row["rate_pax_per_h"])))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"{path}:{lineno}: malformed OD row ({exc})") from exc
    if not rates:
        raise ConfigError(f"{path}: empty OD table")
    return tuple(rates)


@dataclass
class World:
    """Loaded and validated scenario inputs shared by all replications."""

    cfg: ScenarioConfig
    net: Network
    route: RouteSpec
    demand: DemandSpec


def build_world(cfg: ScenarioConfig) -> World:
    net = load_network(cfg.edges_file, cfg.nodes_file)
    routes = load_route_table(cfg.route_file)
    if len(routes) != 1:
        raise ConfigError("simulation scenarios expect exactly one route; "
                          f"{cfg.route_file} has {len(routes)}")
    stops = load_stops(cfg.stops_file)
    route = RouteSpec(
        route_id=routes[0].route_id,
        length_km=routes[0].length_km,
        cycle_time_min=routes[0].cycle_time_min,
        peak_demand_pax_h=routes[0].peak_demand_pax_h,
        peak_load_pax_h=routes[0].peak_load_pax_h,
        offpeak_demand_pax_h=routes[0].offpeak_demand_pax_h,
        headway_min=routes[0].headway_min,
        fleet_size=routes[0].fleet_size,
        stops=stops,
        terminus=stops[0].node,
    )
    route = compute_stop_offsets(route, net, cfg.dwell_s)
    demand = DemandSpec(
        od=load_od_table(cfg.od_file),
        catchment_m=cfg.catchment_m,
        max_walk_m=cfg.max_walk_m,
        decay=cfg.decay,
        horizon_s=cfg.horizon_s,
        warmup_s=cfg.warmup_s,
    )
    demand.validate()
    return World(cfg, net, route, demand)


@dataclass(frozen=True)
class ServicePlanInfo:
    """Detour-budget derivation for one (alpha, flexible length) variant."""

    alpha: float
    flexible_km: float
    request_rate: float
    required_budget_min: float
    budget_cap_min: float
    budget_min: float
    fleet_size: int


def derive_budget(world: World, alpha: float, flexible_km: float) -> ServicePlanInfo:
    """Detour budget at the configured confidence, clipped by the fleet cap."""
    cfg = world.cfg
    svc = cfg.service_for(alpha)
    rate = flexible_event_rate(world.demand, world.route, flexible_km)
    lam = rate * svc.headway_min / 60.0
    params = DetourParams(request_rate=lam, max_walk_m=cfg.max_walk_m,
                          speed_kmh=cfg.planning_speed_kmh, dwell_s=cfg.dwell_s,
                          confidence=cfg.confidence)
    required = required_detour_budget(params)
    cap = max_detour_budget(world.route.cycle_time_min, svc.headway_min,
                            svc.peak_headway_min)
    budget = min(required, cap)
    fleet = svc.fleet_size
    if fleet is None:
        fleet = math.ceil((world.route.cycle_time_min + budget) / svc.headway_min - 1e-9)
    return ServicePlanInfo(alpha, flexible_km, lam, required, cap, budget, fleet)


def make_settings(world: World, alpha: float, flexible_km: float) -> ServiceSettings:
    cfg = world.cfg
    svc = cfg.service_for(alpha)
    info = derive_budget(world, alpha, flexible_km)
    gm = cfg.cost_table.operating_cost[svc.vehicle_size]
    coeffs = ObjectiveCoeffs(
        distance_cost_per_km=gm / cfg.planning_speed_kmh,
        time_cost_per_h=cfg.cost_table.value_of_time,
    )
    drivers = int(round(alpha * world.route.fleet_size)) if alpha > 0 else 0
    return ServiceSettings(
        flexible_km=flexible_km,
        headway_min=svc.headway_min,
        detour_budget_min=info.budget_min,
        fleet_size=info.fleet_size,
        vehicle_capacity=svc.vehicle_size,
        horizon_s=cfg.horizon_s,
        warmup_s=cfg.warmup_s,
        step_s=cfg.step_s,
        dwell_s=cfg.dwell_s,
        max_wait_s=cfg.max_wait_min * 60.0,
        ride_factor=cfg.ride_factor,
        walk_speed_kmh=cfg.walk_speed_kmh,
        peak_headway_min=svc.peak_headway_min,
        driver_vehicles=min(drivers, info.fleet_size),
        objective=coeffs,
    )


def make_cost_coefficients(world: World, alpha: float) -> CostCoefficients:
    cfg = world.cfg
    svc = cfg.service_for(alpha)
    gm = cfg.cost_table.operating_cost[svc.vehicle_size]
    gc = cfg.cost_table.operational_cost[svc.vehicle_size]
    return CostCoefficients(
        access_weight=cfg.access_weight,
        waiting_weight=cfg.cost_table.waiting_weight,
        value_of_time_per_h=cfg.cost_table.value_of_time,
        distance_cost_per_km=gm / cfg.planning_speed_kmh,
        vehicle_cost_per_h=gm,
        vehicle_capital_cost_per_h=gc,
        driver_cost_per_h=cfg.cost_table.driver_cost,
    )


def build_run_schedule(world: World, alpha: float, flexible_km: float,
                       run_start_s: float = 0.0):
    """Schedule template for exporting (one run anchored at ``run_start_s``)."""
    cfg = world.cfg
    svc = cfg.service_for(alpha)
    info = derive_budget(world, alpha, flexible_km)
    return build_schedule(world.route, flexible_km, svc.headway_min, info.budget_min,
                          run_start_s, peak_headway_min=svc.peak_headway_min,
                          dwell_s=cfg.dwell_s)
