"""Vehicle motion and the simulation main loop.

A run is the schedulable unit: vehicles are assigned departures round-robin
and execute their runs back to back. Motion is event-exact in continuous
time inside a fixed-step outer loop; requests are dispatched in batches once
per step, in request-time order. Everything is deterministic in (scenario,
seed): no wall-clock, no unordered iteration, one RNG stream per OD pair.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

from ..demand import (ASSIGNED, DemandSpec, ON_BOARD, REJECTED, Request, SERVED,
                      generate_requests)
from ..detour import SoDSchedule, build_schedule
from ..errors import ConfigError, InfeasibleError
from ..network import Network
from ..planning import RouteSpec
from .insertion import (RunState, insert_request, make_rider_info,
                        pending_run_state, snap_request)
from .plans import ACTIVE, DONE, ObjectiveCoeffs, PENDING, PlanStop, RiderInfo, RunPlan
from .records import RunRecord, TripRecord, VehicleRecord, trace_hash

LOG = logging.getLogger(__name__)

IDLE = "idle"
DRIVE = "drive"
HOLD = "hold"
DWELL = "dwell"

_TOL = 1e-9


@dataclass(frozen=True)
class ServiceSettings:
    """Operational configuration of one simulated service variant."""

    flexible_km: float
    headway_min: float
    detour_budget_min: float
    fleet_size: int
    vehicle_capacity: int
    horizon_s: float = 10800.0
    warmup_s: float = 3600.0
    step_s: float = 1.0
    dwell_s: float = 30.0
    max_wait_s: float = 900.0
    ride_factor: float = 2.0
    walk_speed_kmh: float = 5.0
    peak_headway_min: float | None = None
    driver_vehicles: int = 0
    objective: ObjectiveCoeffs = field(default_factory=ObjectiveCoeffs)

    @property
    def walk_speed_m_s(self) -> float:
        return self.walk_speed_kmh / 3.6

    def validate(self, route: RouteSpec) -> None:
        if self.step_s <= 0:
            raise ConfigError("step must be positive")
        if self.fleet_size < 1 or self.vehicle_capacity < 1:
            raise ConfigError("fleet size and capacity must be at least 1")
        if not self.horizon_s > self.warmup_s >= 0:
            raise ConfigError("horizon must exceed warm-up")
        required = (route.cycle_time_min + self.detour_budget_min) / self.headway_min
        if self.fleet_size + 1e-9 < required:
            raise InfeasibleError(
                f"fleet of {self.fleet_size} cannot cover cycle plus detour budget "
                f"at headway {self.headway_min} min (needs {required:.2f} vehicles)")


@dataclass
class _RunAudit:
    visits: list[tuple[int, float]] = field(default_factory=list)
    pax_terminus: int = 0
    boundary_depart_s: float | None = None
    reentry_arrive_s: float | None = None
    door_stops: int = 0


class VehicleSim:
    """Kinematic state of one vehicle between the discrete steps."""

    def __init__(self, vid: int, start_node: int):
        self.id = vid
        self.node = start_node
        self.cursor_s = 0.0
        self.state = IDLE
        self.run: RunPlan | None = None
        self.queue: deque[RunPlan] = deque()
        self.odometer_m = 0.0
        self.onboard: set[int] = set()
        self.path: deque[tuple[int, float, float]] = deque()
        self.target_node: int | None = None
        self.redirect = False


class Simulation:
    """One seeded replication of the service."""

    def __init__(self, net: Network, route: RouteSpec, settings: ServiceSettings,
                 requests: list[Request], audit_insertions: bool = False):
        settings.validate(route)
        if not route.stops:
            raise ConfigError("route has no stops")
        self.net = net
        self.route = route
        self.s = settings
        self.requests = requests
        self.audit_insertions = audit_insertions
        self.insertion_audit: list[tuple[int, float, float]] = []

        terminus = route.stops[0].node
        self.vehicles = [VehicleSim(v, terminus) for v in range(settings.fleet_size)]
        self.runs: list[RunPlan] = []
        k = 0
        while True:
            dep = k * settings.headway_min * 60.0
            if dep >= settings.horizon_s:
                break
            schedule = self._schedule_for(dep)
            run = RunPlan.from_schedule(k, k % settings.fleet_size, schedule)
            self.runs.append(run)
            self.vehicles[run.vehicle_id].queue.append(run)
            k += 1
        self._schedule0 = self._schedule_for(0.0)
        self.riders: dict[int, RiderInfo] = {}
        self.audits: dict[int, _RunAudit] = {r.run_id: _RunAudit() for r in self.runs}
        self.clock_s = 0.0
        self._next_req = 0

    def _schedule_for(self, dep_s: float) -> SoDSchedule:
        return build_schedule(self.route, self.s.flexible_km, self.s.headway_min,
                              self.s.detour_budget_min, dep_s,
                              peak_headway_min=self.s.peak_headway_min,
                              dwell_s=self.s.dwell_s)

    # ------------------------------------------------------------------
    # request handling
    # ------------------------------------------------------------------

    def _run_state(self, run: RunPlan) -> RunState:
        if run.status == PENDING:
            return pending_run_state(run)
        veh = self.vehicles[run.vehicle_id]
        idx = run.next_idx
        stop = run.stops[idx] if idx < len(run.stops) else None
        if veh.state == DRIVE:
            node, t_end, _ = veh.path[0]
            return RunState(node, t_end, idx, idx, idx, frozenset(veh.onboard))
        if veh.state == HOLD and stop is not None:
            return RunState(stop.node, stop.t_arrive_s, idx, idx, idx + 1,
                            frozenset(veh.onboard))
        if veh.state == DWELL and stop is not None:
            depart = stop.t_service_s + stop.duration_s
            return RunState(stop.node, depart, idx + 1, idx + 1, idx + 1,
                            frozenset(veh.onboard))
        # vehicle idle between runs but run still active: should not happen
        raise RuntimeError(f"run {run.run_id} active with idle vehicle")  # pragma: no cover

    def _dispatch(self, req: Request) -> None:
        info = make_rider_info(req, self.s.walk_speed_m_s, self.s.ride_factor)
        self.riders[req.req_id] = info
        states = {run.run_id: self._run_state(run)
                  for run in self.runs
                  if run.status != DONE
                  and run.departure_s <= info.ready_s + self.s.max_wait_s + 1e-6}
        candidate_runs = [run for run in self.runs if run.run_id in states]
        best, collected = insert_request(
            req.req_id, info, candidate_runs, states, self.net, self.riders,
            self.s.vehicle_capacity, self.s.max_wait_s, self.s.dwell_s,
            self.s.objective, collect=self.audit_insertions)
        if best is None:
            req.advance_state(REJECTED)
            return
        if self.audit_insertions:
            best_enumerated = min(c.objective for c in collected) if collected else math.nan
            self.insertion_audit.append((req.req_id, best.objective, best_enumerated))
        run = next(r for r in self.runs if r.run_id == best.run_id)
        veh = self.vehicles[run.vehicle_id]
        run.stops = best.stops
        info.run_id = run.run_id
        req.advance_state(ASSIGNED)
        if (run.status == ACTIVE and veh.state == DRIVE
                and run.stops[run.next_idx].node != veh.target_node):
            veh.redirect = True

    # ------------------------------------------------------------------
    # vehicle motion
    # ------------------------------------------------------------------

    def _begin_leg(self, veh: VehicleSim, target: int, t0: float) -> None:
        run = veh.run
        if veh.node == target:
            stop = run.stops[run.next_idx]
            stop.t_arrive_s = t0
            veh.state = HOLD
            veh.target_node = target
            return
        hops = self.net.path_edges(veh.node, target)
        t = t0
        veh.path = deque()
        for node, dt, length in hops:
            t += dt
            veh.path.append((node, t, length))
        veh.state = DRIVE
        veh.target_node = target

    def _serve_stop(self, veh: VehicleSim, run: RunPlan, stop: PlanStop, service: float) -> None:
        audit = self.audits[run.run_id]
        audit.visits.append((stop.node, service))
        if not stop.scheduled:
            audit.door_stops += 1
        for rid in stop.alight:
            req = self.riders[rid].request
            req.t_alight_s = service
            req.advance_state(SERVED)
            veh.onboard.discard(rid)
        for rid in stop.board:
            req = self.riders[rid].request
            req.t_board_s = service
            req.advance_state(ON_BOARD)
            veh.onboard.add(rid)
        if run.next_idx == 0:
            audit.pax_terminus = len(stop.board)
        if stop.reentry and audit.reentry_arrive_s is None:
            audit.reentry_arrive_s = stop.t_arrive_s
        if len(veh.onboard) > self.s.vehicle_capacity:  # pragma: no cover - guarded upstream
            raise RuntimeError(f"vehicle {veh.id} over capacity at {service}")

    def _finish_run(self, veh: VehicleSim, run: RunPlan, t_end: float) -> None:
        run.status = DONE
        run.t_end_s = t_end
        run.odometer_end_m = veh.odometer_m
        veh.run = None

    def _advance(self, veh: VehicleSim, until: float) -> None:
        while veh.cursor_s < until - _TOL:
            if veh.state == IDLE:
                nxt = veh.queue[0] if veh.queue else None
                if nxt is None or nxt.departure_s > until:
                    veh.cursor_s = until
                    return
                veh.queue.popleft()
                if (veh.cursor_s > nxt.departure_s + 1e-6
                        or veh.node != nxt.stops[0].node):  # pragma: no cover - fleet check prevents
                    raise InfeasibleError(f"vehicle {veh.id} missed departure of run {nxt.run_id}")
                veh.cursor_s = nxt.departure_s
                nxt.status = ACTIVE
                nxt.next_idx = 0
                nxt.odometer_start_m = veh.odometer_m
                veh.run = nxt
                nxt.stops[0].t_arrive_s = veh.cursor_s
                veh.state = HOLD
            elif veh.state == HOLD:
                run = veh.run
                stop = run.stops[run.next_idx]
                service = max(stop.t_arrive_s, stop.earliest_start_s)
                if service > until:
                    veh.cursor_s = until
                    return
                stop.started = True
                stop.t_service_s = service
                self._serve_stop(veh, run, stop, service)
                veh.cursor_s = service
                veh.state = DWELL
            elif veh.state == DWELL:
                run = veh.run
                stop = run.stops[run.next_idx]
                depart = stop.t_service_s + stop.duration_s
                if depart > until:
                    veh.cursor_s = until
                    return
                veh.cursor_s = depart
                if stop.boundary:
                    self.audits[run.run_id].boundary_depart_s = depart
                run.next_idx += 1
                if run.next_idx >= len(run.stops):
                    self._finish_run(veh, run, depart)
                    veh.state = IDLE
                    continue
                self._begin_leg(veh, run.stops[run.next_idx].node, depart)
            else:  # DRIVE
                node, t_end, length = veh.path[0]
                if t_end > until:
                    veh.cursor_s = until
                    return
                veh.path.popleft()
                veh.cursor_s = t_end
                veh.node = node
                veh.odometer_m += length
                if veh.redirect:
                    veh.redirect = False
                    self._begin_leg(veh, veh.run.stops[veh.run.next_idx].node, t_end)
                    continue
                if not veh.path:
                    stop = veh.run.stops[veh.run.next_idx]
                    stop.t_arrive_s = t_end
                    veh.state = HOLD

    # ------------------------------------------------------------------
    # main loop
    # ------------------------------------------------------------------

    def step(self, dt: float | None = None) -> None:
        dt = self.s.step_s if dt is None else dt
        if dt <= 0:
            raise ConfigError("step must be positive")
        t = min(self.clock_s + dt, self.s.horizon_s)
        for veh in self.vehicles:
            self._advance(veh, t)
        while (self._next_req < len(self.requests)
               and self.requests[self._next_req].t_request_s <= t):
            req = self.requests[self._next_req]
            self._next_req += 1
            if req.direct_drive_s is None:
                req.advance_state(REJECTED)
                continue
            self._dispatch(req)
        self.clock_s = t

    def run(self) -> "SimResult":
        while self.clock_s < self.s.horizon_s - _TOL:
            self.step()
        return self._collect()

    # ------------------------------------------------------------------
    # records
    # ------------------------------------------------------------------

    def _collect(self) -> "SimResult":
        trips = []
        for req in self.requests:
            info = self.riders.get(req.req_id)
            ready = (info.ready_s if info is not None
                     else req.t_request_s + req.origin_walk_m / self.s.walk_speed_m_s)
            wait = req.t_board_s - ready if req.t_board_s is not None else None
            ride = (req.t_alight_s - req.t_board_s
                    if req.t_alight_s is not None and req.t_board_s is not None else None)
            trips.append(TripRecord(
                request_id=req.req_id,
                state=req.state,
                t_request_s=req.t_request_s,
                t_board_s=req.t_board_s,
                t_alight_s=req.t_alight_s,
                access_m=req.origin_walk_m + req.egress_walk_m,
                wait_s=wait,
                ride_s=ride,
                direct_s=req.direct_drive_s if req.direct_drive_s is not None else math.nan,
                warmup=req.t_request_s < self.s.warmup_s,
            ))

        run_records = []
        for run in self.runs:
            if run.status == PENDING:
                continue
            audit = self.audits[run.run_id]
            detour = None
            if audit.boundary_depart_s is not None and audit.reentry_arrive_s is not None:
                baseline = self._schedule0.baseline_zone_drive_s
                detour = audit.reentry_arrive_s - audit.boundary_depart_s - baseline
            run_records.append(RunRecord(
                run_id=run.run_id,
                vehicle_id=run.vehicle_id,
                t_depart_s=run.departure_s,
                t_end_s=run.t_end_s,
                distance_m=self._run_distance(run),
                pax_from_terminus=audit.pax_terminus,
                n_door_stops=audit.door_stops,
                zone_detour_s=detour,
                trace_hash=trace_hash(audit.visits),
                warmup=run.departure_s < self.s.warmup_s,
            ))

        vehicles = []
        for veh in self.vehicles:
            done = [r for r in self.runs
                    if r.vehicle_id == veh.id and r.status == DONE
                    and r.departure_s >= self.s.warmup_s]
            dist = sum(self._run_distance(r) for r in done)
            pax = [self.audits[r.run_id].pax_terminus for r in done]
            vehicles.append(VehicleRecord(
                vehicle_id=veh.id,
                distance_m=dist,
                deployed_s=self.s.horizon_s - self.s.warmup_s,
                runs_completed=len(done),
                pax_from_terminus_per_run=sum(pax) / len(pax) if pax else 0.0,
                driver_operated=veh.id < self.s.driver_vehicles,
            ))

        return SimResult(trips=trips, vehicles=vehicles, runs=run_records,
                         insertion_audit=list(self.insertion_audit))

    def _run_distance(self, run: RunPlan) -> float:
        veh = self.vehicles[run.vehicle_id]
        if run.status == ACTIVE:
            return veh.odometer_m - run.odometer_start_m
        if run.status == DONE:
            return run.odometer_end_m - run.odometer_start_m
        return 0.0


@dataclass
class SimResult:
    trips: list[TripRecord]
    vehicles: list[VehicleRecord]
    runs: list[RunRecord]
    insertion_audit: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        out = {"generated": len(self.trips), "served": 0, "rejected": 0, "in_progress": 0}
        for t in self.trips:
            if t.state == SERVED:
                out["served"] += 1
            elif t.state == REJECTED:
                out["rejected"] += 1
            else:
                out["in_progress"] += 1
        return out


def run_replication(net: Network, route: RouteSpec, demand: DemandSpec,
                    settings: ServiceSettings, seed: int, replication: int = 0,
                    audit_insertions: bool = False) -> SimResult:
    """Generate, snap, and simulate one replication deterministically."""
    requests = generate_requests(demand, net, route, settings.flexible_km,
                                 seed, replication)
    for req in requests:
        ok = snap_request(req, net, route, settings.flexible_km, demand.max_walk_m,
                          settings.walk_speed_m_s)
        if not ok:
            req.direct_drive_s = None
    sim = Simulation(net, route, settings, requests, audit_insertions=audit_insertions)
    return sim.run()
