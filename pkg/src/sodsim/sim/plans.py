"""Run plans, projected timing, feasibility checks, and the dispatch objective."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..demand import Request
from ..detour import SoDSchedule
from ..network import Network

PENDING = "pending"
ACTIVE = "active"
DONE = "done"

_TOL = 1e-6


@dataclass
class PlanStop:
    """One stop of a vehicle plan, scheduled or inserted at run time."""

    node: int
    earliest_start_s: float
    latest_start_s: float
    duration_s: float
    scheduled: bool
    reentry: bool = False
    boundary: bool = False
    board: list[int] = field(default_factory=list)
    alight: list[int] = field(default_factory=list)
    started: bool = False
    t_arrive_s: float | None = None
    t_service_s: float | None = None


@dataclass
class RunPlan:
    """A single departure's stop sequence and its execution state."""

    run_id: int
    vehicle_id: int
    departure_s: float
    stops: list[PlanStop]
    status: str = PENDING
    next_idx: int = 0
    odometer_start_m: float = 0.0
    odometer_end_m: float | None = None
    t_end_s: float | None = None

    @classmethod
    def from_schedule(cls, run_id: int, vehicle_id: int, schedule: SoDSchedule) -> "RunPlan":
        stops = [
            PlanStop(s.node, s.earliest_start_s, s.latest_start_s, s.duration_s,
                     scheduled=True, reentry=s.reentry,
                     boundary=(schedule.reentry_index is not None
                               and i == schedule.boundary_index))
            for i, s in enumerate(schedule.stops)
        ]
        return cls(run_id, vehicle_id, schedule.departure_s, stops)


@dataclass
class RiderInfo:
    """Dispatch-relevant facts about one request, frozen at request time.

    The ride-time ceiling is promised against the direct drive between the
    effective endpoints and never relaxed by later re-planning.
    """

    request: Request
    ready_s: float
    direct_s: float
    max_ride_s: float
    fixed_route: bool  # both endpoints snapped to scheduled stops
    run_id: int | None = None


@dataclass(frozen=True)
class ObjectiveCoeffs:
    """Coefficients of the dispatch objective.

    Large service rewards make any feasible insertion preferable to leaving
    a request unserved; the extra fixed-route reward biases toward serving
    riders at scheduled stops.
    """

    distance_cost_per_km: float = 1.0
    time_cost_per_h: float = 16.5
    reward_served: float = 1e6
    reward_fixed_route: float = 1e6


@dataclass(frozen=True)
class FeasibilityFlags:
    """Outcome of the four insertion constraints for a candidate plan."""

    time_windows: bool
    waiting: bool
    ride_time: bool
    capacity: bool

    @property
    def ok(self) -> bool:
        return self.time_windows and self.waiting and self.ride_time and self.capacity


_FEASIBLE = FeasibilityFlags(True, True, True, True)


def _fail(reason: str) -> FeasibilityFlags:
    return FeasibilityFlags(
        time_windows=reason != "time_windows",
        waiting=reason != "waiting",
        ride_time=reason != "ride_time",
        capacity=reason != "capacity",
    )


@dataclass
class Projection:
    """Projected execution of a (candidate) plan from the vehicle's state."""

    flags: FeasibilityFlags
    distance_m: float = 0.0
    service_times: list[float] = field(default_factory=list)
    board_times: dict[int, float] = field(default_factory=dict)
    alight_times: dict[int, float] = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.flags.ok


def project(net: Network, stops: list[PlanStop], start_node: int, start_time_s: float,
            riders: dict[int, RiderInfo], onboard: set[int], capacity: int,
            max_wait_s: float, first_idx: int = 0) -> Projection:
    """Simulate a stop sequence forward and check the four constraints:
    latest-start adherence, waiting cap, ride-time factor, and capacity.

    Aborts at the first violation (later stops can only be later, so any
    downstream violation is already decided). Ride times for riders already
    aboard are measured from their actual boarding.
    """
    t = start_time_s
    node = start_node
    occupancy = len(onboard)
    dist = 0.0
    proj = Projection(_FEASIBLE)
    boarded: dict[int, float] = {}
    for stop in stops[first_idx:]:
        leg_t, leg_d = net.drive_leg(node, stop.node)
        arrive = t + leg_t
        dist += leg_d
        service = max(arrive, stop.earliest_start_s)
        if service > stop.latest_start_s + _TOL:
            proj.flags = _fail("time_windows")
            return proj
        for rid in stop.alight:
            info = riders[rid]
            t_board = boarded.get(rid)
            if t_board is None:
                t_board = info.request.t_board_s
            if t_board is None:  # pragma: no cover - alight before board
                proj.flags = _fail("time_windows")
                return proj
            if service - t_board > info.max_ride_s + _TOL:
                proj.flags = _fail("ride_time")
                return proj
            proj.alight_times[rid] = service
            occupancy -= 1
        for rid in stop.board:
            info = riders[rid]
            wait = service - info.ready_s
            if wait < -_TOL or wait > max_wait_s + _TOL:
                proj.flags = _fail("waiting")
                return proj
            boarded[rid] = service
            proj.board_times[rid] = service
            occupancy += 1
        if occupancy > capacity:
            proj.flags = _fail("capacity")
            return proj
        proj.service_times.append(service)
        t = service + stop.duration_s
        node = stop.node
    proj.distance_m = dist
    return proj


def plan_objective(distance_m: float, arrival_delays_s: dict[int, float],
                   riders: dict[int, RiderInfo], coeffs: ObjectiveCoeffs) -> float:
    """Dispatch objective of one plan.

    Distance cost plus time-weighted request-to-arrival delays, minus the
    service rewards; lower is better.
    """
    n_served = len(arrival_delays_s)
    n_fixed = sum(1 for rid in arrival_delays_s if riders[rid].fixed_route)
    value = coeffs.distance_cost_per_km * distance_m / 1000.0
    value += coeffs.time_cost_per_h * sum(arrival_delays_s.values()) / 3600.0
    value -= coeffs.reward_served * n_served
    value -= coeffs.reward_fixed_route * n_fixed
    return value


def projection_objective(proj: Projection, riders: dict[int, RiderInfo],
                         coeffs: ObjectiveCoeffs) -> float:
    """Objective of a projected plan, counting riders it still carries."""
    delays = {rid: t - riders[rid].request.t_request_s
              for rid, t in proj.alight_times.items()}
    return plan_objective(proj.distance_m, delays, riders, coeffs)


def plan_occupancy_ok(stops: list[PlanStop], initial: int, capacity: int) -> bool:
    """Stand-alone occupancy trace check (used by audits/tests)."""
    occ = initial
    for stop in stops:
        occ -= len(stop.alight)
        occ += len(stop.board)
        if occ > capacity:
            return False
    return occ >= 0
