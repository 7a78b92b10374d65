"""Request snapping and exhaustive insertion search.

A new request's pickup and dropoff are tried at every admissible position of
every candidate run: joining an existing stop when the location matches, or
inserting a fresh stop into any gap. Committed stops keep their relative
order; only the new request's two stops move. The feasible candidate with
the lowest objective wins, with ties broken by lower vehicle id, lower run
id, then earlier pickup and dropoff positions.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from ..demand import Request
from ..detour import classify_endpoint
from ..errors import ConfigError
from ..network import Network
from ..planning import RouteSpec
from .plans import (ObjectiveCoeffs, PlanStop, Projection, RiderInfo, RunPlan,
                    project, projection_objective)

LOG = logging.getLogger(__name__)

_TOL = 1e-6


def snap_request(req: Request, net: Network, route: RouteSpec, flexible_km: float,
                 max_walk_m: float, walk_speed_m_s: float) -> bool:
    """Resolve a request's effective endpoints against the route form.

    Fixed-portion endpoints snap to the nearest fixed stop (recording the
    walk); flexible-zone endpoints stay door-to-door. Returns False when an
    endpoint is outside every catchment, which rejects the request outright.
    Also freezes the direct drive time used for the ride-time promise.
    """
    in_zone_o, stop_o, walk_o = classify_endpoint(net, req.origin, route, flexible_km, max_walk_m)
    in_zone_d, stop_d, walk_d = classify_endpoint(net, req.destination, route, flexible_km, max_walk_m)
    if (not in_zone_o and stop_o is None) or (not in_zone_d and stop_d is None):
        return False
    req.origin_stop = stop_o if not in_zone_o else None
    req.destination_stop = stop_d if not in_zone_d else None
    req.origin_walk_m = walk_o if not in_zone_o else 0.0
    if not in_zone_d and stop_d is not None:
        req.egress_walk_m = net.walk_distances_from(stop_d).get(req.destination, walk_d)
    else:
        req.egress_walk_m = 0.0
    if req.boarding_node == req.alighting_node:
        return False  # both endpoints snap to the same stop: nothing to ride
    req.direct_drive_s = net.drive_time_s(req.boarding_node, req.alighting_node)
    return True


def make_rider_info(req: Request, walk_speed_m_s: float, ride_factor: float) -> RiderInfo:
    if req.direct_drive_s is None:
        raise ConfigError(f"request {req.req_id} not snapped")
    ready = req.t_request_s + req.origin_walk_m / walk_speed_m_s
    return RiderInfo(
        request=req,
        ready_s=ready,
        direct_s=req.direct_drive_s,
        max_ride_s=ride_factor * req.direct_drive_s,
        fixed_route=req.origin_stop is not None and req.destination_stop is not None,
    )


@dataclass(frozen=True)
class RunState:
    """Where a projection of this run must start from."""

    start_node: int
    start_time_s: float
    first_idx: int    # first stop included in the projection
    join_min: int     # smallest stop index that may still take boardings
    new_min: int      # smallest gap position for a fresh stop
    onboard: frozenset[int]


@dataclass(frozen=True)
class InsertionCandidate:
    run_id: int
    vehicle_id: int
    pickup_key: tuple[int, int]
    dropoff_key: tuple[int, int]
    objective: float
    projection: Projection
    stops: list[PlanStop]


def pending_run_state(run: RunPlan) -> RunState:
    return RunState(run.stops[0].node, run.departure_s, 0, 0, 1, frozenset())


def _stop_copy(stop: PlanStop) -> PlanStop:
    return PlanStop(stop.node, stop.earliest_start_s, stop.latest_start_s,
                    stop.duration_s, stop.scheduled, stop.reentry, stop.boundary,
                    list(stop.board), list(stop.alight), stop.started,
                    stop.t_arrive_s, stop.t_service_s)


def _with_pickup(stops: list[PlanStop], key: tuple[int, int], rid: int,
                 node: int, ready_s: float, dwell_s: float) -> tuple[list[PlanStop], int]:
    """Apply a pickup option to a shallow-copied stop list.

    Only the touched stop is duplicated; untouched stops are shared with the
    committed plan (they are never mutated during evaluation).
    """
    kind, pos = key
    out = list(stops)
    if kind == 0:  # new stop inserted before position `pos`
        out.insert(pos, PlanStop(node, ready_s, math.inf, dwell_s,
                                 scheduled=False, board=[rid]))
        return out, pos
    stop = _stop_copy(out[pos])
    stop.board.append(rid)
    if not stop.scheduled:
        stop.earliest_start_s = max(stop.earliest_start_s, ready_s)
    out[pos] = stop
    return out, pos


def _with_dropoff(stops: list[PlanStop], key: tuple[int, int], rid: int,
                  node: int, dwell_s: float) -> list[PlanStop]:
    kind, pos = key
    out = list(stops)
    if kind == 0:
        out.insert(pos, PlanStop(node, 0.0, math.inf, dwell_s,
                                 scheduled=False, alight=[rid]))
        return out
    out[pos] = _stop_copy(out[pos])
    out[pos].alight.append(rid)
    return out


def _pickup_options(stops: list[PlanStop], state: RunState, node: int) -> list[tuple[int, int]]:
    """Pickup placements ordered by effective position: a fresh stop in gap
    ``p`` comes just before joining existing stop ``p``."""
    options: list[tuple[float, tuple[int, int]]] = []
    for p in range(max(state.new_min, 1), len(stops)):
        options.append((p - 0.5, (0, p)))
    for j in range(state.join_min, len(stops)):
        if stops[j].node == node and not stops[j].started:
            options.append((float(j), (1, j)))
    options.sort()
    return [key for _, key in options]


def _dropoff_options(stops: list[PlanStop], pick_idx: int, node: int) -> list[tuple[int, int]]:
    options: list[tuple[float, tuple[int, int]]] = []
    for p in range(pick_idx + 1, len(stops)):
        options.append((p - 0.5, (0, p)))
    for j in range(pick_idx + 1, len(stops)):
        if stops[j].node == node and not stops[j].started:
            options.append((float(j), (1, j)))
    options.sort()
    return [key for _, key in options]


def enumerate_insertions(rid: int, info: RiderInfo, run: RunPlan, state: RunState,
                         net: Network, riders: dict[int, RiderInfo], capacity: int,
                         max_wait_s: float, dwell_s: float, coeffs: ObjectiveCoeffs,
                         ) -> list[InsertionCandidate]:
    """All feasible placements of one request in one run.

    Two-phase search: each pickup placement is projected first (any violation
    there dooms every completion, since added stops only push times later),
    then dropoff placements are projected on top of the surviving pickups.
    """
    pickup_node = info.request.boarding_node
    dropoff_node = info.request.alighting_node
    out: list[InsertionCandidate] = []
    onboard = set(state.onboard)
    for pick_key in _pickup_options(run.stops, state, pickup_node):
        with_pick, pick_idx = _with_pickup(run.stops, pick_key, rid, pickup_node,
                                           info.ready_s, dwell_s)
        probe = project(net, with_pick, state.start_node, state.start_time_s,
                        riders, onboard, capacity, max_wait_s, state.first_idx)
        if not probe.feasible:
            continue
        for drop_key in _dropoff_options(with_pick, pick_idx, dropoff_node):
            full = _with_dropoff(with_pick, drop_key, rid, dropoff_node, dwell_s)
            proj = project(net, full, state.start_node, state.start_time_s,
                           riders, onboard, capacity, max_wait_s, state.first_idx)
            if not proj.feasible:
                continue
            out.append(InsertionCandidate(
                run_id=run.run_id,
                vehicle_id=run.vehicle_id,
                pickup_key=pick_key,
                dropoff_key=drop_key,
                objective=projection_objective(proj, riders, coeffs),
                projection=proj,
                stops=full,
            ))
    return out


def insert_request(rid: int, info: RiderInfo, runs: list[RunPlan],
                   run_states: dict[int, RunState], net: Network,
                   riders: dict[int, RiderInfo], capacity: int, max_wait_s: float,
                   dwell_s: float, coeffs: ObjectiveCoeffs,
                   collect: bool = False,
                   ) -> tuple[InsertionCandidate | None, list[InsertionCandidate]]:
    """Globally best feasible insertion for a request, or None (rejection).

    Candidate runs are those not yet finished whose departure is early
    enough for the rider's waiting cap. ``collect=True`` additionally
    returns every feasible candidate for auditing.
    """
    best: InsertionCandidate | None = None
    best_key = None
    collected: list[InsertionCandidate] = []
    for run in runs:
        if run.status == "done":
            continue
        if run.departure_s > info.ready_s + max_wait_s + _TOL:
            continue
        state = run_states[run.run_id]
        for cand in enumerate_insertions(rid, info, run, state, net, riders,
                                         capacity, max_wait_s, dwell_s, coeffs):
            if collect:
                collected.append(cand)
            key = (cand.objective, cand.vehicle_id, cand.run_id,
                   cand.pickup_key, cand.dropoff_key)
            if best_key is None or key < best_key:
                best, best_key = cand, key
    return best, collected
