"""Peak-hour fixed-route service planning.

Optimizes vehicle size, headway, and fleet size for a route by minimizing
the sum of riders' waiting cost and the operator's fleet cost, subject to a
line-capacity ceiling and an operating-budget floor on the headway. Two
scenarios are supported: a fully autonomous fleet (capital plus operating
unit costs) and a transition fleet in which a share ``alpha`` of the current
drivers is retained and operates part of the new fleet (operating unit costs
only, with labor inside the budget).

All public functions take and return headways in minutes; costs are €/h.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .errors import ConfigError, InfeasibleError

LOG = logging.getLogger(__name__)

FULL_SAV = "full_sav"
TRANSITION = "transition"

#: headway discretization in minutes
DEFAULT_GRID_STEP_MIN = 0.5

_REL_TOL = 1e-9


@dataclass(frozen=True)
class CostTable:
    """Unit costs per vehicle size plus system-wide coefficients.

    ``operational_cost`` covers capital plus operating expenses per vehicle
    hour; ``operating_cost`` is the operating share alone (used in the
    transition scenario where capital is treated as sunk).
    """

    sizes: tuple[int, ...] = (5, 8, 20, 44, 70)
    operational_cost: dict[int, float] = field(
        default_factory=lambda: {5: 4.4, 8: 5.9, 20: 11.05, 44: 16.2, 70: 23.8}
    )
    operating_cost: dict[int, float] = field(
        default_factory=lambda: {5: 2.1, 8: 2.6, 20: 4.15, 44: 5.7, 70: 9.5}
    )
    current_operational_cost: float = 36.3
    current_operating_cost: float = 24.8
    driver_cost: float = 15.3
    value_of_time: float = 16.5
    waiting_weight: float = 1.5
    capacity_buffer: float = 0.9

    def validate(self) -> None:
        if not self.sizes:
            raise ConfigError("vehicle size set is empty")
        if any(b <= 0 for b in self.sizes):
            raise ConfigError("vehicle sizes must be positive")
        prev_c = prev_m = 0.0
        for b in sorted(self.sizes):
            try:
                gc, gm = self.operational_cost[b], self.operating_cost[b]
            except KeyError:
                raise ConfigError(f"no cost entry for vehicle size {b}") from None
            if gc <= 0 or gm <= 0:
                raise ConfigError(f"costs for size {b} must be positive")
            if gc < gm:
                raise ConfigError(f"operational cost below operating cost for size {b}")
            if gc <= prev_c or gm <= prev_m:
                raise ConfigError("costs must be strictly increasing in vehicle size")
            prev_c, prev_m = gc, gm
        for name in ("current_operational_cost", "current_operating_cost",
                     "driver_cost", "value_of_time", "waiting_weight"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 < self.capacity_buffer <= 1:
            raise ConfigError("capacity_buffer must be in (0, 1]")


@dataclass(frozen=True)
class RouteStop:
    """One fixed stop: network node plus cumulative chainage from the
    terminus, and (once computed against a network) timetable offsets of its
    outbound and inbound visits relative to the run departure."""

    node: int
    chainage_km: float
    outbound_offset_s: float | None = None
    inbound_offset_s: float | None = None


@dataclass(frozen=True)
class RouteSpec:
    """A fixed route's geometry, demand, and existing service levels."""

    route_id: str
    length_km: float
    cycle_time_min: float
    peak_demand_pax_h: float
    headway_min: float
    fleet_size: float
    peak_load_pax_h: float | None = None  # defaults to peak_demand_pax_h
    offpeak_demand_pax_h: float | None = None
    stops: tuple[RouteStop, ...] = ()
    terminus: int | None = None

    @property
    def peak_load(self) -> float:
        return self.peak_load_pax_h if self.peak_load_pax_h is not None else self.peak_demand_pax_h

    def validate(self) -> None:
        if self.length_km <= 0 or self.cycle_time_min <= 0:
            raise ConfigError(f"route {self.route_id}: non-positive geometry")
        if self.peak_demand_pax_h <= 0 or self.headway_min <= 0 or self.peak_load <= 0:
            raise ConfigError(f"route {self.route_id}: demand and headway must be positive")
        if self.stops:
            chain = [s.chainage_km for s in self.stops]
            if any(b <= a for a, b in zip(chain, chain[1:])):
                raise ConfigError(f"route {self.route_id}: stop chainage must be strictly increasing")
            if self.terminus is not None and self.stops[0].node != self.terminus:
                raise ConfigError(f"route {self.route_id}: first stop must be the terminus")


@dataclass(frozen=True)
class FleetPlan:
    """An optimized (vehicle size, headway, fleet size) service plan.

    ``binding`` records which constraint pinned the headway: ``interior``
    (unconstrained optimum, snapped to the grid), ``capacity``, ``budget``,
    or ``infeasible`` when no size satisfies both bounds (the least-violating
    size is reported with a diagnostic instead of failing).
    """

    route_id: str
    scenario: str
    alpha: float | None
    vehicle_size: int
    headway_min: float
    fleet_size: int
    cost_per_h: float
    binding: str
    added_vehicles: float | None = None  # transition: fleet minus retained drivers
    diagnostic: str = ""


def _unit_cost(size: int, costs: CostTable, scenario: str) -> float:
    table = costs.operational_cost if scenario == FULL_SAV else costs.operating_cost
    try:
        return table[size]
    except KeyError:
        raise ConfigError(f"unknown vehicle size {size}") from None


def _cost_at(headway_min: float, unit_cost: float, route: RouteSpec, costs: CostTable) -> float:
    h = headway_min / 60.0
    tc = route.cycle_time_min / 60.0
    wait = 0.5 * costs.value_of_time * costs.waiting_weight * route.peak_demand_pax_h * h
    fleet = unit_cost * tc / h
    return wait + fleet


def route_cost(size: int, headway_min: float, route: RouteSpec, costs: CostTable,
               scenario: str = FULL_SAV) -> float:
    """Hourly system cost of running the route at the given headway.

    Sum of the expected waiting cost (riders arrive uniformly within a
    headway, so mean wait is half of it) and the fleet cost of covering the
    cycle time at that headway.
    """
    if headway_min <= 0:
        raise ConfigError("headway must be positive")
    return _cost_at(headway_min, _unit_cost(size, costs, scenario), route, costs)


def optimal_headway(size: int, route: RouteSpec, costs: CostTable,
                    scenario: str = FULL_SAV) -> float:
    """Unconstrained cost-minimizing headway in minutes.

    Balances the two cost terms; at the optimum they are equal, and the
    headway scales with the inverse square root of demand.
    """
    unit = _unit_cost(size, costs, scenario)
    tc = route.cycle_time_min / 60.0
    h = math.sqrt(2.0 * unit * tc / (costs.value_of_time * costs.waiting_weight * route.peak_demand_pax_h))
    return h * 60.0


def optimal_cost(size: int, route: RouteSpec, costs: CostTable,
                 scenario: str = FULL_SAV) -> float:
    """Hourly cost at the unconstrained optimal headway."""
    unit = _unit_cost(size, costs, scenario)
    tc = route.cycle_time_min / 60.0
    return math.sqrt(2.0 * costs.value_of_time * costs.waiting_weight * unit
                     * route.peak_demand_pax_h * tc)


def headway_bounds(size: int, route: RouteSpec, costs: CostTable,
                   scenario: str = FULL_SAV, alpha: float = 1.0) -> tuple[float, float]:
    """(h_min, h_max) in minutes for one vehicle size.

    The upper bound keeps enough line capacity for the peak one-direction
    load (with the capacity buffer); the lower bound keeps the fleet within
    the current operating budget. In the transition scenario the budget floor
    accounts for the labor cost of drivers leaving the workforce.
    """
    h_max = size * costs.capacity_buffer / route.peak_load * 60.0
    if scenario == FULL_SAV:
        h_min = _unit_cost(size, costs, FULL_SAV) / costs.current_operational_cost * route.headway_min
    else:
        denom = costs.current_operating_cost - costs.driver_cost * (1.0 - alpha)
        if denom <= 0:
            raise InfeasibleError(
                f"route {route.route_id}: retained-driver labor consumes the whole "
                f"operating budget (alpha={alpha})")
        h_min = _unit_cost(size, costs, TRANSITION) / denom * route.headway_min
    return h_min, h_max


def transition_fleet_bound(alpha: float, route: RouteSpec, costs: CostTable,
                           size: int) -> float:
    """Largest fleet the current operating budget can fund at share ``alpha``
    of retained drivers. A negative budget residual yields a zero bound."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError("alpha must be within [0, 1]")
    numer = costs.current_operating_cost - costs.driver_cost * (1.0 - alpha)
    if numer <= 0:
        return 0.0
    return numer / _unit_cost(size, costs, TRANSITION) * route.fleet_size


def _grid_range(h_min: float, h_max: float, step: float) -> tuple[int, int]:
    """Feasible grid indices: budget floor rounds up, capacity ceiling rounds
    down, with a small tolerance so exact-boundary values stay feasible."""
    lo = math.ceil(h_min / step - _REL_TOL)
    hi = math.floor(h_max / step + _REL_TOL)
    return max(lo, 1), hi


def plan_route(route: RouteSpec, costs: CostTable, scenario: str = FULL_SAV,
               alpha: float = 1.0, grid_step_min: float = DEFAULT_GRID_STEP_MIN) -> FleetPlan:
    """Best feasible (vehicle size, headway, fleet) plan for one route.

    For each size the unconstrained optimum is clamped into its feasibility
    interval and snapped to the cheaper adjacent grid point (the cost is
    convex in the headway, so the grid argmin is one of the two neighbors).
    Sizes whose budget floor exceeds their capacity ceiling are skipped. If
    every size is infeasible, the plan is tagged ``infeasible`` and reports
    the least-violating size at its budget-floor headway.
    """
    costs.validate()
    route.validate()
    if scenario not in (FULL_SAV, TRANSITION):
        raise ConfigError(f"unknown scenario {scenario!r}")
    if grid_step_min <= 0:
        raise ConfigError("grid step must be positive")

    best: FleetPlan | None = None
    least_violation = math.inf
    least_plan: FleetPlan | None = None

    for size in sorted(costs.sizes):
        unit = _unit_cost(size, costs, scenario)
        h_min, h_max = headway_bounds(size, route, costs, scenario, alpha)
        lo, hi = _grid_range(h_min, h_max, grid_step_min)
        if lo > hi:
            gap = h_min - h_max
            if gap < least_violation:
                least_violation = gap
                h_diag = max(lo, 1) * grid_step_min
                least_plan = _make_plan(route, scenario, alpha, size, h_diag,
                                        _cost_at(h_diag, unit, route, costs), "infeasible",
                                        costs,
                                        diagnostic=(f"budget floor {h_min:.3f} min exceeds "
                                                    f"capacity ceiling {h_max:.3f} min"))
            continue
        h_star = optimal_headway(size, route, costs, scenario)
        k = min(max(h_star / grid_step_min, lo), hi)
        candidates = sorted({max(lo, math.floor(k)), min(hi, math.ceil(k))})
        h_best, c_best = None, math.inf
        for kk in candidates:
            h = kk * grid_step_min
            c = _cost_at(h, unit, route, costs)
            if c < c_best * (1.0 - _REL_TOL):
                h_best, c_best = h, c
        assert h_best is not None
        if h_star < lo * grid_step_min - _REL_TOL:
            binding = "budget"
        elif h_star > hi * grid_step_min + _REL_TOL:
            binding = "capacity"
        else:
            binding = "interior"
        plan = _make_plan(route, scenario, alpha, size, h_best, c_best, binding, costs)
        if best is None or plan.cost_per_h < best.cost_per_h * (1.0 - _REL_TOL):
            best = plan

    if best is not None:
        return best
    if least_plan is None:
        raise ConfigError("vehicle size set is empty")
    LOG.warning("route %s: no feasible size; reporting least-violating plan (b=%d)",
                route.route_id, least_plan.vehicle_size)
    return least_plan


def _make_plan(route: RouteSpec, scenario: str, alpha: float, size: int, headway_min: float,
               cost: float, binding: str, costs: CostTable, diagnostic: str = "") -> FleetPlan:
    fleet = math.ceil(route.cycle_time_min / headway_min - _REL_TOL)
    added = None
    if scenario == TRANSITION:
        added = max(fleet - alpha * route.fleet_size, 0.0)
    return FleetPlan(
        route_id=route.route_id,
        scenario=scenario,
        alpha=alpha if scenario == TRANSITION else None,
        vehicle_size=size,
        headway_min=headway_min,
        fleet_size=fleet,
        cost_per_h=cost,
        binding=binding,
        added_vehicles=added,
        diagnostic=diagnostic,
    )


def budget_slack(plan: FleetPlan, route: RouteSpec, costs: CostTable) -> float:
    """Operating-budget residual of a transition plan in €/h.

    Non-negative when the plan's fleet (retained drivers plus added
    vehicles) fits the current operating budget. Uses the integer fleet
    size, so rounding up the cycle cover can consume at most one vehicle's
    operating cost of slack.
    """
    if plan.scenario != TRANSITION:
        raise ConfigError("budget_slack applies to transition plans")
    alpha = plan.alpha if plan.alpha is not None else 1.0
    gm = _unit_cost(plan.vehicle_size, costs, TRANSITION)
    spent = gm * plan.fleet_size + costs.driver_cost * alpha * route.fleet_size
    budget = (costs.current_operating_cost + costs.driver_cost) * route.fleet_size
    return budget - spent
