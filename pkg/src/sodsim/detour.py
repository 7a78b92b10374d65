"""Stochastic detour-time model and hybrid-route schedule construction.

A run serves its fixed stops on timetable, then sweeps a flexible zone of
length ``x_f`` at the outer end of the route for door-to-door stops, and
returns to the fixed route. Each door stop adds a dwell plus a there-and-back
deviation drawn uniformly within the walking catchment, and the number of
door stops per run is Poisson. The resulting total detour time is a
compound-Poisson sum of uniforms, whose conditional distribution is
Irwin-Hall; inverting its CDF at a service-guarantee confidence gives the
schedule's detour budget, which the fleet size caps from above.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .errors import ConfigError
from .network import Network
from .planning import RouteSpec, RouteStop

LOG = logging.getLogger(__name__)

_CHAIN_TOL = 1e-9

#: above this request count the alternating Irwin-Hall sum is ill-conditioned
#: and a normal approximation (mean n/2, variance n/12) takes over.
NORMAL_APPROX_MIN_N = 26


@dataclass(frozen=True)
class DetourParams:
    """Inputs of the detour-time distribution for one route setting.

    ``request_rate`` is the expected number of door stops per run (the
    Poisson mean), typically the flexible-zone boarding+alighting rate times
    the headway.
    """

    request_rate: float
    max_walk_m: float = 500.0
    speed_kmh: float = 40.0
    dwell_s: float = 30.0
    confidence: float = 0.95

    def validate(self) -> None:
        if self.request_rate < 0:
            raise ConfigError("request rate must be non-negative")
        if self.max_walk_m <= 0 or self.speed_kmh <= 0 or self.dwell_s <= 0:
            raise ConfigError("walking cap, speed, and dwell must be positive")
        if not 0.0 < self.confidence < 1.0:
            raise ConfigError("confidence must be in (0, 1)")


def irwin_hall_cdf(x: float, n: int) -> float:
    """CDF of the sum of ``n`` independent Uniform(0, 1) variables.

    Evaluated in log space with sign tracking; the alternating series loses
    roughly one digit per term, so beyond :data:`NORMAL_APPROX_MIN_N` terms a
    moment-matched normal approximation is used instead.
    """
    if n < 0:
        raise ConfigError("n must be non-negative")
    if n == 0:
        return 1.0 if x >= 0 else 0.0
    if x <= 0.0:
        return 0.0
    if x >= n:
        return 1.0
    if n >= NORMAL_APPROX_MIN_N:
        z = (x - n / 2.0) / math.sqrt(n / 12.0)
        return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
    log_nfact = math.lgamma(n + 1)
    total = 0.0
    for k in range(int(math.floor(x)) + 1):
        log_term = (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
                    + n * math.log(x - k)) if x > k else -math.inf
        if math.isinf(log_term):
            continue
        term = math.exp(log_term - log_nfact)
        total += -term if k % 2 else term
    return min(max(total, 0.0), 1.0)


def detour_cdf_given_n(t_min: float, n: int, params: DetourParams) -> float:
    """P(total detour time <= t | exactly n door stops).

    Strips the fixed dwell component and rescales the remaining driving time
    onto the unit-uniform scale of the Irwin-Hall distribution.
    """
    speed_m_min = params.speed_kmh * 1000.0 / 60.0
    dwell_min = params.dwell_s / 60.0
    x = speed_m_min / (2.0 * params.max_walk_m) * (t_min - n * dwell_min)
    return irwin_hall_cdf(x, n)


def detour_cdf(t_min: float, params: DetourParams, tail_tol: float = 1e-9) -> float:
    """Unconditional CDF of the per-run detour time (minutes).

    Mixes the conditional CDFs over the Poisson stop count; the series stops
    once the remaining Poisson tail mass drops below ``tail_tol``.
    """
    if t_min < 0:
        return 0.0
    lam = params.request_rate
    if lam == 0.0:
        return 1.0
    pmf = math.exp(-lam)
    cum = pmf
    total = pmf * detour_cdf_given_n(t_min, 0, params)
    n = 0
    while 1.0 - cum > tail_tol:
        n += 1
        pmf *= lam / n
        cum += pmf
        cond = detour_cdf_given_n(t_min, n, params)
        total += pmf * cond
        if n > 10000:  # pragma: no cover - unreachable for sane rates
            break
    return min(max(total, 0.0), 1.0)


def required_detour_budget(params: DetourParams, tol_min: float = 0.01) -> float:
    """Smallest detour-time budget meeting the service-guarantee confidence.

    Bisection on the CDF, refined until the bracket is narrower than
    ``tol_min`` and the returned point overshoots the confidence by at most
    0.005 in probability.
    """
    params.validate()
    c = params.confidence
    if params.request_rate == 0.0 or detour_cdf(0.0, params) >= c:
        return 0.0
    hi = 1.0
    while detour_cdf(hi, params) < c:
        hi *= 2.0
        if hi > 1e6:  # pragma: no cover - defensive
            raise ConfigError("detour budget search diverged")
    lo = 0.0
    for _ in range(200):
        if hi - lo <= tol_min and detour_cdf(hi, params) - c <= 0.005:
            break
        mid = 0.5 * (lo + hi)
        if detour_cdf(mid, params) >= c:
            hi = mid
        else:
            lo = mid
    return hi


def max_detour_budget(cycle_time_min: float, headway_min: float,
                      peak_headway_min: float) -> float:
    """Fleet-imposed ceiling on the detour budget (minutes).

    The peak-sized fleet covers the cycle at the peak headway; running the
    same fleet at a slacker headway frees cycle time for detours. A headway
    at or below the peak headway leaves no slack.
    """
    if peak_headway_min <= 0:
        raise ConfigError("peak headway must be positive")
    if headway_min < peak_headway_min:
        LOG.warning("headway %.3g min below peak headway %.3g min: zero detour budget",
                    headway_min, peak_headway_min)
        return 0.0
    return cycle_time_min * (headway_min / peak_headway_min - 1.0)


# ----------------------------------------------------------------------
# route geometry helpers and schedule construction
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ScheduledStop:
    """One timetabled stop of a run, with its service window."""

    node: int
    chainage_km: float
    earliest_start_s: float
    latest_start_s: float
    duration_s: float
    reentry: bool = False


@dataclass(frozen=True)
class SoDSchedule:
    """One run's schedule: timetabled fixed stops plus a flexible zone.

    ``stops`` covers the fixed portion only; door stops are inserted by the
    dispatcher at run time between ``boundary_index`` and the re-entry stop.
    The re-entry stop carries the whole detour budget as schedule slack, so
    inbound fixed stops stay on a (shifted) timetable regardless of how much
    of the budget a run actually uses.
    """

    route_id: str
    stops: tuple[ScheduledStop, ...]
    flexible_length_km: float
    headway_min: float
    detour_budget_min: float
    departure_s: float
    boundary_chainage_km: float
    boundary_index: int
    reentry_index: int | None
    zone_stop_nodes: tuple[int, ...]
    baseline_zone_drive_s: float

    def validate(self) -> None:
        last = -math.inf
        for stop in self.stops:
            if stop.earliest_start_s > stop.latest_start_s + 1e-6:
                raise ConfigError("stop window inverted")
            if stop.earliest_start_s <= last:
                raise ConfigError("scheduled stop times must strictly increase")
            last = stop.earliest_start_s


def fixed_flexible_split(route: RouteSpec, flexible_km: float) -> tuple[list[RouteStop], list[RouteStop]]:
    """Partition route stops into fixed and flexible by chainage.

    Stops beyond ``length - flexible_km`` belong to the flexible zone and
    lose their timetable; the terminus always stays fixed.
    """
    if not 0.0 <= flexible_km <= route.length_km + _CHAIN_TOL:
        raise ConfigError(f"flexible length {flexible_km} outside [0, {route.length_km}]")
    boundary = route.length_km - flexible_km
    fixed = [s for s in route.stops if s.chainage_km <= boundary + _CHAIN_TOL]
    flexible = [s for s in route.stops if s.chainage_km > boundary + _CHAIN_TOL]
    if not fixed:
        raise ConfigError("flexible zone swallowed the terminus")
    return fixed, flexible


def classify_endpoint(net: Network, node: int, route: RouteSpec,
                      flexible_km: float, max_walk_m: float) -> tuple[bool, int | None, float]:
    """Classify a request endpoint against the current route form.

    Returns ``(in_flexible_zone, snapped_fixed_stop, walk_m)``. The endpoint
    belongs to whichever route stop is closest on foot (ties go to the lower
    chainage, i.e. the fixed side). Flexible-zone endpoints are served
    door-to-door (walk 0); fixed-portion endpoints snap to the nearest fixed
    stop, and a walk beyond ``max_walk_m`` means the endpoint is outside
    every catchment.
    """
    fixed, flexible = fixed_flexible_split(route, flexible_km)
    best_stop, best_d, best_fixed = None, math.inf, True
    for stop in route.stops:
        d = net.walk_distances_to(stop.node).get(node, math.inf)
        if d < best_d - 1e-9:
            best_stop, best_d = stop, d
            best_fixed = stop in fixed
    if best_stop is None or math.isinf(best_d):
        raise ConfigError(f"node {node} cannot reach any route stop on foot")
    if not best_fixed:
        return True, None, 0.0
    if best_d > max_walk_m + 1e-9:
        return False, None, best_d  # outside all catchments; caller filters
    return False, best_stop.node, best_d


def compute_stop_offsets(route: RouteSpec, net: Network, dwell_s: float = 30.0) -> RouteSpec:
    """Fill per-stop timetable offsets from network driving times.

    Outbound offsets accumulate leg times plus a dwell at every stop;
    inbound offsets mirror the return traversal. The declared cycle time
    must cover the computed round trip (any surplus is terminus recovery
    time).
    """
    if len(route.stops) < 2:
        raise ConfigError(f"route {route.route_id}: needs at least two stops")
    out: list[float] = [0.0]
    for a, b in zip(route.stops, route.stops[1:]):
        leg_t, _ = net.drive_leg(a.node, b.node)
        out.append(out[-1] + dwell_s + leg_t)
    m = len(route.stops) - 1
    inbound: list[float] = [0.0] * len(route.stops)
    inbound[m] = out[m]
    for i in range(m - 1, -1, -1):
        leg_t, _ = net.drive_leg(route.stops[i + 1].node, route.stops[i].node)
        inbound[i] = inbound[i + 1] + dwell_s + leg_t
    round_trip_s = inbound[0] + dwell_s
    if route.cycle_time_min * 60.0 + 1e-6 < round_trip_s:
        raise ConfigError(
            f"route {route.route_id}: cycle time {route.cycle_time_min} min cannot "
            f"cover the {round_trip_s / 60.0:.1f} min round trip")
    stops = tuple(
        RouteStop(s.node, s.chainage_km, out[i], inbound[i])
        for i, s in enumerate(route.stops)
    )
    return RouteSpec(
        route_id=route.route_id,
        length_km=route.length_km,
        cycle_time_min=route.cycle_time_min,
        peak_demand_pax_h=route.peak_demand_pax_h,
        headway_min=route.headway_min,
        fleet_size=route.fleet_size,
        peak_load_pax_h=route.peak_load_pax_h,
        offpeak_demand_pax_h=route.offpeak_demand_pax_h,
        stops=stops,
        terminus=route.terminus if route.terminus is not None else route.stops[0].node,
    )


def round_trip_distance_m(route: RouteSpec, net: Network) -> float:
    """Driving distance of one full fixed-route cycle."""
    total = 0.0
    for a, b in zip(route.stops, route.stops[1:]):
        total += net.drive_leg(a.node, b.node)[1]
    for a, b in zip(route.stops[::-1], route.stops[::-1][1:]):
        total += net.drive_leg(a.node, b.node)[1]
    return total


def build_schedule(route: RouteSpec, flexible_km: float, headway_min: float,
                   detour_budget_min: float, run_start_s: float,
                   peak_headway_min: float | None = None,
                   dwell_s: float = 30.0) -> SoDSchedule:
    """Build one run's schedule for the given route form.

    With ``flexible_km == 0`` this is the identity on the fixed timetable.
    Otherwise stops inside the zone are dropped from the timetable and the
    inbound fixed stops shift by the detour budget, which the re-entry stop
    absorbs as slack: a run that detours less simply waits there. When
    ``peak_headway_min`` is given, the budget is clipped to the fleet-imposed
    ceiling.
    """
    if route.stops and route.stops[0].outbound_offset_s is None:
        raise ConfigError("route stops carry no timetable offsets; "
                          "run compute_stop_offsets first")
    fixed, flexible = fixed_flexible_split(route, flexible_km)
    budget_min = max(detour_budget_min, 0.0)
    if peak_headway_min is not None:
        budget_min = min(budget_min, max_detour_budget(route.cycle_time_min,
                                                       headway_min, peak_headway_min))
    if not flexible:
        budget_min = 0.0
    budget_s = budget_min * 60.0

    stops: list[ScheduledStop] = []
    for s in fixed:
        t = run_start_s + s.outbound_offset_s
        stops.append(ScheduledStop(s.node, s.chainage_km, t, t, dwell_s))
    boundary_index = len(stops) - 1
    reentry_index = None
    if flexible:
        k = len(fixed) - 1
        reentry_t = run_start_s + fixed[k].inbound_offset_s + budget_s
        stops.append(ScheduledStop(fixed[k].node, fixed[k].chainage_km,
                                   reentry_t, reentry_t, dwell_s, reentry=True))
        reentry_index = len(stops) - 1
        for s in reversed(fixed[:-1]):
            t = run_start_s + s.inbound_offset_s + budget_s
            stops.append(ScheduledStop(s.node, s.chainage_km, t, t, dwell_s))
    else:
        for s in reversed(fixed[:-1]):
            t = run_start_s + s.inbound_offset_s
            stops.append(ScheduledStop(s.node, s.chainage_km, t, t, dwell_s))

    n_zone = len(flexible)
    if flexible:
        k_stop = fixed[-1]
        baseline = (k_stop.inbound_offset_s - k_stop.outbound_offset_s
                    - 2.0 * n_zone * dwell_s)
    else:
        baseline = 0.0

    schedule = SoDSchedule(
        route_id=route.route_id,
        stops=tuple(stops),
        flexible_length_km=flexible_km,
        headway_min=headway_min,
        detour_budget_min=budget_min,
        departure_s=run_start_s,
        boundary_chainage_km=route.length_km - flexible_km,
        boundary_index=boundary_index,
        reentry_index=reentry_index,
        zone_stop_nodes=tuple(s.node for s in flexible),
        baseline_zone_drive_s=baseline,
    )
    schedule.validate()
    return schedule
