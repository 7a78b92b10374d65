"""Seeded stochastic generation of rider requests.

Candidate trips arrive as Poisson streams per origin-destination stop pair
and are scattered uniformly within each stop's catchment. Whether a
candidate actually requests service depends on the walking distance to the
nearest service point: door-to-door coverage in the flexible zone means zero
walk and certain participation, while fixed-portion riders drop out with a
configurable access-decay probability.

Replications use counter-based RNG streams keyed by (seed, replication,
OD-pair index), so they are independent and insensitive to evaluation order.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .detour import classify_endpoint, fixed_flexible_split
from .errors import ConfigError
from .network import Network
from .planning import RouteSpec

LOG = logging.getLogger(__name__)

PENDING = "pending"
ASSIGNED = "assigned"
ON_BOARD = "on-board"
SERVED = "served"
REJECTED = "rejected"

_STATE_ORDER = {PENDING: 0, ASSIGNED: 1, ON_BOARD: 2, SERVED: 3, REJECTED: 3}


@dataclass(frozen=True)
class AccessDecay:
    """Participation probability as a function of walking distance.

    ``linear`` falls from 1 at the door to ``p_min`` at the walking cap;
    ``logit`` is a logistic curve with a midpoint and scale in meters. Both
    are zero beyond the cap.
    """

    kind: str = "linear"
    p_min: float = 0.5
    midpoint_m: float = 250.0
    scale_m: float = 100.0

    def validate(self) -> None:
        if self.kind not in ("linear", "logit"):
            raise ConfigError(f"unknown access decay kind {self.kind!r}")
        if not 0.0 <= self.p_min <= 1.0:
            raise ConfigError("p_min must be within [0, 1]")
        if self.scale_m <= 0:
            raise ConfigError("scale_m must be positive")


@dataclass(frozen=True)
class ODRate:
    origin_stop: int
    destination_stop: int
    rate_pax_h: float


@dataclass(frozen=True)
class DemandSpec:
    """Demand side of a scenario: OD rates plus participation behavior."""

    od: tuple[ODRate, ...]
    catchment_m: float = 350.0
    max_walk_m: float = 500.0
    decay: AccessDecay = field(default_factory=AccessDecay)
    horizon_s: float = 10800.0
    warmup_s: float = 3600.0

    def validate(self) -> None:
        if not self.od:
            raise ConfigError("OD table is empty")
        if any(r.rate_pax_h < 0 for r in self.od):
            raise ConfigError("OD rates must be non-negative")
        if self.catchment_m <= 0 or self.max_walk_m <= 0:
            raise ConfigError("catchment and walking cap must be positive")
        if not self.horizon_s > self.warmup_s >= 0:
            raise ConfigError("horizon must exceed warm-up")
        self.decay.validate()


@dataclass
class Request:
    """One rider trip through its lifecycle.

    Snapped endpoints are set only for endpoints inside the fixed portion;
    flexible-zone endpoints stay door-to-door. State can only move forward.
    """

    req_id: int
    t_request_s: float
    origin: int
    destination: int
    origin_stop: int | None = None
    destination_stop: int | None = None
    origin_walk_m: float = 0.0
    egress_walk_m: float = 0.0
    state: str = PENDING
    t_board_s: float | None = None
    t_alight_s: float | None = None
    direct_drive_s: float | None = None

    def advance_state(self, new_state: str) -> None:
        if _STATE_ORDER[new_state] < _STATE_ORDER[self.state]:
            raise ValueError(f"request {self.req_id}: cannot move {self.state} -> {new_state}")
        self.state = new_state

    @property
    def boarding_node(self) -> int:
        return self.origin_stop if self.origin_stop is not None else self.origin

    @property
    def alighting_node(self) -> int:
        return self.destination_stop if self.destination_stop is not None else self.destination


def access_probability(walk_m: float, decay: AccessDecay, max_walk_m: float = 500.0) -> float:
    """Probability that a candidate with the given walk still makes the trip."""
    if walk_m < 0:
        raise ConfigError("walking distance must be non-negative")
    if walk_m > max_walk_m:
        return 0.0
    if decay.kind == "linear":
        return 1.0 - (1.0 - decay.p_min) * walk_m / max_walk_m
    return 1.0 / (1.0 + math.exp((walk_m - decay.midpoint_m) / decay.scale_m))


def catchment_nodes(net: Network, stop: int, radius_m: float) -> list[int]:
    """Nodes within a euclidean radius of a stop, in id order."""
    sx, sy = net.coords[stop]
    out = [n for n, (x, y) in sorted(net.coords.items())
           if (x - sx) ** 2 + (y - sy) ** 2 <= radius_m ** 2]
    if not out:
        raise ConfigError(f"stop {stop}: empty catchment of radius {radius_m} m")
    return out


def _endpoint_walk(net: Network, node: int, route: RouteSpec, flexible_km: float,
                   max_walk_m: float) -> float | None:
    """Walk to the nearest service point; None when outside every catchment."""
    in_zone, snapped, walk = classify_endpoint(net, node, route, flexible_km, max_walk_m)
    if in_zone:
        return 0.0
    if snapped is None:
        return None
    return walk


def generate_requests(spec: DemandSpec, net: Network, route: RouteSpec,
                      flexible_km: float, seed: int, replication: int = 0) -> list[Request]:
    """Generate the time-ordered request stream for one replication.

    Fully deterministic in (seed, replication): every OD pair owns a Philox
    stream keyed by its index, candidate fields are drawn vectorized per
    pair, and the merged stream is sorted by request time with the pair
    index as tie-breaker.
    """
    spec.validate()
    horizon_h = spec.horizon_s / 3600.0
    raw: list[tuple[float, int, int, int, int]] = []
    for k, od in enumerate(spec.od):
        if od.rate_pax_h == 0.0:
            continue
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(entropy=(int(seed), int(replication), k))))
        n = int(rng.poisson(od.rate_pax_h * horizon_h))
        if n == 0:
            continue
        times = np.sort(rng.uniform(0.0, spec.horizon_s, n))
        o_nodes = catchment_nodes(net, od.origin_stop, spec.catchment_m)
        d_nodes = catchment_nodes(net, od.destination_stop, spec.catchment_m)
        o_pick = rng.integers(0, len(o_nodes), n)
        d_pick = rng.integers(0, len(d_nodes), n)
        u_origin = rng.random(n)
        u_dest = rng.random(n)
        for i in range(n):
            origin = o_nodes[o_pick[i]]
            dest = d_nodes[d_pick[i]]
            if origin == dest:
                continue
            walk_o = _endpoint_walk(net, origin, route, flexible_km, spec.max_walk_m)
            walk_d = _endpoint_walk(net, dest, route, flexible_km, spec.max_walk_m)
            if walk_o is None or walk_d is None:
                continue
            p_o = access_probability(walk_o, spec.decay, spec.max_walk_m)
            p_d = access_probability(walk_d, spec.decay, spec.max_walk_m)
            if u_origin[i] < p_o and u_dest[i] < p_d:
                raw.append((float(times[i]), k, i, origin, dest))
    raw.sort(key=lambda r: (r[0], r[1], r[2]))
    return [Request(req_id=i, t_request_s=t, origin=o, destination=d)
            for i, (t, _, _, o, d) in enumerate(raw)]


def flexible_event_rate(spec: DemandSpec, route: RouteSpec, flexible_km: float) -> float:
    """Expected flexible-zone boarding+alighting events per hour.

    Counts each OD rate once per endpoint whose stop lies in the flexible
    zone; multiplied by the headway this is the Poisson mean of door stops
    per run used for the detour budget.
    """
    _, flexible = fixed_flexible_split(route, flexible_km)
    zone = {s.node for s in flexible}
    rate = 0.0
    for od in spec.od:
        rate += od.rate_pax_h * ((od.origin_stop in zone) + (od.destination_stop in zone))
    return rate
