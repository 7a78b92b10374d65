"""Generalized-cost analysis of simulation records.

User cost monetizes weighted access, waiting, and riding times at the value
of time; operator cost combines distance-based and vehicle-hour terms (plus
driver wages in transition scenarios). Replications aggregate to medians and
quartiles, with pooled empirical CDFs of rider experience, and route-form
sweeps normalize every metric against the fixed-route baseline.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .demand import REJECTED, SERVED
from .errors import ConfigError
from .sim.records import TripRecord, VehicleRecord

LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class CostCoefficients:
    """Monetization coefficients for user and operator costs."""

    access_weight: float = 2.0
    waiting_weight: float = 1.5
    value_of_time_per_h: float = 16.5
    distance_cost_per_km: float = 1.0
    vehicle_cost_per_h: float = 4.15
    vehicle_capital_cost_per_h: float | None = None
    driver_cost_per_h: float = 15.3

    def validate(self) -> None:
        for name in ("access_weight", "waiting_weight", "value_of_time_per_h",
                     "distance_cost_per_km", "vehicle_cost_per_h", "driver_cost_per_h"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")


def user_cost(trip: TripRecord, coeffs: CostCoefficients,
              walk_speed_kmh: float = 5.0) -> float:
    """Cost of one served trip in €: value of time applied to the weighted
    sum of access, waiting, and riding hours."""
    if trip.state != SERVED:
        raise ConfigError(f"request {trip.request_id} was not served")
    access_h = trip.access_m / 1000.0 / walk_speed_kmh
    wait_h = (trip.wait_s or 0.0) / 3600.0
    ride_h = (trip.ride_s or 0.0) / 3600.0
    weighted_h = (coeffs.access_weight * access_h
                  + coeffs.waiting_weight * wait_h
                  + ride_h)
    return coeffs.value_of_time_per_h * weighted_h


def vehicle_cost(vehicle: VehicleRecord, coeffs: CostCoefficients,
                 capital: bool = False) -> float:
    """Cost of one vehicle in €: distance plus deployed-time terms.

    ``capital=True`` prices vehicle hours at the capital-inclusive rate when
    one is configured. Driver-operated vehicles add the hourly wage.
    """
    hourly = coeffs.vehicle_cost_per_h
    if capital and coeffs.vehicle_capital_cost_per_h is not None:
        hourly = coeffs.vehicle_capital_cost_per_h
    cost = (coeffs.distance_cost_per_km * vehicle.distance_m / 1000.0
            + hourly * vehicle.deployed_s / 3600.0)
    if vehicle.driver_operated:
        cost += coeffs.driver_cost_per_h * vehicle.deployed_s / 3600.0
    return cost


def generalized_cost(trips: list[TripRecord], vehicles: list[VehicleRecord],
                     coeffs: CostCoefficients, walk_speed_kmh: float = 5.0) -> float:
    """Total system cost: all served users' costs plus all vehicle costs."""
    total = sum(user_cost(t, coeffs, walk_speed_kmh) for t in trips if t.state == SERVED)
    total += sum(vehicle_cost(v, coeffs) for v in vehicles)
    return total


@dataclass
class ReplicationSummary:
    """Scalar metrics plus rider-level samples of one replication.

    Warm-up trips are dropped before anything is computed.
    """

    replication: int
    generated: int
    served: int
    rejected: int
    in_progress: int
    user_cost_total: float
    operator_cost_total: float
    operator_cost_capital: float
    generalized_cost: float
    vehicle_km: float
    pax_from_terminus_per_run: float
    median_access_s: float
    median_wait_s: float
    median_ride_s: float
    access_values_s: list[float] = field(default_factory=list)
    wait_values_s: list[float] = field(default_factory=list)
    ride_values_s: list[float] = field(default_factory=list)
    user_cost_values: list[float] = field(default_factory=list)

    SCALARS = ("generated", "served", "rejected", "in_progress", "user_cost_total",
               "operator_cost_total", "operator_cost_capital", "generalized_cost",
               "vehicle_km", "pax_from_terminus_per_run", "median_access_s",
               "median_wait_s", "median_ride_s")


def _median(values: list[float]) -> float:
    return float(np.median(values)) if values else math.nan


def replication_summary(replication: int, trips: list[TripRecord],
                        vehicles: list[VehicleRecord], coeffs: CostCoefficients,
                        walk_speed_kmh: float = 5.0) -> ReplicationSummary:
    """Reduce one replication's records to its summary metrics."""
    live = [t for t in trips if not t.warmup]
    served = [t for t in live if t.state == SERVED]
    rejected = [t for t in live if t.state == REJECTED]
    user_costs = [user_cost(t, coeffs, walk_speed_kmh) for t in served]
    user_total = sum(user_costs)
    op_total = sum(vehicle_cost(v, coeffs) for v in vehicles)
    op_capital = sum(vehicle_cost(v, coeffs, capital=True) for v in vehicles)
    walk_speed_m_s = walk_speed_kmh / 3.6
    access = [t.access_m / walk_speed_m_s for t in served]
    waits = [t.wait_s for t in served if t.wait_s is not None]
    rides = [t.ride_s for t in served if t.ride_s is not None]
    runs = sum(v.runs_completed for v in vehicles)
    pax_runs = sum(v.pax_from_terminus_per_run * v.runs_completed for v in vehicles)
    return ReplicationSummary(
        replication=replication,
        generated=len(live),
        served=len(served),
        rejected=len(rejected),
        in_progress=len(live) - len(served) - len(rejected),
        user_cost_total=user_total,
        operator_cost_total=op_total,
        operator_cost_capital=op_capital,
        generalized_cost=user_total + op_total,
        vehicle_km=sum(v.distance_m for v in vehicles) / 1000.0,
        pax_from_terminus_per_run=pax_runs / runs if runs else 0.0,
        median_access_s=_median(access),
        median_wait_s=_median(waits),
        median_ride_s=_median(rides),
        access_values_s=access,
        wait_values_s=waits,
        ride_values_s=rides,
        user_cost_values=user_costs,
    )


def empirical_cdf(values: list[float]) -> list[tuple[float, float]]:
    """Sorted (value, cumulative probability) pairs; ends at exactly 1."""
    if not values:
        return []
    xs = np.sort(np.asarray(values, dtype=float))
    n = len(xs)
    return [(float(x), (i + 1) / n) for i, x in enumerate(xs)]


@dataclass
class MetricsSummary:
    """Replication-aggregated metrics: median and quartiles per scalar,
    plus pooled rider-experience CDF tables."""

    replications: int
    median: dict[str, float]
    q25: dict[str, float]
    q75: dict[str, float]
    cdf: dict[str, list[tuple[float, float]]]

    def to_dict(self) -> dict:
        return {
            "replications": self.replications,
            "median": self.median,
            "q25": self.q25,
            "q75": self.q75,
            "cdf": {k: [[v, p] for v, p in table] for k, table in self.cdf.items()},
        }


def aggregate(summaries: list[ReplicationSummary]) -> MetricsSummary:
    """Aggregate replication summaries into medians, quartiles, and CDFs."""
    if not summaries:
        raise ConfigError("no replication summaries to aggregate")
    ordered = sorted(summaries, key=lambda s: s.replication)
    median: dict[str, float] = {}
    q25: dict[str, float] = {}
    q75: dict[str, float] = {}
    for name in ReplicationSummary.SCALARS:
        vals = np.asarray([getattr(s, name) for s in ordered], dtype=float)
        median[name] = float(np.nanmedian(vals))
        q25[name] = float(np.nanpercentile(vals, 25))
        q75[name] = float(np.nanpercentile(vals, 75))
    cdf = {
        "access_s": empirical_cdf([v for s in ordered for v in s.access_values_s]),
        "wait_s": empirical_cdf([v for s in ordered for v in s.wait_values_s]),
        "ride_s": empirical_cdf([v for s in ordered for v in s.ride_values_s]),
        "user_cost": empirical_cdf([v for s in ordered for v in s.user_cost_values]),
    }
    return MetricsSummary(len(ordered), median, q25, q75, cdf)


@dataclass
class SweepResult:
    """Outcome of a route-form sweep for one scenario."""

    best_flexible_km: float
    rows: list[dict]
    pax_terminus_at_best: float


#: metrics reported in sweep tables, normalized against the fixed-route run
SWEEP_METRICS = ("generalized_cost", "user_cost_total", "operator_cost_total",
                 "served", "rejected", "median_access_s", "median_wait_s",
                 "median_ride_s", "vehicle_km")


def sweep_analysis(by_flexible_km: dict[float, MetricsSummary]) -> SweepResult:
    """Pick the cost-minimizing route form and normalize curves.

    The baseline is the fixed-route variant (flexible length 0), which must
    be present; normalized values are percentages of it. Cost ties go to the
    shorter flexible portion.
    """
    if 0.0 not in by_flexible_km:
        raise ConfigError("sweep requires the flexible length 0 baseline")
    base = by_flexible_km[0.0]
    best_xf = min(sorted(by_flexible_km),
                  key=lambda xf: (by_flexible_km[xf].median["generalized_cost"], xf))
    rows = []
    for xf in sorted(by_flexible_km):
        summary = by_flexible_km[xf]
        for name in SWEEP_METRICS:
            base_val = base.median[name]
            val = summary.median[name]
            normalized = (val / base_val * 100.0
                          if base_val not in (0.0,) and not math.isnan(base_val)
                          else math.nan)
            rows.append({
                "x_f_km": xf,
                "metric": name,
                "median": val,
                "q25": summary.q25[name],
                "q75": summary.q75[name],
                "normalized_pct": normalized,
            })
    return SweepResult(
        best_flexible_km=best_xf,
        rows=rows,
        pax_terminus_at_best=by_flexible_km[best_xf].median["pax_from_terminus_per_run"],
    )
