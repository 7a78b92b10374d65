"""Per-rider, per-vehicle, and per-run outcome records and CSV export."""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class TripRecord:
    request_id: int
    state: str
    t_request_s: float
    t_board_s: float | None
    t_alight_s: float | None
    access_m: float
    wait_s: float | None
    ride_s: float | None
    direct_s: float
    warmup: bool


@dataclass(frozen=True)
class VehicleRecord:
    vehicle_id: int
    distance_m: float
    deployed_s: float
    runs_completed: int
    pax_from_terminus_per_run: float
    driver_operated: bool = False


@dataclass(frozen=True)
class RunRecord:
    run_id: int
    vehicle_id: int
    t_depart_s: float
    t_end_s: float | None
    distance_m: float
    pax_from_terminus: int
    n_door_stops: int
    zone_detour_s: float | None
    trace_hash: str
    warmup: bool


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.6f}".rstrip("0").rstrip(".")
    return str(value)


def trace_hash(visits: list[tuple[int, float]]) -> str:
    """Stable digest of a run's (stop node, service time) trajectory."""
    payload = ";".join(f"{node}:{t:.3f}" for node, t in visits)
    return hashlib.sha1(payload.encode()).hexdigest()[:16]


def write_trip_csv(path, trips: list[TripRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["request_id", "state", "t_request_s", "t_board_s", "t_alight_s",
                    "access_m", "wait_s", "ride_s", "direct_s"])
        for t in trips:
            w.writerow([t.request_id, t.state, _fmt(t.t_request_s), _fmt(t.t_board_s),
                        _fmt(t.t_alight_s), _fmt(t.access_m), _fmt(t.wait_s),
                        _fmt(t.ride_s), _fmt(t.direct_s)])


def write_vehicle_csv(path, vehicles: list[VehicleRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["vehicle_id", "distance_m", "deployed_s", "runs_completed",
                    "pax_from_terminus_per_run"])
        for v in vehicles:
            w.writerow([v.vehicle_id, _fmt(v.distance_m), _fmt(v.deployed_s),
                        v.runs_completed, _fmt(v.pax_from_terminus_per_run)])


def write_run_csv(path, runs: list[RunRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["run_id", "vehicle_id", "t_depart_s", "t_end_s", "distance_m",
                    "pax_from_terminus", "n_door_stops", "zone_detour_s", "trace_hash"])
        for r in runs:
            w.writerow([r.run_id, r.vehicle_id, _fmt(r.t_depart_s), _fmt(r.t_end_s),
                        _fmt(r.distance_m), r.pax_from_terminus, r.n_door_stops,
                        _fmt(r.zone_detour_s), r.trace_hash])
