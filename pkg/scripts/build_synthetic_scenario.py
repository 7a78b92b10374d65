#!/usr/bin/env python3
"""Regenerate the bundled synthetic-munich scenario.

A 61x7 grid corridor (100 m spacing, 40 km/h drive speed) with one 6 km
feeder route along the middle row, stops every 600 m, and a terminus-heavy
OD table with a gravity-style decay along the corridor. Deterministic: no
randomness, safe to re-run.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

COLS = 61
ROWS = 7
SPACING_M = 100.0
EDGE_TIME_S = 9.0  # 100 m at 40 km/h
ROUTE_ROW = 3
STOP_COL_STEP = 6  # stops every 600 m

OUT = Path(__file__).resolve().parent.parent / "scenarios" / "synthetic-munich"


def node_id(row: int, col: int) -> int:
    return row * COLS + col


def write_network() -> None:
    with open(OUT / "nodes.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "x_m", "y_m"])
        for r in range(ROWS):
            for c in range(COLS):
                w.writerow([node_id(r, c), c * SPACING_M, r * SPACING_M])
    with open(OUT / "edges.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["from_id", "to_id", "length_m", "travel_time_s"])
        for r in range(ROWS):
            for c in range(COLS):
                if c + 1 < COLS:
                    a, b = node_id(r, c), node_id(r, c + 1)
                    w.writerow([a, b, SPACING_M, EDGE_TIME_S])
                    w.writerow([b, a, SPACING_M, EDGE_TIME_S])
                if r + 1 < ROWS:
                    a, b = node_id(r, c), node_id(r + 1, c)
                    w.writerow([a, b, SPACING_M, EDGE_TIME_S])
                    w.writerow([b, a, SPACING_M, EDGE_TIME_S])


def stop_nodes() -> list[tuple[int, float]]:
    return [(node_id(ROUTE_ROW, c), c * SPACING_M / 1000.0)
            for c in range(0, COLS, STOP_COL_STEP)]


def write_route() -> None:
    stops = stop_nodes()
    with open(OUT / "stops.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seq", "node_id", "chainage_km"])
        for i, (node, chain) in enumerate(stops):
            w.writerow([i, node, f"{chain:.3f}"])
    with open(OUT / "route.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["route_id", "length_km", "cycle_time_min", "peak_demand_pax_h",
                    "peak_load_pax_h", "offpeak_demand_pax_h", "headway_min", "fleet_size"])
        # cycle: 2 x 10 legs x 54 s driving + 21 dwells x 30 s = 28.5 min -> 30 with recovery
        w.writerow(["corridor-6km", 6.0, 30.0, 300, 300, 55, 7.5, 4])


def write_od() -> None:
    stops = stop_nodes()
    terminus = stops[0][0]
    others = stops[1:]
    weights = [math.exp(-chain / 4.0) for _, chain in others]
    total_w = sum(weights)
    outbound_total = 22.0  # pax/h leaving the terminus
    inbound_total = 22.0
    local_total = 11.0
    rows = []
    for (node, _), wgt in zip(others, weights):
        rows.append([terminus, node, round(outbound_total * wgt / total_w, 4)])
        rows.append([node, terminus, round(inbound_total * wgt / total_w, 4)])
    local_pairs = [(others[i][0], others[i + 2][0]) for i in range(0, len(others) - 2, 2)]
    for a, b in local_pairs:
        rows.append([a, b, round(local_total / (2 * len(local_pairs)), 4)])
        rows.append([b, a, round(local_total / (2 * len(local_pairs)), 4)])
    with open(OUT / "od.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["origin_stop", "destination_stop", "rate_pax_per_h"])
        w.writerows(rows)


def write_config() -> None:
    config = {
        "name": "synthetic-munich",
        "network": {"nodes": "nodes.csv", "edges": "edges.csv"},
        "route_file": "route.csv",
        "stops_file": "stops.csv",
        "od_file": "od.csv",
        "cost_table": {
            "sizes": [5, 8, 20, 44, 70],
            "operational_cost": {"5": 4.4, "8": 5.9, "20": 11.05, "44": 16.2, "70": 23.8},
            "operating_cost": {"5": 2.1, "8": 2.6, "20": 4.15, "44": 5.7, "70": 9.5},
            "current_operational_cost": 36.3,
            "current_operating_cost": 24.8,
            "driver_cost": 15.3,
            "value_of_time": 16.5,
            "waiting_weight": 1.5,
            "capacity_buffer": 0.9,
        },
        "demand": {
            "catchment_m": 350.0,
            "max_walk_m": 500.0,
            "decay": {"kind": "linear", "p_min": 0.5},
        },
        "service": {
            "confidence": 0.95,
            "dwell_s": 30.0,
            "max_wait_min": 15.0,
            "ride_factor": 2.0,
            "walk_speed_kmh": 5.0,
            "planning_speed_kmh": 40.0,
            "access_weight": 2.0,
            "by_alpha": {
                "0.0": {"headway_min": 6.0, "peak_headway_min": 2.5, "vehicle_size": 20},
                "0.75": {"headway_min": 6.0, "peak_headway_min": 2.5, "vehicle_size": 8},
                "1.0": {"headway_min": 7.5, "peak_headway_min": 2.5, "vehicle_size": 8},
            },
        },
        "alphas": [0.0],
        "xf_grid_km": [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        "replications": 100,
        "base_seed": 20240901,
        "horizon_s": 10800.0,
        "warmup_s": 3600.0,
        "out_dir": "out",
    }
    with open(OUT / "scenario.json", "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    write_network()
    write_route()
    write_od()
    write_config()
    print(f"scenario written to {OUT}")


if __name__ == "__main__":
    main()
