import math
from pathlib import Path

import pytest

from sodsim.network import Edge, Network
from sodsim.planning import CostTable, RouteSpec
from sodsim.scenario import build_world, load_scenario

SCENARIO_PATH = Path(__file__).resolve().parent.parent / "scenarios" / "synthetic-munich" / "scenario.json"


def grid_network(cols: int, rows: int, spacing_m: float = 100.0,
                 speed_kmh: float = 40.0) -> Network:
    """Bidirectional grid graph with uniform edge time and length."""
    time_s = spacing_m / (speed_kmh / 3.6)
    nodes = {}
    edges = []
    for r in range(rows):
        for c in range(cols):
            nodes[r * cols + c] = (c * spacing_m, r * spacing_m)
    for r in range(rows):
        for c in range(cols):
            n = r * cols + c
            if c + 1 < cols:
                edges.append(Edge(n, n + 1, spacing_m, time_s))
                edges.append(Edge(n + 1, n, spacing_m, time_s))
            if r + 1 < rows:
                edges.append(Edge(n, n + cols, spacing_m, time_s))
                edges.append(Edge(n + cols, n, spacing_m, time_s))
    return Network(nodes, edges)


@pytest.fixture(scope="session")
def grid5() -> Network:
    return grid_network(5, 5)


@pytest.fixture(scope="session")
def default_costs() -> CostTable:
    return CostTable()


def route1() -> RouteSpec:
    """Long, busy route (frequent existing service)."""
    return RouteSpec(route_id="1", length_km=9.9, cycle_time_min=90.0,
                     peak_demand_pax_h=622.0, headway_min=6.0, fleet_size=15.0)


def route2() -> RouteSpec:
    """Short route with infrequent existing service."""
    return RouteSpec(route_id="2", length_km=5.4, cycle_time_min=40.0,
                     peak_demand_pax_h=114.0, headway_min=20.0, fleet_size=2.0)


@pytest.fixture(scope="session")
def synthetic_world():
    return build_world(load_scenario(SCENARIO_PATH))


@pytest.fixture(scope="session")
def scenario_path() -> Path:
    return SCENARIO_PATH
