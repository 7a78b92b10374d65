"""Independent brute-force oracles used to freeze expected values.

These deliberately re-derive results from first principles (exhaustive
enumeration, Monte Carlo sampling, raw grid search) without touching the
implementation paths they check.
"""
from __future__ import annotations

import math

import numpy as np


def enumerate_fastest_path(nodes: set[int], edges: dict[tuple[int, int], tuple[float, float]],
                           origin: int, destination: int) -> tuple[float, float]:
    """(time_s, distance_m) of the fastest simple path by full DFS enumeration."""
    adj: dict[int, list[int]] = {n: [] for n in nodes}
    for (a, b) in edges:
        adj[a].append(b)
    best = [math.inf, math.inf]

    def walk(node: int, t: float, d: float, seen: set[int]) -> None:
        if t >= best[0]:
            return
        if node == destination:
            best[0], best[1] = t, d
            return
        for nxt in adj[node]:
            if nxt not in seen:
                et, ed = edges[(node, nxt)]
                walk(nxt, t + et, d + ed, seen | {nxt})

    walk(origin, 0.0, 0.0, {origin})
    return best[0], best[1]


def grid_plan_oracle(route, costs, scenario: str, alpha: float = 1.0,
                     step_min: float = 0.5, max_headway_min: float = 120.0):
    """Exhaustive minimizer of the waiting-plus-fleet cost over the
    (vehicle size x headway grid) feasible set.

    Bounds are evaluated from the raw capacity and budget formulas; every
    grid headway in range is costed directly. Ties go to the smaller
    headway, then the smaller vehicle size.
    """
    gt, gw = costs.value_of_time, costs.waiting_weight
    lam = route.peak_demand_pax_h
    dp = route.peak_load_pax_h if route.peak_load_pax_h is not None else lam
    tc_h = route.cycle_time_min / 60.0
    best = None
    for size in sorted(costs.sizes):
        if scenario == "full_sav":
            unit = costs.operational_cost[size]
            h_min = unit / costs.current_operational_cost * route.headway_min
        else:
            unit = costs.operating_cost[size]
            denom = costs.current_operating_cost - costs.driver_cost * (1.0 - alpha)
            if denom <= 0:
                continue
            h_min = unit / denom * route.headway_min
        h_max = size * costs.capacity_buffer / dp * 60.0
        k = 1
        while k * step_min <= min(h_max + 1e-9, max_headway_min):
            h = k * step_min
            k += 1
            if h < h_min - 1e-9:
                continue
            cost = 0.5 * gt * gw * lam * (h / 60.0) + unit * tc_h / (h / 60.0)
            if best is None or cost < best[0] * (1 - 1e-9):
                best = (cost, h, size)
    return best  # None when infeasible for every size


def sample_detour_times(rng: np.random.Generator, n_samples: int, rate: float,
                        max_walk_m: float, speed_kmh: float, dwell_s: float) -> np.ndarray:
    """Monte Carlo draws of the per-run detour time in minutes.

    Direct sampling of the compound sum: Poisson stop count, each stop a
    dwell plus an out-and-back uniform deviation at the planning speed.
    """
    counts = rng.poisson(rate, n_samples)
    total_uniforms = int(counts.sum())
    speed_m_min = speed_kmh * 1000.0 / 60.0
    if total_uniforms == 0:
        return counts * dwell_s / 60.0
    # sentinel keeps every reduceat offset in range; zero-count rows are masked
    draws = np.append(rng.uniform(0.0, max_walk_m, total_uniforms), 0.0)
    offsets = np.concatenate(([0], np.cumsum(counts)))[:-1]
    sums = np.add.reduceat(draws, offsets)
    sums[counts == 0] = 0.0
    return counts * dwell_s / 60.0 + 2.0 * sums / speed_m_min


def empirical_cdf_at(samples: np.ndarray, grid: np.ndarray) -> np.ndarray:
    samples = np.sort(samples)
    return np.searchsorted(samples, grid, side="right") / len(samples)
