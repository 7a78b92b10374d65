import math

import numpy as np
import pytest

from sodsim.errors import ConfigError, InfeasibleError
from sodsim.planning import (FULL_SAV, TRANSITION, CostTable, RouteSpec,
                             budget_slack, headway_bounds, optimal_cost,
                             optimal_headway, plan_route, route_cost,
                             transition_fleet_bound)

from conftest import route1, route2
from oracles import grid_plan_oracle


def unit_route(demand=2.0, cycle_h=1.0):
    return RouteSpec(route_id="u", length_km=5.0, cycle_time_min=cycle_h * 60.0,
                     peak_demand_pax_h=demand, headway_min=60.0, fleet_size=1.0)


def unit_costs(gc=1.0):
    return CostTable(sizes=(10,), operational_cost={10: gc}, operating_cost={10: gc / 2},
                     current_operational_cost=36.3, current_operating_cost=24.8,
                     driver_cost=15.3, value_of_time=1.0, waiting_weight=1.0,
                     capacity_buffer=0.9)


class TestRouteCost:
    def test_symmetric_unit_case(self):
        # both terms equal 1 at h = 1 h
        c = route_cost(10, 60.0, unit_route(), unit_costs())
        assert c == pytest.approx(2.0)

    def test_route1_value_at_given_headway(self):
        # frozen from direct evaluation of the waiting + fleet terms:
        # 0.5*16.5*1.5*622*(4.086/60) + 23.8*1.5/(4.086/60) = 1048.41,
        # terms 524.18 and 524.23
        costs = CostTable(sizes=(44,), operational_cost={44: 23.8},
                          operating_cost={44: 9.5})
        c = route_cost(44, 4.086, route1(), costs)
        assert c == pytest.approx(1048.41, abs=0.05)
        h = 4.086 / 60.0
        wait_term = 0.5 * 16.5 * 1.5 * 622 * h
        fleet_term = 23.8 * 1.5 / h
        assert wait_term == pytest.approx(524.2, abs=0.1)
        assert fleet_term == pytest.approx(524.2, abs=0.1)
        assert c == pytest.approx(wait_term + fleet_term)

    def test_no_demand_halves_with_double_headway(self):
        route = RouteSpec(route_id="z", length_km=5.0, cycle_time_min=60.0,
                          peak_demand_pax_h=1e-12, headway_min=60.0, fleet_size=1.0)
        c1 = route_cost(10, 30.0, route, unit_costs())
        c2 = route_cost(10, 60.0, route, unit_costs())
        assert c2 == pytest.approx(c1 / 2.0, rel=1e-9)

    def test_unknown_size(self):
        with pytest.raises(ConfigError, match="unknown vehicle size"):
            route_cost(99, 5.0, unit_route(), unit_costs())


class TestOptimalHeadway:
    def test_unit_cancellation(self):
        assert optimal_headway(10, unit_route(), unit_costs()) == pytest.approx(60.0)

    def test_route1_b44(self):
        costs = CostTable(sizes=(44,), operational_cost={44: 23.8},
                          operating_cost={44: 9.5})
        assert optimal_headway(44, route1(), costs) == pytest.approx(4.09, abs=0.01)

    def test_route2_b8(self):
        assert optimal_headway(8, route2(), CostTable()) == pytest.approx(3.17, abs=0.01)

    def test_terms_equal_at_optimum(self, default_costs):
        for size in default_costs.sizes:
            h = optimal_headway(size, route2(), default_costs)
            gamma = default_costs.operational_cost[size]
            wait = 0.5 * 16.5 * 1.5 * 114 * h / 60.0
            fleet = gamma * (40.0 / 60.0) / (h / 60.0)
            assert wait == pytest.approx(fleet, rel=1e-9)

    def test_optimal_cost_matches_cost_at_optimum(self, default_costs):
        h = optimal_headway(8, route2(), default_costs)
        assert optimal_cost(8, route2(), default_costs) == pytest.approx(
            route_cost(8, h, route2(), default_costs), rel=1e-12)


class TestHeadwayBounds:
    def test_capacity_bound_b44(self):
        costs = CostTable(sizes=(44,), operational_cost={44: 23.8},
                          operating_cost={44: 9.5})
        _, h_max = headway_bounds(44, route1(), costs, FULL_SAV)
        assert h_max == pytest.approx(3.82, abs=0.01)

    def test_budget_bound_b44_gc238_infeasible(self):
        # with the 23.8 unit cost the budget floor exceeds the capacity
        # ceiling, so this size admits no feasible headway
        costs = CostTable(sizes=(44,), operational_cost={44: 23.8},
                          operating_cost={44: 9.5})
        h_min, h_max = headway_bounds(44, route1(), costs, FULL_SAV)
        assert h_min == pytest.approx(3.93, abs=0.01)
        assert h_min > h_max

    def test_cost_neutral_swap_keeps_headway(self):
        costs = CostTable(sizes=(20,), operational_cost={20: 30.0},
                          operating_cost={20: 24.8})
        h_min, _ = headway_bounds(20, route1(), costs, TRANSITION, alpha=1.0)
        assert h_min == pytest.approx(route1().headway_min)

    def test_transition_budget_exhausted(self):
        costs = CostTable(sizes=(20,), operational_cost={20: 11.05},
                          operating_cost={20: 4.15}, current_operating_cost=10.0,
                          driver_cost=15.3)
        with pytest.raises(InfeasibleError, match="budget"):
            headway_bounds(20, route1(), costs, TRANSITION, alpha=0.2)


class TestTransitionFleetBound:
    def test_all_drivers_kept(self, default_costs):
        s_max = transition_fleet_bound(1.0, route1(), default_costs, 20)
        assert s_max == pytest.approx(24.8 / 4.15 * 15.0)

    def test_alpha_075(self, default_costs):
        s_max = transition_fleet_bound(0.75, route1(), default_costs, 20)
        assert s_max == pytest.approx(75.8, abs=0.05)

    def test_exhausted_budget_gives_zero(self):
        costs = CostTable(current_operating_cost=15.3, driver_cost=15.3)
        assert transition_fleet_bound(0.0, route1(), costs, 20) == 0.0

    def test_budget_holds_at_bound(self, default_costs):
        # the printed fleet bound keeps spending within the current budget for
        # any driver share, with equality exactly when all drivers stay
        rhs = (default_costs.current_operating_cost + default_costs.driver_cost) * 15.0
        for alpha in (0.0, 0.6, 0.75, 1.0):
            s_max = transition_fleet_bound(alpha, route1(), default_costs, 8)
            lhs = (default_costs.operating_cost[8] * s_max
                   + default_costs.driver_cost * alpha * 15.0)
            assert lhs <= rhs + 1e-9
        s_max = transition_fleet_bound(1.0, route1(), default_costs, 8)
        lhs = (default_costs.operating_cost[8] * s_max
               + default_costs.driver_cost * 15.0)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def random_instance(rng: np.random.Generator):
    sizes = (5, 8, 20, 44, 70)
    base_c = np.sort(rng.uniform(3.0, 28.0, len(sizes)))
    base_m = base_c * rng.uniform(0.3, 0.9)
    # enforce strictly increasing (sort can produce ties at float precision)
    base_c = np.maximum.accumulate(base_c + np.arange(len(sizes)) * 1e-3)
    base_m = np.maximum.accumulate(base_m + np.arange(len(sizes)) * 1e-3)
    costs = CostTable(
        sizes=sizes,
        operational_cost={b: float(c) for b, c in zip(sizes, base_c)},
        operating_cost={b: float(m) for b, m in zip(sizes, base_m)},
        current_operational_cost=float(rng.uniform(28.0, 60.0)),
        current_operating_cost=float(rng.uniform(18.0, 30.0)),
        driver_cost=float(rng.uniform(10.0, 20.0)),
        value_of_time=16.5,
        waiting_weight=1.5,
        capacity_buffer=float(rng.uniform(0.7, 1.0)),
    )
    route = RouteSpec(
        route_id="r",
        length_km=float(rng.uniform(3.0, 12.0)),
        cycle_time_min=float(rng.uniform(20.0, 90.0)),
        peak_demand_pax_h=float(rng.uniform(40.0, 350.0)),
        headway_min=float(rng.uniform(4.0, 15.0)),
        fleet_size=float(rng.integers(2, 16)),
    )
    return route, costs


class TestPlanRoute:
    def test_route2_full_sav_anchor(self, default_costs):
        plan = plan_route(route2(), default_costs, FULL_SAV)
        assert plan.vehicle_size == 8
        assert plan.headway_min == pytest.approx(3.5)
        assert plan.fleet_size == 12

    def test_status_quo_fixed_point(self):
        # one size priced at the current cost keeps the existing headway up to
        # one grid step (the budget floor sits exactly at the current headway)
        costs = CostTable(sizes=(70,), operational_cost={70: 36.3},
                          operating_cost={70: 24.8}, capacity_buffer=0.9)
        route = RouteSpec(route_id="sq", length_km=5.0, cycle_time_min=60.0,
                          peak_demand_pax_h=100.0, headway_min=10.0, fleet_size=6.0,
                          peak_load_pax_h=100.0)
        plan = plan_route(route, costs, FULL_SAV)
        assert plan.headway_min >= 10.0 - 1e-9
        assert abs(plan.headway_min - 10.0) <= 0.5 + 1e-9

    def test_interior_optimum_snaps_within_one_step(self):
        costs = unit_costs(gc=1.0)
        route = unit_route(demand=2.0, cycle_h=1.0)  # h* = 60 min exactly
        plan = plan_route(route, costs, FULL_SAV, grid_step_min=7.0)
        assert abs(plan.headway_min - 60.0) <= 7.0
        assert plan.binding == "interior"

    def test_oracle_equivalence_full_sav(self, subtests=None):
        rng = np.random.default_rng(2024)
        checked = 0
        for _ in range(100):
            route, costs = random_instance(rng)
            want = grid_plan_oracle(route, costs, "full_sav")
            got = plan_route(route, costs, FULL_SAV)
            if want is None:
                assert got.binding == "infeasible"
                continue
            checked += 1
            assert (got.vehicle_size, got.headway_min) == (want[2], pytest.approx(want[1]))
            assert got.cost_per_h == pytest.approx(want[0], rel=1e-9)
        assert checked > 50  # most random instances should be feasible

    def test_oracle_equivalence_transition(self):
        rng = np.random.default_rng(77)
        for _ in range(60):
            route, costs = random_instance(rng)
            alpha = float(rng.choice([0.75, 1.0]))
            want = grid_plan_oracle(route, costs, "transition", alpha=alpha)
            got = plan_route(route, costs, TRANSITION, alpha=alpha)
            if want is None:
                assert got.binding == "infeasible"
            else:
                assert (got.vehicle_size, got.headway_min) == (want[2], pytest.approx(want[1]))

    def test_infeasible_reports_least_violating(self):
        # capacity ceiling below any budget floor for all sizes
        costs = CostTable()
        route = RouteSpec(route_id="x", length_km=9.9, cycle_time_min=90.0,
                          peak_demand_pax_h=5000.0, headway_min=6.0, fleet_size=15.0)
        plan = plan_route(route, costs, FULL_SAV)
        assert plan.binding == "infeasible"
        assert plan.diagnostic

    def test_convexity_around_grid_optimum(self, default_costs):
        plan = plan_route(route2(), default_costs, FULL_SAV)
        h = plan.headway_min
        lo, hi = headway_bounds(plan.vehicle_size, route2(), default_costs, FULL_SAV)
        for step in (0.5, 1.0):
            for other in (h - step, h + step):
                if lo - 1e-9 <= other <= hi + 1e-9 and other > 0:
                    assert route_cost(plan.vehicle_size, other, route2(),
                                      default_costs) >= plan.cost_per_h - 1e-9

    def test_monotone_in_demand(self, default_costs):
        prev_h = math.inf
        for demand in (50.0, 114.0, 250.0, 500.0, 1000.0):
            route = RouteSpec(route_id="m", length_km=5.4, cycle_time_min=40.0,
                              peak_demand_pax_h=demand, headway_min=20.0,
                              fleet_size=2.0, peak_load_pax_h=114.0)
            plan = plan_route(route, default_costs, FULL_SAV)
            assert plan.headway_min <= prev_h + 1e-9
            prev_h = plan.headway_min

    def test_transition_budget_identity(self, default_costs):
        # continuous fleet satisfies the budget exactly; integer rounding may
        # add at most one vehicle's operating cost
        rng = np.random.default_rng(5)
        for _ in range(40):
            route, costs = random_instance(rng)
            alpha = float(rng.choice([0.75, 1.0]))
            plan = plan_route(route, costs, TRANSITION, alpha=alpha)
            if plan.binding == "infeasible":
                continue
            gm = costs.operating_cost[plan.vehicle_size]
            budget = (costs.current_operating_cost + costs.driver_cost) * route.fleet_size
            continuous = (gm * route.cycle_time_min / plan.headway_min
                          + costs.driver_cost * alpha * route.fleet_size)
            assert continuous <= budget + 1e-6
            assert budget_slack(plan, route, costs) >= -gm - 1e-6
