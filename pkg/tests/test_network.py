import math

import numpy as np
import pytest

from sodsim.network import Edge, Network, NetworkError, load_network

from conftest import grid_network
from oracles import enumerate_fastest_path


def write_net(tmp_path, nodes_rows, edges_rows):
    nodes = tmp_path / "nodes.csv"
    edges = tmp_path / "edges.csv"
    nodes.write_text("node_id,x_m,y_m\n" + "\n".join(nodes_rows) + "\n")
    edges.write_text("from_id,to_id,length_m,travel_time_s\n" + "\n".join(edges_rows) + "\n")
    return edges, nodes


TRIANGLE_NODES = ["1,0,0", "2,100,0", "3,50,80"]
TRIANGLE_EDGES = ["1,2,100,10", "2,1,100,10", "2,3,95,10", "3,2,95,10",
                  "1,3,95,25", "3,1,95,25"]


class TestLoadNetwork:
    def test_triangle_loads(self, tmp_path):
        net = load_network(*write_net(tmp_path, TRIANGLE_NODES, TRIANGLE_EDGES))
        assert net.num_nodes == 3
        assert net.num_edges == 6

    def test_dangling_reference_rejected(self, tmp_path):
        files = write_net(tmp_path, TRIANGLE_NODES, TRIANGLE_EDGES + ["1,99,50,5"])
        with pytest.raises(NetworkError, match="unknown node"):
            load_network(*files)

    def test_non_positive_weight_rejected(self, tmp_path):
        files = write_net(tmp_path, TRIANGLE_NODES, TRIANGLE_EDGES + ["1,2,0,5"])
        with pytest.raises(NetworkError, match="non-positive"):
            load_network(*files)

    def test_malformed_row_rejected(self, tmp_path):
        files = write_net(tmp_path, TRIANGLE_NODES, TRIANGLE_EDGES + ["1,2,abc,5"])
        with pytest.raises(NetworkError, match="malformed"):
            load_network(*files)

    def test_disconnected_rejected(self, tmp_path):
        # one-way edge into node 3 only: not strongly connected
        files = write_net(tmp_path, TRIANGLE_NODES,
                          ["1,2,100,10", "2,1,100,10", "2,3,95,10"])
        with pytest.raises(NetworkError, match="strongly connected"):
            load_network(*files)

    def test_grid_5x5_dimensions_and_edge_time(self, tmp_path):
        # 100 m edges at 40 km/h take exactly 9 s
        net = grid_network(5, 5, spacing_m=100.0, speed_kmh=40.0)
        assert net.num_nodes == 25
        assert net.num_edges == 2 * (2 * 4 * 5)  # 80 directed edges
        assert net.edges[0].time_s == pytest.approx(9.0)


class TestShortestPath:
    def test_identity(self, grid5):
        p = grid5.shortest_path(7, 7)
        assert p.nodes == (7,)
        assert p.distance_m == 0.0
        assert p.time_s == 0.0

    def test_triangle_prefers_two_hops(self):
        nodes = {1: (0, 0), 2: (1, 0), 3: (2, 0)}
        edges = [Edge(1, 2, 100, 10), Edge(2, 3, 100, 10), Edge(1, 3, 150, 25),
                 Edge(2, 1, 100, 10), Edge(3, 2, 100, 10), Edge(3, 1, 150, 25)]
        net = Network(nodes, edges)
        p = net.shortest_path(1, 3)
        assert p.nodes == (1, 2, 3)
        assert p.time_s == pytest.approx(20.0)

    def test_grid_matches_exhaustive_enumeration(self, grid5):
        edges = {(e.src, e.dst): (e.time_s, e.length_m) for e in grid5.edges}
        nodes = set(grid5.coords)
        rng = np.random.default_rng(7)
        for _ in range(20):
            o, d = rng.choice(sorted(nodes), size=2, replace=False)
            want_t, _ = enumerate_fastest_path(nodes, edges, int(o), int(d))
            got = grid5.shortest_path(int(o), int(d))
            assert got.time_s == pytest.approx(want_t, abs=1e-9)

    def test_deterministic_repeats(self, grid5):
        first = grid5.shortest_path(0, 24)
        for _ in range(5):
            again = grid5.shortest_path(0, 24)
            assert again.nodes == first.nodes

    def test_path_cost_equals_edge_sum(self, grid5):
        lookup = {}
        for e in grid5.edges:
            key = (e.src, e.dst)
            if key not in lookup or e.time_s < lookup[key][0]:
                lookup[key] = (e.time_s, e.length_m)
        rng = np.random.default_rng(3)
        for _ in range(15):
            o, d = rng.integers(0, 25, size=2)
            p = grid5.shortest_path(int(o), int(d))
            t = sum(lookup[(a, b)][0] for a, b in zip(p.nodes, p.nodes[1:]))
            l = sum(lookup[(a, b)][1] for a, b in zip(p.nodes, p.nodes[1:]))
            assert p.time_s == pytest.approx(t)
            assert p.distance_m == pytest.approx(l)

    def test_triangle_inequality(self, grid5):
        rng = np.random.default_rng(11)
        for _ in range(30):
            a, b, c = rng.integers(0, 25, size=3)
            t_ab = grid5.drive_time_s(int(a), int(b))
            t_bc = grid5.drive_time_s(int(b), int(c))
            t_ac = grid5.drive_time_s(int(a), int(c))
            assert t_ac <= t_ab + t_bc + 1e-9

    def test_unreachable_raises(self):
        # strongly-connected pair {1,2} plus self-loop island is not loadable,
        # so exercise the query path directly on a constructed object
        nodes = {1: (0, 0), 2: (1, 0), 3: (5, 5)}
        edges = [Edge(1, 2, 10, 1), Edge(2, 1, 10, 1), Edge(3, 1, 10, 1)]
        net = Network(nodes, edges)
        with pytest.raises(NetworkError, match="no path"):
            net.shortest_path(1, 3)

    def test_path_edges_match_path(self, grid5):
        p = grid5.shortest_path(0, 13)
        hops = grid5.path_edges(0, 13)
        assert [h[0] for h in hops] == list(p.nodes[1:])
        assert sum(h[1] for h in hops) == pytest.approx(p.time_s)


class TestWalkDistance:
    def test_zero_at_stop(self, grid5):
        assert grid5.walk_distance(12, 12) == 0.0

    def test_adjacent_edge(self, grid5):
        assert grid5.walk_distance(0, 1) == pytest.approx(100.0)

    def test_corner_to_center_matches_enumeration(self, grid5):
        edges = {(e.src, e.dst): (e.length_m, e.length_m) for e in grid5.edges}
        want, _ = enumerate_fastest_path(set(grid5.coords), edges, 0, 12)
        assert grid5.walk_distance(0, 12) == pytest.approx(want)

    def test_unknown_node(self, grid5):
        with pytest.raises(NetworkError, match="unknown node"):
            grid5.walk_distance(999, 0)
