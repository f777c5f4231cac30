import numpy as np
import pytest

from ggpgm.family import (
    FamilyGraph,
    Ordering,
    build_family_graph,
    build_ordering_from_route,
    column_of_path,
    contains_column,
    edge_weights,
    min_cost_from_vertices,
    min_cost_to_vertices,
    sample_path,
    shortest_route,
)
from ggpgm.instance import Instance, generate_instance
from ggpgm.routes import Duals, Route, check_route_feasible, make_route, reduced_cost


def place(coords, capacity, n_vehicles, demand=1):
    n = len(coords) - 1
    dem = np.full(n + 1, demand, dtype=np.int64)
    dem[0] = 0
    return Instance(
        coords=np.asarray(coords, dtype=float),
        demand=dem,
        capacity=capacity,
        n_vehicles=n_vehicles,
    )


def ordering_of(*customers):
    n = len(customers)
    pos = np.zeros(n + 1, dtype=np.int64)
    for i, u in enumerate(customers):
        pos[u] = i + 1
    return Ordering(position=pos)


def test_ordering_validation_and_digest():
    o = ordering_of(2, 1, 3)
    assert o.customers_in_order.tolist() == [2, 1, 3]
    assert o.comes_before(2, 3) and not o.comes_before(3, 2)
    assert o.digest() == ordering_of(2, 1, 3).digest()
    assert o.digest() != ordering_of(1, 2, 3).digest()
    with pytest.raises(ValueError):
        Ordering(position=np.array([0, 1, 1, 3]))


def test_build_ordering_nearest_insertion():
    # a=(10,0), b=(20,0); c=(21,1) is nearest to b and farther from the depot.
    inst = place([(0, 0), (10, 0), (20, 0), (21, 1)], capacity=3, n_vehicles=3)
    route = make_route(inst, (1, 2))
    rng = np.random.default_rng(0)
    o = build_ordering_from_route(inst, route, rng)
    assert o.customers_in_order.tolist() == [1, 2, 3]


def test_build_ordering_front_insertion():
    # d=(1,1) is closer to the depot than to either route customer.
    inst = place([(0, 0), (10, 0), (20, 0), (1, 1)], capacity=3, n_vehicles=3)
    route = make_route(inst, (1, 2))
    o = build_ordering_from_route(inst, route, np.random.default_rng(0))
    assert o.customers_in_order.tolist() == [3, 1, 2]


def test_build_ordering_full_route_is_visit_order():
    inst = generate_instance(seed=3, n_customers=5, grid_size=50, capacity=5, n_vehicles=2)
    route = make_route(inst, (4, 1, 5, 2, 3))
    o = build_ordering_from_route(inst, route, np.random.default_rng(1))
    assert o.customers_in_order.tolist() == [4, 1, 5, 2, 3]


def test_family_graph_vertex_counts():
    inst = generate_instance(seed=1, n_customers=3, grid_size=50, capacity=2, n_vehicles=3)
    g = build_family_graph(inst, ordering_of(1, 2, 3))
    assert g.n_vertices == 8  # 2 + 3 * 2
    sink_edges = int((g.head == g.sink).sum())
    assert sink_edges == g.n_interior


def test_family_graph_single_customer():
    inst = place([(0, 0), (3, 4)], capacity=6, n_vehicles=1)
    g = build_family_graph(inst, ordering_of(1))
    assert g.n_vertices == 8  # 2 + (6 - 1 + 1)
    # Only reachable interior vertex is (1, 5); the single usable path costs 10.
    route, rc = shortest_route(g, Duals.zero(1))
    assert route.visits == (1,)
    assert route.cost == 10
    assert rc == pytest.approx(10.0)


def test_edge_existence_matches_definition():
    inst = generate_instance(seed=5, n_customers=4, grid_size=50, capacity=3, n_vehicles=2)
    o = ordering_of(3, 1, 4, 2)
    g = build_family_graph(inst, o)
    pos = o.position
    expected = set()
    cap = inst.capacity
    for u in inst.customers:
        expected.add((0, u, cap - 1, int(inst.dist[0, u])))  # source edges
        for v in inst.customers:
            if pos[u] < pos[v]:
                for d in range(1, cap):  # unit demand: d from d_v .. cap - d_u
                    expected.add((u, v, d - 1, int(inst.dist[u, v])))
    got = set()
    for e in range(g.n_edges):
        t, h = int(g.tail[e]), int(g.head[e])
        if h == g.sink:
            continue
        cu = int(g.vert_customer[t]) if t else 0
        cv = int(g.vert_customer[h])
        got.add((cu, cv, int(g.vert_level[h]), int(g.cost[e])))
    assert got == expected


def test_contains_column():
    o = ordering_of(1, 2, 3)
    assert contains_column(o, Route(visits=(1, 3), cost=0))
    assert not contains_column(o, Route(visits=(3, 1), cost=0))


def test_paths_map_to_feasible_order_consistent_routes():
    inst = generate_instance(seed=11, n_customers=6, grid_size=50, capacity=4, n_vehicles=3)
    rng = np.random.default_rng(2)
    for trial in range(200):
        perm = rng.permutation(np.arange(1, 7))
        o = ordering_of(*perm.tolist())
        g = build_family_graph(inst, o)
        path = sample_path(g, rng)
        route = column_of_path(g, path)
        assert check_route_feasible(inst, route.visits) is None
        assert contains_column(o, route)
        # Exact integer cost additivity along the path.
        assert route.cost == sum(int(g.cost[e]) for e in path)


def test_path_reduced_cost_equals_route_reduced_cost():
    inst = generate_instance(seed=13, n_customers=5, grid_size=50, capacity=3, n_vehicles=3)
    rng = np.random.default_rng(5)
    for _ in range(200):
        o = ordering_of(*rng.permutation(np.arange(1, 6)).tolist())
        g = build_family_graph(inst, o)
        duals = Duals(pi=rng.uniform(0, 40, 6), pi0=float(rng.uniform(0, 10)))
        w = edge_weights(g, duals)
        path = sample_path(g, rng)
        route = column_of_path(g, path)
        assert w[path].sum() == pytest.approx(reduced_cost(route, duals), abs=1e-9)


def test_edge_weight_examples():
    inst = place([(0, 0), (0, 4), (3, 0)], capacity=2, n_vehicles=2)
    g = build_family_graph(inst, ordering_of(1, 2))
    pi = np.array([0.0, 7.0, 5.0])
    duals = Duals(pi=pi, pi0=2.0)
    w = edge_weights(g, duals)
    for e in range(g.n_edges):
        t, h = int(g.tail[e]), int(g.head[e])
        if h == g.sink:
            assert w[e] == pytest.approx(g.cost[e] + 2.0)  # fleet row, h = -1
        else:
            u = int(g.vert_customer[h])
            assert w[e] == pytest.approx(g.cost[e] - pi[u])
    # Source edge into customer 1 costs 4 with pi_1 = 7: weight -3.
    src1 = [e for e in range(g.n_edges)
            if g.tail[e] == 0 and g.vert_customer[g.head[e]] == 1]
    assert w[src1[0]] == pytest.approx(-3.0)


def test_route_family_membership():
    inst = generate_instance(seed=17, n_customers=8, grid_size=50, capacity=4, n_vehicles=4)
    rng = np.random.default_rng(9)
    for _ in range(50):
        k = int(rng.integers(1, 5))
        visits = tuple(rng.permutation(np.arange(1, 9))[:k].tolist())
        route = make_route(inst, visits)
        o = build_ordering_from_route(inst, route, rng)
        assert contains_column(o, route)


def test_sweeps_match_between_generic_and_matrix_forms():
    inst = generate_instance(seed=23, n_customers=6, grid_size=50, capacity=4, n_vehicles=3)
    rng = np.random.default_rng(3)
    for _ in range(20):
        o = ordering_of(*rng.permutation(np.arange(1, 7)).tolist())
        g = build_family_graph(inst, o)
        duals = Duals(pi=rng.uniform(0, 60, 7), pi0=float(rng.uniform(0, 15)))
        fwd_fast = min_cost_to_vertices(g, duals)
        bwd_fast = min_cost_from_vertices(g, duals)
        # Strip the instance reference to force the generic CSR sweeps.
        g2 = FamilyGraph(
            g.n_vertices, g.tail, g.head, g.cost, g.h_row,
            g.vert_customer, g.vert_level,
        )
        fwd = min_cost_to_vertices(g2, duals)
        bwd = min_cost_from_vertices(g2, duals)
        assert np.allclose(fwd, fwd_fast, atol=1e-9)
        assert np.allclose(bwd, bwd_fast, atol=1e-9)


def test_flow_conservation_of_path_combinations():
    inst = generate_instance(seed=29, n_customers=5, grid_size=50, capacity=3, n_vehicles=3)
    rng = np.random.default_rng(4)
    o = ordering_of(*rng.permutation(np.arange(1, 6)).tolist())
    g = build_family_graph(inst, o)
    psi = np.zeros(g.n_edges)
    for _ in range(10):
        path = sample_path(g, rng)
        weight = float(rng.uniform(0.1, 2.0))
        for e in path:
            psi[e] += weight
    for v in range(1, g.sink):
        outflow = psi[g.out_edges(v)].sum()
        inflow = psi[g.in_edges(v)].sum()
        assert outflow == pytest.approx(inflow, abs=1e-9)


class _FixedPermutation:
    """Stands in for a generator: permutation() returns a fixed order."""

    def __init__(self, order):
        self.order = list(order)

    def permutation(self, items):
        assert sorted(items) == sorted(self.order)
        return np.asarray(self.order)


def test_build_ordering_front_insertions_stack_in_reverse():
    # Customers 3 and 4 both sit nearer the depot than any route customer;
    # the later front-insertion lands in front of the earlier one.
    inst = place([(0, 0), (30, 0), (40, 0), (1, 1), (2, 0)], capacity=4, n_vehicles=4)
    route = make_route(inst, (1, 2))
    o = build_ordering_from_route(inst, route, _FixedPermutation([3, 4]))
    assert o.customers_in_order.tolist() == [4, 3, 1, 2]
    o2 = build_ordering_from_route(inst, route, _FixedPermutation([4, 3]))
    assert o2.customers_in_order.tolist() == [3, 4, 1, 2]


def test_build_ordering_anchor_tie_prefers_earlier_position():
    # Customer 3 is equidistant (ceil) from both route customers; the anchor
    # earlier in the list wins, so 3 lands immediately after customer 1.
    inst = place([(0, 0), (10, 0), (20, 0), (15, 0.5)], capacity=3, n_vehicles=3)
    assert inst.dist[3, 1] == inst.dist[3, 2]
    route = make_route(inst, (1, 2))
    o = build_ordering_from_route(inst, route, _FixedPermutation([3]))
    assert o.customers_in_order.tolist() == [1, 3, 2]
