"""Family graphs: capacity-indexed DAGs encoding all routes consistent with a
total order of the customers.

For an ordering with positions beta, the graph has a source, a sink, and one
vertex (u, d) per customer u and remaining capacity d in 0..capacity-d_u.
Edges:

* source -> (u, capacity - d_u), cost = dist(depot, u);
* (u, d) -> (v, d - d_v) whenever beta_u < beta_v and d >= d_v, cost dist(u, v);
* (u, d) -> sink, cost = dist(u, depot).

Every source-to-sink path spells a feasible route whose cost is exactly the
sum of edge costs. Each edge carries at most one constraint contribution,
stored as a single tag: the head customer's coverage row (+1) for edges into
(u, .), or the fleet row (-1) for edges into the sink.

Vertex indices are a topological order by construction (source 0, customers
by ascending position, sink last), so single-pass sweeps give exact minimum
cost paths to and from every vertex in O(|E|).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .instance import Instance
from .routes import Duals, Route

NO_ROW = -1        # edge contributes to no constraint row (test graphs only)
FLEET_ROW = 0      # edge contributes -1 to the fleet row


@dataclass(frozen=True)
class Ordering:
    """A total order of the customers: position[u] in 1..n, a bijection."""

    position: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.int64).copy()
        pos[0] = 0
        n = pos.shape[0] - 1
        if n < 1 or sorted(pos[1:].tolist()) != list(range(1, n + 1)):
            raise ValueError("positions 1..n must form a permutation")
        pos.setflags(write=False)
        object.__setattr__(self, "position", pos)

    @property
    def n_customers(self) -> int:
        return self.position.shape[0] - 1

    @cached_property
    def customers_in_order(self) -> np.ndarray:
        out = np.empty(self.n_customers, dtype=np.int64)
        out[self.position[1:] - 1] = np.arange(1, self.n_customers + 1)
        out.setflags(write=False)
        return out

    def comes_before(self, u: int, v: int) -> bool:
        return bool(self.position[u] < self.position[v])

    def digest(self) -> str:
        return hashlib.blake2b(self.position.tobytes(), digest_size=16).hexdigest()


def contains_column(ordering: Ordering, route: Route) -> bool:
    """True iff every consecutive visit pair respects the ordering."""
    pos = ordering.position
    v = list(route.visits)
    return all(pos[a] < pos[b] for a, b in zip(v, v[1:]))


def build_ordering_from_route(inst: Instance, route: Route, rng) -> Ordering:
    """Ordering seeded by a route: its customers first, in visit order.

    The remaining customers are walked in random order; each is inserted
    immediately after its nearest route customer (distance ties broken by the
    earlier list position), except customers strictly closer to the depot
    than to every route customer, which go to the front of the list.
    """
    if not route.visits:
        raise ValueError("route must be nonempty")
    order = list(route.visits)
    anchors = list(route.visits)
    rest = [u for u in inst.customers if u not in route.covered]
    for u in np.asarray(rng.permutation(rest), dtype=np.int64) if rest else []:
        u = int(u)
        anchor_d = inst.dist[u, anchors]
        if inst.dist[u, 0] < anchor_d.min():
            order.insert(0, u)
            continue
        best = anchor_d.min()
        nearest = min(
            (a for a, d in zip(anchors, anchor_d) if d == best), key=order.index
        )
        order.insert(order.index(nearest) + 1, u)
    position = np.zeros(inst.n_customers + 1, dtype=np.int64)
    for i, u in enumerate(order):
        position[u] = i + 1
    return Ordering(position=position)


def _concat_ranges(counts: np.ndarray) -> np.ndarray:
    """[0..c0-1, 0..c1-1, ...] for the given counts."""
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    starts = np.cumsum(counts) - counts
    return np.arange(total, dtype=np.int64) - np.repeat(starts, counts)


class FamilyGraph:
    """Immutable DAG over (customer, remaining capacity) vertices.

    Edge data lives in flat parallel arrays (tail, head, cost, h_row).
    Structured graphs (built from an instance + ordering) additionally keep
    references to the distance matrix and demands, which enable the fast
    matrix-form sweeps; generic graphs from :meth:`from_edge_list` fall back
    to per-vertex sweeps over a CSR index.
    """

    def __init__(
        self,
        n_vertices: int,
        tail: np.ndarray,
        head: np.ndarray,
        cost: np.ndarray,
        h_row: np.ndarray,
        vert_customer: np.ndarray,
        vert_level: np.ndarray,
        ordering: Optional[Ordering] = None,
        instance: Optional[Instance] = None,
    ):
        self.n_vertices = int(n_vertices)
        self.source = 0
        self.sink = self.n_vertices - 1
        self.tail = np.asarray(tail, dtype=np.int64)
        self.head = np.asarray(head, dtype=np.int64)
        self.cost = np.asarray(cost, dtype=np.int64)
        self.h_row = np.asarray(h_row, dtype=np.int64)
        self.vert_customer = np.asarray(vert_customer, dtype=np.int64)
        self.vert_level = np.asarray(vert_level, dtype=np.int64)
        self.ordering = ordering
        self.instance = instance
        if np.any(self.tail >= self.head):
            raise ValueError("edges must go forward in the topological order")
        for arr in (self.tail, self.head, self.cost, self.h_row,
                    self.vert_customer, self.vert_level):
            arr.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return self.tail.shape[0]

    @property
    def n_interior(self) -> int:
        return self.n_vertices - 2

    @property
    def structured(self) -> bool:
        return self.instance is not None and self.ordering is not None

    @property
    def topo_order(self) -> np.ndarray:
        return np.arange(self.n_vertices)

    def digest(self) -> str:
        if self.ordering is not None:
            return self.ordering.digest()
        key = np.concatenate([self.tail, self.head, self.cost])
        return hashlib.blake2b(key.tobytes(), digest_size=16).hexdigest()

    @cached_property
    def _in_csr(self):
        order = np.argsort(self.head, kind="stable").astype(np.int64)
        indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.add.at(indptr, self.head + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, order

    @cached_property
    def _out_csr(self):
        order = np.argsort(self.tail, kind="stable").astype(np.int64)
        indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.add.at(indptr, self.tail + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, order

    def in_edges(self, v: int) -> np.ndarray:
        indptr, order = self._in_csr
        return order[indptr[v]:indptr[v + 1]]

    def out_edges(self, v: int) -> np.ndarray:
        indptr, order = self._out_csr
        return order[indptr[v]:indptr[v + 1]]

    @classmethod
    def from_edge_list(
        cls,
        n_vertices: int,
        edges: Sequence[tuple[int, int, float]],
        h_row: Optional[Sequence[int]] = None,
    ) -> "FamilyGraph":
        """Hand-built graph for tests: vertices must already be topo-ordered
        (source 0, sink n_vertices-1)."""
        tail = np.array([e[0] for e in edges], dtype=np.int64)
        head = np.array([e[1] for e in edges], dtype=np.int64)
        cost = np.array([e[2] for e in edges], dtype=np.int64)
        if h_row is None:
            h = np.full(len(edges), NO_ROW, dtype=np.int64)
            h[head == n_vertices - 1] = FLEET_ROW
        else:
            h = np.asarray(h_row, dtype=np.int64)
        vc = np.zeros(n_vertices, dtype=np.int64)
        vl = np.zeros(n_vertices, dtype=np.int64)
        return cls(n_vertices, tail, head, cost, h, vc, vl)


def build_family_graph(inst: Instance, ordering: Ordering) -> FamilyGraph:
    """Construct the DAG of all routes consistent with an ordering."""
    if ordering.n_customers != inst.n_customers:
        raise ValueError("ordering size does not match instance")
    cap = inst.capacity
    demand = inst.demand
    order = ordering.customers_in_order
    levels = cap - demand[order] + 1          # vertices per customer, position order
    vert_offset_by_pos = 1 + np.cumsum(levels) - levels
    n_vertices = int(2 + levels.sum())
    sink = n_vertices - 1
    vert_offset = np.zeros(inst.n_customers + 1, dtype=np.int64)
    vert_offset[order] = vert_offset_by_pos

    vert_customer = np.zeros(n_vertices, dtype=np.int64)
    vert_level = np.zeros(n_vertices, dtype=np.int64)
    vert_customer[1:sink] = np.repeat(order, levels)
    vert_level[1:sink] = _concat_ranges(levels)
    vert_level[0] = cap

    tails, heads, costs, hs = [], [], [], []
    # Source edges, in position order.
    src_heads = vert_offset[order] + (cap - demand[order])
    tails.append(np.zeros(len(order), dtype=np.int64))
    heads.append(src_heads)
    costs.append(inst.dist[0, order])
    hs.append(order.copy())
    # Interior edges, grouped by head customer in position order.
    for t in range(1, len(order)):
        v = int(order[t])
        dv = int(demand[v])
        prev = order[:t]
        counts = np.maximum(0, cap - demand[prev] - dv + 1)
        if counts.sum() == 0:
            continue
        within = _concat_ranges(counts)
        tails.append(np.repeat(vert_offset[prev] + dv, counts) + within)
        heads.append(vert_offset[v] + within)
        costs.append(np.repeat(inst.dist[prev, v], counts))
        hs.append(np.full(int(counts.sum()), v, dtype=np.int64))
    # Sink edges, one per interior vertex.
    interior = np.arange(1, sink, dtype=np.int64)
    tails.append(interior)
    heads.append(np.full(sink - 1, sink, dtype=np.int64))
    costs.append(inst.dist[vert_customer[interior], 0])
    hs.append(np.zeros(sink - 1, dtype=np.int64))

    graph = FamilyGraph(
        n_vertices=n_vertices,
        tail=np.concatenate(tails),
        head=np.concatenate(heads),
        cost=np.concatenate(costs),
        h_row=np.concatenate(hs),
        vert_customer=vert_customer,
        vert_level=vert_level,
        ordering=ordering,
        instance=inst,
    )
    return graph


def edge_weights(graph: FamilyGraph, duals: Duals) -> np.ndarray:
    """Dual-adjusted weights: cost minus the head customer's dual for covering
    edges, cost plus the fleet dual for sink edges."""
    w = graph.cost.astype(np.float64)
    cover = graph.h_row > 0
    w[cover] -= duals.pi[graph.h_row[cover]]
    w[graph.h_row == FLEET_ROW] += duals.pi0
    return w


def column_of_path(graph: FamilyGraph, path: Sequence[int]) -> Route:
    """Map a source-to-sink edge-id path to its route (exact integer cost)."""
    path = list(path)
    if not path or graph.tail[path[0]] != graph.source or graph.head[path[-1]] != graph.sink:
        raise ValueError("path must run from source to sink")
    for a, b in zip(path, path[1:]):
        if graph.head[a] != graph.tail[b]:
            raise ValueError("broken path")
    visits = tuple(int(graph.vert_customer[graph.head[e]]) for e in path[:-1])
    cost = int(graph.cost[list(path)].sum())
    return Route(visits=visits, cost=cost)


def sample_path(graph: FamilyGraph, rng) -> list[int]:
    """Uniform random walk from source to sink; returns edge ids."""
    v = graph.source
    path: list[int] = []
    while v != graph.sink:
        out = graph.out_edges(v)
        if out.size == 0:
            raise ValueError(f"vertex {v} has no outgoing edges")
        e = int(out[rng.integers(out.size)])
        path.append(e)
        v = int(graph.head[e])
    return path


# ---------------------------------------------------------------------------
# Minimum-cost sweeps (per-vertex generic form and matrix form)


def min_cost_to_vertices(graph: FamilyGraph, duals: Duals) -> np.ndarray:
    """Least dual-adjusted path weight from the source to every vertex
    (inf if unreachable)."""
    if graph.structured:
        return _matrix_to_vertices(graph, duals)
    weights = edge_weights(graph, duals)
    mu = np.full(graph.n_vertices, np.inf)
    mu[graph.source] = 0.0
    indptr, order = graph._in_csr
    tail = graph.tail
    for v in range(1, graph.n_vertices):
        e = order[indptr[v]:indptr[v + 1]]
        if e.size:
            mu[v] = np.min(mu[tail[e]] + weights[e])
    return mu


def min_cost_from_vertices(graph: FamilyGraph, duals: Duals) -> np.ndarray:
    """Least dual-adjusted path weight from every vertex to the sink
    (inf if none)."""
    if graph.structured:
        return _matrix_from_vertices(graph, duals)
    weights = edge_weights(graph, duals)
    mu = np.full(graph.n_vertices, np.inf)
    mu[graph.sink] = 0.0
    indptr, order = graph._out_csr
    head = graph.head
    for v in range(graph.n_vertices - 2, -1, -1):
        e = order[indptr[v]:indptr[v + 1]]
        if e.size:
            mu[v] = np.min(weights[e] + mu[head[e]])
    return mu


def _level_matrix_forward(graph: FamilyGraph, duals: Duals) -> np.ndarray:
    """M[u, d] = least weight of a source path ending at vertex (u, d)."""
    inst = graph.instance
    cap = inst.capacity
    demand = inst.demand
    dist = inst.dist
    pi = duals.pi
    order = graph.ordering.customers_in_order
    m = np.full((inst.n_customers + 1, cap + 1), np.inf)
    for t, v in enumerate(order):
        v = int(v)
        dv = int(demand[v])
        top = cap - dv
        vals = np.full(top + 1, np.inf)
        vals[top] = dist[0, v]
        if t:
            prev = order[:t]
            cand = m[prev, dv:cap + 1] + dist[prev, v][:, None]
            np.minimum(vals, cand.min(axis=0), out=vals)
        m[v, : top + 1] = vals - pi[v]
    return m


def _matrix_to_vertices(graph: FamilyGraph, duals: Duals) -> np.ndarray:
    m = _level_matrix_forward(graph, duals)
    mu = np.empty(graph.n_vertices)
    mu[graph.source] = 0.0
    inter = np.arange(1, graph.sink)
    mu[inter] = m[graph.vert_customer[inter], graph.vert_level[inter]]
    sink_cost = graph.instance.dist[graph.vert_customer[inter], 0]
    mu[graph.sink] = np.min(mu[inter] + sink_cost + duals.pi0, initial=np.inf)
    return mu


def _level_matrix_backward(graph: FamilyGraph, duals: Duals) -> np.ndarray:
    """M[u, d] = least weight of a path from vertex (u, d) to the sink."""
    inst = graph.instance
    cap = inst.capacity
    demand = inst.demand
    dist = inst.dist
    pi = duals.pi
    order = graph.ordering.customers_in_order
    n = inst.n_customers
    m = np.full((n + 1, cap + 1), np.inf)
    # shifted[v, d] = m[v, d - d_v] - pi[v]: cost of hopping to v at load d.
    shifted = np.full((n + 1, cap + 1), np.inf)
    for t in range(len(order) - 1, -1, -1):
        v = int(order[t])
        dv = int(demand[v])
        top = cap - dv
        vals = np.full(top + 1, float(dist[v, 0]) + duals.pi0)
        succ = order[t + 1:]
        if succ.size:
            cand = shifted[succ, : top + 1] + dist[v, succ][:, None]
            np.minimum(vals, cand.min(axis=0), out=vals)
        m[v, : top + 1] = vals
        shifted[v, dv: cap + 1] = m[v, : top + 1] - pi[v]
    return m


def _matrix_from_vertices(graph: FamilyGraph, duals: Duals) -> np.ndarray:
    m = _level_matrix_backward(graph, duals)
    mu = np.empty(graph.n_vertices)
    mu[graph.sink] = 0.0
    inter = np.arange(1, graph.sink)
    mu[inter] = m[graph.vert_customer[inter], graph.vert_level[inter]]
    inst = graph.instance
    order = graph.ordering.customers_in_order
    src_w = inst.dist[0, order] - duals.pi[order]
    mu[graph.source] = np.min(
        src_w + m[order, inst.capacity - inst.demand[order]], initial=np.inf
    )
    return mu


def shortest_route(
    graph: FamilyGraph, duals: Duals
) -> tuple[Route, float]:
    """Minimum reduced-cost route among all routes the graph encodes.

    Runs the forward sweep and backtracks one optimal path. The returned
    reduced cost is recomputed from the route itself.
    """
    inst = graph.instance
    if inst is None:
        raise ValueError("shortest_route requires a structured family graph")
    cap = inst.capacity
    demand = inst.demand
    dist = inst.dist
    order = graph.ordering.customers_in_order
    pos_of = graph.ordering.position
    m = _level_matrix_forward(graph, duals)
    custs = order
    sink_vals = m[custs] + dist[custs, 0][:, None]
    flat = int(np.argmin(sink_vals))
    i, d = divmod(flat, sink_vals.shape[1])
    u = int(custs[i])
    visits_rev = []
    while True:
        visits_rev.append(u)
        du = int(demand[u])
        top = cap - du
        if d > top:
            raise AssertionError("backtrack left the valid level range")
        prev = order[: pos_of[u] - 1]
        cand = np.full(prev.shape[0] + 1, np.inf)
        cand[0] = dist[0, u] if d == top else np.inf
        if prev.size:
            cand[1:] = m[prev, d + du] + dist[prev, u]
        k = int(np.argmin(cand))
        if k == 0:
            break
        u = int(prev[k - 1])
        d = d + du
    visits = tuple(reversed(visits_rev))
    route = Route(visits=visits, cost=int(_route_cost_from_dist(dist, visits)))
    from .routes import reduced_cost

    return route, reduced_cost(route, duals)


def _route_cost_from_dist(dist: np.ndarray, visits: tuple[int, ...]) -> int:
    total = dist[0, visits[0]]
    for a, b in zip(visits, visits[1:]):
        total += dist[a, b]
    return int(total + dist[visits[-1], 0])


def dump_graph(graph: FamilyGraph, path) -> None:
    """Plain-text vertex/edge listing for debugging."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"vertices {graph.n_vertices} edges {graph.n_edges}\n")
        for v in range(graph.n_vertices):
            if v == graph.source:
                fh.write("v 0 source\n")
            elif v == graph.sink:
                fh.write(f"v {v} sink\n")
            else:
                fh.write(
                    f"v {v} customer {graph.vert_customer[v]} load {graph.vert_level[v]}\n"
                )
        for e in range(graph.n_edges):
            fh.write(
                f"e {graph.tail[e]} {graph.head[e]} cost {graph.cost[e]} "
                f"h {graph.h_row[e]}\n"
            )
