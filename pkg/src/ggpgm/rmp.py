"""Assembly of the family-graph RMP as a sparse LP.

One variable per (family, edge) in a given catalog, plus one high-cost
artificial column per customer so every RMP stays feasible. Rows:

* coverage (>= 1) per customer: +1 for every edge entering one of the
  customer's vertices;
* fleet row (>= -K): -1 for every sink edge;
* flow conservation (== 0) per catalogued interior vertex: outflow - inflow.

Catalogs are insertion-ordered (family, id) pair arrays. The baseline solver
passes complete catalogs (every edge and interior vertex of every family);
the restricted solver passes the partial sets it is managing. Keeping the
order append-only means variable/row indices from a previous assembly remain
a prefix of the next one, which lets a previous basis serve as a warm hint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .family import FamilyGraph
from .instance import Instance
from .lp import LpBuilder, LpProblem, LpSolution
from .routes import Duals


def big_m_cost(inst: Instance) -> float:
    """Artificial-column cost: exceeds any sum of route costs in the RMP."""
    return 10.0 * inst.n_customers * max(inst.max_dist, 1)


@dataclass
class RmpIndex:
    """Maps LP variables/rows of an assembled RMP back to graph objects."""

    n_customers: int
    var_fam: np.ndarray    # per edge-variable: family index
    var_edge: np.ndarray   # per edge-variable: edge id within the family
    vert_fam: np.ndarray   # per flow row: family index
    vert_id: np.ndarray    # per flow row: vertex id within the family

    @property
    def n_edge_vars(self) -> int:
        return self.var_fam.shape[0]

    def duals(self, sol: LpSolution) -> Duals:
        pi = np.concatenate([[0.0], sol.duals_ge[: self.n_customers]])
        return Duals(pi=pi, pi0=float(sol.duals_ge[self.n_customers]))

    def family_flow(self, primal: np.ndarray, f: int, n_edges: int) -> np.ndarray:
        """Full-length flow vector over family f's edges (zeros off-catalog)."""
        flow = np.zeros(n_edges)
        mask = self.var_fam == f
        flow[self.var_edge[mask]] = primal[: self.n_edge_vars][mask]
        return flow

    def max_artificial(self, primal: np.ndarray) -> float:
        return float(primal[self.n_edge_vars:].max(initial=0.0))


def full_catalog(families: list[FamilyGraph]) -> tuple[np.ndarray, ...]:
    """Variable and vertex catalogs covering every edge of every family."""
    var_fam = np.concatenate(
        [np.full(g.n_edges, f, dtype=np.int64) for f, g in enumerate(families)]
    )
    var_edge = np.concatenate(
        [np.arange(g.n_edges, dtype=np.int64) for g in families]
    )
    vert_fam = np.concatenate(
        [np.full(g.n_interior, f, dtype=np.int64) for f, g in enumerate(families)]
    )
    vert_id = np.concatenate(
        [np.arange(1, g.sink, dtype=np.int64) for g in families]
    )
    return var_fam, var_edge, vert_fam, vert_id


def assemble_rmp(
    families: list[FamilyGraph],
    inst: Instance,
    var_fam: np.ndarray,
    var_edge: np.ndarray,
    vert_fam: np.ndarray,
    vert_id: np.ndarray,
    big_m: float,
) -> tuple[LpProblem, RmpIndex]:
    """Build the covering + flow LP over the catalogued edges."""
    n = inst.n_customers
    n_edge_vars = var_fam.shape[0]
    n_vars = n_edge_vars + n
    objective = np.empty(n_vars)
    objective[n_edge_vars:] = big_m

    ge_rows, ge_cols, ge_vals = [], [], []
    eq_rows, eq_cols, eq_vals = [], [], []
    for f, graph in enumerate(families):
        sel = var_edge[var_fam == f]
        cols = np.where(var_fam == f)[0]
        if sel.size == 0:
            continue
        objective[cols] = graph.cost[sel]
        h = graph.h_row[sel]
        cover = h > 0
        ge_rows.append(h[cover] - 1)
        ge_cols.append(cols[cover])
        ge_vals.append(np.ones(int(cover.sum())))
        fleet = h == 0
        ge_rows.append(np.full(int(fleet.sum()), n, dtype=np.int64))
        ge_cols.append(cols[fleet])
        ge_vals.append(-np.ones(int(fleet.sum())))
        # Flow rows: map this family's catalogued vertices to row indices.
        vrows = np.where(vert_fam == f)[0]
        vmap = np.full(graph.n_vertices, -1, dtype=np.int64)
        vmap[vert_id[vert_fam == f]] = vrows
        tails = graph.tail[sel]
        heads = graph.head[sel]
        t_in = (tails != graph.source)
        if np.any(vmap[tails[t_in]] < 0):
            raise ValueError("edge tail vertex missing from the vertex catalog")
        eq_rows.append(vmap[tails[t_in]])
        eq_cols.append(cols[t_in])
        eq_vals.append(np.ones(int(t_in.sum())))
        h_in = (heads != graph.sink)
        if np.any(vmap[heads[h_in]] < 0):
            raise ValueError("edge head vertex missing from the vertex catalog")
        eq_rows.append(vmap[heads[h_in]])
        eq_cols.append(cols[h_in])
        eq_vals.append(-np.ones(int(h_in.sum())))

    # Artificial columns: +1 on each coverage row.
    ge_rows.append(np.arange(n, dtype=np.int64))
    ge_cols.append(n_edge_vars + np.arange(n, dtype=np.int64))
    ge_vals.append(np.ones(n))

    builder = LpBuilder(n_vars, objective=objective)
    rhs_ge = np.concatenate([np.ones(n), [-float(inst.n_vehicles)]])
    builder.add_ge_block(
        np.concatenate(ge_rows), np.concatenate(ge_cols), np.concatenate(ge_vals), rhs_ge
    )
    if vert_fam.size:
        builder.add_eq_block(
            np.concatenate(eq_rows) if eq_rows else np.zeros(0, dtype=np.int64),
            np.concatenate(eq_cols) if eq_cols else np.zeros(0, dtype=np.int64),
            np.concatenate(eq_vals) if eq_vals else np.zeros(0),
            np.zeros(vert_fam.shape[0]),
        )
    problem = builder.build()
    index = RmpIndex(
        n_customers=n,
        var_fam=var_fam.copy(),
        var_edge=var_edge.copy(),
        vert_fam=vert_fam.copy(),
        vert_id=vert_id.copy(),
    )
    return problem, index
