"""Restricted-edge solving of the family-graph RMP.

Instead of handing the LP every edge of every family, this solver keeps a
small working set of edges per family and alternates between (a) solving the
RMP over the working sets and (b) computing, for every edge of every *full*
family graph, the least reduced cost over columns whose path uses that edge
(the ``mu`` value, two topological sweeps per family). Edges on an improving
minimum-reduced-cost path are added to the working set; the loop ends when no
family contains an improving column, at which point the restricted optimum
equals the full RMP optimum.

Working sets are hot-started from the positive-flow edges of the previous
solution, so each call starts at the previous objective with few variables.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .family import FamilyGraph, edge_weights, min_cost_from_vertices, min_cost_to_vertices
from .instance import Instance
from .lp import LpProblem, LpSolution, solve_lp
from .rmp import RmpIndex, assemble_rmp, big_m_cost
from .routes import Duals

MU_TOL = 1e-6           # termination: no family edge may sit below -MU_TOL
DEFAULT_EPSILON = 1e-3  # selection slack around the per-family minimum
FLOW_TOL = 1e-9         # an edge counts as active above this flow


class PgmIterationCapError(RuntimeError):
    """Inner loop exceeded its iteration cap (tolerance misconfiguration)."""


@dataclass
class MuTable:
    """Per-family reduced-cost geometry under fixed duals.

    to_vertex[i]: least weight of a source path to vertex i.
    from_vertex[i]: least weight of a path from vertex i to the sink.
    through_edge[e]: least reduced cost over columns using edge e
    (inf when no source-sink path uses the edge).
    """

    to_vertex: np.ndarray
    from_vertex: np.ndarray
    through_edge: np.ndarray

    @property
    def minimum(self) -> float:
        return float(self.through_edge.min(initial=np.inf))


def compute_mu(graph: FamilyGraph, duals: Duals) -> MuTable:
    """Two sweeps in topological order, then one vector pass over the edges."""
    w = edge_weights(graph, duals)
    to_v = min_cost_to_vertices(graph, duals)
    from_v = min_cost_from_vertices(graph, duals)
    through = to_v[graph.tail] + w + from_v[graph.head]
    return MuTable(to_vertex=to_v, from_vertex=from_v, through_edge=through)


def select_edges(mu: MuTable, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Edges of the family's improving minimum-reduced-cost columns.

    Empty unless the family minimum is negative; otherwise every edge that is
    both negative and within ``epsilon`` of the minimum.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    fam_min = mu.minimum
    if not np.isfinite(fam_min) or fam_min >= 0:
        return np.zeros(0, dtype=np.int64)
    return np.where(
        (mu.through_edge < 0) & (mu.through_edge < fam_min + epsilon)
    )[0]


class PartialEdgeSets:
    """Per-family working edge sets plus insertion-ordered LP catalogs.

    ``add`` appends newly seen edges (and their newly touched interior
    vertices) to flat catalogs, so variable and flow-row indices of earlier
    assemblies stay prefixes of later ones within one solve.
    """

    def __init__(self):
        self._edge_seen: list[np.ndarray] = []    # bool mask per family
        self._vert_seen: list[np.ndarray] = []
        self.var_fam = np.zeros(0, dtype=np.int64)
        self.var_edge = np.zeros(0, dtype=np.int64)
        self.vert_fam = np.zeros(0, dtype=np.int64)
        self.vert_id = np.zeros(0, dtype=np.int64)

    @property
    def n_families(self) -> int:
        return len(self._edge_seen)

    @property
    def total_edges(self) -> int:
        return self.var_fam.shape[0]

    def attach_family(self, graph: FamilyGraph) -> int:
        """Register a family with an initially empty working set."""
        self._edge_seen.append(np.zeros(graph.n_edges, dtype=bool))
        self._vert_seen.append(np.zeros(graph.n_vertices, dtype=bool))
        return len(self._edge_seen) - 1

    def edges_of(self, f: int) -> np.ndarray:
        return self.var_edge[self.var_fam == f]

    def count_of(self, f: int) -> int:
        return int(self._edge_seen[f].sum())

    def add(self, f: int, graph: FamilyGraph, edge_ids: np.ndarray) -> int:
        """Add edges to family f's set; returns how many were new."""
        edge_ids = np.asarray(edge_ids, dtype=np.int64)
        fresh = edge_ids[~self._edge_seen[f][edge_ids]]
        if fresh.size == 0:
            return 0
        self._edge_seen[f][fresh] = True
        self.var_fam = np.concatenate([self.var_fam, np.full(fresh.size, f, dtype=np.int64)])
        self.var_edge = np.concatenate([self.var_edge, fresh])
        ends = np.concatenate([graph.tail[fresh], graph.head[fresh]])
        ends = ends[(ends != graph.source) & (ends != graph.sink)]
        new_v = np.unique(ends[~self._vert_seen[f][ends]])
        if new_v.size:
            self._vert_seen[f][new_v] = True
            self.vert_fam = np.concatenate([self.vert_fam, np.full(new_v.size, f, dtype=np.int64)])
            self.vert_id = np.concatenate([self.vert_id, new_v])
        return int(fresh.size)


def hot_start_edges(
    families: list[FamilyGraph], flows: list[np.ndarray], tol: float = FLOW_TOL
) -> PartialEdgeSets:
    """Working sets holding exactly the positive-flow edges of a solution.

    Families with a previous flow vector keep only their positive-flow edges;
    a family whose flow is entirely zero is carried with an empty set (it
    stays registered and may re-activate through edge addition). Families
    beyond the flow list, i.e. newly priced ones with no previous solution,
    enter with their full edge set, mirroring how the first family is
    initialized.
    """
    sets = PartialEdgeSets()
    for f, graph in enumerate(families):
        sets.attach_family(graph)
        if f < len(flows) and flows[f] is not None:
            active = np.where(flows[f] > tol)[0]
            if active.size:
                sets.add(f, graph, active)
        elif f >= len(flows):
            sets.add(f, graph, np.arange(graph.n_edges, dtype=np.int64))
    return sets


def full_edge_sets(families: list[FamilyGraph]) -> PartialEdgeSets:
    sets = PartialEdgeSets()
    for f, graph in enumerate(families):
        sets.attach_family(graph)
        sets.add(f, graph, np.arange(graph.n_edges, dtype=np.int64))
    return sets


def assemble_restricted_rmp(
    families: list[FamilyGraph],
    sets: PartialEdgeSets,
    inst: Instance,
    big_m: Optional[float] = None,
) -> tuple[LpProblem, RmpIndex]:
    """RMP over the working sets only (identical structure to the full RMP)."""
    if big_m is None:
        big_m = big_m_cost(inst)
    return assemble_rmp(
        families, inst, sets.var_fam, sets.var_edge, sets.vert_fam, sets.vert_id, big_m
    )


@dataclass
class PgmResult:
    """Terminal restricted-RMP solution plus growth and timing diagnostics."""

    objective: float
    duals: Duals
    solution: LpSolution
    problem: LpProblem
    index: RmpIndex
    edge_sets: PartialEdgeSets
    inner_iterations: int
    lp_time_s: float
    mu_time_s: float
    inner_objectives: list[float] = field(default_factory=list)
    stalled: bool = False

    def family_flows(self, families: list[FamilyGraph]) -> list[np.ndarray]:
        return [
            self.index.family_flow(self.solution.primal, f, g.n_edges)
            for f, g in enumerate(families)
        ]


def _mu_workers(mu_parallel: bool, n_families: int) -> int:
    if not mu_parallel or n_families <= 1:
        return 1
    env = os.environ.get("GGPGM_THREADS")
    limit = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(limit, n_families))


def pgm_solve_rmp(
    families: list[FamilyGraph],
    sets: PartialEdgeSets,
    inst: Instance,
    epsilon: float = DEFAULT_EPSILON,
    backend: str = "auto",
    mu_parallel: bool = False,
    big_m: Optional[float] = None,
) -> PgmResult:
    """Solve the family RMP by alternating restricted solves and edge addition.

    Terminates when every family's least column reduced cost is >= -1e-6,
    certifying the restricted optimum equals the full RMP optimum. Raises
    PgmIterationCapError beyond 10 * n_families + 100 inner iterations.
    """
    if big_m is None:
        big_m = big_m_cost(inst)
    cap = 10 * len(families) + 100
    lp_time = 0.0
    mu_time = 0.0
    inner = 0
    objectives: list[float] = []
    warm: Optional[np.ndarray] = None
    warm_shape = (0, 0)
    stalled = False
    workers = _mu_workers(mu_parallel, len(families))
    while True:
        inner += 1
        if inner > cap:
            raise PgmIterationCapError(
                f"no convergence after {cap} inner iterations "
                f"({len(families)} families, {sets.total_edges} edges); "
                "edge-selection epsilon or LP tolerances are inconsistent"
            )
        t0 = time.perf_counter()
        problem, index = assemble_restricted_rmp(families, sets, inst, big_m)
        shape = (problem.n_ge + problem.n_eq, problem.n_vars)
        hint = warm if warm_shape[0] == shape[0] else None
        sol = solve_lp(problem, warm_hint=hint, backend=backend)
        lp_time += time.perf_counter() - t0
        if sol.status != "optimal":
            raise RuntimeError(
                f"restricted RMP solve failed with status {sol.status!r}"
            )
        warm, warm_shape = sol.basis, shape
        objectives.append(sol.objective)
        duals = index.duals(sol)
        t0 = time.perf_counter()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                tables = list(pool.map(lambda g: compute_mu(g, duals), families))
        else:
            tables = [compute_mu(g, duals) for g in families]
        mu_time += time.perf_counter() - t0
        global_min = min((t.minimum for t in tables), default=np.inf)
        if global_min >= -MU_TOL:
            break
        added = 0
        for f, table in enumerate(tables):
            chosen = select_edges(table, epsilon)
            if chosen.size:
                added += sets.add(f, families[f], chosen)
        if added == 0:
            # All improving-path edges are already present; the residual
            # negativity is dual noise below the LP tolerance budget.
            stalled = True
            break
    return PgmResult(
        objective=float(objectives[-1]),
        duals=duals,
        solution=sol,
        problem=problem,
        index=index,
        edge_sets=sets,
        inner_iterations=inner,
        lp_time_s=lp_time,
        mu_time_s=mu_time,
        inner_objectives=objectives,
        stalled=stalled,
    )
