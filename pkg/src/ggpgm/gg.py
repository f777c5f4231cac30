"""Outer solver loops over generated columns and family graphs.

Three algorithms share one skeleton: solve the current restricted master,
price a column with the topological heuristic, enlarge the master, repeat
until pricing is exhausted or the time budget runs out (the iteration in
flight is always completed).

* ``cg_solve``: plain column pool, set-covering RMP over the pool.
* ``gg_solve`` with strategy "BL": each priced column contributes its whole
  family graph; the RMP over all edges is solved directly.
* ``gg_solve`` with strategy "PGM": same master, solved by restricted edge
  sets hot-started from the previous optimum (module :mod:`ggpgm.pgm`).

Wall-clock accounting covers algorithm phases only; optional baseline
re-solves (``compare_bl``) are instrumentation and excluded from the budget.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .family import (
    FamilyGraph,
    Ordering,
    build_family_graph,
    build_ordering_from_route,
    column_of_path,
    dump_graph,
)
from .instance import Instance
from .lp import LpBuilder, LpProblem, LpSolution, check_solution, dump_lp, solve_lp
from .pgm import PartialEdgeSets, full_edge_sets, hot_start_edges, pgm_solve_rmp
from .pricing import DEFAULT_MAX_TRIES, PricingResult, heuristic_pricing
from .rmp import RmpIndex, assemble_rmp, big_m_cost, full_catalog
from .routes import Duals, Route

ARTIFICIAL_TOL = 1e-6   # artificial flow above this flags an uncovered row
MAX_DUPLICATE_RETRIES = 10

PricingFn = Callable[[Instance, Duals, np.random.Generator], PricingResult]


class InfeasibleInstanceError(ValueError):
    """The fleet provably cannot cover the total demand."""


@dataclass
class GGConfig:
    """Knobs for one solver run; defaults follow the benchmark protocol."""

    rmp_strategy: str = "PGM"          # "PGM" or "BL"
    time_limit_s: float = 3000.0
    max_pricing_tries: int = DEFAULT_MAX_TRIES
    epsilon_edge: float = 1e-3
    seed: int = 0
    lp_backend: str = "auto"
    pricing_mode: str = "first"
    mu_parallel: bool = False
    compare_bl: bool = False           # time a baseline re-solve per iteration
    compare_every: int = 1             # baseline re-solve every k-th iteration
    compare_cap_s: float = float("inf")  # stop comparing once one solve exceeds this
    validate_solutions: bool = True
    dump_lp_dir: Optional[str] = None
    dump_graphs_dir: Optional[str] = None

    def __post_init__(self):
        if self.rmp_strategy not in ("PGM", "BL"):
            raise ValueError(f"unknown RMP strategy {self.rmp_strategy!r}")
        if self.time_limit_s < 0 or self.max_pricing_tries < 1 or self.epsilon_edge <= 0:
            raise ValueError("limits must be positive")
        if self.compare_every < 1:
            raise ValueError("compare_every must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    wall_time_s: float
    rmp_objective: float
    pricing_reduced_cost: float
    n_families: int
    n_active_edges: int
    rmp_time_s: float
    mu_time_s: float
    lp_time_s: float
    pricing_time_s: float
    orderings_tried: int
    bl_rmp_time_s: float = float("nan")
    bl_objective: float = float("nan")


@dataclass
class SolverState:
    """Evolving solver state plus the per-iteration log."""

    instance: Instance
    config: GGConfig
    rng: np.random.Generator
    families: list[FamilyGraph] = field(default_factory=list)
    family_digests: set = field(default_factory=set)
    columns: list[Route] = field(default_factory=list)
    edge_sets: Optional[PartialEdgeSets] = None
    flows: list[np.ndarray] = field(default_factory=list)
    column_values: Optional[np.ndarray] = None
    duals: Optional[Duals] = None
    objective: float = float("nan")
    status: str = "running"
    iteration: int = 0
    elapsed_s: float = 0.0
    log: list[IterationRecord] = field(default_factory=list)
    artificial_max: float = 0.0
    big_m: float = 0.0
    pgm_inner: list[tuple[int, list[float]]] = field(default_factory=list)
    compare_disabled: bool = False


def assemble_full_rmp(
    families: list[FamilyGraph], inst: Instance, big_m: Optional[float] = None
) -> tuple[LpProblem, RmpIndex]:
    """Baseline master: every edge of every family graph as a variable."""
    if not families:
        raise ValueError("need at least one family")
    if big_m is None:
        big_m = big_m_cost(inst)
    var_fam, var_edge, vert_fam, vert_id = full_catalog(families)
    return assemble_rmp(families, inst, var_fam, var_edge, vert_fam, vert_id, big_m)


def assemble_cg_rmp(
    columns: list[Route], inst: Instance, big_m: Optional[float] = None
) -> LpProblem:
    """Plain column master over an explicit route pool plus artificials."""
    if big_m is None:
        big_m = big_m_cost(inst)
    n = inst.n_customers
    n_vars = len(columns) + n
    obj = np.concatenate(
        [np.array([r.cost for r in columns], dtype=float), np.full(n, big_m)]
    )
    rows, cols = [], []
    for j, r in enumerate(columns):
        for u in r.visits:
            rows.append(u - 1)
            cols.append(j)
    rows += list(range(n))                         # artificials on coverage rows
    cols += [len(columns) + u for u in range(n)]
    all_rows = np.concatenate([np.asarray(rows), np.full(len(columns), n)])
    all_cols = np.concatenate([np.asarray(cols), np.arange(len(columns))])
    all_vals = np.concatenate([np.ones(len(rows)), -np.ones(len(columns))])
    builder = LpBuilder(n_vars, objective=obj)
    builder.add_ge_block(
        all_rows, all_cols, all_vals,
        np.concatenate([np.ones(n), [-float(inst.n_vehicles)]]),
    )
    return builder.build()


def _feasibility_precheck(inst: Instance) -> None:
    total = int(inst.demand[1:].sum())
    if inst.n_vehicles * inst.capacity < total:
        raise InfeasibleInstanceError(
            f"fleet capacity {inst.n_vehicles} x {inst.capacity} cannot cover "
            f"total demand {total}"
        )


def _initial_column(inst: Instance, config: GGConfig, rng) -> Route:
    """Price one column under uniformly huge customer duals (zero fleet dual)."""
    big = 10.0 * big_m_cost(inst)
    duals = Duals.uniform(inst.n_customers, big)
    result = heuristic_pricing(
        inst, duals, rng, max_tries=config.max_pricing_tries, mode="first"
    )
    if not result.found:
        raise InfeasibleInstanceError("initial pricing found no usable route")
    return result.route


def initialize_gg(inst: Instance, config: GGConfig, rng=None) -> SolverState:
    """One family from a maximally covering priced route; its full edge set
    becomes the initial restricted working set."""
    _feasibility_precheck(inst)
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    state = SolverState(instance=inst, config=config, rng=rng, big_m=big_m_cost(inst))
    route = _initial_column(inst, config, rng)
    ordering = build_ordering_from_route(inst, route, rng)
    _add_family(state, route, ordering)
    if config.rmp_strategy == "PGM":
        state.edge_sets = full_edge_sets(state.families)
    return state


def _add_family(state: SolverState, route: Route, ordering: Ordering) -> FamilyGraph:
    graph = build_family_graph(state.instance, ordering)
    state.families.append(graph)
    state.family_digests.add(ordering.digest())
    state.columns.append(route)
    if state.config.dump_graphs_dir:
        out = Path(state.config.dump_graphs_dir)
        out.mkdir(parents=True, exist_ok=True)
        dump_graph(graph, out / f"family_{len(state.families) - 1:04d}.txt")
    return graph


def _dump_problem(state: SolverState, problem: LpProblem) -> None:
    if state.config.dump_lp_dir:
        out = Path(state.config.dump_lp_dir)
        out.mkdir(parents=True, exist_ok=True)
        dump_lp(problem, out / f"rmp_{state.iteration:04d}.lp")


def _certify(state: SolverState, problem: LpProblem, sol: LpSolution) -> None:
    if not state.config.validate_solutions:
        return
    report = check_solution(problem, sol)
    if not report.ok():
        raise RuntimeError(f"RMP solution failed certification: {report}")


def _guard_monotone(state: SolverState, objective: float) -> None:
    if state.log and objective > state.log[-1].rmp_objective + 1e-6 * (
        1.0 + abs(state.log[-1].rmp_objective)
    ):
        raise RuntimeError(
            f"RMP objective increased: {state.log[-1].rmp_objective} -> {objective}"
        )


def gg_solve(
    inst: Instance, config: GGConfig, pricing_fn: Optional[PricingFn] = None
) -> SolverState:
    """Family-graph column generation (baseline or restricted-edge master)."""
    if pricing_fn is None:
        pricing_fn = lambda i, d, r: heuristic_pricing(
            i, d, r, max_tries=config.max_pricing_tries, mode=config.pricing_mode
        )
    state = initialize_gg(inst, config)
    while True:
        state.iteration += 1
        mu_time = lp_time = 0.0
        t_rmp = time.perf_counter()
        if config.rmp_strategy == "PGM":
            result = pgm_solve_rmp(
                state.families,
                state.edge_sets,
                inst,
                epsilon=config.epsilon_edge,
                backend=config.lp_backend,
                mu_parallel=config.mu_parallel,
                big_m=state.big_m,
            )
            sol, index, problem = result.solution, result.index, result.problem
            mu_time, lp_time = result.mu_time_s, result.lp_time_s
            state.edge_sets = result.edge_sets
            state.pgm_inner.append((result.inner_iterations, result.inner_objectives))
            n_active = result.edge_sets.total_edges
        else:
            problem, index = assemble_full_rmp(state.families, inst, state.big_m)
            t0 = time.perf_counter()
            sol = solve_lp(problem, backend=config.lp_backend)
            lp_time = time.perf_counter() - t0
            if sol.status != "optimal":
                raise RuntimeError(f"baseline RMP solve failed: {sol.status}")
            n_active = sum(g.n_edges for g in state.families)
        rmp_time = time.perf_counter() - t_rmp
        _certify(state, problem, sol)
        _dump_problem(state, problem)
        state.objective = float(sol.objective)
        state.duals = index.duals(sol)
        state.flows = [
            index.family_flow(sol.primal, f, g.n_edges)
            for f, g in enumerate(state.families)
        ]
        state.artificial_max = index.max_artificial(sol.primal)
        _guard_monotone(state, state.objective)

        bl_time = bl_obj = float("nan")
        compare_now = (
            config.compare_bl
            and config.rmp_strategy == "PGM"
            and not state.compare_disabled
            and (state.iteration - 1) % config.compare_every == 0
        )
        if compare_now:
            t0 = time.perf_counter()
            bl_problem, _ = assemble_full_rmp(state.families, inst, state.big_m)
            bl_sol = solve_lp(bl_problem, backend=config.lp_backend)
            bl_time = time.perf_counter() - t0
            if bl_sol.status != "optimal":
                raise RuntimeError(f"baseline comparison solve failed: {bl_sol.status}")
            bl_obj = float(bl_sol.objective)
            if bl_time > config.compare_cap_s:
                state.compare_disabled = True

        # Pricing, re-drawing on duplicate families.
        t0 = time.perf_counter()
        accepted: Optional[tuple[Route, Ordering]] = None
        duplicates = 0
        while True:
            result_p = pricing_fn(inst, state.duals, state.rng)
            if not result_p.found:
                break
            ordering = build_ordering_from_route(inst, result_p.route, state.rng)
            if ordering.digest() in state.family_digests:
                duplicates += 1
                if duplicates >= MAX_DUPLICATE_RETRIES:
                    break
                continue
            accepted = (result_p.route, ordering)
            break
        pricing_time = time.perf_counter() - t0
        state.elapsed_s += rmp_time + pricing_time
        state.log.append(
            IterationRecord(
                iteration=state.iteration,
                wall_time_s=state.elapsed_s,
                rmp_objective=state.objective,
                pricing_reduced_cost=result_p.reduced_cost,
                n_families=len(state.families),
                n_active_edges=n_active,
                rmp_time_s=rmp_time,
                mu_time_s=mu_time,
                lp_time_s=lp_time,
                pricing_time_s=pricing_time,
                orderings_tried=result_p.orderings_tried,
                bl_rmp_time_s=bl_time,
                bl_objective=bl_obj,
            )
        )
        if accepted is None:
            state.status = "converged-approx"
            break
        _add_family(state, *accepted)
        if config.rmp_strategy == "PGM":
            state.edge_sets = hot_start_edges(state.families, state.flows)
        if state.elapsed_s >= config.time_limit_s:
            state.status = "time-limit"
            break
    return state


def cg_solve(
    inst: Instance, config: GGConfig, pricing_fn: Optional[PricingFn] = None
) -> SolverState:
    """Plain column generation over the same pricing heuristic."""
    if pricing_fn is None:
        pricing_fn = lambda i, d, r: heuristic_pricing(
            i, d, r, max_tries=config.max_pricing_tries, mode=config.pricing_mode
        )
    _feasibility_precheck(inst)
    rng = np.random.default_rng(config.seed)
    state = SolverState(instance=inst, config=config, rng=rng, big_m=big_m_cost(inst))
    state.columns.append(_initial_column(inst, config, rng))
    seen = {state.columns[0].visits}
    while True:
        state.iteration += 1
        t_rmp = time.perf_counter()
        problem = assemble_cg_rmp(state.columns, inst, state.big_m)
        t0 = time.perf_counter()
        sol = solve_lp(problem, backend=config.lp_backend)
        lp_time = time.perf_counter() - t0
        rmp_time = time.perf_counter() - t_rmp
        if sol.status != "optimal":
            raise RuntimeError(f"CG RMP solve failed: {sol.status}")
        _certify(state, problem, sol)
        _dump_problem(state, problem)
        state.objective = float(sol.objective)
        pi = np.concatenate([[0.0], sol.duals_ge[: inst.n_customers]])
        state.duals = Duals(pi=pi, pi0=float(sol.duals_ge[inst.n_customers]))
        state.column_values = sol.primal[: len(state.columns)].copy()
        state.artificial_max = float(sol.primal[len(state.columns):].max(initial=0.0))
        _guard_monotone(state, state.objective)

        t0 = time.perf_counter()
        accepted: Optional[Route] = None
        duplicates = 0
        while True:
            result = pricing_fn(inst, state.duals, state.rng)
            if not result.found:
                break
            if result.route.visits in seen:
                duplicates += 1
                if duplicates >= MAX_DUPLICATE_RETRIES:
                    break
                continue
            accepted = result.route
            break
        pricing_time = time.perf_counter() - t0
        state.elapsed_s += rmp_time + pricing_time
        state.log.append(
            IterationRecord(
                iteration=state.iteration,
                wall_time_s=state.elapsed_s,
                rmp_objective=state.objective,
                pricing_reduced_cost=result.reduced_cost,
                n_families=len(state.columns),
                n_active_edges=len(state.columns),
                rmp_time_s=rmp_time,
                mu_time_s=0.0,
                lp_time_s=lp_time,
                pricing_time_s=pricing_time,
                orderings_tried=result.orderings_tried,
            )
        )
        if accepted is None:
            state.status = "converged-approx"
            break
        state.columns.append(accepted)
        seen.add(accepted.visits)
        if state.elapsed_s >= config.time_limit_s:
            state.status = "time-limit"
            break
    return state


def flow_decompose(state: SolverState, tol: float = 1e-9) -> list[tuple[Route, float]]:
    """Peel the terminal flow into weighted routes.

    For family-graph runs, each family's flow is decomposed by repeatedly
    walking a positive-flow path from source to sink and subtracting its
    bottleneck value. For plain CG runs the column activities are returned
    directly.
    """
    if not state.families:
        if state.column_values is None:
            raise ValueError("no solved state to decompose")
        return [
            (r, float(v))
            for r, v in zip(state.columns, state.column_values)
            if v > tol
        ]
    out: list[tuple[Route, float]] = []
    for f, graph in enumerate(state.families):
        flow = state.flows[f].astype(float).copy()
        _check_conservation(graph, flow)
        guard = 0
        while True:
            src_out = graph.out_edges(graph.source)
            live = src_out[flow[src_out] > tol]
            if live.size == 0:
                break
            guard += 1
            if guard > graph.n_edges + 10:
                raise RuntimeError("flow decomposition failed to drain the flow")
            path = []
            v = graph.source
            while v != graph.sink:
                out_e = graph.out_edges(v)
                live_e = out_e[flow[out_e] > tol]
                if live_e.size == 0:
                    raise RuntimeError(f"flow stalls at vertex {v} of family {f}")
                e = int(live_e[np.argmax(flow[live_e])])
                path.append(e)
                v = int(graph.head[e])
            w = float(flow[path].min())
            flow[path] -= w
            out.append((column_of_path(graph, path), w))
    return out


def _check_conservation(graph: FamilyGraph, flow: np.ndarray, tol: float = 1e-6) -> None:
    for v in range(1, graph.sink):
        balance = flow[graph.out_edges(v)].sum() - flow[graph.in_edges(v)].sum()
        if abs(balance) > tol * (1.0 + flow.max(initial=0.0)):
            raise RuntimeError(
                f"flow conservation violated at vertex {v}: imbalance {balance:.3e}"
            )
