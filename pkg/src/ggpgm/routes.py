"""Route (column) algebra: costs, coverage, reduced costs, feasibility.

A route is an ordered depot-to-depot visit sequence over distinct customers
whose total demand fits one vehicle. Routes are sequences, not sets: [a, b]
and [b, a] are distinct columns even when symmetric distances give them equal
cost. Empty routes are excluded everywhere.

This module also carries the exhaustive small-instance oracles
(:func:`enumerate_all_routes`, :func:`solve_full_mp`) used to certify the
solvers on instances small enough to enumerate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .instance import Instance
from .lp import LpBuilder, LpProblem, LpSolution, solve_lp

ENUMERATION_LIMIT = 1_000_000
MAX_ENUMERABLE_CUSTOMERS = 12


class EnumerationGuardError(RuntimeError):
    """Raised when an instance is too large for exhaustive route enumeration."""


@dataclass(frozen=True)
class Route:
    """A feasible route: distinct customer visits plus its integer tour cost."""

    visits: tuple[int, ...]
    cost: int

    @property
    def covered(self) -> frozenset[int]:
        return frozenset(self.visits)

    def __len__(self) -> int:
        return len(self.visits)


@dataclass(frozen=True)
class Duals:
    """Covering-row duals: one per customer (pi[u], pi[0] unused) plus the
    fleet-row dual pi0. All values nonnegative up to roundoff."""

    pi: np.ndarray
    pi0: float

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.float64).copy()
        pi[0] = 0.0
        if pi.min() < -1e-12 or self.pi0 < -1e-12:
            raise ValueError("covering duals must be nonnegative")
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)

    @classmethod
    def zero(cls, n_customers: int) -> "Duals":
        return cls(pi=np.zeros(n_customers + 1), pi0=0.0)

    @classmethod
    def uniform(cls, n_customers: int, value: float, pi0: float = 0.0) -> "Duals":
        return cls(pi=np.full(n_customers + 1, float(value)), pi0=pi0)


def route_cost(inst: Instance, visits: Iterable[int]) -> int:
    """Depot-to-depot tour length of a visit sequence (0 for no visits)."""
    seq = list(visits)
    if not seq:
        return 0
    for u in seq:
        if not 1 <= u <= inst.n_customers:
            raise ValueError(f"unknown customer id {u}")
    total = inst.dist[0, seq[0]]
    for a, b in zip(seq, seq[1:]):
        total += inst.dist[a, b]
    total += inst.dist[seq[-1], 0]
    return int(total)


def make_route(inst: Instance, visits: Iterable[int]) -> Route:
    seq = tuple(visits)
    violation = check_route_feasible(inst, seq)
    if violation is not None:
        raise ValueError(violation)
    return Route(visits=seq, cost=route_cost(inst, seq))


def reduced_cost(route: Route, duals: Duals) -> float:
    """Route cost minus covered-customer duals plus the fleet dual."""
    return float(route.cost - duals.pi[list(route.visits)].sum() + duals.pi0)


def check_route_feasible(inst: Instance, visits: Iterable[int]) -> Optional[str]:
    """None when the sequence is a feasible route, else the first violation."""
    seq = list(visits)
    seen = set()
    load = 0
    for u in seq:
        if not 1 <= u <= inst.n_customers:
            return f"unknown customer id {u}"
        if u in seen:
            return f"customer {u} visited twice"
        seen.add(u)
        load += int(inst.demand[u])
    if load > inst.capacity:
        return f"demand {load} exceeds capacity {inst.capacity}"
    return None


def count_all_routes(inst: Instance) -> int:
    """Number of feasible routes, by capacity-bounded permutation counting."""
    n = inst.n_customers
    if np.any(inst.demand[1:] != inst.demand[1]):
        # Non-uniform demand: count by DFS without materializing routes.
        return sum(1 for _ in _iter_routes(inst, limit=None))
    per = int(inst.demand[1])
    kmax = min(n, inst.capacity // per)
    total = 0
    term = 1
    for k in range(1, kmax + 1):
        term *= n - k + 1
        total += term
    return total


def _iter_routes(inst: Instance, limit: Optional[int]):
    n = inst.n_customers
    demand = inst.demand
    cap = inst.capacity
    stack: list[int] = []
    used = [False] * (n + 1)
    count = 0

    def rec(load: int):
        nonlocal count
        for u in range(1, n + 1):
            if used[u] or load + demand[u] > cap:
                continue
            used[u] = True
            stack.append(u)
            count += 1
            if limit is not None and count > limit:
                raise EnumerationGuardError(
                    f"more than {limit} feasible routes; enumeration refused"
                )
            yield tuple(stack)
            yield from rec(load + int(demand[u]))
            stack.pop()
            used[u] = False

    yield from rec(0)


def enumerate_all_routes(inst: Instance) -> list[Route]:
    """Every feasible route exactly once (a sequence and its reverse both count).

    Guarded: refuses instances with more than 12 customers or more than 10^6
    feasible routes.
    """
    if inst.n_customers > MAX_ENUMERABLE_CUSTOMERS:
        raise EnumerationGuardError(
            f"{inst.n_customers} customers exceeds the enumeration limit of "
            f"{MAX_ENUMERABLE_CUSTOMERS}"
        )
    if count_all_routes(inst) > ENUMERATION_LIMIT:
        raise EnumerationGuardError("route count exceeds enumeration limit")
    return [
        Route(visits=v, cost=route_cost(inst, v))
        for v in _iter_routes(inst, limit=ENUMERATION_LIMIT)
    ]


def min_reduced_cost_route(
    inst: Instance, duals: Duals, routes: Optional[list[Route]] = None
) -> tuple[Route, float]:
    """Exact pricing oracle: the minimum-reduced-cost route over all of them."""
    if routes is None:
        routes = enumerate_all_routes(inst)
    best = None
    best_rc = np.inf
    for r in routes:
        rc = reduced_cost(r, duals)
        if rc < best_rc:
            best, best_rc = r, rc
    assert best is not None
    return best, float(best_rc)


def full_mp_problem(inst: Instance, routes: list[Route]) -> LpProblem:
    """Set-covering LP over an explicit route list: cover every customer at
    least once using at most the fleet size."""
    n = inst.n_customers
    builder = LpBuilder(len(routes), objective=[r.cost for r in routes])
    rows, cols = [], []
    for j, r in enumerate(routes):
        for u in r.visits:
            rows.append(u - 1)
            cols.append(j)
    builder.add_ge_block(rows, cols, np.ones(len(rows)), np.ones(n))
    builder.add_ge_row(
        np.arange(len(routes)), -np.ones(len(routes)), -float(inst.n_vehicles)
    )
    return builder.build()


def solve_full_mp(inst: Instance, backend: str = "auto") -> LpSolution:
    """Optimal LP value over *all* feasible routes (small instances only)."""
    routes = enumerate_all_routes(inst)
    return solve_lp(full_mp_problem(inst, routes), backend=backend)
