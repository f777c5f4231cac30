"""Topological heuristic pricing.

Draws uniform random total orders of the customers and, for each, finds the
minimum reduced-cost route consistent with that order. Order consistency
removes the no-revisit resource: the search becomes a plain shortest path on
the order's family graph with one capacity dimension, so it is exact within
the restricted route set. Up to ``max_tries`` orders are attempted before
pricing reports exhaustion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .family import Ordering, build_family_graph, shortest_route
from .instance import Instance
from .routes import Duals, Route

NEG_RC_TOL = 1e-6   # a column counts as improving only below -NEG_RC_TOL
DEFAULT_MAX_TRIES = 100


@dataclass(frozen=True)
class PricingResult:
    """Outcome of a pricing round.

    ``route`` is None when no improving column was found; ``reduced_cost``
    then holds the best (least) reduced cost seen across the attempts.
    """

    route: Optional[Route]
    reduced_cost: float
    orderings_tried: int

    @property
    def found(self) -> bool:
        return self.route is not None


def random_topological_order(n_customers: int, rng) -> Ordering:
    """Uniform random customer order (Fisher-Yates via numpy permutation)."""
    perm = rng.permutation(n_customers) + 1
    position = np.zeros(n_customers + 1, dtype=np.int64)
    position[perm] = np.arange(1, n_customers + 1)
    return Ordering(position=position)


def price_over_ordering(
    inst: Instance, duals: Duals, ordering: Ordering
) -> PricingResult:
    """Exact minimum reduced-cost route among routes consistent with the order."""
    graph = build_family_graph(inst, ordering)
    route, rc = shortest_route(graph, duals)
    return PricingResult(route=route, reduced_cost=rc, orderings_tried=1)


def heuristic_pricing(
    inst: Instance,
    duals: Duals,
    rng,
    max_tries: int = DEFAULT_MAX_TRIES,
    mode: str = "first",
) -> PricingResult:
    """Price over successive random orders.

    mode="first" returns the first route with reduced cost < -1e-6;
    mode="best" prices all ``max_tries`` orders and returns the best
    improving route. Either way, exhaustion (no improving route) is reported
    with route=None and the least reduced cost observed.
    """
    if max_tries < 1:
        raise ValueError("max_tries must be >= 1")
    if mode not in ("first", "best"):
        raise ValueError(f"unknown pricing mode {mode!r}")
    best_route = None
    best_rc = np.inf
    for attempt in range(1, max_tries + 1):
        ordering = random_topological_order(inst.n_customers, rng)
        result = price_over_ordering(inst, duals, ordering)
        if result.reduced_cost < best_rc:
            best_route, best_rc = result.route, result.reduced_cost
        if mode == "first" and result.reduced_cost < -NEG_RC_TOL:
            return PricingResult(
                route=result.route, reduced_cost=result.reduced_cost,
                orderings_tried=attempt,
            )
    if best_rc < -NEG_RC_TOL:
        return PricingResult(
            route=best_route, reduced_cost=float(best_rc), orderings_tried=max_tries
        )
    return PricingResult(
        route=None, reduced_cost=float(best_rc), orderings_tried=max_tries
    )
