"""Expanded LP relaxations of the CVRP via column generation, family-graph
generation and restricted-edge master management."""

from .family import (
    FamilyGraph,
    Ordering,
    build_family_graph,
    build_ordering_from_route,
    column_of_path,
    contains_column,
    edge_weights,
)
from .gg import (
    GGConfig,
    InfeasibleInstanceError,
    IterationRecord,
    SolverState,
    assemble_cg_rmp,
    assemble_full_rmp,
    cg_solve,
    flow_decompose,
    gg_solve,
    initialize_gg,
)
from .instance import Instance, generate_instance, load_instance, save_instance
from .lp import LpBuilder, LpProblem, LpSolution, check_solution, solve_lp
from .pgm import (
    MuTable,
    PartialEdgeSets,
    assemble_restricted_rmp,
    compute_mu,
    hot_start_edges,
    pgm_solve_rmp,
    select_edges,
)
from .pricing import (
    PricingResult,
    heuristic_pricing,
    price_over_ordering,
    random_topological_order,
)
from .routes import (
    Duals,
    Route,
    check_route_feasible,
    enumerate_all_routes,
    reduced_cost,
    route_cost,
    solve_full_mp,
)

__version__ = "0.1.0"
