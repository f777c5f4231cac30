"""Command line front end.

Subcommands:
  gen          generate a random instance file
  solve        run one algorithm on one instance, writing an iteration log
  compare-rmp  run the restricted-edge solver while timing a baseline
               re-solve of every iteration's full master on the same families
  plot         render SVG figures from iteration logs
  experiment   batch protocol from a JSON config (seeds x algorithms)
"""

from __future__ import annotations

import argparse
import sys

from . import bench
from .gg import GGConfig
from .instance import generate_instance, load_instance, save_instance
from .plots import emit_plots


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--time-limit", type=float, default=3000.0,
                   help="solver time budget in seconds (default 3000)")
    p.add_argument("--seed", type=int, default=0, help="solver RNG seed")
    p.add_argument("--epsilon", type=float, default=1e-3,
                   help="edge-selection slack (default 1e-3)")
    p.add_argument("--max-pricing-tries", type=int, default=100,
                   help="random orders per pricing round (default 100)")
    p.add_argument("--pricing-mode", choices=["first", "best"], default="first")
    p.add_argument("--mu-parallel", choices=["on", "off"], default="off",
                   help="parallel per-family sweeps (workers capped by GGPGM_THREADS)")
    p.add_argument("--lp-backend", choices=["auto", "bundled", "highs"], default="auto")
    p.add_argument("--dump-lp", metavar="DIR", default=None,
                   help="write each master LP in text form into DIR")
    p.add_argument("--dump-graphs", metavar="DIR", default=None,
                   help="write each family graph as a text listing into DIR")
    p.add_argument("--log", required=True, help="output CSV log path")


def _solver_config(args, strategy: str, compare: bool = False) -> GGConfig:
    return GGConfig(
        rmp_strategy=strategy,
        time_limit_s=args.time_limit,
        max_pricing_tries=args.max_pricing_tries,
        epsilon_edge=args.epsilon,
        seed=args.seed,
        lp_backend=args.lp_backend,
        pricing_mode=args.pricing_mode,
        mu_parallel=args.mu_parallel == "on",
        compare_bl=compare,
        dump_lp_dir=args.dump_lp,
        dump_graphs_dir=args.dump_graphs,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ggpgm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a random instance")
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--n", type=int, default=150, help="number of customers")
    p_gen.add_argument("--grid", type=float, default=50.0, help="square side length")
    p_gen.add_argument("--capacity", type=int, default=6)
    p_gen.add_argument("--vehicles", type=int, default=40)
    p_gen.add_argument("--demand", type=int, default=1)
    p_gen.add_argument("--out", required=True)

    p_solve = sub.add_parser("solve", help="run one algorithm on an instance")
    p_solve.add_argument("--instance", required=True)
    p_solve.add_argument("--algo", choices=bench.ALGORITHMS, required=True)
    _add_solver_flags(p_solve)

    p_cmp = sub.add_parser(
        "compare-rmp",
        help="gg-pgm run with a timed baseline re-solve of each iteration's master",
    )
    p_cmp.add_argument("--instance", required=True)
    p_cmp.add_argument("--compare-every", type=int, default=1,
                       help="re-solve the baseline every k-th iteration")
    p_cmp.add_argument("--compare-cap", type=float, default=float("inf"),
                       help="stop baseline re-solves after one exceeds this many seconds")
    _add_solver_flags(p_cmp)

    p_plot = sub.add_parser("plot", help="render SVG figures from CSV logs")
    p_plot.add_argument("--logs", nargs="+", required=True)
    p_plot.add_argument("--out", required=True)

    p_exp = sub.add_parser("experiment", help="batch runs from a JSON config")
    p_exp.add_argument("--config", required=True)

    args = parser.parse_args(argv)

    if args.command == "gen":
        inst = generate_instance(
            seed=args.seed, n_customers=args.n, grid_size=args.grid,
            capacity=args.capacity, n_vehicles=args.vehicles, demand=args.demand,
        )
        save_instance(inst, args.out)
        print(f"wrote {args.out}: {inst.n_customers} customers, "
              f"capacity {inst.capacity}, {inst.n_vehicles} vehicles")
        return 0

    if args.command in ("solve", "compare-rmp"):
        inst = load_instance(args.instance)
        if args.command == "compare-rmp":
            algo = "gg-pgm"
            config = _solver_config(args, "PGM", compare=True)
            config.compare_every = args.compare_every
            config.compare_cap_s = args.compare_cap
        else:
            algo = args.algo
            strategy = "BL" if algo == "gg-bl" else "PGM"
            config = _solver_config(args, strategy)
        state = bench.run_single(inst, algo, config)
        bench.write_log_csv(state.log, args.log, compare=config.compare_bl)
        flag = " [artificials active]" if state.artificial_max > 1e-6 else ""
        print(
            f"{algo}: status={state.status} objective={state.objective:.9g} "
            f"iterations={state.iteration} time={state.elapsed_s:.2f}s{flag}"
        )
        return 0

    if args.command == "plot":
        written = emit_plots(args.logs, args.out)
        for path in written:
            print(f"wrote {path}")
        return 0

    if args.command == "experiment":
        cfg = bench.ExperimentConfig.from_file(args.config)
        logs, summary = bench.run_experiment(cfg)
        print(f"wrote {len(logs)} logs and {summary}")
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
