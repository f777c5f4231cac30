"""Experiment harness: CSV iteration logs, batch runs and summaries.

Log files carry one row per outer iteration with the schema in
``CSV_COLUMNS`` (comparison runs append the baseline timing columns).
Numbers are written with 9 significant digits and a ``.`` decimal separator,
which round-trips exactly through float parsing, so emit -> parse -> emit is
byte-identical on the data rows.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .gg import GGConfig, IterationRecord, SolverState, cg_solve, gg_solve
from .instance import Instance, generate_instance

CSV_COLUMNS = [
    "iteration",
    "wall_time_s",
    "rmp_objective",
    "pricing_reduced_cost",
    "n_families",
    "n_active_edges",
    "rmp_time_s",
    "mu_time_s",
    "lp_time_s",
    "pricing_time_s",
    "orderings_tried",
]
COMPARE_COLUMNS = CSV_COLUMNS + ["bl_rmp_time_s", "bl_objective"]
_INT_COLUMNS = {"iteration", "n_families", "n_active_edges", "orderings_tried"}

SUMMARY_COLUMNS = [
    "instance_seed",
    "algorithm",
    "status",
    "objective",
    "iterations",
    "n_families",
    "total_time_s",
    "artificial_max",
]

ALGORITHMS = ("cg", "gg-bl", "gg-pgm")


def _fmt(value) -> str:
    if isinstance(value, (int,)):
        return str(value)
    if value != value:  # nan
        return "nan"
    return format(float(value), ".9g")


def write_log_csv(records: list[IterationRecord], path, compare: bool = False) -> None:
    columns = COMPARE_COLUMNS if compare else CSV_COLUMNS
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for rec in records:
            writer.writerow(
                [
                    str(getattr(rec, c)) if c in _INT_COLUMNS else _fmt(getattr(rec, c))
                    for c in columns
                ]
            )


def read_log_csv(path) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            row = {}
            for key, value in raw.items():
                row[key] = int(value) if key in _INT_COLUMNS else float(value)
            rows.append(row)
    return rows


def rows_to_records(rows: list[dict]) -> list[IterationRecord]:
    out = []
    for row in rows:
        defaults = {"bl_rmp_time_s": float("nan"), "bl_objective": float("nan")}
        defaults.update(row)
        out.append(IterationRecord(**defaults))
    return out


def status_from_log(rows: list[dict], max_tries: int) -> str:
    """The converged-approx signature: pricing exhausted its full budget with
    no improving column on the final row."""
    if not rows:
        return "unknown"
    last = rows[-1]
    if (
        last["pricing_reduced_cost"] >= -1e-6
        and last["orderings_tried"] == max_tries
    ):
        return "converged-approx"
    return "time-limit"


@dataclass
class ExperimentConfig:
    """Batch protocol: each instance seed is solved by each algorithm."""

    seeds: list[int]
    algorithms: list[str]
    out_dir: str
    n_customers: int = 150
    grid_size: float = 50.0
    capacity: int = 6
    n_vehicles: int = 40
    demand: int = 1
    time_limit_s: float = 3000.0
    max_pricing_tries: int = 100
    epsilon_edge: float = 1e-3
    lp_backend: str = "auto"
    pricing_mode: str = "first"
    mu_parallel: bool = False
    compare_bl: bool = False

    def __post_init__(self):
        for algo in self.algorithms:
            if algo not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {algo!r}")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls(**doc)


def solver_config(cfg: ExperimentConfig, algo: str, seed: int) -> GGConfig:
    return GGConfig(
        rmp_strategy="BL" if algo == "gg-bl" else "PGM",
        time_limit_s=cfg.time_limit_s,
        max_pricing_tries=cfg.max_pricing_tries,
        epsilon_edge=cfg.epsilon_edge,
        seed=seed,
        lp_backend=cfg.lp_backend,
        pricing_mode=cfg.pricing_mode,
        mu_parallel=cfg.mu_parallel,
        compare_bl=cfg.compare_bl and algo == "gg-pgm",
    )


def run_single(inst: Instance, algo: str, config: GGConfig) -> SolverState:
    if algo == "cg":
        return cg_solve(inst, config)
    return gg_solve(inst, config)


def summary_row(state: SolverState, seed: int, algo: str) -> dict:
    return {
        "instance_seed": seed,
        "algorithm": algo,
        "status": state.status,
        "objective": state.objective,
        "iterations": state.iteration,
        "n_families": len(state.families) if state.families else len(state.columns),
        "total_time_s": state.elapsed_s,
        "artificial_max": state.artificial_max,
    }


def write_summary_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row[c] if isinstance(row[c], str) else (
                        str(row[c]) if isinstance(row[c], int) else _fmt(row[c])
                    )
                    for c in SUMMARY_COLUMNS
                ]
            )


def run_experiment(cfg: ExperimentConfig) -> tuple[list[Path], Path]:
    """Solve every (seed, algorithm) pair; one CSV per run plus a summary."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_paths: list[Path] = []
    summary: list[dict] = []
    for seed in cfg.seeds:
        inst = generate_instance(
            seed=seed,
            n_customers=cfg.n_customers,
            grid_size=cfg.grid_size,
            capacity=cfg.capacity,
            n_vehicles=cfg.n_vehicles,
            demand=cfg.demand,
        )
        for algo in cfg.algorithms:
            config = solver_config(cfg, algo, seed)
            state = run_single(inst, algo, config)
            log_path = out_dir / f"seed{seed}_{algo}.csv"
            write_log_csv(state.log, log_path, compare=config.compare_bl)
            log_paths.append(log_path)
            summary.append(summary_row(state, seed, algo))
    summary_path = out_dir / "summary.csv"
    write_summary_csv(summary, summary_path)
    return log_paths, summary_path
