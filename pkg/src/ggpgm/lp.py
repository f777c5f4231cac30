"""Sparse linear programs with covering (>=) and flow (=) rows, plus solvers.

Problems are minimization over nonnegative variables:

    min c'x   s.t.   A_ge x >= b_ge,   A_eq x == b_eq,   x >= 0.

Two interchangeable backends sit behind :func:`solve_lp`:

* ``bundled`` -- a self-contained two-phase revised simplex on a dense basis
  inverse. Deterministic, returns an explicit basis usable as a warm hint,
  intended for problems up to a few hundred rows.
* ``highs`` -- scipy's HiGHS interface for large instances. Ignores warm
  hints (scipy exposes none).

``auto`` picks the bundled solver for small problems and HiGHS otherwise.
Every optimal solution carries nonnegative duals for the >= rows and free
duals for the == rows; :func:`check_solution` certifies feasibility,
complementary slackness and strong duality against the tolerances below.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

FEAS_TOL = 1e-9   # relative primal feasibility, per row
OPT_TOL = 1e-7    # relative optimality: duality gap, dual feasibility, slackness

# Thresholds for backend="auto": the bundled solver only pays off on tiny
# problems; HiGHS takes everything else.
_AUTO_MAX_ROWS = 80
_AUTO_MAX_VARS = 2000


class LpError(RuntimeError):
    """Raised for malformed problems or solver breakdowns."""


@dataclass(frozen=True)
class LpProblem:
    """Immutable sparse LP in >=/== form with variable lower bounds at zero."""

    objective: np.ndarray
    a_ge: sparse.csr_matrix
    b_ge: np.ndarray
    a_eq: sparse.csr_matrix
    b_eq: np.ndarray

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def n_ge(self) -> int:
        return self.b_ge.shape[0]

    @property
    def n_eq(self) -> int:
        return self.b_eq.shape[0]

    def ge_row_entries(self, i: int) -> list[tuple[int, float]]:
        row = self.a_ge.getrow(i)
        return list(zip(row.indices.tolist(), row.data.tolist()))

    def eq_row_entries(self, i: int) -> list[tuple[int, float]]:
        row = self.a_eq.getrow(i)
        return list(zip(row.indices.tolist(), row.data.tolist()))


class LpBuilder:
    """Accumulates >= and == rows as sparse triplets, then builds an LpProblem.

    Rows may be added one at a time (``add_ge_row``) or as vectorized triplet
    blocks (``add_ge_block``); the latter is what the RMP assembly uses.
    """

    def __init__(self, n_vars: int, objective=None):
        if n_vars < 1:
            raise LpError("problem needs at least one variable")
        self.n_vars = n_vars
        self._obj = np.zeros(n_vars, dtype=np.float64)
        if objective is not None:
            obj = np.asarray(objective, dtype=np.float64)
            if obj.shape != (n_vars,):
                raise LpError("objective length mismatch")
            self._obj[:] = obj
        self._blocks = {"ge": [], "eq": []}   # (rows, cols, vals) triplet arrays
        self._rhs = {"ge": [], "eq": []}
        self._n_rows = {"ge": 0, "eq": 0}

    def set_objective(self, col: int, value: float) -> None:
        self._obj[col] = value

    def _add_row(self, kind: str, cols, vals, rhs: float) -> int:
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if cols.shape != vals.shape or cols.ndim != 1:
            raise LpError("cols and vals must be matching 1-d sequences")
        i = self._n_rows[kind]
        self._blocks[kind].append((np.full(cols.shape, i, dtype=np.int64), cols, vals))
        self._rhs[kind].append(np.array([rhs], dtype=np.float64))
        self._n_rows[kind] += 1
        return i

    def add_ge_row(self, cols, vals, rhs: float) -> int:
        return self._add_row("ge", cols, vals, rhs)

    def add_eq_row(self, cols, vals, rhs: float) -> int:
        return self._add_row("eq", cols, vals, rhs)

    def _add_block(self, kind: str, rows, cols, vals, rhs) -> None:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        rhs = np.asarray(rhs, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise LpError("triplet arrays must have identical shape")
        if rows.size and (rows.min() < 0 or rows.max() >= rhs.shape[0]):
            raise LpError("block row index out of range for its rhs")
        base = self._n_rows[kind]
        self._blocks[kind].append((rows + base, cols, vals))
        self._rhs[kind].append(rhs)
        self._n_rows[kind] += rhs.shape[0]

    def add_ge_block(self, rows, cols, vals, rhs) -> None:
        self._add_block("ge", rows, cols, vals, rhs)

    def add_eq_block(self, rows, cols, vals, rhs) -> None:
        self._add_block("eq", rows, cols, vals, rhs)

    def _assemble(self, kind: str) -> tuple[sparse.csr_matrix, np.ndarray]:
        n_rows = self._n_rows[kind]
        if self._blocks[kind]:
            rows = np.concatenate([b[0] for b in self._blocks[kind]])
            cols = np.concatenate([b[1] for b in self._blocks[kind]])
            vals = np.concatenate([b[2] for b in self._blocks[kind]])
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            vals = np.zeros(0, dtype=np.float64)
        if cols.size:
            if cols.min() < 0 or cols.max() >= self.n_vars:
                raise LpError("variable index out of range")
            keys = rows * self.n_vars + cols
            if np.unique(keys).size != keys.size:
                raise LpError(f"duplicate (row, var) coefficient in {kind} rows")
        mat = sparse.csr_matrix(
            (vals, (rows, cols)), shape=(n_rows, self.n_vars), dtype=np.float64
        )
        rhs = (
            np.concatenate(self._rhs[kind])
            if self._rhs[kind]
            else np.zeros(0, dtype=np.float64)
        )
        return mat, rhs

    def build(self) -> LpProblem:
        a_ge, b_ge = self._assemble("ge")
        a_eq, b_eq = self._assemble("eq")
        return LpProblem(
            objective=self._obj.copy(), a_ge=a_ge, b_ge=b_ge, a_eq=a_eq, b_eq=b_eq
        )


@dataclass
class LpSolution:
    """Solver output: status, primal point, row duals and certified tolerances."""

    status: str                       # optimal | infeasible | unbounded | iteration-limit
    primal: np.ndarray
    duals_ge: np.ndarray
    duals_eq: np.ndarray
    objective: float
    feas_tol: float = FEAS_TOL
    opt_tol: float = OPT_TOL
    basis: Optional[np.ndarray] = None    # bundled backend only; usable as warm hint
    iterations: int = 0
    backend: str = ""


@dataclass
class ResidualReport:
    """Largest per-invariant residuals of a (problem, solution) pair."""

    ge_violation: float
    eq_violation: float
    bound_violation: float
    dual_negativity: float
    dual_infeasibility: float
    complementarity: float
    duality_gap: float

    def ok(self, feas_tol: float = FEAS_TOL, opt_tol: float = OPT_TOL) -> bool:
        return (
            self.ge_violation <= feas_tol
            and self.eq_violation <= feas_tol
            and self.bound_violation <= feas_tol
            and self.dual_negativity <= 1e-12
            and self.dual_infeasibility <= opt_tol
            and self.complementarity <= opt_tol
            and self.duality_gap <= opt_tol
        )


def check_solution(problem: LpProblem, sol: LpSolution) -> ResidualReport:
    """Residuals of primal/dual feasibility, slackness and strong duality.

    All residuals are relative: row residuals are scaled by 1 + |rhs|, dual
    feasibility and slackness by 1 + |c_j|, and the gap by 1 + |objective|.
    """
    x = np.asarray(sol.primal, dtype=np.float64)
    if x.shape != (problem.n_vars,):
        raise LpError("solution dimension mismatch")
    c = problem.objective
    slack_ge = problem.a_ge @ x - problem.b_ge
    ge_viol = float(np.max(-slack_ge / (1.0 + np.abs(problem.b_ge)), initial=0.0))
    res_eq = problem.a_eq @ x - problem.b_eq
    eq_viol = float(np.max(np.abs(res_eq) / (1.0 + np.abs(problem.b_eq)), initial=0.0))
    bound_viol = float(max(0.0, -x.min(initial=0.0)))

    pi = np.asarray(sol.duals_ge, dtype=np.float64)
    sigma = np.asarray(sol.duals_eq, dtype=np.float64)
    dual_neg = float(np.max(-pi, initial=0.0))
    rc = c - problem.a_ge.T @ pi - problem.a_eq.T @ sigma
    scale_c = 1.0 + np.abs(c)
    dual_infeas = float(np.max(-rc / scale_c, initial=0.0))
    comp_var = float(np.max(np.abs(x * rc) / scale_c, initial=0.0))
    comp_row = float(
        np.max(np.abs(pi * slack_ge) / (1.0 + np.abs(problem.b_ge)), initial=0.0)
    )
    primal_obj = float(c @ x)
    dual_obj = float(problem.b_ge @ pi + problem.b_eq @ sigma)
    gap = abs(primal_obj - dual_obj) / (1.0 + abs(primal_obj))
    return ResidualReport(
        ge_violation=ge_viol,
        eq_violation=eq_viol,
        bound_violation=bound_viol,
        dual_negativity=dual_neg,
        dual_infeasibility=dual_infeas,
        complementarity=max(comp_var, comp_row),
        duality_gap=gap,
    )


def solve_lp(
    problem: LpProblem,
    warm_hint: Optional[np.ndarray] = None,
    backend: str = "auto",
) -> LpSolution:
    """Solve an LpProblem, returning primal values, duals and an objective.

    ``warm_hint`` is a basis (variable-index array) from a previous bundled
    solve of a problem whose leading variables coincide with this one; it is
    validated and silently discarded if unusable.
    """
    if problem.n_vars < 1:
        raise LpError("problem needs at least one variable")
    if backend == "auto":
        m = problem.n_ge + problem.n_eq
        backend = (
            "bundled"
            if (m <= _AUTO_MAX_ROWS and problem.n_vars <= _AUTO_MAX_VARS)
            else "highs"
        )
    if backend == "bundled":
        return _solve_bundled(problem, warm_hint)
    if backend == "highs":
        return _solve_highs(problem)
    raise LpError(f"unknown LP backend {backend!r}")


# ---------------------------------------------------------------------------
# HiGHS backend


def _solve_highs(problem: LpProblem) -> LpSolution:
    res = linprog(
        c=problem.objective,
        A_ub=-problem.a_ge if problem.n_ge else None,
        b_ub=-problem.b_ge if problem.n_ge else None,
        A_eq=problem.a_eq if problem.n_eq else None,
        b_eq=problem.b_eq if problem.n_eq else None,
        bounds=(0, None),
        method="highs",
        options={
            "primal_feasibility_tolerance": 1e-9,
            "dual_feasibility_tolerance": 1e-9,
        },
    )
    status = {0: "optimal", 1: "iteration-limit", 2: "infeasible", 3: "unbounded"}.get(
        res.status
    )
    if status is None:
        raise LpError(f"HiGHS reported numerical difficulties: {res.message}")
    if status != "optimal":
        return LpSolution(
            status=status,
            primal=np.zeros(problem.n_vars),
            duals_ge=np.zeros(problem.n_ge),
            duals_eq=np.zeros(problem.n_eq),
            objective=float("nan"),
            backend="highs",
            iterations=int(getattr(res, "nit", 0) or 0),
        )
    pi = -res.ineqlin.marginals if problem.n_ge else np.zeros(0)
    sigma = np.asarray(res.eqlin.marginals) if problem.n_eq else np.zeros(0)
    pi = _clamp_ge_duals(pi)
    return LpSolution(
        status="optimal",
        primal=np.asarray(res.x, dtype=np.float64),
        duals_ge=pi,
        duals_eq=np.asarray(sigma, dtype=np.float64),
        objective=float(res.fun),
        backend="highs",
        iterations=int(getattr(res, "nit", 0) or 0),
    )


def _clamp_ge_duals(pi: np.ndarray) -> np.ndarray:
    pi = np.asarray(pi, dtype=np.float64).copy()
    if pi.size and pi.min() < -1e-6:
        raise LpError(f"covering-row dual below tolerance: {pi.min():.3e}")
    np.maximum(pi, 0.0, out=pi)
    return pi


# ---------------------------------------------------------------------------
# Bundled revised simplex

_PIVOT_TOL = 1e-10
_RC_TOL = 1e-9
_REFACTOR_EVERY = 100


class _Simplex:
    """Two-phase revised simplex over [A_ge -I; A_eq 0] with dense basis inverse.

    Columns are ordered: original variables, surplus variables for >= rows,
    then one artificial per row. Right-hand sides are made nonnegative by row
    negation (recorded in ``row_sign`` for dual recovery). Dantzig pricing
    switches to Bland's rule after 3*m consecutive degenerate pivots.
    """

    def __init__(self, problem: LpProblem):
        self.problem = problem
        n, n_ge, n_eq = problem.n_vars, problem.n_ge, problem.n_eq
        m = n_ge + n_eq
        self.m = m
        self.n_real = n + n_ge          # original + surplus
        surplus = sparse.csr_matrix(
            (-np.ones(n_ge), (np.arange(n_ge), np.arange(n_ge))),
            shape=(m, n_ge),
        )
        body = sparse.vstack(
            [problem.a_ge, problem.a_eq], format="csr"
        ) if n_eq else problem.a_ge.copy()
        b = np.concatenate([problem.b_ge, problem.b_eq])
        a = sparse.hstack([body, surplus], format="csr")
        self.row_sign = np.where(b < 0, -1.0, 1.0)
        a = sparse.diags(self.row_sign) @ a
        self.b = b * self.row_sign
        art = sparse.identity(m, format="csr")
        self.a = sparse.hstack([a, art], format="csc")
        self.a_t = self.a.T.tocsr()
        self.n_total = self.n_real + m
        self.c_real = np.concatenate([problem.objective, np.zeros(n_ge)])
        self.iterations = 0
        self.max_iterations = max(5000, 80 * m + 20 * self.n_real)

    def column(self, j: int) -> np.ndarray:
        start, end = self.a.indptr[j], self.a.indptr[j + 1]
        col = np.zeros(self.m)
        col[self.a.indices[start:end]] = self.a.data[start:end]
        return col

    def _basis_matrix(self, basis: np.ndarray) -> np.ndarray:
        return np.asarray(self.a[:, basis].todense())

    def _refactor(self, basis: np.ndarray):
        bmat = self._basis_matrix(basis)
        try:
            binv = np.linalg.inv(bmat)
        except np.linalg.LinAlgError as exc:
            raise LpError("singular basis during refactorization") from exc
        return binv, binv @ self.b

    def _iterate(self, basis, binv, xb, costs, allowed):
        """Run simplex pivots until optimal/unbounded/limit for given costs.

        Returns (status, basis, binv, xb) with status in
        {"optimal", "unbounded", "iteration-limit"}.
        """
        m = self.m
        degenerate_run = 0
        bland = False
        since_refactor = 0
        is_art = np.zeros(self.n_total, dtype=bool)
        is_art[self.n_real:] = True
        while True:
            if self.iterations >= self.max_iterations:
                return "iteration-limit", basis, binv, xb
            self.iterations += 1
            y = binv.T @ costs[basis]
            rc = costs - self.a_t @ y
            rc[basis] = 0.0
            cand = np.where(allowed & (rc < -_RC_TOL))[0]
            if cand.size == 0:
                return "optimal", basis, binv, xb
            j = int(cand[0]) if bland else int(cand[np.argmin(rc[cand])])
            d = binv @ self.column(j)
            # Basic artificials sitting at zero must not grow: force them out
            # on any nonzero pivot element before the regular ratio test.
            art_rows = np.where(
                is_art[basis] & (np.abs(d) > _PIVOT_TOL) & (xb <= 1e-11)
            )[0]
            if art_rows.size:
                r = int(art_rows[np.argmax(np.abs(d[art_rows]))])
                t = 0.0
            else:
                pos = np.where(d > _PIVOT_TOL)[0]
                if pos.size == 0:
                    return "unbounded", basis, binv, xb
                ratios = xb[pos] / d[pos]
                rmin = ratios.min()
                ties = pos[ratios <= rmin + 1e-12]
                if bland:
                    r = int(ties[np.argmin(basis[ties])])
                else:
                    r = int(ties[np.argmax(d[ties])])
                t = float(max(rmin, 0.0))
            if t <= 1e-12:
                degenerate_run += 1
                if degenerate_run > 3 * m:
                    bland = True
            else:
                degenerate_run = 0
                bland = False
            xb = xb - t * d
            xb[r] = t
            np.maximum(xb, 0.0, out=xb)
            eta = d / d[r]
            brow = binv[r].copy()
            binv -= np.outer(eta, brow)
            binv[r] = brow / d[r]
            basis[r] = j
            since_refactor += 1
            if since_refactor >= _REFACTOR_EVERY:
                binv, xb = self._refactor(basis)
                np.maximum(xb, 0.0, out=xb)
                since_refactor = 0

    def solve(self, warm_hint: Optional[np.ndarray]):
        m = self.m
        if m == 0:
            return self._solve_unconstrained()
        basis = None
        if warm_hint is not None:
            basis = self._validate_hint(np.asarray(warm_hint, dtype=np.int64))
        if basis is None:
            basis, binv, xb, status = self._phase1()
            if status != "optimal":
                return status, basis, None, None
            if np.sum(xb[basis >= self.n_real]) > 1e-8 * (1.0 + np.abs(self.b).sum()):
                return "infeasible", basis, None, None
            binv, xb = self._refactor(basis)
            np.maximum(xb, 0.0, out=xb)
        else:
            binv, xb = self._refactor(basis)
            np.maximum(xb, 0.0, out=xb)
        allowed = np.ones(self.n_total, dtype=bool)
        allowed[self.n_real:] = False
        costs = np.concatenate([self.c_real, np.zeros(m)])
        status, basis, binv, xb = self._iterate(basis, binv, xb, costs, allowed)
        return status, basis, binv, xb

    def _solve_unconstrained(self):
        if np.any(self.c_real[: self.problem.n_vars] < -_RC_TOL):
            return "unbounded", np.zeros(0, dtype=np.int64), None, None
        return "optimal", np.zeros(0, dtype=np.int64), np.zeros((0, 0)), np.zeros(0)

    def _phase1(self):
        m = self.m
        basis = np.arange(self.n_real, self.n_total, dtype=np.int64)
        binv = np.identity(m)
        xb = self.b.copy()
        costs = np.concatenate([np.zeros(self.n_real), np.ones(m)])
        allowed = np.ones(self.n_total, dtype=bool)
        status, basis, binv, xb = self._iterate(basis, binv, xb, costs, allowed)
        return basis, binv, xb, status

    def _validate_hint(self, hint: np.ndarray) -> Optional[np.ndarray]:
        if hint.shape != (self.m,):
            return None
        if hint.min() < 0 or hint.max() >= self.n_real:
            return None
        if np.unique(hint).size != self.m:
            return None
        try:
            bmat = self._basis_matrix(hint)
            xb = np.linalg.solve(bmat, self.b)
        except np.linalg.LinAlgError:
            return None
        if xb.min() < -1e-9 * (1.0 + np.abs(self.b).max()):
            return None
        return hint.copy()

    def extract(self, status, basis, binv, xb) -> LpSolution:
        problem = self.problem
        if status != "optimal":
            return LpSolution(
                status=status,
                primal=np.zeros(problem.n_vars),
                duals_ge=np.zeros(problem.n_ge),
                duals_eq=np.zeros(problem.n_eq),
                objective=float("nan"),
                backend="bundled",
                iterations=self.iterations,
            )
        if self.m == 0:
            x = np.zeros(problem.n_vars)
            return LpSolution(
                status="optimal",
                primal=x,
                duals_ge=np.zeros(0),
                duals_eq=np.zeros(0),
                objective=float(problem.objective @ x),
                backend="bundled",
                iterations=self.iterations,
            )
        # Recompute the basic point and duals from a fresh factorization.
        bmat = self._basis_matrix(basis)
        xb = np.linalg.solve(bmat, self.b)
        np.maximum(xb, 0.0, out=xb)
        costs = np.concatenate([self.c_real, np.zeros(self.m)])
        y = np.linalg.solve(bmat.T, costs[basis])
        y = y * self.row_sign
        x = np.zeros(self.n_total)
        x[basis] = xb
        primal = x[: problem.n_vars]
        pi = _clamp_ge_duals(y[: problem.n_ge])
        sigma = y[problem.n_ge:]
        return LpSolution(
            status="optimal",
            primal=primal,
            duals_ge=pi,
            duals_eq=sigma,
            objective=float(problem.objective @ primal),
            basis=basis.copy(),
            backend="bundled",
            iterations=self.iterations,
        )


def _solve_bundled(problem: LpProblem, warm_hint: Optional[np.ndarray]) -> LpSolution:
    solver = _Simplex(problem)
    status, basis, binv, xb = solver.solve(warm_hint)
    return solver.extract(status, basis, binv, xb)


# ---------------------------------------------------------------------------
# Debug dump


def dump_lp(problem: LpProblem, path) -> None:
    """Write the problem in LP text format (minimize / subject to / bounds)."""
    lines = ["Minimize", " obj: " + _lincomb(np.arange(problem.n_vars), problem.objective)]
    lines.append("Subject To")
    for i in range(problem.n_ge):
        entries = problem.ge_row_entries(i)
        cols = [e[0] for e in entries]
        vals = [e[1] for e in entries]
        lines.append(f" g{i}: " + _lincomb(cols, vals) + f" >= {problem.b_ge[i]:.12g}")
    for i in range(problem.n_eq):
        entries = problem.eq_row_entries(i)
        cols = [e[0] for e in entries]
        vals = [e[1] for e in entries]
        lines.append(f" e{i}: " + _lincomb(cols, vals) + f" = {problem.b_eq[i]:.12g}")
    lines += ["Bounds", " 0 <= x", "End", ""]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))


def _lincomb(cols: Sequence[int], vals) -> str:
    terms = []
    for c, v in zip(cols, vals):
        if v == 0:
            continue
        sign = "- " if v < 0 else ("+ " if terms else "")
        terms.append(f"{sign}{abs(v):.12g} x{c}")
    return " ".join(terms) if terms else "0 x0"
