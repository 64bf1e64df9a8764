"""Least-cost diet linear program and a dense two-phase simplex solver.

The problem is::

    minimize    p . q
    subject to  A_lo q >= lower      (lower-bounded nutrients)
                A_up q <= upper      (upper-bounded nutrients)
                a_E  q  = energy
                q >= 0

Rows are scaled by their bound magnitude before solving, so constraints in
kcal, grams and micrograms all carry comparable residuals. Dantzig pricing is
used until a run of consecutive degenerate pivots, after which Bland's rule
takes over and guarantees termination.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
VACANT = "infeasible_by_vacancy"
NUMERICAL = "numerical_failure"


class LPInternalError(RuntimeError):
    """Raised for states that are impossible for a well-formed diet problem."""


@dataclass(frozen=True)
class SolverOptions:
    feasibility_tol: float = 1e-8
    optimality_tol: float = 1e-9
    pivot_tol: float = 1e-9
    # Dantzig pricing until this many consecutive degenerate pivots, then Bland
    bland_after_degenerate: int = 25
    max_pivots: int = 5000
    verify_tol: float = 1e-6


@dataclass(frozen=True, eq=False)
class DietProblem:
    item_ids: tuple[str, ...]
    prices: np.ndarray  # (n,)
    energy_content: np.ndarray  # (n,) kcal per kg
    lower_ids: tuple[str, ...]
    lower_matrix: np.ndarray  # (n_lower, n)
    lower: np.ndarray  # (n_lower,)
    upper_ids: tuple[str, ...]
    upper_matrix: np.ndarray  # (n_upper, n)
    upper: np.ndarray  # (n_upper,)
    energy: float

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def shape(self) -> tuple[int, int]:
        """(constraint rows, columns) of the nutrient block, energy row included."""
        return len(self.lower) + len(self.upper) + 1, self.n_items

    def constraint_matrix(self) -> np.ndarray:
        return np.vstack([self.lower_matrix, self.upper_matrix, self.energy_content[None, :]])

    def scaled(self, lower_factor: float = 1.0, upper_factor: float = 1.0,
               price_factor: float = 1.0) -> "DietProblem":
        return DietProblem(self.item_ids, self.prices * price_factor, self.energy_content,
                           self.lower_ids, self.lower_matrix, self.lower * lower_factor,
                           self.upper_ids, self.upper_matrix, self.upper * upper_factor,
                           self.energy)


@dataclass(frozen=True, eq=False)
class DietSolution:
    status: str
    quantities: np.ndarray | None = None  # kg/day, aligned with item_ids
    cost: float | None = None
    lower_duals: np.ndarray | None = None  # >= 0
    upper_duals: np.ndarray | None = None  # <= 0
    energy_dual: float | None = None
    phase1_value: float | None = None  # scaled infeasibility when infeasible
    farkas: np.ndarray | None = None  # phase-1 duals on the scaled rows
    pivots: int = 0
    certificate: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def build_problem(nutrient_ids: tuple[str, ...] | list[str], lower: np.ndarray,
                  upper: np.ndarray, energy: float, item_ids: list[str],
                  prices: np.ndarray, composition: np.ndarray,
                  energy_content: np.ndarray) -> DietProblem:
    """Assemble a diet LP from bounds and a market menu.

    ``lower``/``upper`` are aligned with ``nutrient_ids`` and hold NaN where a
    nutrient has no bound of that kind. ``composition`` is (items, nutrients)
    per kg; ``energy_content`` is kcal per kg. Columns are ordered by item id.
    An empty menu is allowed and solves to ``infeasible_by_vacancy``.
    """
    if energy <= 0:
        raise ValueError("energy requirement must be positive")
    prices = np.asarray(prices, dtype=float)
    composition = np.asarray(composition, dtype=float).reshape(len(item_ids), len(nutrient_ids))
    energy_content = np.asarray(energy_content, dtype=float)
    if np.any(prices <= 0):
        raise ValueError("menu prices must be positive")
    if np.any(energy_content <= 0):
        raise ValueError("every menu item needs positive energy content")
    order = sorted(range(len(item_ids)), key=lambda k: item_ids[k])
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    lo_idx = np.flatnonzero(~np.isnan(lower))
    hi_idx = np.flatnonzero(~np.isnan(upper))
    comp = composition[order]
    return DietProblem(
        tuple(item_ids[k] for k in order), prices[order], energy_content[order],
        tuple(nutrient_ids[j] for j in lo_idx), comp[:, lo_idx].T.copy(), lower[lo_idx],
        tuple(nutrient_ids[j] for j in hi_idx), comp[:, hi_idx].T.copy(), upper[hi_idx],
        float(energy))


def _row_scale(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    scale = np.abs(rhs).astype(float)
    zero = scale == 0
    if np.any(zero):
        fallback = np.abs(matrix[zero]).max(axis=1) if matrix.shape[1] else np.ones(zero.sum())
        scale[zero] = np.where(fallback > 0, fallback, 1.0)
    return scale


def solve(problem: DietProblem, options: SolverOptions | None = None) -> DietSolution:
    """Solve the diet LP with the two-phase simplex method."""
    opt = options or SolverOptions()
    n = problem.n_items
    if n == 0:
        return DietSolution(VACANT)

    # Standard form rows: sign * (a/d) q + slack_coef * s = sign * b/d
    A = problem.constraint_matrix()
    b = np.concatenate([problem.lower, problem.upper, [problem.energy]])
    n_lo, n_up = len(problem.lower), len(problem.upper)
    m = n_lo + n_up + 1
    d = _row_scale(A, b)
    A = A / d[:, None]
    b = b / d
    sign = np.ones(m)
    slack_coef = np.concatenate([-np.ones(n_lo), np.ones(n_up)])
    # a >= row with zero rhs is negated so its slack can start basic
    flip = np.zeros(m, dtype=bool)
    flip[:n_lo] = b[:n_lo] <= 0
    sign[flip] = -1.0
    n_slack = n_lo + n_up
    slack_sign = slack_coef * sign[:n_slack]
    needs_art = np.ones(m, dtype=bool)
    needs_art[:n_slack] = slack_sign < 0
    art_rows = np.flatnonzero(needs_art)
    n_art = len(art_rows)

    N = n + n_slack + n_art
    std = np.zeros((m, N))
    std[:, :n] = A * sign[:, None]
    std[np.arange(n_slack), n + np.arange(n_slack)] = slack_sign
    std[art_rows, n + n_slack + np.arange(n_art)] = 1.0
    rhs = b * sign

    basis = np.empty(m, dtype=np.int64)
    basis[:n_slack] = n + np.arange(n_slack)
    basis[art_rows] = n + n_slack + np.arange(n_art)

    T = np.zeros((m + 1, N + 1))
    T[:m, :N] = std
    T[:m, N] = rhs
    # phase-1 objective row: minimize sum of artificials
    T[m, :N] = -std[art_rows].sum(axis=0)
    T[m, n + n_slack:N] = 0.0
    T[m, N] = -rhs[art_rows].sum()

    eligible = np.ones(N, dtype=bool)
    eligible[n + n_slack:] = False  # artificials never re-enter
    pivots = 0

    status, pivots = _iterate(T, basis, eligible, opt, pivots, m, N)
    if status != OPTIMAL:
        return DietSolution(NUMERICAL, pivots=pivots, certificate={"reason": status})
    phase1 = -T[m, N]
    if phase1 > opt.feasibility_tol:
        y1 = _duals(std, basis, np.where(np.arange(N) >= n + n_slack, 1.0, 0.0), np.ones(m, bool))
        return DietSolution(INFEASIBLE, phase1_value=float(phase1), farkas=y1, pivots=pivots)

    # drive remaining (zero-level) artificials out of the basis
    active = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] >= n + n_slack:
            row = np.abs(T[i, :n + n_slack])
            k = int(np.argmax(row))
            if row[k] > opt.pivot_tol:
                _pivot(T, basis, i, k)
                pivots += 1
            else:
                active[i] = False  # redundant row

    # phase 2 on structural + slack columns
    keep = np.concatenate([np.flatnonzero(active), [m]])
    cols = np.concatenate([np.arange(n + n_slack), [N]])
    T = T[np.ix_(keep, cols)]
    basis = basis[active]
    m2 = len(basis)
    N2 = n + n_slack
    c = np.zeros(N2)
    c[:n] = problem.prices
    T[m2, :N2] = c - c[basis] @ T[:m2, :N2]
    T[m2, N2] = -c[basis] @ T[:m2, N2]
    eligible = np.ones(N2, dtype=bool)
    status, pivots = _iterate(T, basis, eligible, opt, pivots, m2, N2)
    if status == "unbounded":
        raise LPInternalError("diet LP reported unbounded despite positive prices")
    if status != OPTIMAL:
        return DietSolution(NUMERICAL, pivots=pivots, certificate={"reason": status})

    # refactor the final basis for clean primal and dual values
    Bmat = std[np.ix_(np.flatnonzero(active), basis)]
    try:
        cond = np.linalg.cond(Bmat)
        if not np.isfinite(cond) or cond > 1e12:
            return DietSolution(NUMERICAL, pivots=pivots,
                                certificate={"reason": "ill-conditioned basis", "cond": cond})
        xb = np.linalg.solve(Bmat, rhs[active])
    except np.linalg.LinAlgError:
        return DietSolution(NUMERICAL, pivots=pivots, certificate={"reason": "singular basis"})
    x = np.zeros(N2)
    x[basis] = xb
    x = np.maximum(x, 0.0)
    q = x[:n]
    cfull = np.zeros(N)
    cfull[:n] = problem.prices
    y_std = _duals(std, basis, cfull, active)
    y = y_std * sign / d
    sol = DietSolution(
        OPTIMAL, quantities=q, cost=float(problem.prices @ q),
        lower_duals=y[:n_lo], upper_duals=y[n_lo:n_lo + n_up], energy_dual=float(y[-1]),
        pivots=pivots)
    report = verify(problem, sol)
    sol.certificate.update(report)
    if report["max_violation"] > opt.verify_tol:
        return DietSolution(NUMERICAL, pivots=pivots,
                            certificate={"reason": "certificate failure", **report})
    return sol


def _duals(std: np.ndarray, basis: np.ndarray, c: np.ndarray, active: np.ndarray) -> np.ndarray:
    rows = np.flatnonzero(active)
    B = std[np.ix_(rows, basis)]
    y = np.zeros(std.shape[0])
    y[rows] = np.linalg.solve(B.T, c[basis])
    return y


@njit(cache=True)
def _pivot(T, basis, r, j):
    T[r] /= T[r, j]
    for i in range(T.shape[0]):
        if i != r:
            f = T[i, j]
            if f != 0.0:
                T[i] -= f * T[r]
    basis[r] = j


# status codes returned by the compiled loop
_DONE, _UNBOUNDED, _LIMIT = 0, 1, 2


@njit(cache=True)
def _simplex_loop(T, basis, eligible, m, N, pivots, max_pivots, opt_tol, piv_tol,
                  bland_after):
    degenerate = 0
    bland = False
    while True:
        if pivots >= max_pivots:
            return _LIMIT, pivots
        # entering column: most negative reduced cost, or lowest index under Bland
        j = -1
        best_rc = -opt_tol
        for k in range(N):
            if eligible[k] and T[m, k] < -opt_tol:
                if bland:
                    j = k
                    break
                if T[m, k] < best_rc:
                    best_rc = T[m, k]
                    j = k
        if j < 0:
            return _DONE, pivots
        # ratio test, ties to the smallest basic variable index
        r = -1
        best = np.inf
        for i in range(m):
            a = T[i, j]
            if a > piv_tol:
                ratio = max(T[i, N], 0.0) / a
                if ratio < best - 1e-12:
                    best = ratio
                    r = i
                elif ratio <= best + 1e-12 and basis[i] < basis[r]:
                    r = i
        if r < 0:
            return _UNBOUNDED, pivots
        if best <= 1e-12:
            degenerate += 1
        else:
            degenerate = 0
        if degenerate >= bland_after:
            bland = True
        _pivot(T, basis, r, j)
        pivots += 1


def _iterate(T, basis, eligible, opt: SolverOptions, pivots: int, m: int, N: int):
    code, pivots = _simplex_loop(T, basis, eligible, m, N, pivots, opt.max_pivots,
                                 opt.optimality_tol, opt.pivot_tol, opt.bland_after_degenerate)
    status = {_DONE: OPTIMAL, _UNBOUNDED: "unbounded", _LIMIT: "pivot limit"}[int(code)]
    return status, int(pivots)


def verify(problem: DietProblem, solution: DietSolution) -> dict:
    """Independent check of an optimal solution on the unscaled problem.

    Recomputes primal residuals, dual feasibility, complementary slackness
    and the duality gap. Residuals are relative to each row's bound
    magnitude; the gap is relative to the cost.
    """
    q = np.asarray(solution.quantities, dtype=float)
    p = problem.prices
    viol = {}
    lo_act = problem.lower_matrix @ q
    up_act = problem.upper_matrix @ q
    e_act = float(problem.energy_content @ q)
    lo_scale = np.maximum(np.abs(problem.lower), 1.0)
    up_scale = np.maximum(np.abs(problem.upper), 1.0)
    viol["lower"] = float(np.max(np.maximum(problem.lower - lo_act, 0) / lo_scale, initial=0.0))
    viol["upper"] = float(np.max(np.maximum(up_act - problem.upper, 0) / up_scale, initial=0.0))
    viol["energy"] = abs(e_act - problem.energy) / problem.energy
    viol["nonnegativity"] = float(np.max(np.maximum(-q, 0), initial=0.0))

    yl = np.asarray(solution.lower_duals, dtype=float)
    yu = np.asarray(solution.upper_duals, dtype=float)
    ye = float(solution.energy_dual)
    price_scale = float(np.max(p))
    cost = float(p @ q)
    reduced = p - problem.lower_matrix.T @ yl - problem.upper_matrix.T @ yu \
        - problem.energy_content * ye
    # wrong-signed duals, in cost units
    viol["dual_sign"] = float(max(np.max(-yl * lo_scale, initial=0.0),
                                  np.max(yu * up_scale, initial=0.0)) / max(abs(cost), 1e-12))
    viol["reduced_cost"] = float(np.max(np.maximum(-reduced, 0), initial=0.0) / price_scale)
    dual_obj = float(problem.lower @ yl + problem.upper @ yu + problem.energy * ye)
    viol["duality_gap"] = abs(cost - dual_obj) / max(abs(cost), 1e-12)
    # complementary slackness, expressed in cost units relative to total cost
    cs_rows = np.concatenate([yl * (lo_act - problem.lower), yu * (up_act - problem.upper)])
    cs_cols = q * reduced
    viol["complementary_slackness"] = float(
        (np.max(np.abs(cs_rows), initial=0.0) + np.max(np.abs(cs_cols), initial=0.0))
        / max(abs(cost), 1e-12))
    return {"violations": viol, "max_violation": max(viol.values()),
            "cost": cost, "dual_objective": dual_obj}


def to_lp_text(problem: DietProblem) -> str:
    """Plain-text LP dump for cross-checking with external solvers."""
    def expr(coefs):
        return " + ".join(f"{c:.12g} q_{i}" for c, i in zip(coefs, problem.item_ids) if c != 0) or "0"
    lines = ["minimize", f"  cost: {expr(problem.prices)}", "subject to"]
    for nid, row, lo in zip(problem.lower_ids, problem.lower_matrix, problem.lower):
        lines.append(f"  min_{nid}: {expr(row)} >= {lo:.12g}")
    for nid, row, hi in zip(problem.upper_ids, problem.upper_matrix, problem.upper):
        lines.append(f"  max_{nid}: {expr(row)} <= {hi:.12g}")
    lines.append(f"  energy: {expr(problem.energy_content)} = {problem.energy:.12g}")
    lines.append("bounds")
    lines += [f"  q_{i} >= 0" for i in problem.item_ids]
    lines.append("end")
    return "\n".join(lines) + "\n"
