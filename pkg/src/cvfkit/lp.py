"""Box-constrained linear programming with equality-row dual recovery.

Solves

    max  d'm    s.t.  A m = rhs,   0 <= m_j <= 1,

with a two-phase revised simplex supporting upper-bounded variables.
The dual multipliers of the n equality rows are returned alongside the
primal solution; at a vertex at most n variables are fractional.

Bland's smallest-index rule is used for entering/leaving choices, which
guarantees termination.  An optional steepest-reduced-cost ("dantzig")
pricing mode is faster on large instances and falls back to Bland's rule
whenever pivots stall, so termination is preserved.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import Infeasible, NumericalFailure

FEAS_TOL = 1e-9      # absolute tolerance on equality residuals
DUAL_TOL = 1e-9      # relative tolerance on reduced costs
PIVOT_TOL = 1e-10    # smallest usable pivot element


@dataclass(frozen=True)
class LpProblem:
    """max objective'm  s.t.  constraint_matrix m = rhs,  0 <= m <= 1."""

    objective: np.ndarray          # length J
    constraint_matrix: np.ndarray  # n x J
    rhs: np.ndarray                # length n

    def __post_init__(self):
        d = np.asarray(self.objective, dtype=float)
        a = np.asarray(self.constraint_matrix, dtype=float)
        b = np.asarray(self.rhs, dtype=float)
        if a.ndim != 2:
            raise ValueError("constraint_matrix must be 2-D")
        n, j = a.shape
        if n < 1 or j < n:
            raise ValueError(f"need n >= 1 and J >= n, got n={n}, J={j}")
        if d.shape != (j,) or b.shape != (n,):
            raise ValueError("objective/rhs shapes do not match constraint_matrix")
        if not (np.isfinite(d).all() and np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "objective", d)
        object.__setattr__(self, "constraint_matrix", a)
        object.__setattr__(self, "rhs", b)

    @property
    def n(self):
        return self.constraint_matrix.shape[0]

    @property
    def num_vars(self):
        return self.constraint_matrix.shape[1]


@dataclass(frozen=True)
class LpSolution:
    """Primal box solution, equality-row duals, and solve status."""

    m: np.ndarray                # length J, in [0, 1]
    k: np.ndarray                # length n equality duals
    objective_value: float
    status: str                  # "optimal" | "degenerate-warning"
    iterations: int = 0

    def reduced_costs(self, problem):
        return problem.objective - problem.constraint_matrix.T @ self.k


class _SimplexState:
    """Mutable simplex state over the extended system [A | D] where D holds
    signed artificial columns chosen so the artificial start is feasible."""

    def __init__(self, a, rhs, initial_upper=None):
        self.n, self.j = a.shape
        self.a = a
        self.rhs = rhs
        self.total = self.j + self.n
        self.at_upper = np.zeros(self.total, dtype=bool)
        if initial_upper is not None:
            self.at_upper[: self.j] = initial_upper
        self.basis = np.arange(self.j, self.total)
        self.in_basis = np.zeros(self.total, dtype=bool)
        self.in_basis[self.basis] = True
        resid = self.effective_rhs()
        self.art_sign = np.where(resid < 0, -1.0, 1.0)
        self.x_basic = np.abs(resid)
        self.lu = None
        self._refactor()

    def _refactor(self):
        b_mat = self._columns(self.basis)
        try:
            self.lu = scipy.linalg.lu_factor(b_mat)
        except scipy.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise NumericalFailure("singular simplex basis") from exc

    def _columns(self, idx):
        idx = np.atleast_1d(idx)
        cols = np.empty((self.n, idx.size))
        real = idx < self.j
        if real.any():
            cols[:, real] = self.a[:, idx[real]]
        art = ~real
        if art.any():
            rows = idx[art] - self.j
            eye = np.zeros((self.n, rows.size))
            eye[rows, np.arange(rows.size)] = self.art_sign[rows]
            cols[:, art] = eye
        return cols

    def effective_rhs(self):
        upper = self.at_upper & ~self.in_basis
        real_upper = np.flatnonzero(upper[: self.j])
        if real_upper.size:
            return self.rhs - self.a[:, real_upper].sum(axis=1)
        return self.rhs.copy()

    def recompute_basic_values(self):
        self.x_basic = scipy.linalg.lu_solve(self.lu, self.effective_rhs())

    def duals(self, cost):
        return scipy.linalg.lu_solve(self.lu, cost[self.basis], trans=1)

    def reduced_costs(self, cost, y):
        r = np.empty(self.total)
        r[: self.j] = cost[: self.j] - self.a.T @ y
        r[self.j :] = cost[self.j :] - self.art_sign * y
        return r

    def upper_bound(self, idx):
        # real variables live in [0, 1]; artificials in [0, inf)
        return 1.0 if idx < self.j else np.inf


def _run_simplex(state, cost, allow, pricing, max_iter, iteration_counter):
    """Maximize cost'x over the current bounded system; Bland-safe pricing.

    `allow` masks variables that may enter the basis.  Returns the number
    of pivots performed; raises NumericalFailure on stalls past max_iter.
    """
    stall = 0
    use_bland = pricing == "bland"
    pivots = 0
    while True:
        if iteration_counter[0] >= max_iter:
            raise NumericalFailure(
                f"simplex iteration cap {max_iter} reached ({iteration_counter[0]} pivots)"
            )
        y = state.duals(cost)
        r = state.reduced_costs(cost, y)
        tol = DUAL_TOL * (1.0 + np.abs(cost).max())
        nonbasic = ~state.in_basis
        improving = nonbasic & allow & (
            (~state.at_upper & (r > tol)) | (state.at_upper & (r < -tol))
        )
        candidates = np.flatnonzero(improving)
        if candidates.size == 0:
            return pivots
        if use_bland or stall > 30:
            enter = candidates[0]
        else:
            enter = candidates[np.argmax(np.abs(r[candidates]))]
        from_upper = state.at_upper[enter]

        w = scipy.linalg.lu_solve(state.lu, state._columns(enter)[:, 0])
        step_dir = w if not from_upper else -w

        # ratio test: basic variables must stay inside their own bounds
        ub_basic = np.where(state.basis < state.j, 1.0, np.inf)
        t_limit = np.full(state.n, np.inf)
        pos = step_dir > PIVOT_TOL
        t_limit[pos] = state.x_basic[pos] / step_dir[pos]
        neg = step_dir < -PIVOT_TOL
        t_limit[neg] = (state.x_basic[neg] - ub_basic[neg]) / step_dir[neg]
        bound_span = state.upper_bound(enter)

        t_min = t_limit.min() if state.n else np.inf
        t_star = min(t_min, bound_span)
        if not np.isfinite(t_star):
            raise NumericalFailure("unbounded simplex direction in a bounded problem")

        iteration_counter[0] += 1
        pivots += 1
        stall = stall + 1 if t_star <= FEAS_TOL else 0

        if bound_span <= t_min:
            # bound flip: the entering variable crosses the box on its own
            state.at_upper[enter] = ~from_upper
            state.recompute_basic_values()
            continue

        ties = np.flatnonzero(t_limit <= t_star + FEAS_TOL)
        leave_row = ties[np.argmin(state.basis[ties])]  # Bland on leaving index
        leaving = state.basis[leave_row]
        leaves_at_upper = step_dir[leave_row] < 0

        state.basis[leave_row] = enter
        state.in_basis[enter] = True
        state.in_basis[leaving] = False
        state.at_upper[enter] = False
        state.at_upper[leaving] = bool(leaves_at_upper) and leaving < state.j
        state._refactor()
        state.recompute_basic_values()


def solve_boxed_lp(problem, pricing="dantzig", max_iter=None, initial_upper=None):
    """Solve the boxed LP and return primal and equality-row duals.

    Parameters
    ----------
    problem : LpProblem
    pricing : {"dantzig", "bland"}
        "dantzig" picks steepest reduced cost and reverts to Bland's rule
        after degenerate stalls; "bland" is smallest-index throughout.
    max_iter : int, optional
        Pivot cap; defaults to 1000 + 50 n + 10 J.
    initial_upper : array of bool, optional
        Warm start: variables to place at their upper bound before phase 1.
        Any feasible guess only changes the pivot path, not the optimum.

    Raises
    ------
    Infeasible
        No m in the box satisfies A m = rhs.
    NumericalFailure
        Pivot cap reached or a basis factorization failed.
    """
    a = problem.constraint_matrix
    d = problem.objective
    rhs = problem.rhs
    n, j = a.shape
    if max_iter is None:
        max_iter = 1000 + 50 * n + 10 * j
    if initial_upper is not None:
        initial_upper = np.asarray(initial_upper, dtype=bool)
        if initial_upper.shape != (j,):
            raise ValueError("initial_upper must be a length-J boolean mask")

    state = _SimplexState(a, rhs, initial_upper=initial_upper)
    counter = [0]

    # phase 1: drive artificials to zero
    phase1_cost = np.concatenate([np.zeros(j), -np.ones(n)])
    allow = np.ones(state.total, dtype=bool)
    _run_simplex(state, phase1_cost, allow, pricing, max_iter, counter)
    artificial_mass = state.x_basic[state.basis >= j].sum() if (state.basis >= j).any() else 0.0
    if artificial_mass > FEAS_TOL * (1.0 + np.abs(rhs).max()):
        raise Infeasible(
            f"no feasible point in the box (artificial residual {artificial_mass:.3e})"
        )

    # pivot residual zero-valued artificials out of the basis
    for row in np.flatnonzero(state.basis >= j):
        pivoted = False
        for cand in np.flatnonzero(~state.in_basis[:j]):
            w = scipy.linalg.lu_solve(state.lu, state._columns(cand)[:, 0])
            if abs(w[row]) > 1e-7:
                leaving = state.basis[row]
                state.basis[row] = cand
                state.in_basis[cand] = True
                state.in_basis[leaving] = False
                state.at_upper[cand] = False
                state._refactor()
                state.recompute_basic_values()
                pivoted = True
                break
        if not pivoted:
            raise NumericalFailure(
                "constraint rows are linearly dependent; duals are not determined"
            )

    # phase 2: true objective, artificials locked out
    phase2_cost = np.concatenate([d, np.zeros(n)])
    allow = np.concatenate([np.ones(j, dtype=bool), np.zeros(n, dtype=bool)])
    _run_simplex(state, phase2_cost, allow, pricing, max_iter, counter)

    m = np.zeros(j)
    m[state.at_upper[:j] & ~state.in_basis[:j]] = 1.0
    real_basic = state.basis < j
    m[state.basis[real_basic]] = np.clip(state.x_basic[real_basic], 0.0, 1.0)

    residual = np.abs(a @ m - rhs).max()
    if residual > FEAS_TOL * (1.0 + np.abs(rhs).max()) * 10:
        raise NumericalFailure(f"equality residual {residual:.3e} after termination")

    k = state.duals(phase2_cost)
    reduced = d - problem.constraint_matrix.T @ k
    warn_tol = DUAL_TOL * (1.0 + np.abs(d).max())
    nonbasic_real = ~state.in_basis[:j]
    dual_degenerate = bool((np.abs(reduced[nonbasic_real]) <= warn_tol).any())
    basic_vals = state.x_basic[real_basic]
    primal_degenerate = bool(
        ((basic_vals <= FEAS_TOL) | (basic_vals >= 1.0 - FEAS_TOL)).any()
    )
    status = "degenerate-warning" if (dual_degenerate or primal_degenerate) else "optimal"

    return LpSolution(
        m=m,
        k=np.asarray(k, dtype=float),
        objective_value=float(d @ m),
        status=status,
        iterations=counter[0],
    )
