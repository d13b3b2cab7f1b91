"""Dense two-phase primal simplex (Bland's rule) for small LPs.

``solve_lp`` accepts a :class:`ConstraintSystem` with real variables and
arbitrary bounds.  Internally the problem is rewritten in standard form
``min c'z, A z = b, z >= 0, b >= 0``; variables are shifted by finite lower
bounds, reflected when only an upper bound is finite and split when free.
Finite upper bounds become explicit rows.

Duals are reported as shadow prices of the original problem
(``d value / d rhs``), reduced costs as ``c - A^T y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .system import ConstraintSystem, Row, Variable

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-10
OPT_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL = "numerical-failure"


class DimensionMismatchError(ValueError):
    pass


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None = None
    value: float = math.nan
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Standard-form tableau with an explicit basis list."""

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list[int]):
        m, n = A.shape
        self.T = np.zeros((m + 1, n + 1))
        self.T[:m, :n] = A
        self.T[:m, n] = b
        self.basis = list(basis)
        self.iterations = 0

    @property
    def m(self):
        return self.T.shape[0] - 1

    def set_objective(self, c: np.ndarray):
        n = self.T.shape[1] - 1
        self.T[-1, :n] = c
        self.T[-1, n] = 0.0
        for r, k in enumerate(self.basis):
            if self.T[-1, k] != 0:
                self.T[-1] -= self.T[-1, k] * self.T[r]

    def pivot(self, r: int, k: int):
        T = self.T
        T[r] /= T[r, k]
        col = T[:, k].copy()
        col[r] = 0.0
        nz = np.nonzero(col)[0]
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        self.basis[r] = k
        self.iterations += 1

    def run(self, allowed: np.ndarray, cap: int) -> str:
        """Bland's rule: lowest-index improving column, lowest basic index on ratio ties."""
        T = self.T
        while True:
            if self.iterations >= cap:
                return NUMERICAL
            red = T[-1, :-1]
            cand = np.nonzero((red < -OPT_TOL) & allowed)[0]
            if cand.size == 0:
                return OPTIMAL
            k = int(cand[0])
            col = T[:-1, k]
            rows = np.nonzero(col > PIVOT_TOL)[0]
            if rows.size == 0:
                return UNBOUNDED
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, k)

    def drop_row(self, r: int):
        self.T = np.delete(self.T, r, axis=0)
        del self.basis[r]


def _standard_form(sys_: ConstraintSystem):
    """Return the standard-form data and the maps needed to recover x and y."""
    c, A, senses, b, lb, ub = sys_.dense()
    n = sys_.num_vars
    # x_j = off_j + sum_k M[j, k] z_k
    cols: list[tuple[int, float]] = []
    off = np.zeros(n)
    bound_rows: list[tuple[int, float]] = []
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if lo > -math.inf:
            off[j] = lo
            cols.append((j, 1.0))
            if hi < math.inf:
                bound_rows.append((len(cols) - 1, hi - lo))
        elif hi < math.inf:
            off[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nz = len(cols)
    M = np.zeros((n, nz))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s
    m0 = A.shape[0]
    rows_A = A @ M
    rows_b = b - A @ off
    all_senses = list(senses) + ["<="] * len(bound_rows)
    mb = len(bound_rows)
    Az = np.zeros((m0 + mb, nz))
    Az[:m0] = rows_A
    bz = np.concatenate([rows_b, np.zeros(mb)])
    for i, (k, u) in enumerate(bound_rows):
        Az[m0 + i, k] = 1.0
        bz[m0 + i] = u
    # slacks
    mtot = m0 + mb
    slack_cols = []
    for r, s in enumerate(all_senses):
        if s != "=":
            slack_cols.append((r, -1.0 if s == ">=" else 1.0))
    S = np.zeros((mtot, len(slack_cols)))
    for k, (r, s) in enumerate(slack_cols):
        S[r, k] = s
    A_std = np.hstack([Az, S])
    flip = np.where(bz < 0, -1.0, 1.0)
    A_std *= flip[:, None]
    b_std = bz * flip
    c_std = np.concatenate([M.T @ c, np.zeros(len(slack_cols))])
    return A_std, b_std, c_std, M, off, flip, m0, c @ off


def solve_lp(sys_: ConstraintSystem, max_iter: int | None = None) -> LPResult:
    """Solve a continuous LP; integrality marks on variables are ignored with an error."""
    if any(v.kind != "real" for v in sys_.variables):
        raise ValueError("solve_lp handles real variables only (relax kinds first)")
    n = sys_.num_vars
    for row in sys_.rows:
        for j, _ in row.terms:
            if not 0 <= j < n:
                raise DimensionMismatchError("row references a variable outside the system")
    sign = 1.0 if sys_.direction == "min" else -1.0
    A, b, c, M, off, flip, m0, const = _standard_form(sys_)
    c = sign * c
    m, N = A.shape
    cap = max_iter if max_iter is not None else 50 * (m + N)

    # initial basis: a slack with +1 coefficient where available, else an artificial
    basis: list = [None] * m
    for k in range(M.shape[1], N):
        r = int(np.flatnonzero(A[:, k])[0])
        if A[r, k] == 1.0 and basis[r] is None:
            basis[r] = k
    art_rows = [r for r in range(m) if basis[r] is None]
    na = len(art_rows)
    A1 = np.hstack([A, np.zeros((m, na))])
    for i, r in enumerate(art_rows):
        A1[r, N + i] = 1.0
        basis[r] = N + i
    tab = _Tableau(A1, b, basis)
    allowed = np.ones(N + na, dtype=bool)

    if na:
        c1 = np.zeros(N + na)
        c1[N:] = 1.0
        tab.set_objective(c1)
        status = tab.run(allowed, cap)
        if status == NUMERICAL:
            return LPResult(NUMERICAL, iterations=tab.iterations)
        if -tab.T[-1, -1] > FEAS_TOL * max(1.0, np.abs(b).max(initial=0.0)):
            return LPResult(INFEASIBLE, iterations=tab.iterations)
        # drive artificials out of the basis, dropping redundant rows
        r = 0
        kept_rows = list(range(m))
        while r < tab.m:
            if tab.basis[r] >= N:
                row = tab.T[r, :N]
                ks = np.nonzero(np.abs(row) > PIVOT_TOL)[0]
                if ks.size:
                    tab.pivot(r, int(ks[0]))
                    r += 1
                else:
                    tab.drop_row(r)
                    del kept_rows[r]
                continue
            r += 1
        allowed[N:] = False
    else:
        kept_rows = list(range(m))

    c2 = np.concatenate([c, np.zeros(na)])
    tab.set_objective(c2)
    status = tab.run(allowed, cap)
    if status != OPTIMAL:
        return LPResult(status, iterations=tab.iterations)

    # refine the basic solution and the duals from the final basis
    basis = tab.basis
    A_k = A[kept_rows][:, :N] if na else A
    b_k = b[kept_rows]
    B = A_k[:, basis] if all(k < N for k in basis) else None
    z = np.zeros(N)
    y_std_k = np.zeros(len(kept_rows))
    if B is not None and len(basis):
        try:
            zb = np.linalg.solve(B, b_k)
            y_std_k = np.linalg.solve(B.T, c[basis])
        except np.linalg.LinAlgError:
            zb = tab.T[:-1, -1]
            y_std_k = np.linalg.lstsq(B.T, c[basis], rcond=None)[0]
        z[basis] = np.maximum(zb, 0.0)
    y_std = np.zeros(m)
    y_std[kept_rows] = y_std_k
    nz = M.shape[1]
    x = off + M @ z[:nz]
    value = float(sys_.objective_value(x))
    # shadow prices of the original rows: undo the row flips and the min/max sign
    y = sign * flip[:m0] * y_std[:m0]
    cvec, Aorig, *_ = sys_.dense()
    reduced = cvec - Aorig.T @ y
    return LPResult(OPTIMAL, x, value, y, reduced, tab.iterations)


def check_optimality(sys_: ConstraintSystem, res: LPResult, tol: float = 1e-7) -> list[str]:
    """List KKT violations (primal, dual sign, complementary slackness, gap) of a solved LP."""
    problems = []
    c, A, senses, b, lb, ub = sys_.dense()
    x, y, r = res.x, res.duals, res.reduced_costs
    s = 1.0 if sys_.direction == "min" else -1.0
    act = A @ x
    for i, sense in enumerate(senses):
        slack = act[i] - b[i]
        if (sense == ">=" and slack < -tol) or (sense == "<=" and slack > tol) or (sense == "=" and abs(slack) > tol):
            problems.append(f"row {i} violated by {slack:g}")
        yi = s * y[i]
        if sense == ">=" and yi < -tol or sense == "<=" and yi > tol:
            problems.append(f"row {i} dual has the wrong sign ({y[i]:g})")
        if sense != "=" and abs(y[i] * slack) > tol:
            problems.append(f"row {i} complementary slackness {y[i] * slack:g}")
    for j in range(len(x)):
        if x[j] < lb[j] - tol or x[j] > ub[j] + tol:
            problems.append(f"variable {j} outside its bounds")
        rj = s * r[j]
        at_lb = x[j] <= lb[j] + tol
        at_ub = x[j] >= ub[j] - tol
        if not at_ub and rj < -tol:
            problems.append(f"variable {j} reduced cost {r[j]:g} with x below its upper bound")
        if not at_lb and rj > tol:
            problems.append(f"variable {j} reduced cost {r[j]:g} with x above its lower bound")
    # dual objective: y.b + sum of bound terms
    dual = y @ b
    for j in range(len(x)):
        if abs(r[j]) > 0:
            bound = lb[j] if s * r[j] > 0 else ub[j]
            if math.isfinite(bound):
                dual += r[j] * bound
    if abs(dual - res.value) > tol * max(1.0, abs(res.value)):
        problems.append(f"duality gap {dual - res.value:g}")
    return problems


# ---------------------------------------------------------------------------
# original soft-margin LP


@dataclass
class SoftMarginLP:
    status: str
    rho: float
    w: np.ndarray
    b: float
    xi: np.ndarray
    value: float


def original_softmargin_system(X: np.ndarray, y: np.ndarray, nu: float) -> ConstraintSystem:
    """max rho - sum(xi)/(nu m) s.t. y_i (w.x_i - b) >= rho - xi_i, sum(w) + b = 1, w, b, xi >= 0.

    Variable order: rho, w_0..w_{n-1}, b, xi_0..xi_{m-1}.
    """
    X = np.asarray(X, dtype=float)
    m, n = X.shape
    if not 0 < nu <= 1:
        raise ValueError("nu must lie in (0, 1]")
    variables = [Variable("rho", "real", -math.inf, math.inf)]
    variables += [Variable(f"w{j}") for j in range(n)]
    variables.append(Variable("b"))
    variables += [Variable(f"xi{i}") for i in range(m)]
    rows = []
    for i in range(m):
        yi = float(y[i])
        terms = [(0, -1.0)]
        terms += [(1 + j, yi * X[i, j]) for j in range(n) if X[i, j] != 0]
        terms += [(1 + n, -yi), (2 + n + i, 1.0)]
        rows.append(Row(tuple(terms), 0.0, ">="))
    rows.append(Row(tuple((1 + j, 1.0) for j in range(n + 1)), 1.0, "="))
    obj = [(0, 1.0)] + [(2 + n + i, -1.0 / (nu * m)) for i in range(m)]
    return ConstraintSystem(tuple(variables), tuple(rows), tuple(obj), "max")


def solve_original_softmargin(X, y, nu: float) -> SoftMarginLP:
    X = np.asarray(X, dtype=float)
    m, n = X.shape
    res = solve_lp(original_softmargin_system(X, y, nu))
    if not res.ok:
        return SoftMarginLP(res.status, math.nan, np.full(n, math.nan), math.nan, np.full(m, math.nan), math.nan)
    x = res.x
    return SoftMarginLP(OPTIMAL, float(x[0]), x[1:1 + n].copy(), float(x[1 + n]), x[2 + n:].copy(), res.value)
