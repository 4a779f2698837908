"""Self-contained 0/1 integer linear programming.

The solver stack is deliberately boring: a dense two-phase primal simplex
with Bland's anti-cycling rule for the LP relaxation, and best-first
branch-and-bound on top.  Integral candidates are offered to a lazy-cut
oracle before acceptance, which is how exponential constraint families
(connectivity cuts) are handled.

Everything is deterministic: Bland's rule, most-fractional branching with
lowest-index tie-breaks, and insertion-ordered heap tie-breaks.  For
instances whose dense tableau would be unreasonably large the relaxation
can be delegated to scipy's HiGHS ``linprog`` (``backend="highs"`` or the
size-based ``"auto"``); the branch-and-bound logic is identical either way.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

_FEAS_TOL = 1e-9
_INT_TOL = 1e-6

LE, GE, EQ = "<=", ">=", "=="
_SENSES = (LE, GE, EQ)


@dataclass
class Row:
    """Sparse linear constraint sum(coeffs * x[indices]) <sense> rhs."""

    indices: np.ndarray
    coeffs: np.ndarray
    sense: str
    rhs: float

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64).ravel()
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64).ravel()
        self.rhs = float(self.rhs)
        if self.indices.shape != self.coeffs.shape:
            raise ValidationError("constraint indices and coefficients differ in length")
        if self.sense not in _SENSES:
            raise ValidationError(f"bad sense {self.sense!r}")
        if not np.all(np.isfinite(self.coeffs)) or not np.isfinite(self.rhs):
            raise ValidationError("constraint coefficients must be finite")

    def violation(self, x) -> float:
        """Positive amount by which ``x`` breaks this row (0 if satisfied)."""
        lhs = float(self.coeffs @ x[self.indices])
        if self.sense == LE:
            return lhs - self.rhs
        if self.sense == GE:
            return self.rhs - lhs
        return abs(lhs - self.rhs)


@dataclass
class IntegerProgram:
    """min c.x over binary x subject to rows plus lazily generated rows."""

    n: int
    c: np.ndarray
    rows: list = field(default_factory=list)
    lazy_oracle: object = None
    rel_gap: float = 1e-6
    abs_gap: float = 1e-9
    node_budget: int = 1_000_000

    def __post_init__(self):
        self.n = int(self.n)
        if self.n <= 0:
            raise ValidationError("an integer program needs at least one variable")
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        if self.c.shape[0] != self.n:
            raise ValidationError(f"objective has {self.c.shape[0]} entries for {self.n} vars")
        if not np.all(np.isfinite(self.c)):
            raise ValidationError("objective coefficients must be finite")
        if self.rel_gap < 0 or self.abs_gap < 0:
            raise ValidationError("gap tolerances must be >= 0")
        for row in self.rows:
            if row.indices.size and (row.indices.min() < 0 or row.indices.max() >= self.n):
                raise ValidationError("constraint references variable outside 0..n-1")


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible"
    x: np.ndarray | None
    value: float


@dataclass
class IPSolution:
    assignment: np.ndarray
    value: float
    bound: float
    status: str  # "optimal-within-gap" | "infeasible" | "budget-exhausted"
    node_count: int


def _bland_pivot(tab, basis, cost_row, allowed, tol=_FEAS_TOL, max_iter=500000):
    """In-place primal simplex iterations with Bland's rule.

    ``tab`` is the (m, N+1) tableau with rhs in the last column and the basis
    columns reduced to identity; ``cost_row`` has length N+1 and is updated
    alongside.  ``allowed`` masks the columns eligible to enter.
    """
    m = tab.shape[0]
    for _ in range(max_iter):
        reduced = cost_row[:-1]
        candidates = np.flatnonzero(allowed & (reduced < -tol))
        if candidates.size == 0:
            return
        j = int(candidates[0])  # Bland: smallest eligible index enters
        col = tab[:, j]
        positive = col > tol
        if not np.any(positive):
            raise ArithmeticError("LP unbounded; box constraints should prevent this")
        ratios = np.full(m, np.inf)
        ratios[positive] = tab[positive, -1] / col[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol)
        r = int(ties[np.argmin(basis[ties])])  # Bland: smallest basic variable leaves
        tab[r] /= tab[r, j]
        factors = tab[:, j].copy()
        factors[r] = 0.0
        tab -= np.outer(factors, tab[r])
        cost_row -= cost_row[j] * tab[r]
        basis[r] = j
    raise ArithmeticError("simplex iteration limit exceeded")


def _simplex_solve(c, A_ub, b_ub, A_eq, b_eq):
    """Two-phase dense simplex for min c.x, A_ub x <= b_ub, A_eq x = b_eq, x >= 0."""
    n = c.shape[0]
    m1, m2 = A_ub.shape[0], A_eq.shape[0]
    m = m1 + m2
    if m == 0:
        return LPResult("optimal", np.zeros(n), 0.0)

    slack = np.vstack([np.eye(m1), np.zeros((m2, m1))]) if m1 else np.zeros((m, 0))
    body = np.vstack([A_ub, A_eq]) if m2 else A_ub
    A = np.hstack([body, slack])
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b = np.abs(b)
    N = A.shape[1]

    # rows whose slack can serve as the initial basic variable need no artificial
    basis = np.full(m, -1, dtype=np.int64)
    needs_artificial = []
    for i in range(m):
        if i < m1 and not neg[i]:
            basis[i] = n + i
        else:
            needs_artificial.append(i)
    n_art = len(needs_artificial)
    if n_art:
        art = np.zeros((m, n_art))
        for k, i in enumerate(needs_artificial):
            art[i, k] = 1.0
            basis[i] = N + k
        A = np.hstack([A, art])

    tab = np.hstack([A, b[:, None]])
    total = A.shape[1]

    if n_art:
        # phase 1: minimize the artificial sum
        cost = np.zeros(total + 1)
        for i in needs_artificial:
            cost -= tab[i]
        cost[N:total] = 0.0
        allowed = np.ones(total, dtype=bool)
        allowed[N:] = False
        _bland_pivot(tab, basis, cost, allowed)
        if -cost[-1] > 1e-7:
            return LPResult("infeasible", None, np.inf)
        # drive surviving artificials out of the basis; drop redundant rows
        drop = []
        for r in range(tab.shape[0]):
            if basis[r] >= N:
                cols = np.flatnonzero(np.abs(tab[r, :N]) > _FEAS_TOL)
                if cols.size:
                    j = int(cols[0])
                    tab[r] /= tab[r, j]
                    factors = tab[:, j].copy()
                    factors[r] = 0.0
                    tab -= np.outer(factors, tab[r])
                    basis[r] = j
                else:
                    drop.append(r)
        if drop:
            keep = np.setdiff1d(np.arange(tab.shape[0]), drop)
            tab = tab[keep]
            basis = basis[keep]
        tab = np.hstack([tab[:, :N], tab[:, -1:]])

    # phase 2 over the real + slack columns
    m = tab.shape[0]
    cost = np.zeros(N + 1)
    cost[:n] = c
    for r in range(m):
        if cost[basis[r]] != 0.0:
            cost -= cost[basis[r]] * tab[r]
    _bland_pivot(tab, basis, cost, np.ones(N, dtype=bool))

    x = np.zeros(N)
    x[basis] = tab[:, -1]
    value = float(c @ x[:n])
    return LPResult("optimal", np.clip(x[:n], 0.0, None), value)


def _rows_to_dense(n, rows):
    """Dense (A_ub, b_ub, A_eq, b_eq) for the explicit rows only."""
    ub, ub_b, eq, eq_b = [], [], [], []
    for row in rows:
        a = np.zeros(n)
        a[row.indices] = row.coeffs
        if row.sense == LE:
            ub.append(a)
            ub_b.append(row.rhs)
        elif row.sense == GE:
            ub.append(-a)
            ub_b.append(-row.rhs)
        else:
            eq.append(a)
            eq_b.append(row.rhs)
    A_ub = np.array(ub) if ub else np.zeros((0, n))
    b_ub = np.array(ub_b) if ub_b else np.zeros(0)
    A_eq = np.array(eq) if eq else np.zeros((0, n))
    b_eq = np.array(eq_b) if eq_b else np.zeros(0)
    return A_ub, b_ub, A_eq, b_eq


def solve_lp(c, rows, lo=None, hi=None, n=None, backend="bland") -> LPResult:
    """LP relaxation min c.x subject to rows and lo <= x <= hi.

    backend: "bland" (dense two-phase simplex), "highs" (scipy linprog),
    or "auto" (bland unless the dense tableau would exceed ~4e6 cells).
    """
    c = np.asarray(c, dtype=np.float64)
    n = c.shape[0] if n is None else n
    lo = np.zeros(n) if lo is None else np.asarray(lo, dtype=np.float64)
    hi = np.ones(n) if hi is None else np.asarray(hi, dtype=np.float64)
    if np.any(lo > hi + _FEAS_TOL):
        return LPResult("infeasible", None, np.inf)

    if backend == "auto":
        m_est = sum(2 if r.sense == EQ else 1 for r in rows) + 2 * n
        backend = "bland" if (m_est + 1) * (m_est + 2 * n) <= 4_000_000 else "highs"

    if backend == "highs":
        from scipy.optimize import linprog

        A_ub, b_ub, A_eq, b_eq = _rows_to_dense(n, rows)
        res = linprog(
            c,
            A_ub=A_ub if A_ub.size else None,
            b_ub=b_ub if b_ub.size else None,
            A_eq=A_eq if A_eq.size else None,
            b_eq=b_eq if b_eq.size else None,
            bounds=list(zip(lo, hi)),
            method="highs",
        )
        if res.status == 2:
            return LPResult("infeasible", None, np.inf)
        if not res.success:
            raise ArithmeticError(f"linprog failed with status {res.status}: {res.message}")
        return LPResult("optimal", np.asarray(res.x, dtype=np.float64), float(res.fun))

    if backend != "bland":
        raise ValidationError(f"unknown LP backend {backend!r}")

    A_ub, b_ub, A_eq, b_eq = _rows_to_dense(n, rows)
    bound_rows, bound_rhs = [], []
    for i in range(n):
        a = np.zeros(n)
        a[i] = 1.0
        bound_rows.append(a)
        bound_rhs.append(hi[i])
        if lo[i] > 0.0:
            bound_rows.append(-a)
            bound_rhs.append(-lo[i])
    A_ub = np.vstack([A_ub, bound_rows]) if bound_rows else A_ub
    b_ub = np.concatenate([b_ub, bound_rhs]) if bound_rhs else b_ub
    return _simplex_solve(c, A_ub, b_ub, A_eq, b_eq)


def solve_lp_relaxation(ip: IntegerProgram, backend="bland") -> LPResult:
    """Relaxation of the full program over the [0, 1] box."""
    return solve_lp(ip.c, ip.rows, n=ip.n, backend=backend)


def _satisfies(rows, x, tol=1e-6):
    return all(row.violation(x) <= tol for row in rows)


def solve_bnb(ip: IntegerProgram, backend="bland") -> IPSolution:
    """Best-first branch-and-bound with lazy cuts.

    Branches on the most fractional variable (ties to the lowest index);
    integral candidates are vetoed by the lazy oracle until it returns no
    violated rows.  Terminates when the gap is within
    max(abs_gap, rel_gap * |value|) or the node budget is exhausted.
    """
    n = ip.n
    cuts: list[Row] = []
    incumbent_x = None
    incumbent_val = np.inf
    node_count = 0
    counter = 0
    status = "optimal-within-gap"
    proved = -np.inf

    def gap_ok(value, bound):
        return np.isfinite(value) and (value - bound) <= max(
            ip.abs_gap, ip.rel_gap * abs(value)
        ) + 1e-12

    # heap entries: (parent LP bound, insertion counter, lo, hi)
    heap = [(-np.inf, counter, np.zeros(n), np.ones(n))]
    while heap:
        bound0, _, lo, hi = heapq.heappop(heap)
        # bound0 is a lower bound for every open node (best-first order)
        if incumbent_x is not None and gap_ok(incumbent_val, bound0):
            proved = bound0
            break
        if node_count >= ip.node_budget:
            status = "budget-exhausted"
            proved = bound0
            break
        node_count += 1
        res = solve_lp(ip.c, ip.rows + cuts, lo=lo, hi=hi, n=n, backend=backend)
        if res.status == "infeasible":
            continue
        if res.value >= incumbent_val - 1e-12:
            continue
        x = res.x
        frac = np.abs(x - np.round(x))
        if np.all(frac <= _INT_TOL):
            cand = np.round(x).astype(bool)
            xf = cand.astype(np.float64)
            new_rows = list(ip.lazy_oracle(cand)) if ip.lazy_oracle is not None else []
            for row in new_rows:
                if row.indices.size and (row.indices.min() < 0 or row.indices.max() >= n):
                    raise ValidationError("lazy cut references variable outside 0..n-1")
            cuts.extend(new_rows)
            if any(row.violation(xf) > 1e-9 for row in new_rows):
                counter += 1
                heapq.heappush(heap, (res.value, counter, lo, hi))
                continue
            value = float(ip.c @ xf)
            if value < incumbent_val:
                incumbent_val = value
                incumbent_x = cand
            continue
        j = int(np.flatnonzero(frac == frac.max())[0])
        for fix in (0.0, 1.0):
            lo2, hi2 = lo.copy(), hi.copy()
            if fix == 0.0:
                hi2[j] = 0.0
            else:
                lo2[j] = 1.0
            counter += 1
            heapq.heappush(heap, (res.value, counter, lo2, hi2))
    else:
        # heap exhausted: incumbent (if any) is exactly optimal
        proved = incumbent_val

    if incumbent_x is None:
        if status == "budget-exhausted":
            return IPSolution(np.zeros(n, dtype=bool), np.inf, proved, status, node_count)
        return IPSolution(np.zeros(n, dtype=bool), np.inf, np.inf, "infeasible", node_count)

    proved = min(proved, incumbent_val)
    xf = incumbent_x.astype(np.float64)
    if not _satisfies(ip.rows + cuts, xf):
        raise AssertionError("solver returned an assignment violating its own constraints")
    return IPSolution(incumbent_x, incumbent_val, float(proved), status, node_count)


def brute_force(ip: IntegerProgram, max_n=20):
    """Exhaustive reference optimum respecting the lazy oracle; None if infeasible.

    A candidate is feasible only if every explicit row holds and the oracle
    emits no violated rows for it.  Intended for n <= ~20.
    """
    n = ip.n
    if n > max_n:
        raise ValidationError(f"brute force capped at {max_n} variables")
    codes = np.arange(2 ** n, dtype=np.int64)
    X = ((codes[:, None] >> np.arange(n)) & 1).astype(np.float64)
    feasible = np.ones(len(X), dtype=bool)
    for row in ip.rows:
        lhs = X[:, row.indices] @ row.coeffs
        if row.sense == LE:
            feasible &= lhs <= row.rhs + 1e-9
        elif row.sense == GE:
            feasible &= lhs >= row.rhs - 1e-9
        else:
            feasible &= np.abs(lhs - row.rhs) <= 1e-9
    values = X @ ip.c
    order = np.argsort(values, kind="stable")
    for k in order:
        if not feasible[k]:
            continue
        cand = X[k].astype(bool)
        if ip.lazy_oracle is not None:
            if any(r.violation(X[k]) > 1e-9 for r in ip.lazy_oracle(cand)):
                continue
        return cand, float(values[k])
    return None


def dump_lp(ip: IntegerProgram, path):
    """Line-oriented text dump of the instance for offline inspection."""
    lines = [f"min {' + '.join(f'{ip.c[i]!r}*x{i}' for i in range(ip.n))}"]
    for k, row in enumerate(ip.rows):
        terms = " + ".join(f"{c!r}*x{i}" for i, c in zip(row.indices, row.coeffs))
        lines.append(f"r{k}: {terms} {row.sense} {row.rhs!r}")
    lines.append(f"binary x0..x{ip.n - 1}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
