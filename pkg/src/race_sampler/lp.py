"""Dense two-phase tableau simplex (Bland's rule) and the local-consistency
LP relaxation that bounds the attractive Ising log-density over a subcube.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PIVOT_TOL = 1e-9


@dataclass
class LpModel:
    """maximize c.x  s.t.  a_eq x = b_eq,  a_ub x <= b_ub,  0 <= x <= upper."""

    c: np.ndarray
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    upper: np.ndarray | None = None
    maximize: bool = True

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        if self.a_eq is None:
            self.a_eq, self.b_eq = np.zeros((0, n)), np.zeros(0)
        if self.a_ub is None:
            self.a_ub, self.b_ub = np.zeros((0, n)), np.zeros(0)
        self.a_eq = np.asarray(self.a_eq, dtype=float).reshape(-1, n)
        self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        self.a_ub = np.asarray(self.a_ub, dtype=float).reshape(-1, n)
        self.b_ub = np.asarray(self.b_ub, dtype=float).reshape(-1)
        self.upper = np.ones(n) if self.upper is None else np.asarray(self.upper, dtype=float)
        if self.a_eq.shape[0] != self.b_eq.size or self.a_ub.shape[0] != self.b_ub.size:
            raise ValueError("constraint matrix and right-hand side disagree in length")
        if self.upper.size != n:
            raise ValueError("upper bounds must match the number of variables")
        if not (np.all(np.isfinite(self.b_eq)) and np.all(np.isfinite(self.b_ub))):
            raise ValueError("right-hand sides must be finite")


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: float = float("nan")
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    basis: tuple = ()


def _pivot(t: np.ndarray, i: int, j: int) -> None:
    t[i] /= t[i, j]
    col = t[:, j].copy()
    col[i] = 0.0
    t -= np.outer(col, t[i])


def _run_simplex(t: np.ndarray, basis: list, n_enter: int) -> str:
    """Bland's rule on tableau ``t`` whose last row holds reduced costs."""
    m = t.shape[0] - 1
    while True:
        enter = np.flatnonzero(t[-1, :n_enter] > PIVOT_TOL)
        if enter.size == 0:
            return "optimal"
        j = int(enter[0])
        col = t[:m, j]
        pos = np.flatnonzero(col > PIVOT_TOL)
        if pos.size == 0:
            return "unbounded"
        ratios = t[pos, -1] / col[pos]
        best = ratios.min()
        tied = pos[ratios <= best + 1e-12 * (1.0 + abs(best))]
        i = int(min(tied, key=lambda r: basis[r]))
        _pivot(t, i, j)
        basis[i] = j


def lp_solve(model: LpModel) -> LpSolution:
    """Optimal basic solution of ``model``; infeasible/unbounded reported in status."""
    c = model.c if model.maximize else -model.c
    n = c.size
    bounded = np.flatnonzero(np.isfinite(model.upper))
    m_eq, m_ub, m_bd = model.b_eq.size, model.b_ub.size, bounded.size
    m = m_eq + m_ub + m_bd
    n_slack = m_ub + m_bd

    a = np.zeros((m, n + n_slack))
    b = np.zeros(m)
    a[:m_eq, :n] = model.a_eq
    b[:m_eq] = model.b_eq
    a[m_eq:m_eq + m_ub, :n] = model.a_ub
    b[m_eq:m_eq + m_ub] = model.b_ub
    for k, j in enumerate(bounded):
        a[m_eq + m_ub + k, j] = 1.0
        b[m_eq + m_ub + k] = model.upper[j]
    for k in range(n_slack):
        a[m_eq + k, n + k] = 1.0
    neg = b < 0
    a[neg] *= -1.0
    b[neg] *= -1.0

    # rows whose slack enters with +1 start basic on it; the rest get artificials
    basis = [-1] * m
    for k in range(n_slack):
        row = m_eq + k
        if not neg[row]:
            basis[row] = n + k
    art_rows = [r for r in range(m) if basis[r] < 0]
    n_real = n + n_slack
    n_tot = n_real + len(art_rows)
    t = np.zeros((m + 1, n_tot + 1))
    t[:m, :n_real] = a
    t[:m, -1] = b
    for k, r in enumerate(art_rows):
        t[r, n_real + k] = 1.0
        basis[r] = n_real + k

    if art_rows:
        t[-1, n_real:n_tot] = -1.0
        for r in art_rows:
            t[-1] += t[r]
        t[-1, n_real:n_tot] = 0.0
        _run_simplex(t, basis, n_tot)
        if -t[-1, -1] < -1e-7 * max(1.0, float(np.abs(b).max(initial=0.0))):
            return LpSolution("infeasible")
        # drive zero-level artificials out of the basis, dropping redundant rows
        keep = []
        for r in range(m):
            if basis[r] >= n_real:
                nz = np.flatnonzero(np.abs(t[r, :n_real]) > PIVOT_TOL)
                if nz.size == 0:
                    continue
                _pivot(t, r, int(nz[0]))
                basis[r] = int(nz[0])
            keep.append(r)
        t = np.vstack([t[keep], t[-1:]])
        basis = [basis[r] for r in keep]
        t = np.hstack([t[:, :n_real], t[:, -1:]])
        m = len(keep)
        t[:m, -1] = np.maximum(t[:m, -1], 0.0)

    t[-1] = 0.0
    t[-1, :n] = c
    for r, j in enumerate(basis):
        if t[-1, j] != 0.0:
            t[-1] -= t[-1, j] * t[r]
    status = _run_simplex(t, basis, n_real)
    if status != "optimal":
        return LpSolution(status)
    x = np.zeros(n_real)
    for r, j in enumerate(basis):
        x[j] = t[r, -1]
    value = float(model.c @ x[:n])
    return LpSolution("optimal", value, x[:n], tuple(basis))


# ---------------------------------------------------------------------------
# Ising relaxation


def _pair_sign(k: int, l: int) -> float:
    # minimisation coefficient (-1)^(kl + (1-l)(1-k)); we maximise, so negate
    return -((-1.0) ** (k * l + (1 - l) * (1 - k)))


def ising_relaxation(problem, region) -> tuple:
    """LP upper bound on max log f over ``region`` and the node marginals.

    Fixed spins enter as constants. Node variable b_i = 1 encodes x_i = +1.
    Returns (log_bound, fractional) where ``fractional`` has length n.
    """
    fields, w = problem.fields, problem.weights
    n = problem.n
    fixed = dict(region.fixed)
    free = [i for i in range(n) if i not in fixed]
    frac = np.zeros(n)
    const = 0.0
    h = {i: float(fields[i]) for i in free}
    for i, s in fixed.items():
        frac[i] = 1.0 if s > 0 else 0.0
        const += fields[i] * s
    for i in range(n):
        for j in range(i + 1, n):
            if i in fixed and j in fixed:
                const += w[i, j] * fixed[i] * fixed[j]
            elif i in fixed:
                h[j] += w[i, j] * fixed[i]
            elif j in fixed:
                h[i] += w[i, j] * fixed[j]
    if not free:
        return const, frac

    r = len(free)
    pos = {v: k for k, v in enumerate(free)}
    pairs = [(i, j) for a, i in enumerate(free) for j in free[a + 1:]]
    nv = r + 4 * len(pairs)
    c = np.zeros(nv)
    for i in free:
        c[pos[i]] = 2.0 * h[i]
        const -= h[i]
    a_eq = np.zeros((4 * len(pairs), nv))
    b_eq = np.zeros(4 * len(pairs))
    for p, (i, j) in enumerate(pairs):
        base = r + 4 * p  # b_ij00, b_ij01, b_ij10, b_ij11
        for k in (0, 1):
            for l in (0, 1):
                c[base + 2 * k + l] = _pair_sign(k, l) * w[i, j]
        row = 4 * p
        # sum_l b_ij0l = 1 - b_i ; sum_l b_ij1l = b_i
        a_eq[row, [base, base + 1, pos[i]]] = 1.0
        b_eq[row] = 1.0
        a_eq[row + 1, [base + 2, base + 3]] = 1.0
        a_eq[row + 1, pos[i]] = -1.0
        # sum_k b_ijk0 = 1 - b_j ; sum_k b_ijk1 = b_j
        a_eq[row + 2, [base, base + 2, pos[j]]] = 1.0
        b_eq[row + 2] = 1.0
        a_eq[row + 3, [base + 1, base + 3]] = 1.0
        a_eq[row + 3, pos[j]] = -1.0
    # edge marginals are capped at 1 by the equalities; only nodes need explicit bounds
    upper = np.full(nv, np.inf)
    upper[:r] = 1.0
    sol = lp_solve(LpModel(c, a_eq, b_eq, upper=upper))
    if sol.status != "optimal":
        raise RuntimeError(f"Ising relaxation not optimal: {sol.status}")
    for i in free:
        frac[i] = sol.x[pos[i]]
    return sol.value + const, frac
