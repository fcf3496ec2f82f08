"""Two-variable safety-filter QP.

Solves::

    minimize    ||u - u_n||^2 + rho * sum(s_r^2)
    subject to  a_r . u <= b_r + s_r,  s_r >= 0,  -U <= u_x, u_y <= U

When the rows and the box admit a common point the slack is fixed at zero
and the result is the exact projection of ``u_n`` onto the feasible polygon.
In two dimensions the optimum is supported by at most two constraints, so
the active set is found by enumeration: the nominal point itself, its
projection onto each violated line, then each vertex with nonnegative
multipliers. Only if no candidate is feasible are the rows softened; the box
always stays hard.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

# Relative tolerance for primal feasibility of a candidate point.
FEAS_TOL = 1e-10
# Multipliers above -MULT_TOL count as nonnegative.
MULT_TOL = 1e-10

_BOX = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])


@dataclass
class QpProblem:
    u_nominal: np.ndarray
    A: np.ndarray
    b: np.ndarray
    u_box: float
    slack_weight: float = 1e6

    def __post_init__(self):
        self.u_nominal = np.asarray(self.u_nominal, dtype=float).reshape(2)
        self.A = np.asarray(self.A, dtype=float).reshape(-1, 2)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if len(self.A) != len(self.b):
            raise ValueError("A and b must have the same number of rows")
        if not self.u_box > 0 or not self.slack_weight > 0:
            raise ValueError("u_box and slack_weight must be positive")

    @classmethod
    def from_rows(cls, u_nominal, rows, u_box: float, slack_weight: float = 1e6):
        A = np.array([r.a for r in rows], dtype=float).reshape(-1, 2)
        b = np.array([r.b for r in rows], dtype=float)
        return cls(u_nominal, A, b, u_box, slack_weight)


@dataclass
class QpSolution:
    u_star: np.ndarray
    slack: np.ndarray
    active_set: list[int]
    objective: float
    multipliers: np.ndarray = field(repr=False)

    @property
    def softened(self) -> bool:
        return bool(np.any(self.slack > 0))


def _stack(problem: QpProblem):
    U = problem.u_box
    G = np.vstack([problem.A, _BOX])
    h = np.concatenate([problem.b, [U, U, U, U]])
    return G, h


def _tolerance(G, h, U):
    return FEAS_TOL * (1.0 + np.abs(h) + U * np.abs(G).sum(axis=1))


def _solve_hard(un, G, h, U):
    """Exact minimizer of ||u - un||^2 over {G u <= h}, or None if empty.

    Returns ``(u, lam)`` with one multiplier per row of ``G``.
    """
    m = len(G)
    tol = _tolerance(G, h, U)
    norm2 = np.einsum("ij,ij->i", G, G)
    zero = norm2 == 0.0
    if np.any(zero & (h < -tol)):
        return None
    lam = np.zeros(m)

    r = G @ un - h
    if np.all(r <= tol):
        return un.copy(), lam

    # one active constraint: projection onto a violated line
    viol = np.flatnonzero((r > tol) & ~zero)
    cand = un - (r[viol] / norm2[viol])[:, None] * G[viol]
    ok = np.all(cand @ G.T - h <= tol, axis=1)
    if ok.any():
        k = _pick(cand[ok], un)
        j = viol[ok][k]
        lam[j] = 2 * r[j] / norm2[j]
        return cand[ok][k], lam

    # two active constraints: vertices with nonnegative multipliers
    idx = np.flatnonzero(~zero)
    jj, kk = np.triu_indices(len(idx), 1)
    jj, kk = idx[jj], idx[kk]
    g1, g2 = G[jj], G[kk]
    det = g1[:, 0] * g2[:, 1] - g1[:, 1] * g2[:, 0]
    scale = np.sqrt(norm2[jj] * norm2[kk])
    keep = np.abs(det) > 1e-13 * scale
    jj, kk, g1, g2, det = jj[keep], kk[keep], g1[keep], g2[keep], det[keep]
    if len(jj) == 0:
        return None
    h1, h2 = h[jj], h[kk]
    vert = np.column_stack([(h1 * g2[:, 1] - h2 * g1[:, 1]) / det,
                            (g1[:, 0] * h2 - g2[:, 0] * h1) / det])
    # 2 (un - u) = l1 g1 + l2 g2
    w = 2 * (un - vert)
    l1 = (w[:, 0] * g2[:, 1] - w[:, 1] * g2[:, 0]) / det
    l2 = (g1[:, 0] * w[:, 1] - g1[:, 1] * w[:, 0]) / det
    mult_ok = (l1 >= -MULT_TOL * (1 + np.abs(l2))) & (l2 >= -MULT_TOL * (1 + np.abs(l1)))
    feas = np.all(vert @ G.T - h <= tol, axis=1)
    good = mult_ok & feas
    if not good.any():
        if feas.any():
            # numerically degenerate KKT: fall back to the best feasible vertex
            good = feas
            l1 = np.maximum(l1, 0.0)
            l2 = np.maximum(l2, 0.0)
        else:
            return None
    k = _pick(vert[good], un)
    sel = np.flatnonzero(good)[k]
    lam[jj[sel]] = max(l1[sel], 0.0)
    lam[kk[sel]] = max(l2[sel], 0.0)
    return vert[sel], lam


def _pick(points, un):
    """Index of the closest point to ``un``; ties go to the lexicographically smallest."""
    dist = np.einsum("ij,ij->i", points - un, points - un)
    best = dist.min()
    near = np.flatnonzero(dist <= best + 1e-15 * (1 + best))
    if len(near) == 1:
        return int(near[0])
    order = np.lexsort((points[near, 1], points[near, 0]))
    return int(near[order[0]])


def _soft_objective(u, un, A, b, rho):
    s = np.maximum(A @ u - b, 0.0)
    return float((u - un) @ (u - un) + rho * s @ s)


def _solve_soft(un, A, b, U, rho, max_iter=200):
    """Projected Newton on the penalized objective over the box.

    The penalized objective is convex and piecewise quadratic, so once the
    set of violated rows and clamped coordinates settles the minimizer is
    the solution of one linear system.
    """
    u = np.clip(un, -U, U)
    eye = np.eye(2)
    for _ in range(max_iter):
        r = A @ u - b
        P = r > 0
        Ap = A[P]
        g = 2 * (u - un) + 2 * rho * Ap.T @ r[P]
        H = 2 * eye + 2 * rho * Ap.T @ Ap
        at_lo = (u <= -U) & (g > 0)
        at_hi = (u >= U) & (g < 0)
        free = ~(at_lo | at_hi)
        d = np.zeros(2)
        if free.any():
            d[free] = -np.linalg.solve(H[np.ix_(free, free)], g[free])
        if np.all(np.abs(d) <= 1e-15 * (1 + np.abs(u))):
            break
        f0 = _soft_objective(u, un, A, b, rho)
        alpha = 1.0
        while True:
            trial = np.clip(u + alpha * d, -U, U)
            if _soft_objective(trial, un, A, b, rho) <= f0 + 1e-4 * g @ (trial - u) or alpha < 1e-12:
                break
            alpha *= 0.5
        if np.array_equal(trial, u):
            break
        u = trial
    return _polish_soft(u, un, A, b, U, rho)


def _polish_soft(u, un, A, b, U, rho):
    """Re-solve the quadratic piece that ``u`` sits on, keeping the result if
    it stays on the same piece."""
    r = A @ u - b
    P = r > 0
    Ap, bp = A[P], b[P]
    H = 2 * np.eye(2) + 2 * rho * Ap.T @ Ap
    q = 2 * un + 2 * rho * Ap.T @ bp
    g = H @ u - q
    fixed = ((u <= -U) & (g > 0)) | ((u >= U) & (g < 0))
    x = u.copy()
    free = ~fixed
    if free.any():
        rhs = q[free] - H[np.ix_(free, fixed)] @ x[fixed]
        x[free] = np.linalg.solve(H[np.ix_(free, free)], rhs)
    x = np.clip(x, -U, U)
    if _soft_objective(x, un, A, b, rho) <= _soft_objective(u, un, A, b, rho):
        return x
    return u


def solve(problem: QpProblem) -> QpSolution:
    un, U, rho = problem.u_nominal, problem.u_box, problem.slack_weight
    G, h = _stack(problem)
    m = len(problem.A)
    hard = _solve_hard(un, G, h, U)
    if hard is not None:
        u, lam = hard
        u = np.clip(u, -U, U)
        slack = np.zeros(m)
        objective = float((u - un) @ (u - un))
    else:
        u = _solve_soft(un, problem.A, problem.b, U, rho)
        slack = np.maximum(problem.A @ u - problem.b, 0.0)
        lam = np.concatenate([2 * rho * slack, np.zeros(4)])
        g = 2 * (u - un) + problem.A.T @ lam[:m]
        # box multipliers from stationarity on clamped coordinates
        lam[m + 0] = max(-g[0], 0.0) if u[0] >= U else 0.0
        lam[m + 1] = max(g[0], 0.0) if u[0] <= -U else 0.0
        lam[m + 2] = max(-g[1], 0.0) if u[1] >= U else 0.0
        lam[m + 3] = max(g[1], 0.0) if u[1] <= -U else 0.0
        objective = float((u - un) @ (u - un) + rho * slack @ slack)
    tol = _tolerance(G, h, U)
    gap = G @ u - h - np.concatenate([slack, np.zeros(4)])
    active = [int(k) for k in np.flatnonzero(np.abs(gap) <= tol) if k < m]
    return QpSolution(u, slack, active, objective, lam)


def solve_arrays(u_nominal, A, b, u_box, slack_weight=1e6):
    """Fast path for the simulator: returns ``(u_star, slack)``."""
    un = np.asarray(u_nominal, dtype=float)
    G = np.vstack([A, _BOX])
    h = np.concatenate([b, [u_box] * 4])
    hard = _solve_hard(un, G, h, u_box)
    if hard is not None:
        return np.clip(hard[0], -u_box, u_box), np.zeros(len(b))
    u = _solve_soft(un, A, b, u_box, slack_weight)
    return u, np.maximum(A @ u - b, 0.0)


@dataclass
class KktReport:
    stationarity: float
    primal: float
    dual: float
    complementarity: float

    @property
    def worst(self) -> float:
        return max(self.stationarity, self.primal, self.dual, self.complementarity)

    def ok(self, tol: float = 1e-8) -> bool:
        return self.worst <= tol


def verify_kkt(problem: QpProblem, solution: QpSolution, active_tol: float = 1e-7) -> KktReport:
    """Independent optimality certificate for a solution.

    Multipliers are recomputed by nonnegative least squares on the nearly
    active constraints rather than taken from the solver. Residuals are
    relative to the magnitude of the gradient terms they balance. A solution
    with zero slack is checked against the hard problem, otherwise against
    the softened problem in the joint (u, slack) variables.
    """
    un, U, rho = problem.u_nominal, problem.u_box, problem.slack_weight
    A, b = problem.A, problem.b
    m = len(b)
    u, s = solution.u_star, solution.slack
    softened = bool(np.any(s > 0))

    if not softened:
        G, h = _stack(problem)
        grad = 2 * (u - un)
        cons = G @ u - h
        J = G
    else:
        # variables z = (u, s); rows: a.u - s <= b, -s <= 0, box on u
        n = 2 + m
        grad = np.concatenate([2 * (u - un), 2 * rho * s])
        J = np.zeros((2 * m + 4, n))
        J[:m, :2] = A
        J[:m, 2:] = -np.eye(m)
        J[m:2 * m, 2:] = -np.eye(m)
        J[2 * m:, :2] = _BOX
        h = np.concatenate([b, np.zeros(m), [U] * 4])
        cons = J[:, :2] @ u + J[:, 2:] @ s - h

    scale_c = 1.0 + np.abs(h) + np.abs(J).sum(axis=1) * (U + (np.max(s) if m else 0.0))
    near = np.flatnonzero(cons >= -active_tol * scale_c)
    if len(near):
        lam, _ = nnls(J[near].T, -grad)
    else:
        lam = np.zeros(0)
    resid = grad + J[near].T @ lam
    mag = 1.0 + np.abs(grad).max(initial=0.0) + (np.abs(J[near].T * lam).max(initial=0.0))
    stationarity = float(np.abs(resid).max(initial=0.0) / mag)
    primal = float(np.max(np.maximum(cons, 0.0) / scale_c, initial=0.0))
    if softened:
        primal = max(primal, float(np.max(np.maximum(-s, 0.0), initial=0.0)))
    dual = float(np.max(np.maximum(-lam, 0.0), initial=0.0))
    complementarity = float(np.max(np.abs(lam * cons[near]), initial=0.0) / mag)
    return KktReport(stationarity, primal, dual, complementarity)


def feasible_polygon(A, b, u_box: float) -> np.ndarray:
    """Vertices of ``{|u_m| <= U, A u <= b}`` by successive half-plane clipping.

    Returns an empty (0, 2) array when the region is empty. Used as an
    independent feasibility check on the solver.
    """
    U = u_box
    poly = np.array([[-U, -U], [U, -U], [U, U], [-U, U]], dtype=float)
    for a, c in zip(np.asarray(A, float).reshape(-1, 2), np.asarray(b, float).reshape(-1)):
        if len(poly) == 0:
            break
        val = poly @ a - c
        tol = FEAS_TOL * (1 + abs(c) + np.abs(a).sum() * U)
        out = []
        n = len(poly)
        for k in range(n):
            p, q = poly[k], poly[(k + 1) % n]
            vp, vq = val[k], val[(k + 1) % n]
            if vp <= tol:
                out.append(p)
            if (vp <= tol) != (vq <= tol) and vp != vq:
                t = vp / (vp - vq)
                out.append(p + t * (q - p))
        poly = np.array(out).reshape(-1, 2)
    return poly
