"""Linear complementarity problems and Lemke's complementary pivoting method.

LCP(q, M): find ``w >= 0`` with ``q + M w >= 0`` and ``w'(q + M w) = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SOLVED = "solved"
RAY = "ray_termination"
ITERATION_LIMIT = "iteration_limit"

PIVOT_TOL = 1e-10
TIE_TOL = 1e-11


@dataclass(frozen=True, eq=False)
class LcpProblem:
    q: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).ravel()
        m = np.asarray(self.m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != q.size:
            raise ValueError(f"incompatible LCP data: q {q.shape}, M {m.shape}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "m", m)

    @property
    def dim(self) -> int:
        return self.q.size


@dataclass(eq=False)
class LcpSolution:
    w: np.ndarray
    slack: np.ndarray
    status: str
    pivots: int
    basis: list = field(default_factory=list)
    ray: np.ndarray | None = None
    log: list = field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


@dataclass(frozen=True)
class Residuals:
    negativity: float
    infeasibility: float
    complementarity: float
    tol: float

    @property
    def max(self) -> float:
        return max(self.negativity, self.infeasibility, self.complementarity)

    @property
    def passed(self) -> bool:
        return self.max <= self.tol


def verify_solution(problem: LcpProblem, w, tol=1e-8) -> Residuals:
    w = np.asarray(w, dtype=float)
    s = problem.q + problem.m @ w
    return Residuals(
        negativity=float(max(0.0, -w.min(initial=0.0))),
        infeasibility=float(max(0.0, -s.min(initial=0.0))),
        complementarity=float(abs(w @ s)),
        tol=tol,
    )


def _lex_min_row(tab, rows, col, d):
    """Lexicographic minimum ratio test over ``rows`` for entering ``col``."""
    piv = tab[rows, col]
    ratios = tab[rows, -1] / piv
    best = ratios.min()
    keep = ratios <= best + TIE_TOL * (1.0 + abs(best))
    rows, piv = rows[keep], piv[keep]
    k = 0
    while rows.size > 1 and k < d:
        vals = tab[rows, k] / piv
        lo = vals.min()
        keep = vals <= lo + TIE_TOL
        rows, piv = rows[keep], piv[keep]
        k += 1
    return int(rows[0])


def _pivot(tab, r, col):
    tab[r] /= tab[r, col]
    colv = tab[:, col].copy()
    colv[r] = 0.0
    tab -= np.outer(colv, tab[r])


def lemke_solve(problem: LcpProblem, covering=None, max_pivots=None, log=False) -> LcpSolution:
    """Solve LCP(q, M) by Lemke's method with a lexicographic ratio test.

    Columns of the working tableau are ``[w-slacks | z | z0 | rhs]`` for the
    system ``s - M z - d z0 = q``; the slack block holds the current basis
    inverse, which is what the lexicographic rule compares.
    """
    q, m = problem.q, problem.m
    d = q.size
    cov = np.ones(d) if covering is None else np.asarray(covering, dtype=float)
    if cov.shape != (d,) or np.any(cov <= 0):
        raise ValueError("covering vector must be strictly positive")
    if max_pivots is None:
        max_pivots = 100 * d + 1000
    if max_pivots < 1:
        raise ValueError("max_pivots must be >= 1")

    if d == 0 or q.min() >= 0:
        return LcpSolution(np.zeros(d), q.copy(), SOLVED, 0, list(range(d)))

    z0 = 2 * d
    tab = np.hstack([np.eye(d), -m, -cov[:, None], q[:, None]])
    basis = list(range(d))
    pivlog = []

    ratios = q / cov
    lo = ratios.min()
    ties = np.flatnonzero(ratios <= lo + TIE_TOL * (1.0 + abs(lo)))
    r = int(ties[-1])
    _pivot(tab, r, z0)
    leaving = basis[r]
    basis[r] = z0
    pivots = 1
    if log:
        pivlog.append((z0, leaving))

    status = ITERATION_LIMIT
    ray = None
    while pivots < max_pivots:
        entering = leaving + d if leaving < d else leaving - d
        colv = tab[:, entering]
        rows = np.flatnonzero(colv > PIVOT_TOL)
        if rows.size == 0:
            status = RAY
            ray = -colv.copy()
            break
        zrow = basis.index(z0)
        r = _lex_min_row(tab, rows, entering, d)
        if r != zrow and colv[zrow] > PIVOT_TOL:
            # let the artificial variable leave whenever it ties for the minimum ratio
            if tab[zrow, -1] / colv[zrow] <= tab[r, -1] / colv[r] + TIE_TOL:
                r = zrow
        _pivot(tab, r, entering)
        leaving = basis[r]
        basis[r] = entering
        pivots += 1
        if log:
            pivlog.append((entering, leaving))
        if leaving == z0:
            status = SOLVED
            break

    w = _basic_z(tab, basis, d)
    if status == SOLVED:
        w = _refine(problem, cov, basis, w)
    slack = q + m @ w
    sol = LcpSolution(w, slack, status, pivots, list(basis), ray, pivlog)
    return sol


def _basic_z(tab, basis, d):
    z = np.zeros(d)
    for i, b in enumerate(basis):
        if d <= b < 2 * d:
            z[b - d] = tab[i, -1]
    return np.maximum(z, 0.0)


def _refine(problem, cov, basis, fallback):
    """Recompute basic variables from the original data to shed pivoting drift."""
    d = problem.dim
    cols = np.hstack([np.eye(d), -problem.m, -cov[:, None]])[:, basis]
    try:
        xb = np.linalg.solve(cols, problem.q)
    except np.linalg.LinAlgError:
        return fallback
    z = np.zeros(d)
    for v, b in zip(xb, basis):
        if d <= b < 2 * d:
            z[b - d] = v
    z = np.where(z < 0, 0.0, z)
    old = verify_solution(problem, fallback, 0.0).max
    new = verify_solution(problem, z, 0.0).max
    return z if new <= old else fallback


def copositivity_sample(m, trials=10_000, seed=0) -> float:
    """Minimum of ``v'Mv`` over sampled nonnegative unit vectors.

    Half the draws are dense (folded Gaussians), half have random sparse
    support, since copositivity violations usually live on small faces.
    """
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    rng = np.random.default_rng(seed)
    best = np.inf
    done = 0
    batch = 2048
    while done < trials:
        k = min(batch, trials - done)
        v = np.abs(rng.standard_normal((k, d)))
        sparse = rng.random(k) < 0.5
        if sparse.any():
            support = rng.random((int(sparse.sum()), d)) < rng.uniform(1.0 / d, 0.5, (int(sparse.sum()), 1))
            v[sparse] *= support
        norms = np.linalg.norm(v, axis=1)
        v[norms == 0, 0] = 1.0
        v /= np.linalg.norm(v, axis=1)[:, None]
        vals = np.einsum("ij,jk,ik->i", v, m, v)
        best = min(best, float(vals.min()))
        done += k
    return best


def dump(problem: LcpProblem, path, solution: LcpSolution | None = None) -> None:
    """Write q, M (row-major, full precision) and the pivot log for debugging."""
    lines = [f"dim {problem.dim}", "q"]
    lines.append(" ".join(repr(float(v)) for v in problem.q))
    lines.append("M")
    lines.extend(" ".join(repr(float(v)) for v in row) for row in problem.m)
    if solution is not None:
        lines.append(f"status {solution.status} pivots {solution.pivots}")
        lines.append("pivots (entering leaving)")
        lines.extend(f"{e} {l}" for e, l in solution.log)
    Path(path).write_text("\n".join(lines) + "\n")
