"""Agent and centralized subproblems.

Continuous best responses are LPs in ``(x_f, y_f)``; the regularized variant
is a strictly concave QP solved through its KKT system with Lemke's method;
discrete best responses are solved exactly by ordered subset enumeration
(few candidate arcs) or branch-and-bound on LP relaxations.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from . import instance as im
from .instance import CONTINUOUS, DISCRETE, InstanceError, InterdictionInstance
from .lcp import LcpProblem, lemke_solve

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

ENUM_MAX_CANDIDATES = 20
BNB_NODE_CAP = 1_000_000

_HIGHS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


class SolverError(RuntimeError):
    pass


class SizeError(SolverError):
    """Instance is beyond what an exact search here is meant to handle."""


@dataclass(eq=False)
class LinearProgram:
    """``max/min c.z`` s.t. ``a_ub z <= b_ub`` and ``lower <= z <= upper``."""

    c: np.ndarray
    a_ub: object
    b_ub: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    maximize: bool = True


@dataclass(eq=False)
class LpResult:
    status: str
    value: float = np.nan
    z: np.ndarray | None = None


def lp_solve(lp: LinearProgram) -> LpResult:
    sign = -1.0 if lp.maximize else 1.0
    res = linprog(sign * np.asarray(lp.c, dtype=float), A_ub=lp.a_ub, b_ub=lp.b_ub,
                  bounds=np.column_stack([lp.lower, lp.upper]), method="highs-ds",
                  options=_HIGHS)
    if res.status == 2:
        return LpResult(INFEASIBLE)
    if res.status == 3:
        return LpResult(UNBOUNDED)
    if res.status != 0:
        raise SolverError(f"LP solver failed: {res.message}")
    return LpResult(OPTIMAL, sign * res.fun, res.x)


# ------------------------------------------------------------ continuous agent


def _others_sum(x, f):
    return x.sum(axis=0) - x[f]


def agent_lp(instance: InterdictionInstance, profile, f: int) -> LinearProgram:
    """Agent ``f``'s dual-potential LP with the other agents' interdiction fixed.

    Variables are ``(x_f, y_f)``; ``y`` is boxed in ``[0, M]``.
    """
    x = im.check_profile(instance, profile)
    net = instance.network
    m, n = net.n_arcs, net.n_nodes
    c = np.zeros(m + n)
    c[m + instance.target_index(f)] += 1.0
    c[m + instance.source_index(f)] -= 1.0
    rows = np.arange(m)
    # y_v - y_u - x_uv <= d0_uv + sum of the others' x_uv
    arc_rows = sp.csr_matrix(
        (np.concatenate([-np.ones(m), np.ones(m), -np.ones(m)]),
         (np.concatenate([rows, rows, rows]),
          np.concatenate([rows, m + net.heads, m + net.tails]))),
        shape=(m, m + n))
    budget_row = sp.csr_matrix(np.concatenate([instance.costs[f], np.zeros(n)])[None, :])
    a_ub = sp.vstack([arc_rows, budget_row]).tocsr()
    b_ub = np.concatenate([net.d0 + _others_sum(x, f), [instance.budgets[f]]])
    lower = np.zeros(m + n)
    upper = np.concatenate([np.full(m, np.inf), np.full(n, im.big_m(instance))])
    return LinearProgram(c, a_ub, b_ub, lower, upper, True)


def best_response_continuous(instance: InterdictionInstance, profile, f: int):
    """Return ``(value, x_f)``; value is the shortest path under the returned ``x_f``."""
    x = np.array(im.check_profile(instance, profile), dtype=float)
    res = lp_solve(agent_lp(instance, x, f))
    if res.status != OPTIMAL:
        raise SolverError(f"agent {f} LP: {res.status}")
    xf = _clean_own(instance, f, res.z[: instance.n_arcs])
    x[f] = xf
    return im.path_value(instance, x, f), xf


def _clean_own(instance, f, xf):
    xf = np.where(xf < 0, 0.0, xf)
    used = float(instance.costs[f] @ xf)
    if used > instance.budgets[f]:
        xf = xf * (instance.budgets[f] / used)
    return xf


# ------------------------------------------------------------ regularized agent


@dataclass(eq=False)
class RegularizedSubproblem:
    """``max theta - tau * ||(x, y) - anchor||^2`` over the agent's LP feasible set."""

    base: LinearProgram
    anchor: np.ndarray
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")


@dataclass(eq=False)
class QpKkt:
    z: np.ndarray
    duals: np.ndarray
    stationarity: float
    primal: float
    complementarity: float

    @property
    def max(self):
        return max(self.stationarity, self.primal, self.complementarity)


def regularized_subproblem(instance, profile, f, anchor, tau) -> RegularizedSubproblem:
    return RegularizedSubproblem(agent_lp(instance, profile, f), np.asarray(anchor, dtype=float), tau)


def _qp_as_lcp(sub: RegularizedSubproblem):
    """KKT system of ``min tau||z - zbar||^2 - c.z`` s.t. ``G z >= h``, ``z >= 0``.

    Finite upper bounds of the LP become rows of ``G``.
    """
    lp = sub.base
    if np.any(lp.lower != 0):
        raise ValueError("regularized subproblem expects zero lower bounds")
    k = lp.c.size
    a = lp.a_ub.toarray() if sp.issparse(lp.a_ub) else np.asarray(lp.a_ub, dtype=float)
    finite = np.flatnonzero(np.isfinite(lp.upper))
    ub_rows = np.zeros((finite.size, k))
    ub_rows[np.arange(finite.size), finite] = 1.0
    g = -np.vstack([a, ub_rows])
    h = -np.concatenate([lp.b_ub, lp.upper[finite]])
    sign = 1.0 if lp.maximize else -1.0
    lin = -sign * lp.c - 2.0 * sub.tau * sub.anchor
    nr = g.shape[0]
    m = np.zeros((k + nr, k + nr))
    m[:k, :k] = 2.0 * sub.tau * np.eye(k)
    m[:k, k:] = -g.T
    m[k:, :k] = g
    q = np.concatenate([lin, -h])
    return LcpProblem(q, m), g, h, lin


def solve_regularized(sub: RegularizedSubproblem) -> QpKkt:
    problem, g, h, lin = _qp_as_lcp(sub)
    sol = lemke_solve(problem)
    if not sol.solved:
        raise SolverError(f"regularized subproblem: Lemke ended with {sol.status}")
    k = lin.size
    z, mu = sol.w[:k], sol.w[k:]
    return qp_kkt_residuals(sub, z, mu)


def qp_kkt_residuals(sub: RegularizedSubproblem, z, mu) -> QpKkt:
    _, g, h, lin = _qp_as_lcp(sub)
    grad = 2.0 * sub.tau * z + lin - g.T @ mu
    slack = g @ z - h
    stat = float(np.max(np.abs(np.minimum(grad, 0.0)), initial=0.0))
    stat = max(stat, float(np.max(np.abs(z * grad), initial=0.0)))
    primal = float(max(np.max(-slack, initial=0.0), np.max(-z, initial=0.0), np.max(-mu, initial=0.0)))
    comp = float(np.max(np.abs(mu * slack), initial=0.0))
    return QpKkt(z, mu, stat, primal, comp)


def best_response_regularized(sub: RegularizedSubproblem, instance, profile, f):
    """Return ``(value, x_f, y_f)``; value is the shortest path under ``x_f``."""
    kkt = solve_regularized(sub)
    m = instance.n_arcs
    xf = _clean_own(instance, f, kkt.z[:m])
    x = np.array(im.check_profile(instance, profile), dtype=float)
    x[f] = xf
    return im.path_value(instance, x, f), xf, kkt.z[m:]


# ------------------------------------------------------------ discrete agent


def _binary_check(instance, x):
    if instance.mode != DISCRETE:
        raise InstanceError("discrete best response needs a discrete instance")
    if not np.all((x == 0) | (x == 1)):
        raise InstanceError("discrete profiles must be 0/1")


def best_response_discrete(instance: InterdictionInstance, profile, f: int):
    """Exact discrete best response ``(value, x_f)``.

    Ties go to the lexicographically smallest set of arc indices (so doing
    nothing wins whenever it is optimal).
    """
    x = im.check_profile(instance, profile)
    _binary_check(instance, x)
    net = instance.network
    others = np.delete(x, f, axis=0).max(axis=0) if instance.n_agents > 1 else np.zeros(net.n_arcs)
    base = net.d0 + net.ext * others
    cost, budget = instance.costs[f], instance.budgets[f]
    cands = [a for a in range(net.n_arcs)
             if others[a] == 0 and net.ext[a] > 0 and cost[a] <= budget + im.FEAS_TOL]
    if len(cands) <= ENUM_MAX_CANDIDATES:
        value, chosen = _enumerate_subsets(instance, f, base, cands)
    else:
        value, chosen = _branch_and_bound(instance, f, base, cands)
    xf = np.zeros(net.n_arcs)
    xf[list(chosen)] = 1.0
    return value, xf


def _enumerate_subsets(instance, f, base, cands):
    """Depth-first walk over affordable subsets in lexicographic order.

    The payoff is monotone in the chosen set, so a subtree whose best case
    (every remaining affordable candidate added) cannot beat the incumbent
    is skipped.
    """
    ext = instance.network.ext
    cost, budget = instance.costs[f], instance.budgets[f] + im.FEAS_TOL
    sp_len = lambda lengths: im.shortest_path(instance, None, f, lengths)[0]
    best = [sp_len(base), ()]
    k = len(cands)

    def walk(start, chosen, spent, lengths):
        for i in range(start, k):
            a = cands[i]
            if spent + cost[a] > budget:
                continue
            new = lengths.copy()
            new[a] += ext[a]
            val = sp_len(new)
            chosen2 = chosen + (a,)
            if val > best[0]:
                best[0], best[1] = val, chosen2
            rest = [cands[j] for j in range(i + 1, k) if spent + cost[a] + cost[cands[j]] <= budget]
            if not rest:
                continue
            optimistic = new.copy()
            optimistic[rest] += ext[rest]
            if sp_len(optimistic) > best[0]:
                walk(i + 1, chosen2, spent + cost[a], new)

    walk(0, (), 0.0, np.array(base, dtype=float))
    return best[0], best[1]


def _relaxation(instance, f, base, cands, fixed):
    """LP relaxation with ``x_a`` in [0, 1] for free candidates, ``fixed`` pins values."""
    net = instance.network
    m, n = net.n_arcs, net.n_nodes
    k = len(cands)
    col = {a: j for j, a in enumerate(cands)}
    c = np.zeros(k + n)
    c[k + instance.target_index(f)] += 1.0
    c[k + instance.source_index(f)] -= 1.0
    a_ub = sp.lil_matrix((m + 1, k + n))
    for a in range(m):
        a_ub[a, k + net.heads[a]] = 1.0
        a_ub[a, k + net.tails[a]] = -1.0
        if a in col:
            a_ub[a, col[a]] = -net.ext[a]
    a_ub[m, :k] = instance.costs[f][cands]
    b_ub = np.concatenate([base, [instance.budgets[f]]])
    lower = np.zeros(k + n)
    upper = np.concatenate([np.ones(k), np.full(n, im.big_m(instance))])
    for j, v in fixed.items():
        lower[j] = upper[j] = v
    return lp_solve(LinearProgram(c, a_ub.tocsr(), b_ub, lower, upper, True))


def _branch_and_bound(instance, f, base, cands):
    ext = instance.network.ext
    cands = list(cands)
    cost = instance.costs[f][cands]
    budget = instance.budgets[f] + im.FEAS_TOL

    def evaluate(bits):
        lengths = np.array(base, dtype=float)
        chosen = [cands[j] for j in np.flatnonzero(bits)]
        lengths[chosen] += ext[chosen]
        return im.shortest_path(instance, None, f, lengths)[0], tuple(chosen)

    best = evaluate(np.zeros(len(cands)))
    stack = [{}]
    nodes = 0
    while stack:
        fixed = stack.pop()
        nodes += 1
        if nodes > BNB_NODE_CAP:
            raise SizeError("branch-and-bound node cap exceeded")
        res = _relaxation(instance, f, base, cands, fixed)
        if res.status != OPTIMAL or res.value <= best[0] + 1e-9:
            continue
        frac = res.z[: len(cands)]
        floor_bits = np.where(frac >= 1 - 1e-9, 1.0, 0.0)
        if cost @ floor_bits <= budget:
            cand = evaluate(floor_bits)
            if cand[0] > best[0]:
                best = cand
        dist = np.abs(frac - 0.5)
        free = [j for j in range(len(cands)) if j not in fixed]
        fractional = [j for j in free if 1e-9 < frac[j] < 1 - 1e-9]
        if not fractional:
            continue
        j = min(fractional, key=lambda i: (dist[i], i))
        stack.append({**fixed, j: 0.0})
        stack.append({**fixed, j: 1.0})
    return best


# ------------------------------------------------------------ equilibrium check


@dataclass(eq=False)
class EquilibriumReport:
    gaps: np.ndarray
    values: np.ndarray
    best: np.ndarray
    feasible: np.ndarray
    tol: float

    @property
    def max_gap(self) -> float:
        return float(self.gaps.max())

    @property
    def passed(self) -> bool:
        return bool(self.feasible.all() and self.max_gap <= self.tol)


def best_response(instance, profile, f):
    if instance.mode == CONTINUOUS:
        return best_response_continuous(instance, profile, f)
    return best_response_discrete(instance, profile, f)


def verify_equilibrium(instance: InterdictionInstance, profile, tol=1e-6) -> EquilibriumReport:
    """Per-agent best-response gaps; potentials are recomputed from ``x`` alone."""
    x = im.check_profile(instance, profile)
    F = instance.n_agents
    values = im.obstruction_values(instance, x)
    best = np.zeros(F)
    for f in range(F):
        best[f] = best_response(instance, x, f)[0]
    feas = np.array([im.feasible(instance, x, f) for f in range(F)])
    gaps = np.maximum(best - values, 0.0)
    return EquilibriumReport(gaps, values, best, feas, tol)


# ------------------------------------------------------------ centralized


def _central_arrays(instance):
    net = instance.network
    F, m, n = instance.n_agents, net.n_arcs, net.n_nodes
    rows = np.arange(m)
    return F, m, n, rows


def centralized_continuous(instance: InterdictionInstance):
    """Pooled-budget optimum; returns ``(value, profile)``.

    ``value`` is the LP objective; the profile's welfare agrees with it up
    to solver tolerance.
    """
    if instance.mode != CONTINUOUS:
        raise InstanceError("centralized_continuous needs a continuous instance")
    net = instance.network
    F, m, n, rows = _central_arrays(instance)
    nx, ny = F * m, F * n
    c = np.zeros(nx + ny)
    blocks = []
    for f in range(F):
        c[nx + f * n + instance.target_index(f)] += 1.0
        c[nx + f * n + instance.source_index(f)] -= 1.0
        data = [np.ones(m), -np.ones(m)]
        cols = [nx + f * n + net.heads, nx + f * n + net.tails]
        for g in range(F):
            data.append(-np.ones(m))
            cols.append(g * m + rows)
        r = np.tile(rows, len(data))
        blocks.append(sp.csr_matrix((np.concatenate(data), (r, np.concatenate(cols))), shape=(m, nx + ny)))
    budget_row = sp.csr_matrix(np.concatenate([instance.costs.ravel(), np.zeros(ny)])[None, :])
    a_ub = sp.vstack(blocks + [budget_row]).tocsr()
    b_ub = np.concatenate([np.tile(net.d0, F), [instance.budgets.sum()]])
    lower = np.zeros(nx + ny)
    upper = np.concatenate([np.full(nx, np.inf), np.full(ny, im.big_m(instance))])
    res = lp_solve(LinearProgram(c, a_ub, b_ub, lower, upper, True))
    if res.status != OPTIMAL:
        raise SolverError(f"centralized LP: {res.status}")
    x = np.where(res.z[:nx] < 0, 0.0, res.z[:nx]).reshape(F, m)
    used = float(np.sum(instance.costs * x))
    if used > instance.budgets.sum():
        x *= instance.budgets.sum() / used
    return float(res.value), x


CENTRAL_DISCRETE_MAX_VARS = 20_000


def centralized_discrete(instance: InterdictionInstance):
    """Exact discrete optimum with individual budgets; returns ``(value, profile)``.

    Solved as a mixed-integer program (max semantics linearized through an
    arc-level indicator ``z_a <= sum_f x_fa``).
    """
    if instance.mode != DISCRETE:
        raise InstanceError("centralized_discrete needs a discrete instance")
    net = instance.network
    F, m, n, rows = _central_arrays(instance)
    nx, ny = F * m, F * n
    if nx + m + ny > CENTRAL_DISCRETE_MAX_VARS:
        raise SizeError("instance too large for the exact discrete centralized solver")
    zo, yo = nx, nx + m
    nvar = nx + m + ny
    c = np.zeros(nvar)
    blocks = []
    for f in range(F):
        c[yo + f * n + instance.target_index(f)] += 1.0
        c[yo + f * n + instance.source_index(f)] -= 1.0
        blocks.append(sp.csr_matrix(
            (np.concatenate([np.ones(m), -np.ones(m), -net.ext]),
             (np.tile(rows, 3), np.concatenate([yo + f * n + net.heads, yo + f * n + net.tails, zo + rows]))),
            shape=(m, nvar)))
    cover = sp.csr_matrix(
        (np.concatenate([np.ones(m)] + [-np.ones(m)] * F),
         (np.tile(rows, F + 1), np.concatenate([zo + rows] + [g * m + rows for g in range(F)]))),
        shape=(m, nvar))
    budget_rows = sp.csr_matrix(
        (instance.costs.ravel(), (np.repeat(np.arange(F), m), np.arange(nx))), shape=(F, nvar))
    a = sp.vstack(blocks + [cover, budget_rows]).tocsr()
    ub = np.concatenate([np.tile(net.d0, F), np.zeros(m), instance.budgets])
    upper = np.concatenate([np.ones(nx + m), np.full(ny, im.big_m(instance))])
    integrality = np.concatenate([np.ones(nx), np.zeros(m + ny)])
    res = milp(-c, constraints=LinearConstraint(a, -np.inf, ub), integrality=integrality,
               bounds=Bounds(np.zeros(nvar), upper),
               options={"mip_rel_gap": 0.0, "presolve": True})
    if res.status != 0:
        raise SolverError(f"centralized discrete MIP: {res.message}")
    x = np.round(res.x[:nx]).reshape(F, m)
    return im.social_welfare(instance, x), x


def centralized_discrete_enum(instance: InterdictionInstance, cap=200_000):
    """Brute-force centralized discrete optimum over all joint feasible profiles."""
    F = instance.n_agents
    per_agent = [feasible_subsets(instance, f, cap) for f in range(F)]
    total = int(np.prod([len(s) for s in per_agent], dtype=float))
    if total > cap:
        raise SizeError(f"{total} joint profiles exceed the cap {cap}")
    best = (-np.inf, None)
    for combo in itertools.product(*per_agent):
        x = np.zeros((F, instance.n_arcs))
        for f, subset in enumerate(combo):
            x[f, list(subset)] = 1.0
        val = im.social_welfare(instance, x)
        if val > best[0]:
            best = (val, x)
    return best


def feasible_subsets(instance, f, cap=200_000):
    """All budget-feasible arc subsets of agent ``f`` (lexicographic order)."""
    cost, budget = instance.costs[f], instance.budgets[f] + im.FEAS_TOL
    m = instance.n_arcs
    out = [()]

    def walk(start, chosen, spent):
        for a in range(start, m):
            if spent + cost[a] <= budget:
                if len(out) >= cap:
                    raise SizeError("too many feasible subsets")
                out.append(chosen + (a,))
                walk(a + 1, chosen + (a,), spent + cost[a])

    walk(0, (), 0.0)
    return out
