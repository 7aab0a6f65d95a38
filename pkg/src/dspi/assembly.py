"""Stacked KKT system of the continuous game as one LCP(q, M).

Per agent ``f`` the LP is

    min  phi_f . (x, y)   s.t.  A_f (x, y) >= r_f(x_-f),  (x, y) >= 0

with ``A_f = [[I, G], [-c_f, 0]]`` (G the arc-node incidence) and
``r_f = (-d0 - sum_{g != f} x_g, -b_f)``.  The LCP variable for agent ``f``
is ``(x_f, y_f, lambda_f, beta_f)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import CONTINUOUS, InterdictionInstance, InstanceError, check_profile
from .lcp import LcpProblem, lemke_solve


@dataclass(frozen=True, eq=False)
class AgentBlocks:
    phi: np.ndarray
    a_matrix: np.ndarray
    r_base: np.ndarray
    n_arcs: int
    n_nodes: int

    def rhs(self, others_x: np.ndarray) -> np.ndarray:
        """``r_f(x_-f)`` given the summed interdiction of the other agents."""
        r = self.r_base.copy()
        r[: self.n_arcs] -= others_x
        return r


def _require_continuous(instance):
    if instance.mode != CONTINUOUS:
        raise InstanceError("the LCP formulation covers continuous interdiction only")


def build_agent_blocks(instance: InterdictionInstance, f: int) -> AgentBlocks:
    _require_continuous(instance)
    net = instance.network
    m, n = net.n_arcs, net.n_nodes
    nu = np.zeros(n)
    nu[instance.source_index(f)] += 1.0
    nu[instance.target_index(f)] -= 1.0
    phi = np.concatenate([np.zeros(m), nu])
    a = np.zeros((m + 1, m + n))
    a[:m, :m] = np.eye(m)
    a[:m, m:] = net.incidence
    a[m, :m] = -instance.costs[f]
    r = np.concatenate([-net.d0, [-instance.budgets[f]]])
    return AgentBlocks(phi, a, r, m, n)


@dataclass(frozen=True, eq=False)
class StackedLcp:
    problem: LcpProblem
    n_agents: int
    n_arcs: int
    n_nodes: int

    @property
    def block(self) -> int:
        return 2 * self.n_arcs + self.n_nodes + 1

    def slices(self, f: int) -> dict:
        m, n = self.n_arcs, self.n_nodes
        o = f * self.block
        return {
            "x": slice(o, o + m),
            "y": slice(o + m, o + m + n),
            "lambda": slice(o + m + n, o + 2 * m + n),
            "beta": slice(o + 2 * m + n, o + 2 * m + n + 1),
        }

    def embed(self, x, y, lam, beta) -> np.ndarray:
        w = np.zeros(self.problem.dim)
        for f in range(self.n_agents):
            sl = self.slices(f)
            w[sl["x"]] = x[f]
            w[sl["y"]] = y[f]
            w[sl["lambda"]] = lam[f]
            w[sl["beta"]] = np.atleast_1d(beta[f])
        return w


def assemble_lcp(instance: InterdictionInstance) -> StackedLcp:
    _require_continuous(instance)
    F = instance.n_agents
    m, n = instance.n_arcs, instance.n_nodes
    k = 2 * m + n + 1
    q = np.zeros(F * k)
    big = np.zeros((F * k, F * k))
    for f in range(F):
        blk = build_agent_blocks(instance, f)
        o = f * k
        q[o: o + m + n] = blk.phi
        q[o + m + n: o + k] = -blk.r_base
        # diagonal block [[0, -A'], [A, 0]]
        big[o: o + m + n, o + m + n: o + k] = -blk.a_matrix.T
        big[o + m + n: o + k, o: o + m + n] = blk.a_matrix
        # coupling: other agents' x enter agent f's arc rows with identity
        for g in range(F):
            if g != f:
                og = g * k
                big[o + m + n: o + 2 * m + n, og: og + m] = np.eye(m)
    return StackedLcp(LcpProblem(q, big), F, m, n)


def extract_profile(stacked: StackedLcp, w):
    """Slice an LCP vector into ``(x, y, lambda, beta)`` arrays (one row per agent)."""
    w = np.asarray(w, dtype=float)
    F, m, n = stacked.n_agents, stacked.n_arcs, stacked.n_nodes
    x = np.zeros((F, m))
    y = np.zeros((F, n))
    lam = np.zeros((F, m))
    beta = np.zeros(F)
    for f in range(F):
        sl = stacked.slices(f)
        x[f] = w[sl["x"]]
        y[f] = w[sl["y"]]
        lam[f] = w[sl["lambda"]]
        beta[f] = w[sl["beta"]][0]
    return x, y, lam, beta


def clean_profile(instance, x, tol=1e-9):
    """Clip round-off: negatives to zero and budgets scaled back to feasibility."""
    x = np.where(check_profile(instance, x) < 0, 0.0, x)
    used = np.einsum("fa,fa->f", instance.costs, x)
    over = used > instance.budgets
    if over.any():
        if np.any(used[over] > instance.budgets[over] * (1 + 1e-6) + tol):
            raise InstanceError("profile exceeds a budget by more than round-off")
        x[over] *= (instance.budgets[over] / used[over])[:, None]
    return x


def solve_lcp(instance: InterdictionInstance, covering=None, max_pivots=None):
    """Assemble, run Lemke, and return ``(stacked, solution, profile)``.

    ``profile`` is None unless Lemke reports a solution.
    """
    stacked = assemble_lcp(instance)
    sol = lemke_solve(stacked.problem, covering, max_pivots)
    profile = None
    if sol.solved:
        profile = clean_profile(instance, extract_profile(stacked, sol.w)[0])
    return stacked, sol, profile
