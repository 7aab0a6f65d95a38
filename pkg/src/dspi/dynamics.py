"""Gauss-Seidel best-response dynamics, plain and regularized.

Each outer iteration visits the agents in ``agent_order``; an agent switches
to its (regularized) best response only on a strict payoff improvement.  The
state of agent ``f`` is ``(x_f, y_f)`` with ``y_f`` the shortest-path
potentials of the current aftermath network.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import instance as im
from . import solvers
from .instance import CONTINUOUS, DISCRETE, InstanceError

CONVERGED = "converged"
CYCLE = "cycle_detected"
ITERATION_LIMIT = "iteration_limit"
FAILED = "solver_failure"

CYCLE_TOL = 1e-9


@dataclass
class DynamicsConfig:
    epsilon: float | None = None
    tau: float = 0.0
    max_outer: int = 1000
    agent_order: tuple | None = None
    initial_profile: np.ndarray | None = None
    improve_tol: float | None = None

    def resolved(self, instance) -> "DynamicsConfig":
        discrete = instance.mode == DISCRETE
        eps = self.epsilon if self.epsilon is not None else (0.5 if discrete else 1e-6)
        if not eps > 0:
            raise ValueError("epsilon must be positive")
        if discrete and eps >= 1:
            raise ValueError("discrete dynamics need epsilon < 1")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if discrete and self.tau > 0:
            raise ValueError("regularization applies to continuous interdiction only")
        order = tuple(range(instance.n_agents)) if self.agent_order is None else tuple(self.agent_order)
        if sorted(order) != list(range(instance.n_agents)):
            raise ValueError("agent_order must be a permutation of the agents")
        x0 = instance.zero_profile() if self.initial_profile is None else np.array(
            im.check_profile(instance, self.initial_profile), dtype=float)
        if self.improve_tol is not None:
            tol = self.improve_tol
        else:
            tol = 0.0 if discrete else (1e-14 if self.tau > 0 else 1e-9)
        return DynamicsConfig(eps, self.tau, self.max_outer, order, x0, tol)


@dataclass
class Step:
    iteration: int
    agent: int
    before: float
    after: float
    updated: bool
    profile: np.ndarray


@dataclass
class DynamicsTrace:
    iterates: list
    potentials: list
    payoffs: list
    status: str
    discrete: bool
    steps: list = field(default_factory=list)
    cycle: tuple | None = None
    config: DynamicsConfig | None = None
    message: str = ""

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def n_outer(self) -> int:
        return len(self.iterates) - 1

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


def _state_delta(xa, ya, xb, yb):
    return max(float(np.max(np.abs(xa - xb), initial=0.0)), float(np.max(np.abs(ya - yb), initial=0.0)))


def _all_potentials(instance, x):
    lengths = im.aftermath_lengths(instance, x)
    return np.array([im.potentials(instance, None, f, lengths) for f in range(instance.n_agents)])


def _find_repeat(iterates, discrete, converged):
    """Earliest ``(j, k)``, ``j < k``, with iterate ``k`` repeating iterate ``j``."""
    if converged:
        return None
    if discrete:
        seen = {}
        for k, it in enumerate(iterates):
            key = np.asarray(it).tobytes()
            if key in seen:
                return seen[key], k
            seen[key] = k
        return None
    stack = np.array([np.ravel(it) for it in iterates])
    for k in range(2, len(stack)):
        d = np.max(np.abs(stack[: k - 1] - stack[k]), axis=1)
        hit = np.flatnonzero(d <= CYCLE_TOL)
        if hit.size:
            return int(hit[0]), k
    return None


def detect_cycle(trace: DynamicsTrace):
    """Span ``(j, k)`` of the first repeated state, or None."""
    return _find_repeat(trace.iterates, trace.discrete, trace.converged)


def gauss_seidel(instance, config: DynamicsConfig | None = None) -> DynamicsTrace:
    cfg = (config or DynamicsConfig()).resolved(instance)
    discrete = instance.mode == DISCRETE
    x = cfg.initial_profile.copy()
    y = _all_potentials(instance, x)
    iterates, pots = [x.copy()], [y]
    payoffs = [im.obstruction_values(instance, x)]
    steps = []
    seen = {x.tobytes(): 0} if discrete else None
    status, cycle, message = ITERATION_LIMIT, None, ""

    for k in range(1, cfg.max_outer + 1):
        try:
            for f in cfg.agent_order:
                before = im.path_value(instance, x, f)
                if cfg.tau > 0:
                    anchor = np.concatenate([x[f], im.potentials(instance, x, f)])
                    sub = solvers.regularized_subproblem(instance, x, f, anchor, cfg.tau)
                    after, xf, _ = solvers.best_response_regularized(sub, instance, x, f)
                else:
                    after, xf = solvers.best_response(instance, x, f)
                updated = after > before + cfg.improve_tol
                if updated:
                    x[f] = xf
                steps.append(Step(k, f, before, after, updated, x.copy()))
        except solvers.SolverError as exc:
            status, message = FAILED, str(exc)
            break
        y = _all_potentials(instance, x)
        iterates.append(x.copy())
        pots.append(y)
        payoffs.append(im.obstruction_values(instance, x))
        if _state_delta(x, y, iterates[-2], pots[-2]) <= cfg.epsilon:
            status = CONVERGED
            break
        if discrete:
            key = x.tobytes()
            if key in seen:
                status, cycle = CYCLE, (seen[key], k)
                break
            seen[key] = k
        else:
            cur = x.ravel()
            for j in range(k - 1):
                if np.max(np.abs(iterates[j].ravel() - cur)) <= CYCLE_TOL:
                    status, cycle = CYCLE, (j, k)
                    break
            if cycle:
                break
    return DynamicsTrace(iterates, pots, payoffs, status, discrete, steps, cycle, cfg, message)


def regularized_gauss_seidel(instance, config: DynamicsConfig) -> DynamicsTrace:
    if instance.mode != CONTINUOUS:
        raise InstanceError("regularized dynamics need continuous interdiction")
    if not config.tau > 0:
        raise ValueError("regularized dynamics need tau > 0")
    return gauss_seidel(instance, config)


def solve_dynamics(instance, config: DynamicsConfig | None = None, fallback_tau=0.01,
                   fallback_max_outer=2000) -> DynamicsTrace:
    """Plain dynamics first; continuous runs that fail retry with regularization."""
    cfg = config or DynamicsConfig()
    trace = gauss_seidel(instance, cfg)
    if trace.converged or instance.mode == DISCRETE or cfg.tau > 0:
        return trace
    retry = DynamicsConfig(cfg.epsilon, fallback_tau, fallback_max_outer, cfg.agent_order,
                           cfg.initial_profile, None)
    return gauss_seidel(instance, retry)


# ------------------------------------------------------------ multi-start


@dataclass
class RunRecord:
    start: int
    order: tuple
    status: str
    outer: int
    tau: float
    welfare: float
    verified: bool
    max_gap: float


@dataclass
class MultiStartResult:
    equilibria: list
    runs: list

    @property
    def welfares(self) -> list:
        return [w for w, _ in self.equilibria]


def random_profile(instance, rng) -> np.ndarray:
    """A random budget-feasible profile (binary in discrete mode)."""
    F, m = instance.n_agents, instance.n_arcs
    x = np.zeros((F, m))
    for f in range(F):
        c, b = instance.costs[f], instance.budgets[f]
        if instance.mode == DISCRETE:
            spent = 0.0
            for a in rng.permutation(m):
                if rng.random() < 0.5 and spent + c[a] <= b:
                    x[f, a] = 1.0
                    spent += c[a]
        else:
            support = rng.random(m) < rng.uniform(0.2, 1.0)
            if not support.any():
                support[rng.integers(m)] = True
            v = rng.random(m) * support
            x[f] = v * (rng.random() * b / float(c @ v))
    return x


def _key(x):
    return np.round(x, 6) + 0.0


def multi_start(instance, n_starts=1, n_orders=1, seed=0, starts=None, config=None,
                tol=1e-6, fallback=True) -> MultiStartResult:
    """Run dynamics over starts x agent orders and collect verified equilibria.

    Start 0 is the zero profile and order 0 the natural order unless
    ``starts`` is given; the rest are drawn from ``seed``.
    """
    rng = np.random.default_rng(seed)
    F = instance.n_agents
    if starts is None:
        starts = [instance.zero_profile()] + [random_profile(instance, rng) for _ in range(n_starts - 1)]
    orders = [tuple(range(F))] + [tuple(int(i) for i in rng.permutation(F)) for _ in range(n_orders - 1)]
    base = config or DynamicsConfig()
    found = {}
    runs = []
    for si, x0 in enumerate(starts):
        for order in orders:
            cfg = DynamicsConfig(base.epsilon, base.tau, base.max_outer, order, x0, base.improve_tol)
            trace = solve_dynamics(instance, cfg) if fallback else gauss_seidel(instance, cfg)
            verified, gap, welfare = False, np.nan, np.nan
            if trace.converged:
                rep = solvers.verify_equilibrium(instance, trace.final, tol)
                verified, gap = rep.passed, rep.max_gap
                welfare = float(rep.values.sum())
                if verified:
                    key = _key(trace.final)
                    found.setdefault(key.tobytes(), (welfare, key))
            runs.append(RunRecord(si, order, trace.status, trace.n_outer, trace.config.tau,
                                  welfare, verified, gap))
    eqs = sorted(found.values(), key=lambda t: (t[0], tuple(t[1].ravel())))
    return MultiStartResult(eqs, runs)


# ------------------------------------------------------------ trace export


def export_trace(trace: DynamicsTrace, path) -> None:
    """One JSON record per agent step, preceded by a header line."""
    lines = [json.dumps({"status": trace.status, "outer": trace.n_outer,
                         "cycle": list(trace.cycle) if trace.cycle else None,
                         "initial": np.asarray(trace.iterates[0]).tolist()})]
    for s in trace.steps:
        lines.append(json.dumps({"iteration": s.iteration, "agent": int(s.agent),
                                 "before": float(s.before), "after": float(s.after),
                                 "updated": bool(s.updated), "profile": s.profile.tolist()}))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path) -> tuple[dict, list]:
    lines = Path(path).read_text().splitlines()
    return json.loads(lines[0]), [json.loads(line) for line in lines[1:]]
