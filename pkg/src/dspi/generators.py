"""Instance generators: the ladder family and random directed graphs."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .instance import CONTINUOUS, DISCRETE, ZeroLengthWarning, make_instance


@dataclass(frozen=True)
class LadderSpec:
    n_agents: int
    epsilon: float = 2.0
    budgets: tuple | None = None
    d0: float = 0.0
    mode: str = CONTINUOUS
    extension: float = 1.0


def ladder_nodes(F):
    """Node ids ``a_1..a_{F+1}`` -> ``1..F+1`` and ``b_1..b_{F+1}`` -> ``F+2..2F+2``."""
    a = list(range(1, F + 2))
    b = list(range(F + 2, 2 * F + 3))
    return a, b


def ladder_arcs(F):
    """Arc list: top horizontals, then verticals, then bottom horizontals."""
    a, b = ladder_nodes(F)
    top = [(a[i], a[i + 1]) for i in range(F)]
    vertical = [(a[i], b[i]) for i in range(F + 1)]
    bottom = [(b[i], b[i + 1]) for i in range(F)]
    return top, vertical, bottom


def gen_ladder(spec: LadderSpec | int):
    if isinstance(spec, int):
        spec = LadderSpec(spec)
    F = spec.n_agents
    if F < 1:
        raise ValueError("a ladder needs at least one agent")
    if spec.epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    a, b = ladder_nodes(F)
    top, vertical, bottom = ladder_arcs(F)
    arcs = [(u, v, spec.d0, spec.extension) for u, v in top + vertical + bottom]
    costs = [1.0 + spec.epsilon] * F + [1.0] * (F + 1) + [1.0 + spec.epsilon] * F
    budgets = spec.budgets or (1.0,) * F
    agents = [(a[0], b[f + 1], costs, budgets[f]) for f in range(F)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroLengthWarning)
        inst = make_instance(a + b, arcs, agents, spec.mode, f"ladder-F{F}-eps{spec.epsilon:g}")
    return inst


def vertical_offset(F):
    return F


def ladder_construction_fractions(F):
    """Exact equilibrium construction on the ladder (unit budgets, any epsilon).

    Agent ``f`` (1-based) puts ``1/(f(f+1))`` on verticals ``1..f`` and
    ``f/(f+1)`` on vertical ``f+1``.  Returns an ``F x (3F+1)`` list of Fractions.
    """
    m = 3 * F + 1
    x = [[Fraction(0)] * m for _ in range(F)]
    off = vertical_offset(F)
    for f in range(1, F + 1):
        for j in range(f):
            x[f - 1][off + j] = Fraction(1, f * (f + 1))
        x[f - 1][off + f] = Fraction(f, f + 1)
    return x


def ladder_equilibrium_construction(F) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in ladder_construction_fractions(F)])


def ladder_centralized_construction(F, epsilon) -> np.ndarray:
    """Each agent splits its unit budget over arcs ``(a_1, a_2)`` and ``(a_1, b_1)``."""
    x = np.zeros((F, 3 * F + 1))
    x[:, 0] = 1.0 / (2.0 + epsilon)
    x[:, vertical_offset(F)] = 1.0 / (2.0 + epsilon)
    return x


@dataclass(frozen=True)
class PoaBound:
    n_agents: int
    epsilon: float
    value: float
    construction_welfare: float
    equilibrium_welfare: float
    vacuous: bool
    centralized_value: float | None = None


def poa_lower_bound_ladder(F, epsilon, check_lp=False) -> PoaBound:
    """Ratio of the centralized construction's welfare to the constructed equilibrium's."""
    cw = F * F / (2.0 + epsilon)
    ew = F * F / (F + 1.0)
    central = None
    if check_lp:
        from .solvers import centralized_continuous
        central = centralized_continuous(gen_ladder(LadderSpec(F, epsilon)))[0]
        if central < cw - 1e-6:
            raise AssertionError("centralized LP below a feasible construction")
    value = cw / ew
    return PoaBound(F, epsilon, value, cw, ew, value < 1.0, central)


# ------------------------------------------------------------ random graphs


@dataclass(frozen=True)
class RandomSpec:
    n_vertices: int
    density: float
    n_agents: int | None = None
    seed: int = 0
    index: int = 0
    cost_range: tuple = (1.0, 5.0)
    d0_range: tuple = (1.0, 5.0)
    budget_fraction: tuple = (0.1, 0.5)
    extension_range: tuple = (1.0, 5.0)
    mode: str = CONTINUOUS
    common_pair: bool = False
    integral: bool = False


def target_arc_count(n, density):
    return max(1, math.ceil(density * n * (n - 1) - 1e-9))


def spec_rng(spec: RandomSpec) -> np.random.Generator:
    """PCG64 stream for ``(seed, index)``; each instance index gets its own stream."""
    ss = np.random.SeedSequence(entropy=spec.seed, spawn_key=(spec.index,))
    return np.random.Generator(np.random.PCG64(ss))


def _random_path(rng, n, s, t, k):
    mids = [int(v) for v in rng.permutation([v for v in range(n) if v not in (s, t)])[:k]]
    seq = [s] + mids + [t]
    return list(zip(seq[:-1], seq[1:]))


def gen_random(spec: RandomSpec):
    if not 0 < spec.density <= 1:
        raise ValueError("density must lie in (0, 1]")
    n = spec.n_vertices
    if n < 2:
        raise ValueError("need at least two vertices")
    rng = spec_rng(spec)
    F = spec.n_agents
    if F is None:
        F = int(rng.integers(1, max(2, math.ceil(n / 2))))
    target = target_arc_count(n, spec.density)

    if spec.common_pair:
        s, t = (int(v) for v in rng.choice(n, 2, replace=False))
        pairs = [(s, t)] * F
    else:
        pairs = [tuple(int(v) for v in rng.choice(n, 2, replace=False)) for _ in range(F)]

    arcs: dict = {}

    def add(arc):
        if arc not in arcs:
            arcs[arc] = len(arcs)

    # one path per agent first, so every pair is connected
    for s, t in pairs:
        room = max(0, target - len(arcs) - 1)
        k = int(rng.integers(0, min(n - 2, room) + 1))
        for arc in _random_path(rng, n, s, t, k):
            add(arc)
    stale = 0
    f = 0
    while len(arcs) < target and stale < 50:
        s, t = pairs[f % F]
        f += 1
        before = len(arcs)
        k = int(rng.integers(0, n - 1))
        for arc in _random_path(rng, n, s, t, k):
            if len(arcs) >= target:
                break
            add(arc)
        stale = stale + 1 if len(arcs) == before else 0
    missing = [(u, v) for u in range(n) for v in range(n) if u != v and (u, v) not in arcs]
    for i in rng.permutation(len(missing))[: max(0, target - len(arcs))]:
        add(missing[i])

    arc_list = sorted(arcs, key=arcs.get)
    m = len(arc_list)

    def draw(lo_hi, size):
        lo, hi = lo_hi
        if spec.integral:
            return rng.integers(int(lo), int(hi) + 1, size).astype(float)
        return rng.uniform(lo, hi, size)

    d0 = draw(spec.d0_range, m)
    ext = draw(spec.extension_range, m) if spec.mode == DISCRETE else np.zeros(m)
    agents = []
    for s, t in pairs:
        c = draw(spec.cost_range, m)
        lo, hi = spec.budget_fraction
        b = float(rng.uniform(lo, hi) * c.sum())
        if spec.integral:
            b = float(math.floor(b))
        b = max(b, float(c.min()))
        agents.append((s, t, c, b))
    arcs_full = [(u, v, float(d), float(e)) for (u, v), d, e in zip(arc_list, d0, ext)]
    name = f"random-n{n}-d{spec.density:g}-F{F}-s{spec.seed}-i{spec.index}"
    meta = {"density": m / (n * (n - 1)), "target_arcs": target}
    return make_instance(list(range(n)), arcs_full, agents, spec.mode, name, meta=meta)
