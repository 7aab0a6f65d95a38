import itertools
import sys

import numpy as np
import pytest
from scipy.optimize import linprog

from dspi import generators as gen
from dspi import instance as im


@pytest.fixture
def ladder2():
    return gen.gen_ladder(2)


@pytest.fixture
def diamond():
    """Two disjoint 1->4 routes plus a shortcut arc, one agent."""
    arcs = [(1, 2, 1.0, 1.0), (2, 4, 1.0, 1.0), (1, 3, 2.0, 1.0), (3, 4, 1.0, 1.0), (2, 3, 0.5, 1.0)]
    return im.make_instance([1, 2, 3, 4], arcs, [(1, 4, [1, 2, 1, 1, 3], 2.0)])


def random_continuous(seed, n=6, density=0.4, agents=2, index=0):
    return gen.gen_random(gen.RandomSpec(n, density, agents, seed=seed, index=index))


def random_discrete(seed, n=6, density=0.4, agents=2, index=0, common_pair=False):
    return gen.gen_random(gen.RandomSpec(n, density, agents, seed=seed, index=index, mode=im.DISCRETE,
                                         common_pair=common_pair, integral=True))


def path_oracle_value(instance, profile, f):
    """Shortest path by brute force over all simple paths."""
    lengths = im.aftermath_lengths(instance, profile)
    return min(sum(lengths[a] for a in p) for p in im.enumerate_paths(instance, f, 100_000))


def path_lp_best_response(instance, profile, f):
    """Independent max-min formulation: ``max t`` with ``t`` below every path length."""
    x = np.asarray(profile, dtype=float)
    m = instance.n_arcs
    base = instance.network.d0 + x.sum(axis=0) - x[f]
    paths = im.enumerate_paths(instance, f, 100_000)
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_ub = np.zeros((len(paths) + 1, m + 1))
    b_ub = np.zeros(len(paths) + 1)
    for i, p in enumerate(paths):
        a_ub[i, -1] = 1.0
        a_ub[i, p] = -1.0
        b_ub[i] = sum(base[a] for a in p)
    a_ub[-1, :m] = instance.costs[f]
    b_ub[-1] = instance.budgets[f]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=[(0, None)] * m + [(None, None)], method="highs-ipm")
    assert res.status == 0
    return -res.fun


def subset_oracle(instance, profile, f):
    """Discrete best-response value by trying every affordable subset."""
    x = np.array(profile, dtype=float)
    best = -np.inf
    for subset in itertools.chain.from_iterable(
            itertools.combinations(range(instance.n_arcs), k) for k in range(instance.n_arcs + 1)):
        if instance.costs[f][list(subset)].sum() > instance.budgets[f] + 1e-9:
            continue
        x[f] = 0
        x[f, list(subset)] = 1
        best = max(best, im.path_value(instance, x, f))
    return best


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
