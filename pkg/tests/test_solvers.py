import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, milp

from dspi import generators as gen
from dspi import instance as im
from dspi import solvers
from conftest import (path_lp_best_response, random_continuous, random_discrete, subset_oracle)


def test_agent_lp_diamond(diamond):
    # two routes of base length 2 and 3 plus a shortcut: the LP oracle agrees
    val, xf = solvers.best_response_continuous(diamond, diamond.zero_profile(), 0)
    assert val == pytest.approx(path_lp_best_response(diamond, diamond.zero_profile(), 0), abs=1e-9)
    assert diamond.costs[0] @ xf <= diamond.budgets[0] + 1e-9


def test_agent_lp_grid_oracle(ladder2):
    # agent 0 on the ladder: best split of one unit over its two paths is 1/2 each
    best = 0.0
    for t in np.linspace(0, 1, 101):
        x = np.zeros((2, 7))
        x[0, 2], x[0, 3] = t, 1 - t
        best = max(best, im.path_value(ladder2, x, 0))
    val, xf = solvers.best_response_continuous(ladder2, ladder2.zero_profile(), 0)
    assert val == pytest.approx(best, abs=1e-12) == pytest.approx(0.5)
    assert np.allclose(xf, [0, 0, 0.5, 0.5, 0, 0, 0])


@pytest.mark.parametrize("seed", range(8))
def test_agent_lp_matches_path_formulation(seed):
    inst = random_continuous(seed, n=6, density=0.35, agents=3)
    rng = np.random.default_rng(seed)
    x = rng.random((3, inst.n_arcs)) * 0.3
    for f in range(3):
        val, _ = solvers.best_response_continuous(inst, x, f)
        assert val == pytest.approx(path_lp_best_response(inst, x, f), abs=1e-8)


def test_lp_solve_statuses():
    lp = solvers.LinearProgram(np.array([1.0]), np.array([[1.0]]), np.array([-1.0]),
                               np.zeros(1), np.full(1, np.inf), True)
    assert solvers.lp_solve(lp).status == solvers.INFEASIBLE
    lp = solvers.LinearProgram(np.array([1.0]), np.zeros((1, 1)), np.zeros(1),
                               np.zeros(1), np.full(1, np.inf), True)
    assert solvers.lp_solve(lp).status == solvers.UNBOUNDED


def test_regularized_kkt(ladder2):
    x = np.zeros((2, 7))
    anchor = np.concatenate([x[1], im.potentials(ladder2, x, 1)])
    sub = solvers.regularized_subproblem(ladder2, x, 1, anchor, 0.01)
    kkt = solvers.solve_regularized(sub)
    assert kkt.max <= 1e-8
    val, xf, _ = solvers.best_response_regularized(sub, ladder2, x, 1)
    # the proximal term only costs a little optimality at small tau
    assert val == pytest.approx(solvers.best_response_continuous(ladder2, x, 1)[0], abs=0.05)


def test_regularized_tau_validation(ladder2):
    with pytest.raises(ValueError):
        solvers.regularized_subproblem(ladder2, ladder2.zero_profile(), 0, np.zeros(13), 0.0)


@pytest.mark.parametrize("seed", range(10))
def test_discrete_best_response_matches_enumeration(seed):
    inst = random_discrete(seed, n=5, density=0.45, agents=2)
    rng = np.random.default_rng(seed)
    x = np.zeros((2, inst.n_arcs))
    x[1, rng.integers(inst.n_arcs)] = 1.0
    for f in range(2):
        val, xf = solvers.best_response_discrete(inst, x, f)
        assert val == subset_oracle(inst, x, f)
        assert inst.costs[f] @ xf <= inst.budgets[f] + 1e-9


def test_discrete_tie_prefers_empty_set():
    inst = gen.gen_ladder(gen.LadderSpec(2, epsilon=0.0, mode=im.DISCRETE))
    x = inst.zero_profile()
    val, xf = solvers.best_response_discrete(inst, x, 0)
    # one arc cannot cut both disjoint routes, so doing nothing ties and wins
    assert val == 0.0 and not xf.any()


def milp_best_response(instance, profile, f):
    net = instance.network
    m, n = net.n_arcs, net.n_nodes
    others = np.delete(profile, f, axis=0).max(axis=0)
    base = net.d0 + net.ext * others
    c = np.zeros(m + n)
    c[m + instance.target_index(f)] = -1.0
    c[m + instance.source_index(f)] = 1.0
    a = np.zeros((m + 1, m + n))
    for i in range(m):
        a[i, m + net.heads[i]] = 1.0
        a[i, m + net.tails[i]] = -1.0
        a[i, i] = -net.ext[i] * (others[i] == 0)
    a[m, :m] = instance.costs[f]
    ub = np.concatenate([base, [instance.budgets[f]]])
    res = milp(c, constraints=LinearConstraint(a, -np.inf, ub),
               integrality=np.concatenate([np.ones(m), np.zeros(n)]),
               bounds=Bounds(np.zeros(m + n), np.concatenate([np.ones(m), np.full(n, im.big_m(instance))])),
               options={"mip_rel_gap": 0.0})
    return -res.fun


@pytest.mark.parametrize("seed", range(4))
def test_branch_and_bound_matches_milp(seed):
    inst = random_discrete(seed, n=7, density=0.6, agents=2)
    x = inst.zero_profile()
    cands = [a for a in range(inst.n_arcs) if inst.costs[0][a] <= inst.budgets[0]]
    assert len(cands) > solvers.ENUM_MAX_CANDIDATES  # exercises branch and bound
    val, xf = solvers.best_response_discrete(inst, x, 0)
    assert val == pytest.approx(milp_best_response(inst, x, 0), abs=1e-9)
    assert inst.costs[0] @ xf <= inst.budgets[0] + 1e-9


def test_discrete_requires_binary(ladder2):
    disc = ladder2.with_mode(im.DISCRETE)
    with pytest.raises(im.InstanceError):
        solvers.best_response_discrete(disc, np.full((2, 7), 0.5), 0)


def test_verify_equilibrium_reports(ladder2):
    rep = solvers.verify_equilibrium(ladder2, ladder2.zero_profile())
    assert not rep.passed and rep.max_gap == pytest.approx(0.5)
    x = np.zeros((2, 7))
    x[0, 0] = 1.0  # cost 3 > budget 1
    assert not solvers.verify_equilibrium(ladder2, x).feasible[0]


def test_centralized_continuous_ladder(ladder2):
    value, x = solvers.centralized_continuous(ladder2)
    assert value == pytest.approx(4 / 3, abs=1e-9)
    assert im.social_welfare(ladder2, x) == pytest.approx(value, abs=1e-9)
    assert float(np.sum(ladder2.costs * x)) <= ladder2.budgets.sum() + 1e-9


@pytest.mark.parametrize("seed", range(6))
def test_centralized_discrete_matches_enumeration(seed):
    inst = random_discrete(seed, n=5, density=0.4, agents=2)
    value, x = solvers.centralized_discrete(inst)
    brute, _ = solvers.centralized_discrete_enum(inst)
    assert value == pytest.approx(brute, abs=1e-9)
    assert all(im.feasible(inst, x, f) for f in range(inst.n_agents))


def test_centralized_mode_checks(ladder2):
    with pytest.raises(im.InstanceError):
        solvers.centralized_discrete(ladder2)
    with pytest.raises(im.InstanceError):
        solvers.centralized_continuous(ladder2.with_mode(im.DISCRETE))


def test_feasible_subsets_lexicographic():
    inst = gen.gen_ladder(gen.LadderSpec(1, epsilon=0.0, mode=im.DISCRETE))
    subsets = solvers.feasible_subsets(inst, 0)
    assert subsets == [(), (0,), (1,), (2,), (3,)]
