"""Randomized structural properties (hypothesis)."""
import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from dspi import generators as gen
from dspi import instance as im
from dspi import lcp, solvers
from conftest import path_oracle_value

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def graphs(draw, mode=im.CONTINUOUS):
    n = draw(st.integers(3, 6))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=2, max_size=min(14, len(pairs)), unique=True))
    arcs = [(u, v, draw(st.integers(0, 4)) * 0.5, draw(st.integers(1, 3)) * 1.0) for u, v in chosen]
    s, t = draw(st.sampled_from(chosen))
    costs = [draw(st.integers(1, 4)) * 1.0 for _ in chosen]
    budget = draw(st.integers(int(min(costs)), 8)) * 1.0
    try:
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return im.make_instance(list(range(n)), arcs, [(s, t, costs, budget)] * 2, mode)
    except im.InstanceError:
        assume(False)


@SETTINGS
@given(graphs(), st.integers(0, 2**32 - 1))
def test_shortest_path_equals_enumeration(inst, seed):
    x = np.random.default_rng(seed).random((inst.n_agents, inst.n_arcs))
    assert im.path_value(inst, x, 0) == path_oracle_value(inst, x, 0)


@SETTINGS
@given(graphs(), st.integers(0, 2**32 - 1), st.floats(0.01, 2.0))
def test_monotone_in_interdiction(inst, seed, bump):
    rng = np.random.default_rng(seed)
    x = rng.random((inst.n_agents, inst.n_arcs))
    before = im.obstruction_values(inst, x)
    x[rng.integers(inst.n_agents), rng.integers(inst.n_arcs)] += bump
    assert np.all(im.obstruction_values(inst, x) >= before)


@SETTINGS
@given(graphs(), st.integers(0, 2**32 - 1))
def test_feasible_paths_below_big_m(inst, seed):
    x = np.random.default_rng(seed).random((inst.n_agents, inst.n_arcs))
    x *= (inst.budgets / np.einsum("fa,fa->f", inst.costs, x))[:, None]
    assert np.all(im.obstruction_values(inst, x) <= im.big_m(inst) + 1e-9)


@SETTINGS
@given(graphs(im.DISCRETE), st.integers(0, 2**32 - 1))
def test_discrete_max_semantics(inst, seed):
    rng = np.random.default_rng(seed)
    x = (rng.random((inst.n_agents, inst.n_arcs)) < 0.4).astype(float)
    merged = np.tile(x.max(axis=0), (inst.n_agents, 1))
    assert np.array_equal(im.aftermath_lengths(inst, x), im.aftermath_lengths(inst, merged))
    assert np.all(im.aftermath_lengths(inst, merged) <= inst.network.d0 + inst.network.ext)


@SETTINGS
@given(graphs(), st.integers(0, 2**32 - 1))
def test_best_response_beats_any_feasible_deviation(inst, seed):
    rng = np.random.default_rng(seed)
    x = rng.random((inst.n_agents, inst.n_arcs)) * 0.2
    val, xf = solvers.best_response_continuous(inst, x, 0)
    y = x.copy()
    for _ in range(5):
        d = rng.random(inst.n_arcs)
        y[0] = d * inst.budgets[0] / (inst.costs[0] @ d)
        assert im.path_value(inst, y, 0) <= val + 1e-8


@SETTINGS
@given(st.integers(1, 6), st.floats(0.0, 10.0))
def test_ladder_construction_budget_exact(F, eps):
    inst = gen.gen_ladder(gen.LadderSpec(F, eps))
    x = gen.ladder_equilibrium_construction(F)
    assert np.allclose(im.budget_usage(inst, x), 1.0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_lemke_on_psd_plus_skew(d, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d))
    b = rng.standard_normal((d, d))
    m = a @ a.T + (b - b.T) + 1e-3 * np.eye(d)
    q = rng.standard_normal(d)
    sol = lcp.lemke_solve(lcp.LcpProblem(q, m))
    assert sol.solved
    assert lcp.verify_solution(lcp.LcpProblem(q, m), sol.w, 1e-7).passed
