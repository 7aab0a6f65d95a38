import json
import warnings

import numpy as np
import pytest

from dspi import instance as im
from conftest import path_oracle_value, random_continuous, random_discrete


def test_make_instance_basic(diamond):
    net = diamond.network
    assert (net.n_nodes, net.n_arcs, diamond.n_agents) == (4, 5, 1)
    assert net.arc_index[(2, 3)] == 4
    assert diamond.costs.shape == (1, 5)
    # incidence: +1 at the tail, -1 at the head
    assert net.incidence[0].tolist() == [1.0, -1.0, 0.0, 0.0]


def test_cost_forms_agree():
    arcs = [(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0)]
    a = im.make_instance([0, 1, 2], arcs, [(0, 2, 2.0, 3.0)])
    b = im.make_instance([0, 1, 2], arcs, [(0, 2, [2.0, 2.0], 3.0)])
    c = im.make_instance([0, 1, 2], arcs, [(0, 2, {(0, 1): 2.0, (1, 2): 2.0}, 3.0)])
    assert np.array_equal(a.costs, b.costs) and np.array_equal(b.costs, c.costs)


@pytest.mark.parametrize("arcs, agents, exc", [
    ([(0, 1, -1.0, 0.0)], [(0, 1, 1.0, 1.0)], im.InstanceError),
    ([(0, 1, 1.0, 0.0), (0, 1, 2.0, 0.0)], [(0, 1, 1.0, 1.0)], im.InstanceError),
    ([(0, 1, 1.0, 0.0)], [(0, 1, 1.0, -1.0)], im.InstanceError),
    ([(0, 1, 1.0, 0.0)], [(1, 0, 1.0, 1.0)], im.UnreachableError),
    ([(0, 1, 1.0, 0.0)], [(0, 1, 2.0, 1.0)], im.InstanceError),
    ([(0, 1, 1.0, 0.0)], [(0, 1, 0.0, 1.0)], im.InstanceError),
])
def test_invalid_instances(arcs, agents, exc):
    with pytest.raises(exc):
        im.make_instance([0, 1], arcs, agents)


def test_zero_length_warning():
    with pytest.warns(im.ZeroLengthWarning):
        im.make_instance([0, 1], [(0, 1, 0.0, 0.0)], [(0, 1, 1.0, 1.0)])


def test_profile_shape_and_sign(diamond):
    with pytest.raises(im.InstanceError):
        im.check_profile(diamond, np.zeros((2, 5)))
    assert not im.feasible(diamond, -np.ones((1, 5)), 0)


def test_aftermath_modes(diamond):
    x = np.array([[1.0, 0, 0, 0, 0]])
    assert im.aftermath_lengths(diamond, x)[0] == 2.0
    disc = diamond.with_mode(im.DISCRETE)
    # discrete: d0 + extension when any agent blocks the arc
    assert im.aftermath_lengths(disc, x)[0] == 2.0


def test_shortest_path_diamond(diamond):
    length, arcs = im.shortest_path(diamond, diamond.zero_profile(), 0)
    assert length == 2.0 and arcs == [0, 1]
    x = np.array([[0, 2.0, 0, 0, 0]])
    length, arcs = im.shortest_path(diamond, x, 0)
    assert length == 2.5 and arcs == [0, 4, 3]


@pytest.mark.parametrize("seed", range(10))
def test_shortest_path_matches_enumeration(seed):
    inst = random_continuous(seed)
    rng = np.random.default_rng(seed)
    x = rng.random((inst.n_agents, inst.n_arcs))
    for f in range(inst.n_agents):
        length, arcs = im.shortest_path(inst, x, f)
        assert length == pytest.approx(path_oracle_value(inst, x, f), abs=1e-12)
        lengths = im.aftermath_lengths(inst, x)
        assert im.path_length(lengths, arcs) == pytest.approx(length, abs=1e-12)


def test_potentials_and_big_m(ladder2):
    x = np.zeros((2, 7))
    x[0, 2] = 1.0
    y = im.potentials(ladder2, x, 0)
    assert y[ladder2.source_index(0)] == 0.0
    assert y[ladder2.target_index(0)] == pytest.approx(im.path_value(ladder2, x, 0))
    # continuous bound: sum d0 + |A| * F * max(b/c)
    assert im.big_m(ladder2) == pytest.approx(7 * 2 * 1.0)


def test_budget_and_feasibility(ladder2):
    x = np.zeros((2, 7))
    x[0, 2] = 1.0
    assert im.budget_usage(ladder2, x).tolist() == [1.0, 0.0]
    assert im.feasible(ladder2, x, 0)
    x[0, 0] = 0.1
    assert not im.feasible(ladder2, x, 0)


def test_enumerate_paths_ladder(ladder2):
    assert len(im.enumerate_paths(ladder2, 0)) == 2
    assert len(im.enumerate_paths(ladder2, 1)) == 3
    with pytest.raises(im.EnumerationCapError):
        im.enumerate_paths(ladder2, 1, cap=2)


@pytest.mark.parametrize("maker", [random_continuous, random_discrete])
def test_json_round_trip_exact(tmp_path, maker):
    inst = maker(3)
    path = tmp_path / "inst.json"
    im.save(inst, path)
    back = im.load(path)
    assert im.dumps(back) == path.read_text()
    assert np.array_equal(back.costs, inst.costs)
    assert np.array_equal(back.network.d0, inst.network.d0)
    assert back.mode == inst.mode and back.meta == inst.meta


def test_json_accepts_cost_map():
    doc = json.loads(im.dumps(random_continuous(1, n=4, density=0.5, agents=1)))
    net_arcs = [(a[0], a[1]) for a in doc["arcs"]]
    costs = doc["agents"][0]["costs"]
    doc["agents"][0]["costs"] = {f"{u},{v}": c for (u, v), c in zip(net_arcs, costs)}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        inst = im.from_dict(doc)
    assert inst.costs[0].tolist() == costs
