import json
import math

import numpy as np
import pytest

from dspi import dynamics as dy
from dspi import experiments as ex
from dspi import instance as im
from conftest import random_continuous


def test_example1_has_no_pne():
    assert ex.check_pne_bimatrix(ex.EXAMPLE1_PAYOFFS) == []
    cycle = ex.deviation_cycle(ex.EXAMPLE1_PAYOFFS)
    assert cycle is not None and len(cycle) >= 2
    arr = ex.payoff_array(ex.EXAMPLE1_PAYOFFS)
    # every profile on the loop has a profitable deviation to the next
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        assert ex.deviation_step(arr, a) == b


def test_example1_strategy_sets_from_costs():
    p1, p2 = ex.example1_strategies()
    assert sorted(p1) == [("a",), ("a", "c"), ("b",), ("c",)]
    assert sorted(p2) == [("d",), ("f",)]


def test_coordination_game_two_pne():
    table = [[(1, 1), (0, 0)], [(0, 0), (1, 1)]]
    assert ex.check_pne_bimatrix(table) == [(0, 0), (1, 1)]
    assert ex.deviation_cycle(table, start=(0, 1)) is None


def test_payoff_shape_errors():
    with pytest.raises(ValueError):
        ex.payoff_array([[1, 2], [3, 4]])
    with pytest.raises(ValueError):
        ex.check_pne_bimatrix(np.zeros((2, 2, 2, 3)))


def test_three_player_pne():
    # everyone prefers matching player 0
    arr = np.zeros((2, 2, 2, 3))
    for idx in np.ndindex(2, 2, 2):
        arr[idx] = [1.0, float(idx[1] == idx[0]), float(idx[2] == idx[0])]
    assert ex.check_pne(arr) == [(0, 0, 0), (1, 1, 1)]


def test_bimatrix_dynamics_cycles():
    trace = ex.bimatrix_dynamics(ex.EXAMPLE1_PAYOFFS)
    assert trace.status == dy.CYCLE and trace.cycle is not None
    trace = ex.bimatrix_dynamics([[(1, 1), (0, 0)], [(0, 0), (1, 1)]], start=(1, 0))
    assert trace.converged


def test_example3_equilibria():
    inst = ex.example3_instance()
    pne = ex.pne_exhaustive(inst)
    assert any(not x.any() for x in pne)
    alt = ex.example3_alternative(inst)
    assert any(np.array_equal(x, alt) for x in pne)


@pytest.mark.parametrize("central, worst, p, flag", [
    (2.0, 1.0, 2.0, ex.RATIO), (0.0, 0.0, 1.0, ex.ZERO_OVER_ZERO), (1.0, 0.0, math.inf, ex.POSITIVE_OVER_ZERO),
    (1.5, 1.5, 1.0, ex.RATIO),
])
def test_price_of_anarchy_conventions(central, worst, p, flag):
    assert ex.price_of_anarchy(central, worst) == (p, flag)


def test_fmt():
    assert ex.fmt(math.inf) == "inf" and ex.fmt(math.nan) == "nan"
    assert ex.fmt(True) == "1" and ex.fmt(3) == "3" and ex.fmt(0.1) == "0.1"


def test_instance_efficiency_ladder(ladder2):
    row = ex.instance_efficiency(ladder2, runs=2)
    assert row.central == pytest.approx(4 / 3)
    assert row.worst == pytest.approx(4 / 3)
    assert row.p == pytest.approx(1.0) and row.flag == ex.RATIO


def test_aggregate_inf_and_nan():
    rows = [ex.EfficiencyReport("a", 1, 1, 1.0, [0.0], 0.0, math.inf, ex.POSITIVE_OVER_ZERO, 1, 1, 0, 1),
            ex.EfficiencyReport("b", 1, 1, 1.0, [], math.nan, math.nan, ex.NO_EQUILIBRIUM, 1, 0, math.nan, 1),
            ex.EfficiencyReport("c", 1, 1, 2.0, [1.0], 1.0, 2.0, ex.RATIO, 1, 1, 0, 1)]
    rep = ex.aggregate(rows)
    assert math.isinf(rep.ael) and math.isinf(rep.poa)
    text = ex.csv_text(ex.STUDY_HEADER, ex.study_rows(rep))
    assert ",inf," in text and ",nan," in text


def test_efficiency_study_small():
    insts = [random_continuous(0, n=5, density=0.3, agents=2, index=i) for i in range(3)]
    rep = ex.efficiency_study(insts, runs_per_instance=2)
    assert len(rep.rows) == 3
    assert 1 - 1e-9 <= rep.ael <= rep.poa
    for r in rep.rows:
        assert r.central >= r.worst - 1e-9 and r.n_verified > 0


def test_efficiency_study_parallel_matches_serial():
    insts = [random_continuous(1, n=5, density=0.3, agents=2, index=i) for i in range(3)]
    a = ex.efficiency_study(insts, 2, workers=1)
    b = ex.efficiency_study(insts, 2, workers=2)
    assert ex.csv_text(ex.STUDY_HEADER, ex.study_rows(a)) == ex.csv_text(ex.STUDY_HEADER, ex.study_rows(b))


def test_construction_deviation_closed_form():
    for F, eps in [(2, 2.0), (4, 2.0), (6, 5.0)]:
        row = ex.construction_row(F, eps)
        assert row["deviation_error"] <= 1e-9
        assert row["is_equilibrium"] == (F <= 1 + eps)


@pytest.mark.parametrize("target", ["example1", "example2", "example3-discrete"])
def test_reproduce_small_targets(tmp_path, target):
    rep = ex.reproduce(target, tmp_path)
    assert rep.ok, rep.failures
    manifest = json.loads((tmp_path / target / "manifest.json").read_text())
    assert manifest["ok"] and manifest["target"] == target
    assert all(f.exists() for f in rep.files)


def test_reproduce_ladder_sweep_reduced(tmp_path):
    rep = ex.reproduce("ladder-sweep", tmp_path, construction_F=range(1, 6), sweep_F=[5], agent_sweep_F=[2, 3])
    assert rep.ok, rep.failures
    text = (tmp_path / "ladder-sweep" / "efficiency_vs_agents.csv").read_text().splitlines()
    assert text[0] == "F,worst_bound,empirical_ael,empirical_poa" and len(text) == 3


def test_reproduce_random_study_deterministic(tmp_path):
    opts = dict(configs=((5, 2, 0.3),), instances=3, runs=2, seed=4)
    a = ex.reproduce("random-study", tmp_path / "a", **opts)
    b = ex.reproduce("random-study", tmp_path / "b", **opts)
    assert a.ok and b.ok
    for name in ("random_study.csv", "random_instances.csv", "manifest.json"):
        assert (tmp_path / "a" / "random-study" / name).read_bytes() == \
            (tmp_path / "b" / "random-study" / name).read_bytes()


def test_reproduce_unknown_target(tmp_path):
    with pytest.raises(ValueError):
        ex.reproduce("nope", tmp_path)
