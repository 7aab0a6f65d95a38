"""Finite-game equilibrium checks, efficiency-loss studies and reproduction drivers."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import dynamics as dy
from . import generators as gen
from . import instance as im
from . import solvers
from .assembly import solve_lcp
from .instance import CONTINUOUS, DISCRETE

# ------------------------------------------------------------ finite games

#: Two-player payoff table of the discrete counterexample: rows are player 1's
#: strategies, columns player 2's, entries ``(payoff 1, payoff 2)``.
EXAMPLE1_ROWS = ("a", "c", "a,c", "b")
EXAMPLE1_COLS = ("d", "f")
EXAMPLE1_PAYOFFS = (
    ((6, 1), (0, 0)),
    ((7, 1), (1.5, 1.6)),
    ((7.5, 1), (1.5, 1.5)),
    ((7, 1), (2, 0)),
)

#: Arc data of the same example: tag -> (initial length, extension, cost 1, cost 2).
EXAMPLE1_ARCS = {
    "a": (7, 0.5, 3, 20),
    "b": (0, 2, 6, 20),
    "c": (0, 1.5, 5, 20),
    "d": (0, 6, 15, 15),
    "e": (0, 1, 20, 20),
    "f": (1, 6, 15, 15),
}
EXAMPLE1_BUDGETS = (8, 15)


def example1_strategies():
    """Nonempty budget-feasible arc sets per player, from the arc cost data."""
    tags = sorted(EXAMPLE1_ARCS)
    out = []
    for p, budget in enumerate(EXAMPLE1_BUDGETS):
        cost = {t: EXAMPLE1_ARCS[t][2 + p] for t in tags}
        sets = []
        for k in range(1, len(tags) + 1):
            for combo in itertools.combinations(tags, k):
                if sum(cost[t] for t in combo) <= budget:
                    sets.append(combo)
        out.append(sets)
    return out


def payoff_array(table) -> np.ndarray:
    """Coerce a nested payoff table to an array of shape ``(S_1, ..., S_N, N)``."""
    arr = np.asarray(table, dtype=float)
    if arr.ndim < 2 or arr.shape[-1] != arr.ndim - 1:
        raise ValueError(f"payoff table of shape {arr.shape} is not (S_1, ..., S_N, N)")
    return arr


def _best_replies(arr, profile, player):
    idx = list(profile)
    idx[player] = slice(None)
    vals = arr[tuple(idx) + (player,)]
    return vals, float(vals.max())


def check_pne(table, tol=0.0) -> list:
    """Every pure profile from which no player gains more than ``tol`` by deviating."""
    arr = payoff_array(table)
    n = arr.ndim - 1
    found = []
    for prof in itertools.product(*(range(s) for s in arr.shape[:-1])):
        if all(arr[prof + (p,)] >= _best_replies(arr, prof, p)[1] - tol for p in range(n)):
            found.append(prof)
    return found


def check_pne_bimatrix(table, tol=0.0) -> list:
    """Pure equilibria ``(row, column)`` of a two-player table; empty if none."""
    arr = payoff_array(table)
    if arr.ndim != 3:
        raise ValueError("a bimatrix table needs two players")
    return check_pne(arr, tol)


def deviation_step(arr, profile, tol=0.0):
    """First player with a profitable deviation, moved to its lowest-index best reply."""
    for p in range(arr.ndim - 1):
        vals, best = _best_replies(arr, profile, p)
        if best > arr[tuple(profile) + (p,)] + tol:
            nxt = list(profile)
            nxt[p] = int(np.flatnonzero(vals >= best - tol)[0])
            return tuple(nxt)
    return None


def deviation_cycle(table, start=None, tol=0.0):
    """Follow profitable deviations from ``start``; return the repeating loop or None.

    None means the walk reached a pure equilibrium.
    """
    arr = payoff_array(table)
    prof = tuple(start) if start is not None else (0,) * (arr.ndim - 1)
    seen = {}
    walk = []
    while prof not in seen:
        seen[prof] = len(walk)
        walk.append(prof)
        prof = deviation_step(arr, prof, tol)
        if prof is None:
            return None
    return walk[seen[prof]:]


def bimatrix_dynamics(table, start=(0, 0), max_outer=100) -> dy.DynamicsTrace:
    """Gauss-Seidel best replies on a finite table; iterates are strategy indices."""
    arr = payoff_array(table)
    n = arr.ndim - 1
    prof = np.array(start, dtype=int)
    iterates = [prof.copy()]
    payoffs = [arr[tuple(prof)].copy()]
    steps = []
    seen = {prof.tobytes(): 0}
    status, cycle = dy.ITERATION_LIMIT, None
    for k in range(1, max_outer + 1):
        moved = False
        for p in range(n):
            vals, best = _best_replies(arr, tuple(prof), p)
            before = float(arr[tuple(prof) + (p,)])
            updated = best > before
            if updated:
                prof[p] = int(np.flatnonzero(vals >= best)[0])
                moved = True
            steps.append(dy.Step(k, p, before, best, updated, prof.copy()))
        iterates.append(prof.copy())
        payoffs.append(arr[tuple(prof)].copy())
        if not moved:
            status = dy.CONVERGED
            break
        key = prof.tobytes()
        if key in seen:
            status, cycle = dy.CYCLE, (seen[key], k)
            break
        seen[key] = k
    return dy.DynamicsTrace(iterates, [], payoffs, status, True, steps, cycle)


def strategy_table(instance, cap=200_000):
    """Enumerate a discrete game: per-agent subsets and the full payoff array."""
    if instance.mode != DISCRETE:
        raise im.InstanceError("strategy tables need a discrete instance")
    F, m = instance.n_agents, instance.n_arcs
    strategies = [solvers.feasible_subsets(instance, f, cap) for f in range(F)]
    shape = tuple(len(s) for s in strategies)
    if math.prod(shape) > cap:
        raise solvers.SizeError(f"{math.prod(shape)} joint profiles exceed the cap {cap}")
    arr = np.zeros(shape + (F,))
    for idx in itertools.product(*(range(s) for s in shape)):
        arr[idx] = im.obstruction_values(instance, profile_from_subsets(
            instance, [strategies[f][i] for f, i in enumerate(idx)]))
    return strategies, arr


def profile_from_subsets(instance, subsets) -> np.ndarray:
    x = np.zeros((instance.n_agents, instance.n_arcs))
    for f, subset in enumerate(subsets):
        x[f, list(subset)] = 1.0
    return x


def pne_exhaustive(instance, cap=200_000) -> list:
    """All pure equilibria of a discrete instance, as profiles."""
    strategies, arr = strategy_table(instance, cap)
    return [profile_from_subsets(instance, [strategies[f][i] for f, i in enumerate(idx)])
            for idx in check_pne(arr, 1e-9)]


# ------------------------------------------------------------ efficiency

RATIO = "ratio"
ZERO_OVER_ZERO = "zero_over_zero"
POSITIVE_OVER_ZERO = "positive_over_zero"
NO_EQUILIBRIUM = "no_equilibrium"


def price_of_anarchy(central, worst, tol=1e-12):
    """``central / worst`` with ``0/0 -> 1`` and ``x/0 -> inf``; returns ``(p, flag)``."""
    if abs(worst) <= tol:
        if abs(central) <= tol:
            return 1.0, ZERO_OVER_ZERO
        return math.inf, POSITIVE_OVER_ZERO
    return central / worst, RATIO


@dataclass
class EfficiencyReport:
    name: str
    n_arcs: int
    n_agents: int
    central: float
    welfares: list
    worst: float
    p: float
    flag: str
    n_runs: int
    n_verified: int
    max_gap: float
    mean_outer: float
    seconds: float = 0.0


@dataclass
class StudyReport:
    rows: list
    ael: float
    poa: float

    @property
    def n_equilibria(self) -> int:
        return sum(len(r.welfares) for r in self.rows)


def _central_value(instance):
    if instance.mode == CONTINUOUS:
        return solvers.centralized_continuous(instance)[0]
    return solvers.centralized_discrete(instance)[0]


def instance_efficiency(instance, runs=10, starts=1, seed=0, config=None) -> EfficiencyReport:
    """Empirical p(I): centralized value over the worst verified equilibrium found."""
    t0 = time.perf_counter()
    central = _central_value(instance)
    res = dy.multi_start(instance, n_starts=starts, n_orders=runs, seed=seed, config=config)
    welfares = res.welfares
    gaps = [r.max_gap for r in res.runs if r.verified]
    if welfares:
        worst = min(welfares)
        p, flag = price_of_anarchy(central, worst)
    else:
        worst, p, flag = math.nan, math.nan, NO_EQUILIBRIUM
    return EfficiencyReport(
        instance.name, instance.n_arcs, instance.n_agents, float(central), welfares, worst, p, flag,
        len(res.runs), sum(r.verified for r in res.runs), max(gaps) if gaps else math.nan,
        float(np.mean([r.outer for r in res.runs])), time.perf_counter() - t0)


def _efficiency_job(args):
    instance, runs, starts, seed, config = args
    return instance_efficiency(instance, runs, starts, seed, config)


def aggregate(rows) -> StudyReport:
    ps = [r.p for r in rows if not math.isnan(r.p)]
    ael = float(np.mean(ps)) if ps else math.nan
    poa = float(max(ps)) if ps else math.nan
    return StudyReport(rows, ael, poa)


def efficiency_study(instances, runs_per_instance=10, starts=1, seed=0, config=None,
                     workers=1) -> StudyReport:
    """Per-instance empirical p(I) plus their mean (a.e.l) and maximum (p.o.a)."""
    jobs = [(inst, runs_per_instance, starts, seed * 100_003 + i, config)
            for i, inst in enumerate(instances)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_efficiency_job, jobs))
    else:
        rows = [_efficiency_job(j) for j in jobs]
    return aggregate(rows)


def random_instances(n_vertices, n_agents, density, count=25, seed=0, mode=CONTINUOUS):
    return [gen.gen_random(gen.RandomSpec(n_vertices, density, n_agents, seed=seed, index=i, mode=mode))
            for i in range(count)]


# ------------------------------------------------------------ report writers


def fmt(v) -> str:
    """Stable text for report cells; infinities print as ``inf``."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return f"{v:.10g}"
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows))
    return path


STUDY_HEADER = ("instance", "arcs", "agents", "central", "worst_equilibrium", "equilibria",
                "p", "flag", "runs", "verified", "max_gap", "mean_outer")


def study_rows(report: StudyReport):
    return [(r.name, r.n_arcs, r.n_agents, r.central, r.worst, len(r.welfares), r.p, r.flag,
             r.n_runs, r.n_verified, r.max_gap, r.mean_outer) for r in report.rows]


def versions() -> dict:
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "dspi": __version__}


def write_manifest(path, target, config, files, failures) -> Path:
    doc = {"target": target, "config": config, "versions": versions(),
           "files": sorted(str(Path(f).name) for f in files),
           "ok": not failures, "failures": failures}
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.integer, np.floating)):
        return v.item()
    if isinstance(v, tuple):
        return list(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


# ------------------------------------------------------------ reproduction drivers

#: Starting points for the two-agent ladder; each 7-vector is used by both agents.
EXAMPLE2_STARTS = (
    (0, 0, 0, 0, 0, 0, 0),
    (0.2, 0.2, 0, 0, 0, 0, 0),
    (0, 0, 0, 0, 0, 0.2, 0.2),
    (0, 0, 0, 0, 0, 0.3, 0.3),
    (0.3, 0.3, 0, 0, 0, 0, 0),
    (0.25, 0.25, 0, 0, 0, 0, 0),
    (0, 0, 0, 0, 0, 0.25, 0.25),
    (0, 0, 0, 0, 0, 0.15, 0.15),
    (0.15, 0.15, 0, 0, 0, 0, 0),
)
EXAMPLE2_PATH = 2.0 / 3.0

STUDY_GRID = (
    (5, 3, 0.25), (5, 3, 0.5), (5, 3, 0.75),
    (10, 3, 0.25), (10, 3, 0.5), (10, 3, 0.75),
    (15, 4, 0.25), (15, 4, 0.5), (15, 4, 0.75),
    (20, 5, 0.25), (20, 5, 0.5), (20, 5, 0.75),
    (25, 7, 0.25), (25, 7, 0.5), (25, 7, 0.75),
)
DEFAULT_STUDY_CONFIGS = ((5, 3, 0.25), (10, 3, 0.5))


@dataclass
class Reproduction:
    target: str
    files: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    lines: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def check(self, cond, message):
        if not cond:
            self.failures.append(message)
        return bool(cond)


def example2_table(tau=0.01):
    """Regularized dynamics on the two-agent ladder from each listed start."""
    inst = gen.gen_ladder(2)
    out = []
    for start in EXAMPLE2_STARTS:
        x0 = np.array([start, start], dtype=float)
        trace = dy.gauss_seidel(inst, dy.DynamicsConfig(tau=tau, initial_profile=x0))
        rep = solvers.verify_equilibrium(inst, trace.final)
        out.append((start, trace, rep))
    return inst, out


def example3_instance():
    """Two-agent discrete ladder with unit costs, unit extensions and zero lengths."""
    return gen.gen_ladder(gen.LadderSpec(2, epsilon=0.0, mode=DISCRETE))


def example3_alternative(inst):
    """Agent 1 blocks ``(1, 4)`` and agent 2 blocks ``(1, 2)``."""
    x = inst.zero_profile()
    x[0, inst.network.arc_index[(1, 4)]] = 1.0
    x[1, inst.network.arc_index[(1, 2)]] = 1.0
    return x


def construction_deviation(F, epsilon):
    """Best value the last agent reaches against the construction.

    It can split its budget between the bottom arc ``(b_F, b_{F+1})``, shared
    by all but one of its paths, and the last vertical.
    """
    return max(F / (F + 1), (F - 1) / F + 1 / (F * (2 + epsilon)))


def construction_row(F, epsilon=2.0):
    inst = gen.gen_ladder(gen.LadderSpec(F, epsilon))
    exact = gen.ladder_construction_fractions(F)
    verticals = slice(gen.vertical_offset(F), gen.vertical_offset(F) + F + 1)
    # unit-cost verticals only, so the spend is an exact rational sum
    spend = [sum(row[verticals]) if not any(row[:F]) and not any(row[2 * F + 1:]) else None
             for row in exact]
    x = gen.ladder_equilibrium_construction(F)
    paths = im.obstruction_values(inst, x)
    rep = solvers.verify_equilibrium(inst, x)
    central = solvers.centralized_continuous(inst)[0]
    bound = gen.poa_lower_bound_ladder(F, epsilon)
    return {
        "F": F, "epsilon": epsilon,
        "path_error": float(np.max(np.abs(paths - F / (F + 1)))),
        "budget_exact": all(s == 1 for s in spend),
        "gap": rep.max_gap, "is_equilibrium": rep.max_gap <= 1e-6,
        "deviation_value": construction_deviation(F, epsilon),
        "deviation_error": abs(rep.best[-1] - construction_deviation(F, epsilon)),
        "central": central,
        "construction_welfare": bound.construction_welfare,
        "stated_threshold": (F + 1) * F / (2 + epsilon),
        "bound": bound.value, "vacuous": bound.vacuous,
    }


def ladder_sweep_row(F, epsilon=2.0, max_outer=1000, lcp_max=10, discrete=True):
    inst = gen.gen_ladder(gen.LadderSpec(F, epsilon))
    row = {"F": F}
    t0 = time.perf_counter()
    plain = dy.gauss_seidel(inst, dy.DynamicsConfig(max_outer=max_outer))
    row["plain_status"], row["plain_iters"] = plain.status, plain.n_outer
    trace = plain
    if not plain.converged:
        trace = dy.gauss_seidel(inst, dy.DynamicsConfig(tau=0.01, max_outer=2 * max_outer))
    row["cont_status"], row["cont_iters"], row["cont_tau"] = trace.status, trace.n_outer, trace.config.tau
    row["cont_seconds"] = time.perf_counter() - t0
    row["cont_gap"] = solvers.verify_equilibrium(inst, trace.final).max_gap if trace.converged else math.nan
    if F <= lcp_max:
        t0 = time.perf_counter()
        _, sol, prof = solve_lcp(inst)
        row["lcp_status"] = sol.status
        row["lcp_gap"] = solvers.verify_equilibrium(inst, prof).max_gap if prof is not None else math.nan
        row["lcp_seconds"] = time.perf_counter() - t0
    else:
        row["lcp_status"], row["lcp_gap"], row["lcp_seconds"] = "skipped", math.nan, math.nan
    if discrete:
        dinst = inst.with_mode(DISCRETE)
        t0 = time.perf_counter()
        dtrace = dy.gauss_seidel(dinst, dy.DynamicsConfig(max_outer=max_outer))
        row["disc_status"], row["disc_iters"] = dtrace.status, dtrace.n_outer
        row["disc_seconds"] = time.perf_counter() - t0
    return row


def agent_sweep_rows(F_values=range(2, 9), n_eps=3, runs=3, starts=2, seed=0):
    """Worst-case bound and empirical a.e.l on ladders with epsilon drawn from (1.5, 10)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = []
    for F in F_values:
        eps = rng.uniform(1.5, 10.0, n_eps)
        insts = [gen.gen_ladder(gen.LadderSpec(int(F), float(e))) for e in eps]
        study = efficiency_study(insts, runs, starts, seed=seed + int(F))
        bound = max((F + 1) / (2 + e) for e in eps)
        rows.append((int(F), float(bound), study.ael, study.poa))
    return rows


def _rep_example1(out: Path, opts) -> Reproduction:
    rep = Reproduction("example1")
    arr = payoff_array(EXAMPLE1_PAYOFFS)
    pne = check_pne_bimatrix(arr)
    cycle = deviation_cycle(arr)
    rows = []
    for i, r in enumerate(EXAMPLE1_ROWS):
        for j, c in enumerate(EXAMPLE1_COLS):
            nxt = deviation_step(arr, (i, j))
            dev = "" if nxt is None else f"{EXAMPLE1_ROWS[nxt[0]]}/{EXAMPLE1_COLS[nxt[1]]}"
            rows.append((r, c, arr[i, j, 0], arr[i, j, 1], dev))
    rep.files.append(write_csv(out / "example1_payoffs.csv",
                               ("p1_strategy", "p2_strategy", "payoff1", "payoff2", "deviates_to"), rows))
    strategies = example1_strategies()
    labels = [tuple(",".join(s) for s in player) for player in strategies]
    rep.check(sorted(labels[0]) == sorted(EXAMPLE1_ROWS), "player 1 strategy set differs from the table")
    rep.check(sorted(labels[1]) == sorted(EXAMPLE1_COLS), "player 2 strategy set differs from the table")
    rep.check(not pne, f"pure equilibria found: {pne}")
    rep.check(cycle is not None, "no deviation cycle found")
    trace = bimatrix_dynamics(arr)
    rep.check(trace.status == dy.CYCLE, f"best-reply dynamics ended with {trace.status}")
    loop = " -> ".join(f"({EXAMPLE1_ROWS[i]}; {EXAMPLE1_COLS[j]})" for i, j in (cycle or []))
    rep.lines += ["no pure equilibrium" if not pne else f"pure equilibria: {pne}",
                  f"deviation cycle: {loop}"]
    rep.data = {"pne": pne, "cycle": cycle}
    return rep


def _rep_example2(out: Path, opts) -> Reproduction:
    rep = Reproduction("example2")
    inst, runs = example2_table(opts.get("tau", 0.01))
    rows, keys = [], set()
    for start, trace, ver in runs:
        paths = im.obstruction_values(inst, trace.final)
        keys.add(dy._key(trace.final).tobytes())
        rep.check(trace.converged, f"start {start}: {trace.status}")
        rep.check(np.all(np.abs(paths - EXAMPLE2_PATH) <= 1e-4), f"start {start}: paths {paths}")
        rep.check(ver.passed, f"start {start}: gap {ver.max_gap}")
        rows.append((" ".join(fmt(v) for v in start),
                     " ".join(fmt(round(v, 4)) for v in trace.final[0]),
                     " ".join(fmt(round(v, 4)) for v in trace.final[1]),
                     paths[0], paths[1], trace.n_outer, ver.max_gap))
    rep.check(len(keys) >= 2, "fewer than two distinct equilibria")
    rep.files.append(write_csv(out / "example2_equilibria.csv",
                               ("start", "x1", "x2", "p1", "p2", "outer", "gap"), rows))
    rep.lines.append(f"{len(runs)} starts, {len(keys)} distinct equilibria, all paths "
                     f"{'within' if rep.ok else 'NOT within'} 1e-4 of 2/3")
    return rep


def _rep_example3(out: Path, opts) -> Reproduction:
    rep = Reproduction("example3-discrete")
    inst = example3_instance()
    zero, alt = inst.zero_profile(), example3_alternative(inst)
    rows = []
    for label, x in (("zero", zero), ("(1,4)+(1,2)", alt)):
        ver = solvers.verify_equilibrium(inst, x)
        rep.check(ver.passed, f"{label} profile is not an equilibrium")
        rows.append((label, im.social_welfare(inst, x), ver.max_gap, ver.passed))
    strategies, arr = strategy_table(inst)
    welfare = arr.sum(axis=-1)
    pne = check_pne(arr, 1e-9)
    rep.check(abs(welfare.min() - im.social_welfare(inst, zero)) <= 1e-12,
              "zero profile does not minimize welfare")
    rep.check(any(np.array_equal(profile_from_subsets(inst, [strategies[f][i] for f, i in enumerate(p)]), alt)
                  for p in pne), "alternative profile missing from the enumerated equilibria")
    rep.files.append(write_csv(out / "example3_profiles.csv", ("profile", "welfare", "gap", "equilibrium"), rows))
    rep.lines.append(f"{len(pne)} pure equilibria among {welfare.size} joint profiles; "
                     f"welfare range [{fmt(welfare.min())}, {fmt(welfare.max())}]")
    return rep


def _rep_ladder_sweep(out: Path, opts) -> Reproduction:
    rep = Reproduction("ladder-sweep")
    eps = opts.get("epsilon", 2.0)
    cons = [construction_row(F, eps) for F in opts.get("construction_F", range(1, 26))]
    for r in cons:
        F = r["F"]
        rep.check(r["path_error"] <= 1e-9, f"F={F}: construction paths off by {r['path_error']}")
        rep.check(r["budget_exact"], f"F={F}: construction budget not exactly 1")
        rep.check(r["deviation_error"] <= 1e-9, f"F={F}: last agent's best reply off the closed form")
        rep.check(r["central"] >= r["construction_welfare"] - 1e-6, f"F={F}: LP below construction")
    keys = ("F", "epsilon", "path_error", "budget_exact", "gap", "is_equilibrium", "deviation_value",
            "central", "construction_welfare", "stated_threshold", "bound", "vacuous")
    rep.files.append(write_csv(out / "ladder_construction.csv", keys, [[r[k] for k in keys] for r in cons]))
    broken = [r["F"] for r in cons if not r["is_equilibrium"]]
    if broken:
        rep.lines.append(f"construction is not an equilibrium for F in {broken} "
                         f"(profitable deviation once F > 1 + epsilon)")
    sweep = [ladder_sweep_row(F, eps, lcp_max=opts.get("lcp_max", 10))
             for F in opts.get("sweep_F", range(5, 51, 5))]
    for r in sweep:
        if r["cont_status"] == dy.CONVERGED:
            rep.check(r["cont_gap"] <= 1e-6, f"F={r['F']}: dynamics gap {r['cont_gap']}")
    skeys = ("F", "plain_status", "plain_iters", "cont_status", "cont_iters", "cont_tau", "cont_gap",
             "lcp_status", "lcp_gap", "disc_status", "disc_iters")
    rep.files.append(write_csv(out / "ladder_sweep.csv", skeys, [[r[k] for k in skeys] for r in sweep]))
    tkeys = ("F", "cont_seconds", "lcp_seconds", "disc_seconds")
    rep.files.append(write_csv(out / "ladder_timings.csv", tkeys, [[r[k] for k in tkeys] for r in sweep]))
    if opts.get("agent_sweep", True):
        fig = agent_sweep_rows(opts.get("agent_sweep_F", range(2, 9)), seed=opts.get("seed", 0))
        rep.files.append(write_csv(out / "efficiency_vs_agents.csv", ("F", "worst_bound", "empirical_ael", "empirical_poa"), fig))
    converged = sum(r["cont_status"] == dy.CONVERGED for r in sweep)
    rep.lines.append(f"construction checks on {len(cons)} ladders; dynamics converged on {converged}/{len(sweep)}")
    return rep


def _rep_random_study(out: Path, opts) -> Reproduction:
    rep = Reproduction("random-study")
    seed = opts.get("seed", 0)
    count, runs = opts.get("instances", 25), opts.get("runs", 10)
    summary, all_rows = [], []
    for n, F, dens in opts.get("configs", DEFAULT_STUDY_CONFIGS):
        insts = random_instances(n, F, dens, count, seed)
        t0 = time.perf_counter()
        study = efficiency_study(insts, runs, seed=seed, workers=opts.get("workers", 1))
        secs = time.perf_counter() - t0
        tag = f"({n},{F},{dens:g})"
        for r in study.rows:
            rep.check(r.n_verified > 0, f"{tag} {r.name}: no verified equilibrium")
            rep.check(not r.welfares or r.max_gap <= 1e-6, f"{tag} {r.name}: gap {r.max_gap}")
            rep.check(r.central >= r.worst - 1e-6 * max(1.0, abs(r.central)),
                      f"{tag} {r.name}: equilibrium welfare above the centralized optimum")
        rep.check(1 - 1e-9 <= study.ael <= study.poa + 1e-12, f"{tag}: a.e.l {study.ael} vs p.o.a {study.poa}")
        summary.append((n, F, dens, count, runs, study.n_equilibria,
                        float(np.mean([r.mean_outer for r in study.rows])), study.ael, study.poa))
        all_rows += [(n, F, dens) + row for row in study_rows(study)]
        rep.lines.append(f"{tag}: a.e.l {fmt(study.ael)}  p.o.a {fmt(study.poa)}  ({secs:.1f} s)")
    rep.files.append(write_csv(out / "random_study.csv",
                               ("vertices", "agents", "density", "instances", "permutations",
                                "equilibria", "mean_outer", "ael", "poa"), summary))
    rep.files.append(write_csv(out / "random_instances.csv", ("vertices", "agents_cfg", "density") + STUDY_HEADER,
                               all_rows))
    return rep


TARGETS = {
    "example1": _rep_example1,
    "example2": _rep_example2,
    "example3-discrete": _rep_example3,
    "ladder-sweep": _rep_ladder_sweep,
    "random-study": _rep_random_study,
}


def reproduce(target, outdir="reports", **opts) -> Reproduction:
    """Run one driver, write its CSV files and a JSON manifest into ``outdir/target``."""
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; choose from {sorted(TARGETS)}")
    out = Path(outdir) / target
    out.mkdir(parents=True, exist_ok=True)
    rep = TARGETS[target](out, opts)
    config = {k: (list(v) if isinstance(v, range) else v) for k, v in opts.items()}
    rep.files.append(write_manifest(out / "manifest.json", target, config, rep.files, rep.failures))
    return rep
