"""Command-line entry point: ``dspi <command> ...``."""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import dynamics as dy
from . import experiments as ex
from . import generators as gen
from . import instance as im
from . import lcp
from . import solvers
from .assembly import solve_lcp
from .instance import CONTINUOUS, MODES


def _load(path):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", im.ZeroLengthWarning)
        return im.load(path)


def _profile_header(instance):
    net = instance.network
    return ["agent"] + [f"{net.nodes[u]}->{net.nodes[v]}" for u, v in zip(net.tails, net.heads)]


def _write_profile(instance, x, path):
    rows = [[f] + list(row) for f, row in enumerate(np.asarray(x))]
    ex.write_csv(path, _profile_header(instance), rows)


def _read_profile(instance, path):
    path = Path(path)
    if path.suffix == ".json":
        x = np.array(json.loads(path.read_text()), dtype=float)
    else:
        x = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
        if x.shape[1] == instance.n_arcs + 1:
            x = x[:, 1:]
    return im.check_profile(instance, x)


def _order(value, n_agents):
    if value is None:
        return None
    if "," in value:
        return tuple(int(v) for v in value.split(","))
    rng = np.random.default_rng(int(value))
    return tuple(int(v) for v in rng.permutation(n_agents))


def _report_profile(instance, x, tol):
    rep = solvers.verify_equilibrium(instance, x, tol)
    for f in range(instance.n_agents):
        print(f"agent {f}: path {ex.fmt(rep.values[f])}  best reply {ex.fmt(rep.best[f])}  "
              f"gap {ex.fmt(rep.gaps[f])}")
    print(f"welfare {ex.fmt(rep.values.sum())}  max gap {ex.fmt(rep.max_gap)}  "
          f"equilibrium {'yes' if rep.passed else 'no'}")
    return rep


def cmd_solve_lcp(args):
    inst = _load(args.instance)
    stacked, sol, prof = solve_lcp(inst, max_pivots=args.max_pivots)
    res = lcp.verify_solution(stacked.problem, sol.w)
    print(f"dimension {stacked.problem.dim}  status {sol.status}  pivots {sol.pivots}")
    print(f"residuals: negativity {ex.fmt(res.negativity)}  infeasibility {ex.fmt(res.infeasibility)}  "
          f"complementarity {ex.fmt(res.complementarity)}")
    if args.dump:
        lcp.dump(stacked.problem, args.dump, sol)
    if prof is None:
        return 1
    rep = _report_profile(inst, prof, args.tol)
    if args.out:
        _write_profile(inst, prof, args.out)
    return 0 if rep.passed else 1


def cmd_dynamics(args):
    inst = _load(args.instance)
    start = _read_profile(inst, args.start) if args.start else None
    cfg = dy.DynamicsConfig(epsilon=args.eps, tau=args.tau, max_outer=args.max_outer,
                            agent_order=_order(args.order, inst.n_agents), initial_profile=start)
    trace = dy.gauss_seidel(inst, cfg)
    print(f"status {trace.status}  outer iterations {trace.n_outer}  order {list(trace.config.agent_order)}")
    if trace.cycle:
        print(f"cycle between iterates {trace.cycle[0]} and {trace.cycle[1]}")
    if trace.message:
        print(trace.message)
    if args.trace:
        dy.export_trace(trace, args.trace)
    if args.out:
        _write_profile(inst, trace.final, args.out)
    rep = _report_profile(inst, trace.final, args.tol)
    return 0 if trace.converged and rep.passed else 1


def cmd_centralized(args):
    inst = _load(args.instance)
    if inst.mode == CONTINUOUS:
        value, x = solvers.centralized_continuous(inst)
    else:
        value, x = solvers.centralized_discrete(inst)
    print(f"centralized welfare {ex.fmt(value)}  (budgets pooled in continuous mode)")
    for f, v in enumerate(im.obstruction_values(inst, x)):
        print(f"agent {f}: path {ex.fmt(v)}  spend {ex.fmt(im.budget_usage(inst, x)[f])}")
    if args.out:
        _write_profile(inst, x, args.out)
    return 0


def cmd_poa(args):
    inst = _load(args.instance)
    row = ex.instance_efficiency(inst, runs=args.orders, starts=args.starts, seed=args.seed)
    print(f"centralized {ex.fmt(row.central)}")
    print(f"equilibria {len(row.welfares)} (from {row.n_runs} runs, {row.n_verified} verified)")
    for w in row.welfares:
        print(f"  welfare {ex.fmt(w)}")
    print(f"p {ex.fmt(row.p)}  ({row.flag})")
    if args.out:
        report = ex.aggregate([row])
        ex.write_csv(args.out, ex.STUDY_HEADER, ex.study_rows(report))
    return 0 if row.welfares else 1


def cmd_gen(args):
    if args.kind == "ladder":
        budgets = tuple(args.budgets) if args.budgets else None
        inst = gen.gen_ladder(gen.LadderSpec(args.agents, args.epsilon, budgets, args.d0, args.mode))
    else:
        inst = gen.gen_random(gen.RandomSpec(
            args.vertices, args.density, args.agents, seed=args.seed, index=args.index, mode=args.mode,
            common_pair=args.common_pair, integral=args.integral))
    text = im.dumps(inst)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _configs(text):
    out = []
    for part in text.split(";"):
        n, f, d = part.split(",")
        out.append((int(n), int(f), float(d)))
    return tuple(out)


def cmd_reproduce(args):
    opts = {}
    if args.seed is not None:
        opts["seed"] = args.seed
    if args.target == "random-study":
        if args.all_configs:
            opts["configs"] = ex.STUDY_GRID
        elif args.configs:
            opts["configs"] = _configs(args.configs)
        if args.instances:
            opts["instances"] = args.instances
        if args.runs:
            opts["runs"] = args.runs
        opts["workers"] = args.workers
    if args.target == "ladder-sweep":
        if args.max_agents:
            opts["sweep_F"] = range(5, args.max_agents + 1, 5)
        if args.no_figure:
            opts["agent_sweep"] = False
    rep = ex.reproduce(args.target, args.out, **opts)
    for line in rep.lines:
        print(line)
    for path in rep.files:
        print(f"wrote {path}")
    for msg in rep.failures:
        print(f"FAILED: {msg}", file=sys.stderr)
    return 0 if rep.ok else 1


def build_parser():
    p = argparse.ArgumentParser(prog="dspi", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve-lcp", help="equilibrium of a continuous instance by Lemke's method")
    s.add_argument("instance")
    s.add_argument("--max-pivots", type=int)
    s.add_argument("--dump", help="write q, M and the pivot log here")
    s.add_argument("--out", help="profile CSV")
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_solve_lcp)

    s = sub.add_parser("dynamics", help="Gauss-Seidel best-response dynamics")
    s.add_argument("instance")
    s.add_argument("--tau", type=float, default=0.0, help="proximal weight (continuous only)")
    s.add_argument("--eps", type=float, help="stopping threshold on the iterate change")
    s.add_argument("--order", help="agent order as '2,0,1' or an integer seed")
    s.add_argument("--start", help="initial profile (.json nested list or CSV)")
    s.add_argument("--max-outer", type=int, default=1000)
    s.add_argument("--trace", help="JSON-lines trace output")
    s.add_argument("--out", help="final profile CSV")
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_dynamics)

    s = sub.add_parser("centralized", help="pooled-budget welfare optimum")
    s.add_argument("instance")
    s.add_argument("--out", help="profile CSV")
    s.set_defaults(func=cmd_centralized)

    s = sub.add_parser("poa", help="empirical price of anarchy from multi-start dynamics")
    s.add_argument("instance")
    s.add_argument("--starts", type=int, default=1)
    s.add_argument("--orders", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="CSV row")
    s.set_defaults(func=cmd_poa)

    s = sub.add_parser("gen", help="generate an instance file")
    g = s.add_subparsers(dest="kind", required=True)
    lad = g.add_parser("ladder")
    lad.add_argument("agents", type=int)
    lad.add_argument("--epsilon", type=float, default=2.0)
    lad.add_argument("--budgets", type=float, nargs="+")
    lad.add_argument("--d0", type=float, default=0.0)
    lad.add_argument("--mode", choices=MODES, default=CONTINUOUS)
    lad.add_argument("-o", "--out")
    rnd = g.add_parser("random")
    rnd.add_argument("--vertices", type=int, required=True)
    rnd.add_argument("--density", type=float, required=True)
    rnd.add_argument("--agents", type=int)
    rnd.add_argument("--seed", type=int, default=0)
    rnd.add_argument("--index", type=int, default=0)
    rnd.add_argument("--mode", choices=MODES, default=CONTINUOUS)
    rnd.add_argument("--common-pair", action="store_true")
    rnd.add_argument("--integral", action="store_true")
    rnd.add_argument("-o", "--out")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("reproduce", help="run a reproduction driver and write its reports")
    s.add_argument("target", choices=sorted(ex.TARGETS))
    s.add_argument("--out", default="reports")
    s.add_argument("--seed", type=int)
    s.add_argument("--configs", help="random-study grid as 'V,F,D;V,F,D'")
    s.add_argument("--all-configs", action="store_true", help="random-study over the full published grid")
    s.add_argument("--instances", type=int)
    s.add_argument("--runs", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--max-agents", type=int, help="ladder-sweep upper F (step 5)")
    s.add_argument("--no-figure", action="store_true", help="skip the efficiency-vs-agents data")
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (im.InstanceError, solvers.SolverError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
