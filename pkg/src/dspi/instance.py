"""Instance model for decentralized shortest-path interdiction games.

An instance is a directed network with initial arc lengths ``d0`` and
(discrete mode) fixed extensions ``e``, plus a list of agents, each with a
source/target pair, per-arc interdiction costs and a budget.  Strategy
profiles are ``F x |A|`` arrays.
"""
from __future__ import annotations

import heapq
import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

CONTINUOUS = "continuous"
DISCRETE = "discrete"
MODES = (CONTINUOUS, DISCRETE)

FEAS_TOL = 1e-9


class InstanceError(ValueError):
    """Raised for structurally invalid instances or profiles."""


class UnreachableError(InstanceError):
    """Raised when an agent's target cannot be reached from its source."""


class EnumerationCapError(RuntimeError):
    """Raised when path enumeration exceeds its cap."""


class ZeroLengthWarning(UserWarning):
    """Some initial arc lengths are zero (accepted, but outside the usual d0 > 0 setting)."""


@dataclass(frozen=True, eq=False)
class Network:
    nodes: tuple
    tails: np.ndarray
    heads: np.ndarray
    d0: np.ndarray
    ext: np.ndarray

    @classmethod
    def from_arcs(cls, nodes: Sequence[Hashable], arcs: Sequence[tuple]) -> "Network":
        """Build from ``(tail, head, d0[, e])`` tuples; ``e`` defaults to 0."""
        nodes = tuple(nodes)
        if len(set(nodes)) != len(nodes):
            raise InstanceError("duplicate node ids")
        index = {v: i for i, v in enumerate(nodes)}
        tails, heads, d0, ext = [], [], [], []
        seen = set()
        for arc in arcs:
            u, v, length = arc[0], arc[1], float(arc[2])
            e = float(arc[3]) if len(arc) > 3 else 0.0
            if u not in index or v not in index:
                raise InstanceError(f"arc ({u}, {v}) references an unknown node")
            if (u, v) in seen:
                raise InstanceError(f"parallel arc ({u}, {v})")
            if length < 0 or e < 0 or not np.isfinite(length) or not np.isfinite(e):
                raise InstanceError(f"arc ({u}, {v}) has a negative or non-finite length")
            seen.add((u, v))
            tails.append(index[u])
            heads.append(index[v])
            d0.append(length)
            ext.append(e)
        net = cls(nodes, np.array(tails, dtype=int), np.array(heads, dtype=int),
                  np.array(d0, dtype=float), np.array(ext, dtype=float))
        for a in (net.tails, net.heads, net.d0, net.ext):
            a.setflags(write=False)
        return net

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_arcs(self) -> int:
        return len(self.tails)

    @cached_property
    def node_index(self) -> dict:
        return {v: i for i, v in enumerate(self.nodes)}

    @cached_property
    def arc_index(self) -> dict:
        """Map ``(tail_id, head_id)`` to arc position."""
        return {(self.nodes[u], self.nodes[v]): a
                for a, (u, v) in enumerate(zip(self.tails, self.heads))}

    @cached_property
    def out_arcs(self) -> list[list[int]]:
        out = [[] for _ in self.nodes]
        for a, u in enumerate(self.tails):
            out[u].append(a)
        return out

    @cached_property
    def incidence(self) -> np.ndarray:
        """Arc-node incidence: +1 at the tail, -1 at the head of each arc."""
        g = np.zeros((self.n_arcs, self.n_nodes))
        rows = np.arange(self.n_arcs)
        g[rows, self.tails] = 1.0
        g[rows, self.heads] = -1.0
        return g

    def arc(self, a: int) -> tuple:
        return self.nodes[self.tails[a]], self.nodes[self.heads[a]]


@dataclass(frozen=True, eq=False)
class Agent:
    source: Hashable
    target: Hashable
    costs: np.ndarray
    budget: float


@dataclass(frozen=True, eq=False)
class InterdictionInstance:
    network: Network
    agents: tuple
    mode: str = CONTINUOUS
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise InstanceError(f"unknown mode {self.mode!r}")
        if not self.agents:
            raise InstanceError("an instance needs at least one agent")
        net = self.network
        for f, ag in enumerate(self.agents):
            if ag.source not in net.node_index or ag.target not in net.node_index:
                raise InstanceError(f"agent {f}: unknown source or target")
            if np.shape(ag.costs) != (net.n_arcs,):
                raise InstanceError(f"agent {f}: costs must have one entry per arc")
            if not np.all(np.asarray(ag.costs) > 0):
                raise InstanceError(f"agent {f}: costs must be positive")
            if not ag.budget > 0:
                raise InstanceError(f"agent {f}: budget must be positive")
            if net.n_arcs and ag.budget < float(np.min(ag.costs)) - FEAS_TOL:
                raise InstanceError(f"agent {f}: budget cannot cover any single arc")
        if np.any(net.d0 == 0) and net.n_arcs:
            warnings.warn("zero initial arc lengths present", ZeroLengthWarning, stacklevel=3)

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def n_arcs(self) -> int:
        return self.network.n_arcs

    @property
    def n_nodes(self) -> int:
        return self.network.n_nodes

    @cached_property
    def costs(self) -> np.ndarray:
        """``F x |A|`` cost matrix."""
        c = np.array([ag.costs for ag in self.agents], dtype=float).reshape(self.n_agents, self.n_arcs)
        c.setflags(write=False)
        return c

    @cached_property
    def budgets(self) -> np.ndarray:
        b = np.array([ag.budget for ag in self.agents], dtype=float)
        b.setflags(write=False)
        return b

    def source_index(self, f: int) -> int:
        return self.network.node_index[self.agents[f].source]

    def target_index(self, f: int) -> int:
        return self.network.node_index[self.agents[f].target]

    def zero_profile(self) -> np.ndarray:
        return np.zeros((self.n_agents, self.n_arcs))

    def with_mode(self, mode: str) -> "InterdictionInstance":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ZeroLengthWarning)
            return InterdictionInstance(self.network, self.agents, mode, self.name, dict(self.meta))

    def with_budget(self, f: int, budget: float) -> "InterdictionInstance":
        agents = list(self.agents)
        a = agents[f]
        agents[f] = Agent(a.source, a.target, a.costs, float(budget))
        return InterdictionInstance(self.network, tuple(agents), self.mode, self.name, dict(self.meta))

    def validate(self) -> None:
        """Check reachability of every agent's target (raises UnreachableError)."""
        for f in range(self.n_agents):
            shortest_path(self, self.zero_profile(), f)


def make_instance(nodes, arcs, agents, mode=CONTINUOUS, name="", validate=True, meta=None):
    """Convenience constructor.

    ``agents`` entries are ``(source, target, costs, budget)`` where costs is
    a scalar (same for every arc), a sequence in arc order or a mapping from
    ``(tail, head)`` to cost.
    """
    net = Network.from_arcs(nodes, arcs)
    built = []
    for source, target, costs, budget in agents:
        if np.isscalar(costs):
            c = np.full(net.n_arcs, float(costs))
        elif isinstance(costs, dict):
            c = np.empty(net.n_arcs)
            for key, val in costs.items():
                c[net.arc_index[tuple(key)]] = float(val)
            if len(costs) != net.n_arcs:
                raise InstanceError("cost map must cover every arc")
        else:
            c = np.array(costs, dtype=float)
        c.setflags(write=False)
        built.append(Agent(source, target, c, float(budget)))
    inst = InterdictionInstance(net, tuple(built), mode, name, dict(meta or {}))
    if validate:
        inst.validate()
    return inst


def check_profile(instance: InterdictionInstance, profile) -> np.ndarray:
    x = np.asarray(profile, dtype=float)
    if x.shape != (instance.n_agents, instance.n_arcs):
        raise InstanceError(
            f"profile shape {x.shape} does not match ({instance.n_agents}, {instance.n_arcs})")
    return x


def aftermath_lengths(instance: InterdictionInstance, profile) -> np.ndarray:
    x = check_profile(instance, profile)
    net = instance.network
    if instance.mode == CONTINUOUS:
        return net.d0 + x.sum(axis=0)
    return net.d0 + net.ext * x.max(axis=0)


def _dijkstra(instance, lengths, s):
    net = instance.network
    n = net.n_nodes
    dist = [np.inf] * n
    pred = [-1] * n
    done = [False] * n
    dist[s] = 0.0
    heap = [(0.0, s)]
    heads, out = net.heads, net.out_arcs
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for a in out[u]:
            v = heads[a]
            if done[v]:
                continue
            nd = du + lengths[a]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = a
                heapq.heappush(heap, (nd, v))
            elif nd == dist[v] and net.tails[pred[v]] > u:
                # ties go to the smaller predecessor node
                pred[v] = a
    return dist, pred


def shortest_path_tree(instance, profile, f, lengths=None):
    """Distances from agent ``f``'s source to every node, and predecessor arcs."""
    if lengths is None:
        lengths = aftermath_lengths(instance, profile)
    return _dijkstra(instance, lengths, instance.source_index(f))


def shortest_path(instance, profile, f, lengths=None):
    """Return ``(length, arc list)`` of agent ``f``'s shortest source-target path."""
    dist, pred = shortest_path_tree(instance, profile, f, lengths)
    t = instance.target_index(f)
    if not np.isfinite(dist[t]):
        raise UnreachableError(f"agent {f}: target unreachable from source")
    path = []
    v = t
    tails = instance.network.tails
    while pred[v] >= 0:
        path.append(pred[v])
        v = tails[pred[v]]
    path.reverse()
    return dist[t], path


def path_value(instance, profile, f, lengths=None) -> float:
    return shortest_path(instance, profile, f, lengths)[0]


def obstruction_values(instance, profile) -> np.ndarray:
    lengths = aftermath_lengths(instance, profile)
    return np.array([shortest_path(instance, None, f, lengths)[0] for f in range(instance.n_agents)])


def social_welfare(instance, profile) -> float:
    return float(obstruction_values(instance, profile).sum())


def potentials(instance, profile, f, lengths=None) -> np.ndarray:
    """Shortest-path distances from ``s^f`` capped at the big-M bound.

    These are optimal node potentials ``y^f`` for the agent's dual problem.
    """
    dist, _ = shortest_path_tree(instance, profile, f, lengths)
    return np.minimum(np.array(dist), big_m(instance))


def big_m(instance: InterdictionInstance) -> float:
    net = instance.network
    if instance.mode == DISCRETE:
        return float(np.sum(net.d0 + net.ext))
    ratio = float(np.max(instance.budgets[:, None] / instance.costs)) if net.n_arcs else 0.0
    return float(np.sum(net.d0)) + net.n_arcs * instance.n_agents * ratio


def budget_usage(instance, profile) -> np.ndarray:
    x = check_profile(instance, profile)
    return np.einsum("fa,fa->f", instance.costs, x)


def feasible(instance, profile, f, tol=FEAS_TOL) -> bool:
    x = check_profile(instance, profile)[f]
    if instance.mode == CONTINUOUS:
        if np.any(x < -tol):
            return False
    elif not np.all((x == 0) | (x == 1)):
        return False
    return float(instance.costs[f] @ x) <= instance.budgets[f] + tol


def enumerate_paths(instance, f, cap=10_000) -> list[list[int]]:
    """All simple ``s^f``-``t^f`` paths as arc lists, in DFS order."""
    net = instance.network
    s, t = instance.source_index(f), instance.target_index(f)
    paths = []
    on_path = [False] * net.n_nodes
    stack_arcs = []

    def visit(u):
        if u == t:
            if len(paths) >= cap:
                raise EnumerationCapError(f"more than {cap} paths")
            paths.append(list(stack_arcs))
            return
        on_path[u] = True
        for a in net.out_arcs[u]:
            v = net.heads[a]
            if not on_path[v]:
                stack_arcs.append(a)
                visit(v)
                stack_arcs.pop()
        on_path[u] = False

    visit(s)
    return paths


def path_length(lengths, path) -> float:
    total = 0.0
    for a in path:
        total = total + lengths[a]
    return total


# ---------------------------------------------------------------- file format

def to_dict(instance: InterdictionInstance) -> dict:
    net = instance.network
    doc = {
        "name": instance.name,
        "mode": instance.mode,
        "nodes": list(net.nodes),
        "arcs": [[net.nodes[u], net.nodes[v], float(d), float(e)]
                 for u, v, d, e in zip(net.tails, net.heads, net.d0, net.ext)],
        "agents": [{"source": ag.source, "target": ag.target, "budget": float(ag.budget),
                    "costs": [float(c) for c in ag.costs]} for ag in instance.agents],
    }
    if instance.meta:
        doc["meta"] = instance.meta
    return doc


def from_dict(doc: dict, validate=True) -> InterdictionInstance:
    nodes = list(doc["nodes"])
    arcs = [(a[0], a[1], a[2], a[3] if len(a) > 3 else 0.0) for a in doc["arcs"]]
    by_name = {str(v): v for v in nodes}
    agents = []
    for ag in doc["agents"]:
        costs = ag["costs"]
        if isinstance(costs, dict):
            # keys look like "tail,head"
            costs = {tuple(by_name[p.strip()] for p in k.split(",")): v for k, v in costs.items()}
        agents.append((ag["source"], ag["target"], costs, ag["budget"]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroLengthWarning)
        return make_instance(nodes, arcs, agents, doc.get("mode", CONTINUOUS), doc.get("name", ""),
                             validate, doc.get("meta"))



def dumps(instance: InterdictionInstance) -> str:
    return json.dumps(to_dict(instance), indent=1) + "\n"


def loads(text: str, validate=True) -> InterdictionInstance:
    return from_dict(json.loads(text), validate)


def save(instance: InterdictionInstance, path) -> None:
    Path(path).write_text(dumps(instance))


def load(path, validate=True) -> InterdictionInstance:
    return loads(Path(path).read_text(), validate)
