"""Virtual-circuit routing: jobs pick a whole s-t path; every edge on it carries the job's load."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InfeasibleError, ParameterError, UnassignedJobError
from .model import LoadLedger, decode_load, encode_load, load_profile, lp_norms
from .policies import AlgParams, effective_p, log_lp_increments, logsumexp, pick_min, power_gain

Path = tuple[int, ...]


@dataclass(frozen=True)
class Graph:
    vertices: int
    edges: tuple[tuple[int, int], ...]  # undirected, parallel edges allowed

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        for u, v in self.edges:
            if not (0 <= u < self.vertices and 0 <= v < self.vertices):
                raise ParameterError(f"edge ({u}, {v}) outside 0..{self.vertices - 1}")

    def adjacency(self) -> list[list[tuple[int, int]]]:
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.vertices)]
        for e, (u, v) in enumerate(self.edges):
            if u != v:
                adj[u].append((e, v))
                adj[v].append((e, u))
        return adj

    def to_dict(self) -> dict:
        return {"vertices": self.vertices, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        return cls(int(data["vertices"]), tuple(tuple(e) for e in data["edges"]))


def triangle() -> Graph:
    return Graph(3, ((0, 1), (1, 2), (0, 2)))


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((u, v) for u in range(n) for v in range(u + 1, n)))


def parallel_edges(m: int) -> Graph:
    """Two vertices joined by m parallel edges: machines in disguise."""
    return Graph(2, ((0, 1),) * m)


def enumerate_simple_paths(g: Graph, s: int, t: int, max_len: int | None = None) -> list[Path]:
    """All simple s-t paths with at most ``max_len`` edges, as sorted edge-index tuples."""
    if s == t:
        raise ParameterError("source and target must differ")
    max_len = g.vertices if max_len is None else max_len
    return list(_paths(g, s, t, max_len))


@lru_cache(maxsize=4096)
def _paths(g: Graph, s: int, t: int, max_len: int) -> tuple[Path, ...]:
    adj = g.adjacency()
    out: list[Path] = []
    seen = {s}
    stack: list[int] = []

    def dfs(u):
        if u == t:
            out.append(tuple(stack))
            return
        if len(stack) == max_len:
            return
        for e, v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(e)
                dfs(v)
                stack.pop()
                seen.discard(v)

    dfs(s)
    return tuple(sorted(out))


@dataclass(frozen=True)
class RoutingJob:
    id: int
    arrival: int
    source: int
    target: int
    edge_loads: tuple[float, ...]
    predicted: float
    duration: int

    def __post_init__(self):
        if self.arrival < 0 or self.duration < 1 or self.predicted < 1:
            raise ParameterError(f"routing job {self.id}: bad timing")
        if any(not x > 0 for x in self.edge_loads):
            raise ParameterError(f"routing job {self.id}: edge loads must be positive")

    @property
    def departure(self) -> int:
        return self.arrival + self.duration

    def path_load(self, path: Path) -> list[tuple[int, float]]:
        return [(e, self.edge_loads[e]) for e in path]

    def usable(self, path: Path) -> bool:
        return all(math.isfinite(self.edge_loads[e]) for e in path)


@dataclass(frozen=True)
class RoutingInstance:
    graph: Graph
    jobs: tuple[RoutingJob, ...]

    def __post_init__(self):
        E = len(self.graph.edges)
        for j in self.jobs:
            if len(j.edge_loads) != E:
                raise ParameterError(f"routing job {j.id}: {len(j.edge_loads)} edge loads for {E} edges")
        jobs = sorted(self.jobs, key=lambda j: (j.arrival, j.id))
        object.__setattr__(
            self,
            "jobs",
            tuple(RoutingJob(k, j.arrival, j.source, j.target, tuple(j.edge_loads), j.predicted, j.duration)
                  for k, j in enumerate(jobs)),
        )

    def candidates(self, job: RoutingJob, max_len: int | None = None) -> list[Path]:
        return [w for w in enumerate_simple_paths(self.graph, job.source, job.target, max_len) if job.usable(w)]

    def to_dict(self) -> dict:
        out = self.graph.to_dict()
        out["jobs"] = [
            {
                "arrival": j.arrival,
                "duration": j.duration,
                "predicted": j.predicted,
                "source": j.source,
                "target": j.target,
                "edge_loads": [encode_load(x) for x in j.edge_loads],
            }
            for j in self.jobs
        ]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RoutingInstance":
        g = Graph.from_dict(data)
        jobs = tuple(
            RoutingJob(k, int(d["arrival"]), int(d["source"]), int(d["target"]),
                       tuple(decode_load(x) for x in d["edge_loads"]), float(d["predicted"]), int(d["duration"]))
            for k, d in enumerate(data["jobs"])
        )
        return cls(g, jobs)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads_json(cls, text: str) -> "RoutingInstance":
        return cls.from_dict(json.loads(text))


class GreedyRouter:
    """Greedy path choice on the l_p potential of per-edge pseudo-loads.

    The potential couples edges through the outer exponent w, so each
    candidate path is priced as a whole.  Ties go to the first path in
    enumeration order.
    """

    name = "greedy-route"
    estimation_only = True

    def __init__(self, graph: Graph, p: float, mu1: float = 1.0, dtilde: float = 1.0, mu: float = 1.0,
                 max_len: int | None = None):
        self.graph = graph
        self.params = AlgParams(effective_p(p, max(2, len(graph.edges))), mu1, dtilde, mu)
        self.ledger = LoadLedger(len(graph.edges))
        self.max_len = max_len
        self.decisions: list[Path] = []
        self.log_increments: list[float] = []

    def path_costs(self, job: RoutingJob, paths: list[Path]) -> np.ndarray:
        p, w = self.params.p, self.params.w
        lo, hi = job.arrival + 1, job.arrival + self.params.window(job.predicted)
        bps, loads = self.ledger.segments(lo, hi)
        with np.errstate(divide="ignore"):
            log_len = np.log(np.diff(bps).astype(float))
        costs = np.empty(len(paths))
        for k, path in enumerate(paths):
            gain = np.zeros(loads.shape[0])
            for e in path:
                gain = gain + power_gain(loads[:, e], job.edge_loads[e], p)
            costs[k] = logsumexp(log_len + log_lp_increments(loads, gain, p, w))
        return costs

    def on_arrival(self, job: RoutingJob) -> Path:
        paths = [w for w in enumerate_simple_paths(self.graph, job.source, job.target, self.max_len) if job.usable(w)]
        if not paths:
            raise InfeasibleError(f"routing job {job.id} has no usable path")
        costs = self.path_costs(job, paths)
        k = pick_min(costs)
        lo, hi = job.arrival + 1, job.arrival + self.params.window(job.predicted)
        for e in paths[k]:
            self.ledger.add(lo, hi, e, job.edge_loads[e], len(self.decisions))
        self.decisions.append(paths[k])
        self.log_increments.append(float(costs[k]))
        return paths[k]


def run_routing(router: GreedyRouter, inst: RoutingInstance) -> tuple[Path, ...]:
    return tuple(router.on_arrival(j) for j in inst.jobs)


def edge_rows(inst: RoutingInstance, paths) -> np.ndarray:
    if len(paths) != len(inst.jobs):
        raise UnassignedJobError(f"{len(paths)} paths for {len(inst.jobs)} jobs")
    rows = np.zeros((len(inst.jobs), len(inst.graph.edges)))
    for j, w in zip(inst.jobs, paths):
        if w is None:
            raise UnassignedJobError(f"routing job {j.id} is unrouted")
        if not j.usable(w):
            raise InfeasibleError(f"routing job {j.id} uses an unusable edge")
        for e in w:
            rows[j.id, e] += j.edge_loads[e]
    return rows


def routing_objective(inst: RoutingInstance, paths, p: float) -> float:
    """max over slots of the p-norm of the edge-load vector."""
    rows = edge_rows(inst, paths)
    if not inst.jobs:
        return 0.0
    arr = [j.arrival for j in inst.jobs]
    starts = np.unique(np.asarray(arr) + 1)
    L = load_profile(arr, [j.duration for j in inst.jobs], rows, starts)
    return float(lp_norms(L, p).max())
