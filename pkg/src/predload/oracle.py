"""Exact offline optimum by depth-first branch and bound.

Jobs are branched in arrival order; each job picks one *choice*, a list of
(resource, load) pairs (a machine, or every edge of a path).  Loads are only
tracked at job-start slots, which is where the time-max of the norm is
attained.  The partial objective can only grow as jobs are added, so a branch
whose partial value already reaches the incumbent is cut.  Incumbents are
replaced on strict improvement only, which makes the result the
lexicographically smallest optimal choice vector.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import OracleRefusal, ParameterError
from .model import Instance, objective
from .routing import RoutingInstance, routing_objective

DEFAULT_LIMIT = 12
PRUNE_RTOL = 1e-12

Choice = list[tuple[int, float]]


@dataclass
class OracleResult:
    assignment: tuple
    value: float
    nodes: int
    optimal: bool = True

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "assignment": [list(a) if isinstance(a, tuple) else a for a in self.assignment],
            "nodes": self.nodes,
            "optimal": self.optimal,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _check_limit(n: int, limit: int | None) -> None:
    if limit is not None and n > limit:
        raise OracleRefusal(f"{n} jobs exceed the oracle limit of {limit}; raise the limit to force a search")


def norm_lower_bound(arrivals, durations, least, p: float, resources: int) -> float:
    """Per-slot bound from the cheapest load of each alive job.

    Superadditivity of x^p gives ||l||_p^p >= sum_j least_j^p; the m-point
    power mean adds ||l||_p >= m^{1/p - 1} sum_j least_j.
    """
    if len(arrivals) == 0:
        return 0.0
    a = np.asarray(arrivals)
    e = a + np.asarray(durations)
    x = np.asarray(least, dtype=float)
    best = 0.0
    for s in np.unique(a + 1):
        alive = x[(a + 1 <= s) & (s <= e)]
        if math.isinf(p):
            v = max(alive.max(), alive.sum() / resources)
        else:
            v = max((alive**p).sum() ** (1.0 / p), resources ** (1.0 / p - 1.0) * alive.sum())
        best = max(best, float(v))
    return best


def branch_and_bound(arrivals, durations, choices: list[list[Choice]], resources: int, p: float,
                     upper: float | None = None, lower: float = 0.0) -> tuple[tuple[int, ...] | None, int]:
    """Index of the chosen option per job, and the number of nodes visited.

    ``upper`` seeds the incumbent (a known achievable value); ``lower`` lets
    the search stop as soon as the incumbent meets it.
    """
    n = len(choices)
    if n == 0:
        return (), 1
    arr = np.asarray(arrivals, dtype=np.int64)
    end = arr + np.asarray(durations, dtype=np.int64)
    starts = np.unique(arr + 1)
    alive = [np.flatnonzero((arr[k] + 1 <= starts) & (starts <= end[k])) for k in range(n)]
    scale = max(l for opts in choices for c in opts for _, l in c)
    opts = [[[(r, l / scale) for r, l in c] for c in cs] for cs in choices]
    inf = math.isinf(p)
    L = np.zeros((starts.size, resources))
    P = np.zeros(starts.size)  # sum of powers per slot (unused for l_inf)

    best = math.inf if upper is None else upper / scale * (1 + 1e-9)
    stop_at = lower / scale * (1 + PRUNE_RTOL)
    best_pick: list[int] | None = None
    pick = [0] * n
    nodes = 0
    done = False

    def value(idx):
        if inf:
            return float(L[idx].max())
        return float(P[idx].max()) ** (1.0 / p)

    def dfs(k: int, cur: float) -> None:
        nonlocal best, best_pick, nodes, done
        nodes += 1
        if k == n:
            if cur < best * (1 - PRUNE_RTOL):
                best, best_pick = cur, pick.copy()
                if best <= stop_at:
                    done = True
            return
        idx = alive[k]
        for ci, c in enumerate(opts[k]):
            rs = [r for r, _ in c]
            saved_L = L[np.ix_(idx, rs)].copy()
            saved_P = P[idx].copy()
            for r, l in c:
                if not inf:
                    old = L[idx, r]
                    P[idx] += (old + l) ** p - old**p
                L[idx, r] += l
            v = max(cur, value(idx))
            if v < best * (1 - PRUNE_RTOL):
                pick[k] = ci
                dfs(k + 1, v)
            L[np.ix_(idx, rs)] = saved_L
            P[idx] = saved_P
            if done:
                return

    dfs(0, 0.0)
    return (None if best_pick is None else tuple(best_pick)), nodes


def machine_choices(inst: Instance) -> list[list[Choice]]:
    return [[[(i, x)] for i, x in enumerate(j.loads) if math.isfinite(x)] for j in inst.jobs]


def opt_assign(inst: Instance, p: float, limit: int | None = DEFAULT_LIMIT, upper: float | None = None) -> OracleResult:
    """Optimal assignment; ``upper`` may seed the search with a known achievable value."""
    _check_limit(len(inst.jobs), limit)
    if not inst.jobs:
        return OracleResult((), 0.0, 1)
    arr = [j.arrival for j in inst.jobs]
    dur = [j.duration for j in inst.jobs]
    lb = norm_lower_bound(arr, dur, [j.min_load() for j in inst.jobs], p, inst.machines)
    choices = machine_choices(inst)
    pick, nodes = branch_and_bound(arr, dur, choices, inst.machines, p, upper=upper, lower=lb)
    if pick is None:
        raise ParameterError("seeded upper bound is below the optimum")
    assignment = tuple(choices[k][c][0][0] for k, c in enumerate(pick))
    return OracleResult(assignment, objective(inst, assignment, p), nodes)


def opt_route(inst: RoutingInstance, p: float, limit: int | None = DEFAULT_LIMIT,
              max_len: int | None = None) -> OracleResult:
    _check_limit(len(inst.jobs), limit)
    if not inst.jobs:
        return OracleResult((), 0.0, 1)
    paths = [inst.candidates(j, max_len) for j in inst.jobs]
    for j, ws in zip(inst.jobs, paths):
        if not ws:
            raise ParameterError(f"routing job {j.id} has no usable path")
    choices = [[j.path_load(w) for w in ws] for j, ws in zip(inst.jobs, paths)]
    arr = [j.arrival for j in inst.jobs]
    dur = [j.duration for j in inst.jobs]
    # a job alone on its path already has this p-norm over the edges
    least = [min(float(np.linalg.norm([l for _, l in c], ord=p)) for c in cs) for cs in choices]
    lb = norm_lower_bound(arr, dur, least, p, len(inst.graph.edges))
    pick, nodes = branch_and_bound(arr, dur, choices, len(inst.graph.edges), p, lower=lb)
    route = tuple(paths[k][c] for k, c in enumerate(pick))
    return OracleResult(route, routing_objective(inst, route, p), nodes)


def enumerate_assign(inst: Instance, p: float) -> OracleResult:
    """Plain exhaustive search, no pruning; reference for small instances."""
    feas = [[i for i, x in enumerate(j.loads) if math.isfinite(x)] for j in inst.jobs]
    best, arg, count = math.inf, (), 0
    for a in itertools.product(*feas):
        count += 1
        v = objective(inst, a, p)
        if v < best * (1 - PRUNE_RTOL):
            best, arg = v, a
    return OracleResult(tuple(arg), 0.0 if not inst.jobs else best, count)


def enumerate_route(inst: RoutingInstance, p: float, max_len: int | None = None) -> OracleResult:
    paths = [inst.candidates(j, max_len) for j in inst.jobs]
    best, arg, count = math.inf, (), 0
    for w in itertools.product(*paths):
        count += 1
        v = routing_objective(inst, w, p)
        if v < best * (1 - PRUNE_RTOL):
            best, arg = v, w
    return OracleResult(tuple(arg), 0.0 if not inst.jobs else best, count)


@dataclass
class Ratio:
    value: float
    on: float
    opt: float
    is_lower_bound: bool  # True when opt is only an upper bound on OPT (reference witness)


def competitive_ratio(policy, source, p: float | None = None, limit: int | None = DEFAULT_LIMIT,
                      use_reference: bool = False) -> Ratio:
    """ON/OPT for a policy on an instance, or for a finished adversary transcript.

    For a transcript the policy has already played; with ``use_reference`` the
    adversary's witness replaces the oracle and the ratio is a lower bound on
    the true one.
    """
    from .adversaries import AdversaryTranscript
    from .simulate import run_online

    if isinstance(source, AdversaryTranscript):
        p = source.p if p is None else p
        on = source.realized_on(p)
        if use_reference:
            opt = source.reference_value(p)
            return Ratio(on / opt, on, opt, True)
        opt = opt_assign(source.instance, p, limit, upper=source.reference_value(p)).value
        return Ratio(on / opt, on, opt, False)
    if p is None:
        raise ParameterError("p is required for a plain instance")
    on = run_online(policy, source, p).objective
    opt = opt_assign(source, p, limit).value
    if opt == 0:
        return Ratio(1.0, on, opt, False)
    return Ratio(on / opt, on, opt, False)
