"""Simulation driver enforcing the online information model, and the policy registry."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .errors import ParameterError
from .model import Instance, event_slots, lp_norms, machine_loads, objective
from .policies import GreedyLp, LinfExp, NaiveBaseline, OnlinePolicy, RoundRobin, effective_p
from .wrappers import Doubling, LambdaDoubling, TimeBlocking

POLICIES = ("greedy-lp", "linf-exp", "naive", "round-robin")


@dataclass
class RunResult:
    instance: Instance
    assignment: tuple[int, ...]
    slots: np.ndarray
    loads: np.ndarray
    p_norms: np.ndarray
    inf_norms: np.ndarray
    objective: float


def feed(policy: OnlinePolicy, inst: Instance, notify_departures: bool = True) -> tuple[int, ...]:
    """Present jobs in (arrival, id) order; departures up to time t are reported before arrivals at t."""
    pending: list[tuple[int, int]] = []
    choice = []
    for job in inst.jobs:
        while pending and pending[0][0] <= job.arrival:
            slot, jid = heapq.heappop(pending)
            if notify_departures:
                policy.on_departure(jid, slot)
        i = policy.on_arrival(job.announce())
        if not math.isfinite(job.loads[i]):
            raise ParameterError(f"policy put job {job.id} on infeasible machine {i}")
        choice.append(i)
        heapq.heappush(pending, (job.departure, job.id))
    while pending and notify_departures:
        slot, jid = heapq.heappop(pending)
        policy.on_departure(jid, slot)
    return tuple(choice)


def trace(inst: Instance, assignment, p: float) -> RunResult:
    arr = [j.arrival for j in inst.jobs]
    dur = [j.duration for j in inst.jobs]
    slots = event_slots(arr, dur)
    L = machine_loads(inst, assignment, slots) if inst.jobs else np.zeros((0, inst.machines))
    pn = lp_norms(L, p)
    return RunResult(
        instance=inst,
        assignment=tuple(assignment),
        slots=slots,
        loads=L,
        p_norms=pn,
        inf_norms=lp_norms(L, math.inf),
        objective=objective(inst, assignment, p),
    )


def run_online(policy: OnlinePolicy, inst: Instance, p: float, notify_departures: bool = True) -> RunResult:
    return trace(inst, feed(policy, inst, notify_departures), p)


def _base(name: str, machines: int, p: float, lam: float | None = None, **hints) -> OnlinePolicy:
    if name == "greedy-lp":
        return GreedyLp(machines, p, **hints)
    if name == "naive":
        return NaiveBaseline(machines, p, **hints)
    if name == "linf-exp":
        return LinfExp(machines, lam, **hints)
    if name == "round-robin":
        return RoundRobin(machines)
    raise ParameterError(f"unknown policy {name!r}; choose from {', '.join(POLICIES)}")


def build_policy(
    name: str,
    machines: int,
    p: float,
    mu1: float = 1.0,
    dtilde: float = 1.0,
    mu: float | None = None,
    lam: float | None = None,
    doubling: bool = False,
    blocking: bool = False,
    lambda_doubling: bool = False,
) -> OnlinePolicy:
    """Policy by name plus wrapper flags.

    Composition order, outermost first: lambda-doubling, doubling, blocking.
    ``linf-exp`` without an explicit Lambda always gets lambda-doubling.
    """
    if name not in POLICIES:
        raise ParameterError(f"unknown policy {name!r}; choose from {', '.join(POLICIES)}")
    if lambda_doubling and name != "linf-exp":
        raise ParameterError("--lambda-doubling applies to linf-exp only")
    p_eff = effective_p(p, machines)
    mu = mu1 if mu is None else mu

    def assemble(lam_value):
        inner = partial(_base, name, machines, p, lam_value)
        if blocking:
            inner = partial(TimeBlocking, inner)
        if doubling:
            return Doubling(inner, p_eff)
        return inner(mu1=mu1, dtilde=dtilde, mu=mu)

    if name == "linf-exp" and (lambda_doubling or lam is None):
        return LambdaDoubling(assemble, machines)
    return assemble(lam)
