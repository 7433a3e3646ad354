"""Wrappers that remove the known-parameter assumptions by running fresh copies.

A *factory* builds an inner policy from parameter guesses::

    factory(mu1=..., dtilde=..., mu=...) -> OnlinePolicy

``LambdaDoubling`` takes a factory of one argument (the normalisation Lambda).
Each wrapper routes a job to exactly one copy and remembers which one, so the
global load is the sum of the copies' loads.
"""

from __future__ import annotations

import math
from typing import Callable

from .model import Arrival, floor_slots
from .policies import OnlinePolicy

Factory = Callable[..., OnlinePolicy]


class _Copies(OnlinePolicy):
    def __init__(self):
        self.copies: list[OnlinePolicy] = []
        self.copy_params: list[dict] = []
        self.copy_of: dict[int, int] = {}

    @property
    def estimation_only(self) -> bool:  # departures are read by the wrapper itself
        return False

    def _spawn(self, policy: OnlinePolicy, **params) -> None:
        self.copies.append(policy)
        self.copy_params.append(params)

    def _route(self, job: Arrival, k: int) -> int:
        self.copy_of[job.id] = k
        return self.copies[k].on_arrival(job)

    def on_departure(self, job_id: int, slot: int) -> None:
        k = self.copy_of.get(job_id)
        if k is not None:
            self.copies[k].on_departure(job_id, slot)


class Doubling(_Copies):
    """Guess (mu1, D~) online; open a new copy whenever an observation exceeds the guess.

    Departed jobs give their exact duration; a job still active at time ``t``
    has ``d >= t - arrival + 1``.  The first copy uses ``mu1 = 1, D~ = 2^p``.
    """

    name = "doubling"

    def __init__(self, factory: Factory, p: float):
        super().__init__()
        self.factory = factory
        self.obs_mu1 = 1.0
        self.obs_mu2 = 1.0
        self.obs_dtilde = 0.0
        self._active: dict[int, tuple[int, float]] = {}
        self._open(1.0, 2.0**p)

    def _open(self, mu1: float, dtilde: float) -> None:
        mu = mu1 * self.obs_mu2
        self.mu1_guess, self.dtilde_guess = mu1, dtilde
        self._spawn(self.factory(mu1=mu1, dtilde=dtilde, mu=mu), mu1=mu1, dtilde=dtilde, mu=mu)

    def on_arrival(self, job: Arrival) -> int:
        t = job.arrival
        for arr, pred in self._active.values():
            self.obs_mu1 = max(self.obs_mu1, (t - arr + 1) / pred)
        self.obs_dtilde = max(self.obs_dtilde, job.predicted)
        if self.obs_mu1 > self.mu1_guess or self.obs_dtilde > self.dtilde_guess:
            mu1 = 2.0 * self.obs_mu1
            self._open(mu1, self.obs_dtilde**2 * mu1)
        self._active[job.id] = (job.arrival, job.predicted)
        return self._route(job, len(self.copies) - 1)

    def on_departure(self, job_id: int, slot: int) -> None:
        arr, pred = self._active.pop(job_id)
        d = slot - arr
        self.obs_mu1 = max(self.obs_mu1, d / pred)
        self.obs_mu2 = max(self.obs_mu2, pred / d)
        super().on_departure(job_id, slot)


class TimeBlocking(_Copies):
    """Independent copy per arrival block [(k-1)T~/2, kT~/2), T~/2 = mu1*D~."""

    name = "blocking"

    def __init__(self, factory: Factory, mu1: float, dtilde: float, mu: float = 1.0):
        super().__init__()
        self.factory = factory
        self.mu1, self.dtilde, self.mu = mu1, dtilde, mu
        self.half = mu1 * dtilde
        self.group_copy: dict[int, int] = {}

    def group(self, arrival: int) -> int:
        return math.floor(arrival / self.half + 1e-12)

    def on_arrival(self, job: Arrival) -> int:
        g = self.group(job.arrival)
        if g not in self.group_copy:
            self.group_copy[g] = len(self.copies)
            self._spawn(self.factory(mu1=self.mu1, dtilde=self.dtilde, mu=self.mu), group=g)
        return self._route(job, self.group_copy[g])


def blocking_violations(inst, mu1: float, dtilde: float) -> list[int]:
    """Jobs of block k (0-based) that are still alive after slot (k+2)*T~/2."""
    half = mu1 * dtilde
    bad = []
    for j in inst.jobs:
        g = math.floor(j.arrival / half + 1e-12)
        if j.departure > floor_slots((g + 2) * half):
            bad.append(j.id)
    return bad


class LambdaDoubling(_Copies):
    """Guess the optimum for the exponential rule; restart with Lam = 2*LB once LB > Lam.

    LB = max(largest single-job minimum load, max over arrival instants of
    (sum of minimum loads of jobs known to be alive) / m).  Both are lower
    bounds on the optimal makespan.
    """

    name = "lambda-doubling"

    def __init__(self, factory: Callable[[float], OnlinePolicy], machines: int):
        super().__init__()
        self.factory = factory
        self.machines = machines
        self.lb = 0.0
        self.lam: float | None = None
        self._alive: dict[int, float] = {}
        self.restarts = 0

    def on_arrival(self, job: Arrival) -> int:
        least = min(x for x in job.loads if math.isfinite(x))
        self._alive[job.id] = least
        self.lb = max(self.lb, least, sum(self._alive.values()) / self.machines)
        if self.lam is None:
            self.lam = self.lb
            self._spawn(self.factory(self.lam), lam=self.lam)
        elif self.lb > self.lam:
            self.lam = 2.0 * self.lb
            self.restarts += 1
            self._spawn(self.factory(self.lam), lam=self.lam)
        return self._route(job, len(self.copies) - 1)

    def on_departure(self, job_id: int, slot: int) -> None:
        self._alive.pop(job_id, None)
        super().on_departure(job_id, slot)
