"""Online assignment rules driven by pseudo-loads.

Every rule here is *estimation-only*: it charges each job for
``floor(mu1 * predicted)`` slots and never looks at departures.  Costs are
compared in the log domain; the potential ``(sum_i x_i^p)^w`` has an exponent
``p*w = p + log2(T~)`` that overflows doubles quickly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, ParameterError
from .model import Arrival, LoadLedger, floor_slots

TIE_RTOL = 1e-12


def effective_p(p: float, machines: int) -> float:
    """Norm parameter the potential runs with: l_inf becomes l_{log2 m} (at least 1)."""
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    if math.isinf(p):
        return max(1.0, math.log2(machines)) if machines > 1 else 1.0
    return float(p)


@dataclass(frozen=True)
class AlgParams:
    p: float
    mu1: float = 1.0
    dtilde: float = 1.0
    mu: float = 1.0
    lam: float | None = None

    def __post_init__(self):
        if self.mu1 < 1 or self.dtilde < 1 or self.mu < 1:
            raise ParameterError("mu1, dtilde and mu hints must be >= 1")
        if self.lam is not None and not self.lam > 0:
            raise ParameterError("Lambda must be positive")

    @property
    def t_tilde(self) -> float:
        return 2.0 * self.mu1 * self.dtilde

    @property
    def w(self) -> float:
        """Outer exponent (p + log2 T~)/p of the l_p potential."""
        return (self.p + math.log2(self.t_tilde)) / self.p

    @property
    def a(self) -> float:
        return 1.0 + 1.0 / (2.0 * self.mu)

    def window(self, predicted: float) -> int:
        return floor_slots(self.mu1 * predicted)


def _log_expm1(y: np.ndarray) -> np.ndarray:
    """log(exp(y) - 1) for y > 0 without overflow."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        return y + np.log(-np.expm1(-y))


def power_gain(base: np.ndarray, add: np.ndarray, p: float) -> np.ndarray:
    """(base + add)^p - base^p elementwise, accurate when add << base."""
    base = np.asarray(base, dtype=float)
    add = np.asarray(add, dtype=float)
    out = np.where(base > 0, 0.0, add**p)
    pos = (base > 0) & (add > 0)
    if np.any(pos):
        b = np.where(pos, base, 1.0)
        out = np.where(pos, b**p * np.expm1(p * np.log1p(np.where(pos, add, 0.0) / b)), out)
    return out


def log_lp_increments(loads: np.ndarray, gain: np.ndarray, p: float, w: float) -> np.ndarray:
    """log[(S + gain)^w - S^w] per row, where S = sum_z loads_z^p.

    ``gain`` is the growth of the inner sum caused by the candidate, already
    summed over all resources it touches.
    """
    S = (np.asarray(loads, dtype=float) ** p).sum(axis=-1)
    gain = np.asarray(gain, dtype=float)
    with np.errstate(divide="ignore"):
        from_zero = w * np.log(gain)
        safe = np.where(S > 0, S, 1.0)
        inc = w * np.log(safe) + _log_expm1(w * np.log1p(gain / safe))
    out = np.where(S > 0, inc, from_zero)
    return np.where(gain > 0, out, -np.inf)


def log_potential(loads: np.ndarray, p: float, w: float) -> np.ndarray:
    """log of (sum_z x_z^p)^w per row (-inf for an empty row)."""
    S = (np.asarray(loads, dtype=float) ** p).sum(axis=-1)
    with np.errstate(divide="ignore"):
        return w * np.log(S)


def logsumexp(x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        return -math.inf
    return float(np.logaddexp.reduce(x))


def pick_min(costs, tol: float = TIE_RTOL) -> int:
    """Index of the smallest log-cost; near-ties (relative 1e-12) go to the lowest index."""
    costs = np.asarray(costs, dtype=float)
    best = float(np.min(costs))
    if math.isinf(best) and best > 0:
        raise InfeasibleError("no feasible choice")
    return int(np.flatnonzero(costs <= best + tol)[0])


class OnlinePolicy:
    """Receives arrivals in (arrival, id) order and must answer immediately."""

    name = "policy"
    estimation_only = True

    def on_arrival(self, job: Arrival) -> int:
        raise NotImplementedError

    def on_departure(self, job_id: int, slot: int) -> None:
        pass


class PseudoLoadPolicy(OnlinePolicy):
    """Common machinery: a pseudo-load ledger filled over prediction windows."""

    def __init__(self, machines: int, params: AlgParams):
        self.machines = machines
        self.params = params
        self.ledger = LoadLedger(machines)
        self.decisions: list[tuple[int, int]] = []
        self.log_increments: list[float] = []
        self._n = 0

    def window(self, job: Arrival) -> tuple[int, int]:
        return job.arrival + 1, job.arrival + self.params.window(job.predicted)

    def log_costs(self, job: Arrival, lengths: np.ndarray, loads: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def on_arrival(self, job: Arrival) -> int:
        if len(job.loads) != self.machines:
            raise InfeasibleError(f"job {job.id}: load row does not match {self.machines} machines")
        if not job.feasible():
            raise InfeasibleError(f"job {job.id} has no feasible machine")
        lo, hi = self.window(job)
        bps, loads = self.ledger.segments(lo, hi)
        costs = self.log_costs(job, np.diff(bps).astype(float), loads)
        i = pick_min(costs)
        self.ledger.add(lo, hi, i, job.loads[i], self._n)
        self.decisions.append((job.id, i))
        self.log_increments.append(float(costs[i]))
        self._n += 1
        return i


class GreedyLp(PseudoLoadPolicy):
    """Greedy on the l_p potential sum_t (||pseudo-load(t)||_p^p)^w."""

    name = "greedy-lp"

    def __init__(self, machines: int, p: float, mu1: float = 1.0, dtilde: float = 1.0, mu: float = 1.0):
        super().__init__(machines, AlgParams(effective_p(p, machines), mu1, dtilde, mu))

    def log_costs(self, job, lengths, loads):
        p, w = self.params.p, self.params.w
        costs = np.full(self.machines, np.inf)
        with np.errstate(divide="ignore"):
            log_len = np.log(lengths)
        for i in job.feasible():
            gain = power_gain(loads[:, i], job.loads[i], p)
            costs[i] = logsumexp(log_len + log_lp_increments(loads, gain, p, w))
        return costs

    def potential_log_total(self) -> float:
        """log of sum over all slots of the potential of the final pseudo-loads."""
        bps, loads = self.ledger.profile()
        with np.errstate(divide="ignore"):
            return logsumexp(np.log(np.diff(bps)) + log_potential(loads, self.params.p, self.params.w))


class NaiveBaseline(GreedyLp):
    """Greedy that trusts predictions as exact durations (mu1 forced to 1)."""

    name = "naive"

    def __init__(self, machines: int, p: float, mu1: float = 1.0, dtilde: float = 1.0, mu: float = 1.0):
        super().__init__(machines, p, 1.0, dtilde, 1.0)


class LinfExp(PseudoLoadPolicy):
    """Exponential-potential rule for the makespan: sum_t a^{(l+p)/Lam} - a^{l/Lam}."""

    name = "linf-exp"

    def __init__(self, machines: int, lam: float, mu1: float = 1.0, dtilde: float = 1.0, mu: float = 1.0):
        super().__init__(machines, AlgParams(math.log2(machines) if machines > 1 else 1.0, mu1, dtilde, mu, lam))

    def log_costs(self, job, lengths, loads):
        lam, ln_a = self.params.lam, math.log(self.params.a)
        costs = np.full(self.machines, np.inf)
        with np.errstate(divide="ignore"):
            log_len = np.log(lengths)
        for i in job.feasible():
            step = math.log(math.expm1(job.loads[i] / lam * ln_a))
            costs[i] = step + logsumexp(log_len + loads[:, i] / lam * ln_a)
        return costs


class RoundRobin(OnlinePolicy):
    """Strawman: cycles through machines, skipping infeasible ones."""

    name = "round-robin"

    def __init__(self, machines: int, *args, **kwargs):
        self.machines = machines
        self._next = 0

    def on_arrival(self, job: Arrival) -> int:
        for step in range(self.machines):
            i = (self._next + step) % self.machines
            if math.isfinite(job.loads[i]):
                self._next = i + 1
                return i
        raise InfeasibleError(f"job {job.id} has no feasible machine")
