"""Adaptive adversaries: release jobs, watch the policy, then commit durations.

Each construction talks to the policy through a :class:`Session`, which hides
durations and reports departures only for durations the adversary has already
fixed.  The result is an :class:`AdversaryTranscript` that carries the full
instance, the policy's choices, an explicit reference assignment (the witness
for the optimum upper bound) and the declared guarantees.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .errors import ContractError, ParameterError, ScaleError
from .model import INF, Arrival, Instance, Job, floor_slots, objective
from .poe import time_points
from .policies import OnlinePolicy


class Session:
    def __init__(self, machines: int, policy: OnlinePolicy, notify: bool = True):
        self.machines = machines
        self.policy = policy
        self.notify = notify
        self.now = 0
        self.arrivals: list[int] = []
        self.predicted: list[float] = []
        self.loads: list[tuple[float, ...]] = []
        self.durations: list[int | None] = []
        self.choices: list[int] = []
        self._pending: list[tuple[int, int]] = []

    def advance(self, t: int) -> None:
        if t < self.now:
            raise ParameterError(f"time cannot go back from {self.now} to {t}")
        while self._pending and self._pending[0][0] <= t:
            slot, jid = heapq.heappop(self._pending)
            if self.notify:
                self.policy.on_departure(jid, slot)
        self.now = t

    def release(self, t: int, predicted: float, loads) -> int:
        """Offer a job at time t; returns its id (the choice is in ``choices``)."""
        self.advance(t)
        jid = len(self.choices)
        loads = tuple(loads)
        i = self.policy.on_arrival(Arrival(jid, t, predicted, loads))
        if not math.isfinite(loads[i]):
            raise ContractError(f"policy chose infeasible machine {i} for job {jid}")
        self.arrivals.append(t)
        self.predicted.append(predicted)
        self.loads.append(loads)
        self.durations.append(None)
        self.choices.append(i)
        return jid

    def fix(self, jid: int, duration: int) -> None:
        if self.durations[jid] is not None:
            raise ParameterError(f"duration of job {jid} already fixed")
        if self.arrivals[jid] + duration < self.now:
            raise ParameterError(f"job {jid} would have departed in the past")
        self.durations[jid] = int(duration)
        heapq.heappush(self._pending, (self.arrivals[jid] + duration, jid))

    def instance(self) -> Instance:
        if any(d is None for d in self.durations):
            raise ParameterError("some durations were never fixed")
        jobs = tuple(
            Job(k, a, d, pr, ld)
            for k, (a, d, pr, ld) in enumerate(zip(self.arrivals, self.durations, self.predicted, self.loads))
        )
        return Instance(self.machines, jobs)


@dataclass
class AdversaryTranscript:
    name: str
    instance: Instance
    assignment: tuple[int, ...]
    reference: tuple[int, ...]
    on_lb: float
    opt_ub: float
    p: float
    meta: dict = field(default_factory=dict)

    def realized_on(self, p: float | None = None) -> float:
        return objective(self.instance, self.assignment, self.p if p is None else p)

    def reference_value(self, p: float | None = None) -> float:
        return objective(self.instance, self.reference, self.p if p is None else p)

    def ratio_lower_bound(self) -> float:
        return self.realized_on() / self.reference_value()

    def to_dict(self) -> dict:
        out = self.instance.to_dict()
        out["assignment"] = list(self.assignment)
        out["reference_assignment"] = list(self.reference)
        out["guarantees"] = {"on_lb": self.on_lb, "opt_ub": self.opt_ub}
        out["adversary"] = self.name
        out["norm"] = "inf" if math.isinf(self.p) else self.p
        out["meta"] = self.meta
        return out


def sqrt_exponent(p: float) -> float:
    """p/(2p-1), tending to 1/2 for l_inf."""
    return 0.5 if math.isinf(p) else p / (2 * p - 1)


def declared_on_lb(k: int, R: int, p: float) -> float:
    """min(k, (k^{1-p} R^p)^{1/p}) using the floored k and R."""
    spread = R / k if math.isinf(p) else R * k ** (1.0 / p - 1.0)
    return min(float(k), spread)


def declared_opt_ub(k: int, R: int, p: float) -> float:
    return 1.0 if math.isinf(p) else (k + R) ** (1.0 / p)


def _check_norm(m: int, p: float) -> None:
    if m < 4:
        raise ParameterError("construction needs m >= 4")
    if p < 1 or (math.isfinite(p) and p > math.log2(m) + 1e-12):
        raise ParameterError(f"p must lie in [1, log2 m] or be inf, got {p}")


def _restricted_row(m: int, k: int, r: int) -> tuple[float, ...]:
    """Unit load on machines 0..k-1 and on the iteration's own machine k+r-1."""
    return tuple(1.0 if (i < k or i == k + r - 1) else INF for i in range(m))


def _reference(choices, iteration, unique_of, k) -> list[int]:
    """j_r goes to its iteration's own machine; the rest of an iteration one per shared machine."""
    ref = [0] * len(choices)
    slot_in_iter: dict[int, int] = {}
    for jid, r in enumerate(iteration):
        if unique_of.get(r) == jid:
            ref[jid] = k + r - 1
        else:
            c = slot_in_iter.get(r, 0)
            ref[jid] = c
            slot_in_iter[r] = c + 1
    return ref


def lemma41_adversary(m: int, mu: float, p: float, policy: OnlinePolicy) -> AdversaryTranscript:
    """Distortion-driven construction: R = min(mu, m/2) unit-prediction iterations.

    Iteration r (at time r-1) offers up to k unit jobs on machines {0..k-1, k+r-1}.
    A job on the private machine lasts 1 slot; the first job placed on a shared
    machine lasts until slot R and closes the iteration.  The run stops once a
    machine carries load k.
    """
    _check_norm(m, p)
    if mu < 1:
        raise ParameterError("mu must be >= 1")
    R = min(floor_slots(mu), m // 2)
    k = max(1, floor_slots(R ** sqrt_exponent(p)))
    if k + R > m:
        raise ParameterError(f"k + R = {k + R} exceeds m = {m}")
    s = Session(m, policy)
    iteration, unique_of = [], {}
    stopped_at = None
    for r in range(1, R + 1):
        t = r - 1
        row = _restricted_row(m, k, r)
        for _ in range(k):
            jid = s.release(t, 1.0, row)
            iteration.append(r)
            if s.choices[jid] == k + r - 1:
                s.fix(jid, 1)
            else:
                s.fix(jid, R - t)
                unique_of[r] = jid
                break
        live = [0.0] * m
        for jid, (a, d) in enumerate(zip(s.arrivals, s.durations)):
            if a + 1 <= t + 1 <= a + d:
                live[s.choices[jid]] += 1.0
        if max(live) >= k:
            stopped_at = r
            break
    inst = s.instance()
    ref = _reference(s.choices, iteration, unique_of, k)
    return AdversaryTranscript(
        "lemma41", inst, tuple(s.choices), tuple(ref),
        on_lb=declared_on_lb(k, R, p), opt_ub=declared_opt_ub(k, R, p), p=p,
        meta={"R": R, "k": k, "mu": mu, "stopped_at": stopped_at},
    )


def solve_x(Dtilde: float, tol: float = 1e-12) -> float:
    """x >= 1 with sqrt(x)^(x - sqrt(x) + 1) = Dtilde, by bisection on the log equation."""
    if Dtilde < 1:
        raise ParameterError("Dtilde must be >= 1")
    target = math.log(Dtilde)

    def g(x):
        return (x - math.sqrt(x) + 1) * 0.5 * math.log(x) - target

    lo, hi = 1.0, 2.0
    while g(hi) < 0:
        hi *= 2
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lemma42_adversary(
    m: int, Dtilde: float, p: float, policy: OnlinePolicy, variant: str = "literal"
) -> AdversaryTranscript:
    """Nested-window construction with exact predictions.

    Iteration r lives in a window [t_r, x_r]; its j-th job departs at
    ``t_r + (x_r - t_r)/2 * (1 + j/k)``.  When the policy puts job j on a shared
    machine, the next window is the gap between the departures of jobs j-1 and j
    (or, for j = 1, between the window midpoint and job 1's departure), so job j
    outlives every later iteration.

    The default ``variant="literal"`` uses absolute departures
    ``x_r/2 * (1 + j/k)`` and ``t_{r+1} = (x_r - t_r)/2``; after the first
    iteration the next window usually starts in the past, which breaks the
    nesting and raises :class:`ScaleError`.  ``variant="corrected"`` keeps the
    windows nested.

    All times are floored to the slot grid; a departure gap below one slot
    raises :class:`ScaleError` as well.
    """
    _check_norm(m, p)
    if Dtilde < 16:
        raise ParameterError("Dtilde must be >= 16")
    if variant not in ("corrected", "literal"):
        raise ParameterError(f"unknown variant {variant!r}")
    x = solve_x(Dtilde)
    R = min(floor_slots(x), m // 2)
    k = max(1, floor_slots(R ** sqrt_exponent(p)))
    if k + R > m:
        raise ParameterError(f"k + R = {k + R} exceeds m = {m}")
    s = Session(m, policy)
    iteration, unique_of = [], {}
    t_r, x_r = 0.0, float(Dtilde)
    stopped_at = None
    for r in range(1, R + 1):
        start = floor_slots(t_r)
        if start < s.now:
            raise ScaleError(f"iteration {r}: window starts at {start}, before the current time {s.now} (nesting broken)")
        if variant == "corrected":
            deps = [t_r + (x_r - t_r) / 2 * (1 + j / k) for j in range(1, k + 1)]
        else:
            deps = [x_r / 2 * (1 + j / k) for j in range(1, k + 1)]
        slots = [floor_slots(d) for d in deps]
        if slots[0] - start < 1 or any(b - a < 1 for a, b in zip(slots, slots[1:])):
            raise ScaleError(
                f"iteration {r}: departures {slots} from t={start} are closer than one slot "
                f"(Dtilde={Dtilde} too small for m={m}, k={k})"
            )
        row = _restricted_row(m, k, r)
        for j in range(1, k + 1):
            d = slots[j - 1] - start
            jid = s.release(start, float(d), row)
            s.fix(jid, d)
            iteration.append(r)
            shared = s.choices[jid] < k
            if shared:
                unique_of[r] = jid
            if shared and j == 1:
                t_r = t_r + (x_r - t_r) / 2 if variant == "corrected" else (x_r - t_r) / 2
                x_r = deps[0]
                break
            if shared or j == k:
                t_r, x_r = deps[j - 2], deps[j - 1]
                break
        live = [0.0] * m
        for jid, (a, dd) in enumerate(zip(s.arrivals, s.durations)):
            if a + 1 <= start + 1 <= a + dd:
                live[s.choices[jid]] += 1.0
        if max(live) >= k:
            stopped_at = r
            break
    inst = s.instance()
    ref = _reference(s.choices, iteration, unique_of, k)
    return AdversaryTranscript(
        "lemma42", inst, tuple(s.choices), tuple(ref),
        on_lb=declared_on_lb(k, R, p), opt_ub=declared_opt_ub(k, R, p), p=p,
        meta={"R": R, "k": k, "x": x, "Dtilde": Dtilde, "variant": variant, "stopped_at": stopped_at},
    )


def appendix_a_hints(D: int, mu: float) -> tuple[float, float]:
    """(mu1, D~) that every Appendix A stream for (D, mu) respects; mu2 is 1."""
    mu1, dtilde = 1.0, 1.0
    for a, b in time_points(D, mu).intervals():
        start = math.ceil(a - 1e-9)
        dt = max(1, math.ceil(b - 1e-9) - start)
        mu1 = max(mu1, max(dt, D - start) / dt)
        dtilde = max(dtilde, float(dt))
    return mu1, dtilde


def appendix_a_adversary(m: int, D: int, mu: float, policy: OnlinePolicy, p: float = INF) -> AdversaryTranscript:
    """Tournament stream against a policy that trusts predictions.

    For each time point t_j (PoE series for (D, mu)) release m-1 unit jobs in
    log2 m levels; level k pairs position z with z + m/2^k.  After each choice
    the two positions are relabelled so that the chosen machine sits at
    position z.  Positions reset to the identity every iteration.  Jobs that
    land at position 0 (one per level) are stretched to stay alive through
    slot D; all other jobs last exactly their prediction.
    """
    if m < 2 or m & (m - 1):
        raise ParameterError(f"m must be a power of two, got {m}")
    ts = time_points(D, mu)
    levels = int(math.log2(m))
    s = Session(m, policy)
    reference = []
    stacked = 0
    for a, b in ts.intervals():
        start = math.ceil(a - 1e-9)
        dt = max(1, math.ceil(b - 1e-9) - start)
        pos = list(range(m))  # position -> physical machine
        for lvl in range(1, levels + 1):
            half = m >> lvl
            for z in range(half):
                u, v = pos[z], pos[z + half]
                row = tuple(1.0 if i in (u, v) else INF for i in range(m))
                jid = s.release(start, float(dt), row)
                chosen = s.choices[jid]
                other = v if chosen == u else u
                pos[z], pos[z + half] = chosen, other
                reference.append(other)
                if z == 0:
                    s.fix(jid, max(dt, D - start))
                    stacked += 1
                else:
                    s.fix(jid, dt)
    inst = s.instance()
    return AdversaryTranscript(
        "appendixA", inst, tuple(s.choices), tuple(reference),
        on_lb=float(ts.j_star * levels), opt_ub=(ts.j_star * levels) ** (0.0 if math.isinf(p) else 1.0 / p),
        p=p, meta={"D": D, "mu": mu, "j_star": ts.j_star, "levels": levels, "stacked": stacked},
    )


def appendix_b_adversary(mu: int, policy: OnlinePolicy) -> AdversaryTranscript:
    """mu machines, mu unit jobs per step with prediction 1; stretch the first machine to reach mu jobs.

    Valid only against estimation-only policies: their choices cannot depend on
    durations, which are committed after the fact.
    """
    if not getattr(policy, "estimation_only", False):
        raise ContractError("appendix B construction requires an estimation-only policy")
    mu = int(mu)
    if mu < 1:
        raise ParameterError("mu must be a positive integer")
    s = Session(mu, policy, notify=False)
    row = (1.0,) * mu
    count = [0] * mu
    victim = None
    for t in range(mu):
        for _ in range(mu):
            jid = s.release(t, 1.0, row)
            count[s.choices[jid]] += 1
            if count[s.choices[jid]] >= mu:
                victim = s.choices[jid]
                break
        if victim is not None:
            break
    long_ids = [jid for jid, i in enumerate(s.choices) if i == victim]
    for jid in range(len(s.choices)):
        s.durations[jid] = mu if s.choices[jid] == victim else 1
    inst = s.instance()
    # long jobs on distinct machines; short jobs of one step on distinct machines
    ref = [0] * len(s.choices)
    for n, jid in enumerate(long_ids):
        ref[jid] = n
    per_step: dict[int, int] = {}
    for jid in range(len(s.choices)):
        if s.choices[jid] != victim:
            t = s.arrivals[jid]
            ref[jid] = per_step.get(t, 0)
            per_step[t] = ref[jid] + 1
    return AdversaryTranscript(
        "appendixB", inst, tuple(s.choices), tuple(ref), on_lb=float(mu), opt_ub=2.0, p=INF,
        meta={"mu": mu, "victim": victim},
    )
