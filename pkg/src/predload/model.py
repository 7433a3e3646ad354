"""Slotted-time model of temporary jobs, loads, pseudo-loads and norms.

Time is integer-slotted: a job arriving at ``t`` with duration ``d`` is alive
at slots ``t+1 .. t+d``.  Machines, and in the routing variant edges, are
generically called *resources*; all indices are 0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import InfeasibleError, ParameterError, UnassignedJobError

INF = math.inf
FLOOR_EPS = 1e-9


def floor_slots(x: float) -> int:
    """Floor that absorbs representation error (``2.9999999999`` -> 3)."""
    return math.floor(x + FLOOR_EPS)


def is_inf_norm(p: float) -> bool:
    return math.isinf(p)


@dataclass(frozen=True)
class Arrival:
    """What an online policy sees when a job arrives: everything but the duration."""

    id: int
    arrival: int
    predicted: float
    loads: tuple[float, ...]

    def feasible(self) -> list[int]:
        return [i for i, x in enumerate(self.loads) if math.isfinite(x)]


@dataclass(frozen=True)
class Job:
    id: int
    arrival: int
    duration: int
    predicted: float
    loads: tuple[float, ...]

    def __post_init__(self):
        if self.arrival < 0:
            raise ParameterError(f"job {self.id}: negative arrival {self.arrival}")
        if self.duration < 1:
            raise ParameterError(f"job {self.id}: duration must be >= 1, got {self.duration}")
        if not self.predicted >= 1:
            raise ParameterError(f"job {self.id}: predicted duration must be >= 1")
        if any(not (x > 0) for x in self.loads):
            raise ParameterError(f"job {self.id}: loads must be positive or inf")
        if not any(math.isfinite(x) for x in self.loads):
            raise InfeasibleError(f"job {self.id} has no feasible machine")

    @property
    def departure(self) -> int:
        return self.arrival + self.duration

    def announce(self) -> Arrival:
        return Arrival(self.id, self.arrival, self.predicted, self.loads)

    def min_load(self) -> float:
        return min(x for x in self.loads if math.isfinite(x))


@dataclass(frozen=True)
class DistortionParams:
    mu1: float
    mu2: float
    D: int
    Dtilde: float

    @property
    def mu(self) -> float:
        return self.mu1 * self.mu2


def distortion_params(jobs) -> DistortionParams:
    """Minimal (mu1, mu2) with d in [ceil(pred/mu2), floor(mu1*pred)] for every job.

    Accepts an :class:`Instance` or any iterable of objects with ``duration``
    and ``predicted``.  Because ``d`` is an integer, ``ceil(pred/mu2) <= d``
    is equivalent to ``mu2 >= pred/d``, so both factors have closed forms.
    """
    jobs = list(getattr(jobs, "jobs", jobs))
    if not jobs:
        raise ParameterError("distortion of an empty job set is undefined")
    mu1 = max(max(1.0, j.duration / j.predicted) for j in jobs)
    mu2 = max(max(1.0, j.predicted / j.duration) for j in jobs)
    return DistortionParams(
        mu1=mu1,
        mu2=mu2,
        D=max(j.duration for j in jobs),
        Dtilde=max(j.predicted for j in jobs),
    )


@dataclass(frozen=True)
class Instance:
    """Machine count plus jobs; jobs are sorted by (arrival, id) and re-numbered 0..n-1."""

    machines: int
    jobs: tuple[Job, ...] = ()

    def __post_init__(self):
        if self.machines < 1:
            raise ParameterError("need at least one machine")
        ordered = sorted(self.jobs, key=lambda j: (j.arrival, j.id))
        for j in ordered:
            if len(j.loads) != self.machines:
                raise ParameterError(f"job {j.id}: {len(j.loads)} loads for {self.machines} machines")
        object.__setattr__(
            self, "jobs", tuple(replace(j, id=k) if j.id != k else j for k, j in enumerate(ordered))
        )

    def __len__(self) -> int:
        return len(self.jobs)

    @property
    def horizon(self) -> int:
        return max((j.departure for j in self.jobs), default=0)

    def params(self) -> DistortionParams:
        return distortion_params(self.jobs)

    def restrict(self, job_ids: Iterable[int], machines: Sequence[int] | None = None) -> "Instance":
        """Sub-instance on the given jobs, optionally projected onto a machine subset."""
        ids = sorted(set(job_ids))
        if machines is None:
            return Instance(self.machines, tuple(self.jobs[k] for k in ids))
        jobs = [replace(self.jobs[k], loads=tuple(self.jobs[k].loads[i] for i in machines)) for k in ids]
        return Instance(len(machines), tuple(jobs))

    def to_dict(self) -> dict:
        return {
            "machines": self.machines,
            "jobs": [
                {
                    "arrival": j.arrival,
                    "duration": j.duration,
                    "predicted": j.predicted,
                    "loads": [encode_load(x) for x in j.loads],
                }
                for j in self.jobs
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        m = int(data["machines"])
        jobs = []
        for k, row in enumerate(data["jobs"]):
            loads = tuple(decode_load(x) for x in row["loads"])
            if len(loads) != m:
                raise ParameterError(f"job {k}: loads array length {len(loads)} != machines {m}")
            jobs.append(Job(k, int(row["arrival"]), int(row["duration"]), float(row["predicted"]), loads))
        return cls(m, tuple(jobs))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))


def encode_load(x: float):
    return "inf" if math.isinf(x) else x


def decode_load(x) -> float:
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity"):
            return INF
        raise ParameterError(f"bad load entry {x!r}")
    return float(x)


# ----------------------------------------------------------------- norms


def lp_norm(v, p: float) -> float:
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return 0.0
    if np.any(v < 0):
        raise ValueError("lp_norm of a vector with negative entries")
    if not np.all(np.isfinite(v)):
        raise ValueError("lp_norm needs finite entries")
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    return float(lp_norms(v[None, :], p)[0])


def lp_norms(rows: np.ndarray, p: float) -> np.ndarray:
    """Row-wise p-norms of a nonnegative matrix; scaled by the row max to avoid overflow."""
    rows = np.asarray(rows, dtype=float)
    if rows.shape[0] == 0:
        return np.zeros(0)
    mx = rows.max(axis=1) if rows.shape[1] else np.zeros(rows.shape[0])
    if math.isinf(p):
        return mx
    if p == 1:
        return rows.sum(axis=1)
    safe = np.where(mx > 0, mx, 1.0)
    return mx * ((rows / safe[:, None]) ** p).sum(axis=1) ** (1.0 / p)


# ----------------------------------------------------------------- loads


def event_slots(arrivals, durations, horizon: int | None = None) -> np.ndarray:
    """Slots where the active set changes (job starts, and the slot after each end)."""
    arrivals = np.asarray(arrivals, dtype=np.int64)
    durations = np.asarray(durations, dtype=np.int64)
    if arrivals.size == 0:
        return np.zeros(0, dtype=np.int64)
    T = int((arrivals + durations).max()) if horizon is None else horizon
    ends = arrivals + durations + 1
    ev = np.unique(np.concatenate([arrivals + 1, ends[ends <= T]]))
    return ev


def load_profile(arrivals, durations, rows: np.ndarray, slots) -> np.ndarray:
    """Resource-load vectors at the given slots.

    ``rows[k]`` is the load job ``k`` puts on each resource while alive.  Sums
    are taken directly over alive jobs (no running differences), so integral
    loads stay exact.
    """
    arrivals = np.asarray(arrivals, dtype=np.int64)
    durations = np.asarray(durations, dtype=np.int64)
    slots = np.asarray(slots, dtype=np.int64)
    if arrivals.size == 0:
        return np.zeros((slots.size, rows.shape[1] if rows.ndim == 2 else 0))
    alive = (arrivals[None, :] + 1 <= slots[:, None]) & (slots[:, None] <= (arrivals + durations)[None, :])
    return alive.astype(float) @ rows


def assignment_rows(inst: Instance, assignment: Sequence[int | None]) -> np.ndarray:
    if len(assignment) != len(inst.jobs):
        raise UnassignedJobError(f"assignment covers {len(assignment)} of {len(inst.jobs)} jobs")
    rows = np.zeros((len(inst.jobs), inst.machines))
    for j, i in zip(inst.jobs, assignment):
        if i is None:
            raise UnassignedJobError(f"job {j.id} is unassigned")
        x = j.loads[i]
        if not math.isfinite(x):
            raise InfeasibleError(f"job {j.id} assigned to infeasible machine {i}")
        rows[j.id, i] = x
    return rows


def machine_loads(inst: Instance, assignment, slots) -> np.ndarray:
    rows = assignment_rows(inst, assignment)
    return load_profile([j.arrival for j in inst.jobs], [j.duration for j in inst.jobs], rows, slots)


def objective(inst: Instance, assignment: Sequence[int | None], p: float) -> float:
    """max over slots of the p-norm of the machine-load vector.

    Loads only increase at job starts, so evaluating at start slots suffices.
    """
    rows = assignment_rows(inst, assignment)
    if not inst.jobs:
        return 0.0
    arr = [j.arrival for j in inst.jobs]
    starts = np.unique(np.asarray(arr) + 1)
    L = load_profile(arr, [j.duration for j in inst.jobs], rows, starts)
    return float(lp_norms(L, p).max())


def scale_durations(inst: Instance, mu: float) -> Instance:
    """I(mu): every duration becomes floor(mu*d), never shorter than d."""
    if mu < 1:
        raise ParameterError("scale factor must be >= 1")
    jobs = tuple(replace(j, duration=max(j.duration, floor_slots(mu * j.duration))) for j in inst.jobs)
    return Instance(inst.machines, jobs)


# ---------------------------------------------------------------- ledger


@dataclass
class LoadLedger:
    """Step-function record of per-resource load over integer slots.

    Each entry adds a constant load on one resource over a closed slot range.
    Entries are kept in insertion order, so ``prefix(j)`` reproduces the ledger
    after the first ``j`` jobs.  Horizons may be huge (tens of millions of
    slots); only breakpoints are ever materialised.
    """

    resources: int
    _start: list = field(default_factory=list)
    _end: list = field(default_factory=list)
    _res: list = field(default_factory=list)
    _load: list = field(default_factory=list)
    _job: list = field(default_factory=list)
    _cache: tuple | None = field(default=None, repr=False)

    def add(self, start: int, end: int, resource: int, load: float, job: int = -1) -> None:
        if end < start:
            return
        self._start.append(start)
        self._end.append(end)
        self._res.append(resource)
        self._load.append(load)
        self._job.append(job)
        self._cache = None

    def __len__(self) -> int:
        return len(self._start)

    def _arrays(self):
        if self._cache is None:
            self._cache = (
                np.asarray(self._start, dtype=np.int64),
                np.asarray(self._end, dtype=np.int64),
                np.asarray(self._res, dtype=np.int64),
                np.asarray(self._load, dtype=float),
            )
        return self._cache

    def segments(self, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        """Split slots ``lo..hi`` into maximal constant pieces.

        Returns ``(bounds, loads)``: piece ``k`` covers ``bounds[k] .. bounds[k+1]-1``
        and has resource-load vector ``loads[k]``.
        """
        S, E, R, L = self._arrays()
        rel = (S <= hi) & (E >= lo)
        S, E, R, L = S[rel], E[rel], R[rel], L[rel]
        bps = np.unique(np.concatenate([[lo, hi + 1], np.maximum(S, lo), np.minimum(E + 1, hi + 1)]))
        seg = bps[:-1]
        if S.size == 0:
            return bps, np.zeros((seg.size, self.resources))
        alive = (S[None, :] <= seg[:, None]) & (seg[:, None] <= E[None, :])
        W = np.zeros((S.size, self.resources))
        W[np.arange(S.size), R] = L
        return bps, alive.astype(float) @ W

    def at(self, slot: int) -> np.ndarray:
        return self.segments(slot, slot)[1][0]

    def breakpoints(self) -> np.ndarray:
        S, E, _, _ = self._arrays()
        return np.unique(np.concatenate([S, E + 1])) if S.size else np.zeros(0, dtype=np.int64)

    def prefix(self, jobs: int) -> "LoadLedger":
        out = LoadLedger(self.resources)
        for s, e, r, x, j in zip(self._start, self._end, self._res, self._load, self._job):
            if j < jobs:
                out.add(s, e, r, x, j)
        return out

    def profile(self) -> tuple[np.ndarray, np.ndarray]:
        """Whole-horizon segmentation from slot 1 up to the last covered slot."""
        S, E, _, _ = self._arrays()
        if S.size == 0:
            return np.array([1, 1]), np.zeros((0, self.resources))
        return self.segments(1, int(E.max()))
