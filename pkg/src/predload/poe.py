"""Price of Estimation: how much stretching every duration by mu can raise the objective."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError
from .model import Instance, Job, objective, scale_durations


@dataclass(frozen=True)
class TimePointSeries:
    D: float
    mu: float
    points: tuple[float, ...]  # t_1 .. t_{j*+1}
    j_star: int

    def intervals(self) -> list[tuple[float, float]]:
        return [(self.points[k], self.points[k + 1]) for k in range(self.j_star)]


def time_points(D: float, mu: float) -> TimePointSeries:
    """t_1 = 0, t_{j+1} = t_j + (D - t_j)/mu, run while the last gap is >= 1.

    ``j_star`` counts intervals; ``points`` holds t_1 .. t_{j*+1}, the last gap
    being the first one shorter than 1.
    """
    if D < 1 or mu < 1:
        raise ParameterError("time points need D >= 1 and mu >= 1")
    t = [0.0, D / mu]
    while t[-1] - t[-2] >= 1:
        t.append(t[-1] + (D - t[-1]) / mu)
    return TimePointSeries(D, mu, tuple(t), len(t) - 1)


def closed_form_point(D: float, mu: float, j: int) -> float:
    """t_j = D * (1 - (1 - 1/mu)^(j-1)), 1-based j."""
    return D * (1.0 - (1.0 - 1.0 / mu) ** (j - 1))


def j_star_bounds(D: float, mu: float) -> tuple[float, float]:
    """Real bracket for j*: base^(j*-2) <= D/mu < base^(j*-1), base = mu/(mu-1).

    Solved for j*: ``1 + log_base(D/mu) < j* <= 2 + log_base(D/mu)``.  For
    mu < 2 the base degenerates and the exact j* is returned twice.
    """
    if mu < 2:
        j = time_points(D, mu).j_star
        return float(j), float(j)
    if D < mu:
        raise ParameterError("bracket needs D >= mu")
    x = math.log(D / mu) / math.log(mu / (mu - 1.0))
    return 1.0 + x, 2.0 + x


def in_bracket(D: float, mu: float, j_star: int, tol: float = 1e-9) -> bool:
    """Check D/mu against both powers directly (no logs)."""
    base = mu / (mu - 1.0)
    r = D / mu
    return r <= base ** (j_star - 1) * (1 + tol) and r >= base ** (j_star - 2) * (1 - tol)


def poe_lower_instance(D: float, mu: float) -> Instance:
    """Single machine, one unit job per interval [t_j, t_{j+1}), mapped to slots.

    Job j arrives at ceil(t_j) and lasts max(1, ceil(t_{j+1}) - ceil(t_j)),
    so consecutive jobs never overlap; predictions equal durations.
    """
    ts = time_points(D, mu)
    jobs = []
    for j, (a, b) in enumerate(ts.intervals()):
        start = math.ceil(a - 1e-9)
        d = max(1, math.ceil(b - 1e-9) - start)
        jobs.append(Job(j, start, d, float(d), (1.0,)))
    return Instance(1, tuple(jobs))


def evaluate_poe(inst: Instance, assignment, mu: float, p: float) -> float:
    if not inst.jobs:
        raise ParameterError("PoE of an empty instance is undefined")
    base = objective(inst, assignment, p)
    if base <= 0:
        raise ParameterError("zero objective in the denominator")
    return objective(scale_durations(inst, mu), assignment, p) / base


def poe_upper_bound(D: float, mu: float) -> float:
    """3 + j*(D, mu) + mu, the explicit constant from the interval-counting bound."""
    return 3 + time_points(max(D, 1), mu).j_star + mu


def machine_split(inst: Instance, assignment) -> list[tuple[Instance, list[int]]]:
    """Per-machine single-machine instances I_i(I, A) with their identity assignments."""
    out = []
    for i in range(inst.machines):
        ids = [j.id for j in inst.jobs if assignment[j.id] == i]
        if ids:
            sub = inst.restrict(ids, machines=[i])
            out.append((sub, [0] * len(ids)))
    return out
