"""Seeded random instances covering the (mu1, mu2, D) regimes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import INF, Instance, Job
from .routing import Graph, RoutingInstance, RoutingJob


@dataclass(frozen=True)
class GenConfig:
    jobs: int = 8
    machines: int = 3
    horizon: int = 20  # arrivals uniform over [0, horizon)
    D: int = 8  # durations log-uniform over [1, D]
    mu1: float = 2.0  # d / d~ never exceeds mu1
    mu2: float = 1.0  # d~ / d never exceeds mu2
    load_lo: float = 0.1
    load_hi: float = 10.0
    infeasible: float = 0.0  # chance that an entry of a load row is infeasible
    seed: int = 0

    def __post_init__(self):
        if self.jobs < 0 or self.machines < 1 or self.horizon < 1 or self.D < 1:
            raise ParameterError("jobs >= 0, machines >= 1, horizon >= 1, D >= 1 required")
        if self.mu1 < 1 or self.mu2 < 1:
            raise ParameterError("mu1, mu2 must be >= 1")
        if not 0 < self.load_lo <= self.load_hi:
            raise ParameterError("need 0 < load_lo <= load_hi")
        if not 0 <= self.infeasible < 1:
            raise ParameterError("infeasible probability must lie in [0, 1)")


def _timing(cfg: GenConfig, rng: np.random.Generator):
    n = cfg.jobs
    arrivals = np.sort(rng.integers(0, cfg.horizon, size=n))
    durations = np.clip(np.rint(np.exp(rng.uniform(0.0, math.log(cfg.D), size=n))), 1, cfg.D).astype(int)
    # d~ = d * u with log u uniform over [-log mu1, log mu2]
    u = np.exp(rng.uniform(-math.log(cfg.mu1), math.log(cfg.mu2), size=n))
    predicted = np.maximum(1.0, durations * u)
    return arrivals, durations, predicted


def _row(cfg: GenConfig, width: int, rng: np.random.Generator) -> tuple[float, ...]:
    row = rng.uniform(cfg.load_lo, cfg.load_hi, size=width)
    off = rng.random(width) < cfg.infeasible
    if off.all():
        off[rng.integers(width)] = False
    return tuple(INF if o else float(x) for x, o in zip(row, off))


def random_instance(cfg: GenConfig, rng: np.random.Generator | None = None) -> Instance:
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    arrivals, durations, predicted = _timing(cfg, rng)
    jobs = tuple(
        Job(k, int(a), int(d), float(pr), _row(cfg, cfg.machines, rng))
        for k, (a, d, pr) in enumerate(zip(arrivals, durations, predicted))
    )
    return Instance(cfg.machines, jobs)


def random_routing_instance(graph: Graph, cfg: GenConfig, rng: np.random.Generator | None = None) -> RoutingInstance:
    """Random endpoints; edge rows as for machines (``cfg.machines`` is ignored)."""
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    arrivals, durations, predicted = _timing(cfg, rng)
    jobs = []
    for k, (a, d, pr) in enumerate(zip(arrivals, durations, predicted)):
        s, t = rng.choice(graph.vertices, size=2, replace=False)
        loads = tuple(float(x) for x in rng.uniform(cfg.load_lo, cfg.load_hi, size=len(graph.edges)))
        jobs.append(RoutingJob(k, int(a), int(s), int(t), loads, float(pr), int(d)))
    return RoutingInstance(graph, tuple(jobs))
