import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from predload.model import Instance, Job

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("PREDLOAD_PROFILE", "default"))

LOADS = st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0, 7.25])


@st.composite
def load_rows(draw, m, allow_inf=True):
    row = [draw(LOADS) if not allow_inf or draw(st.booleans()) or i == 0 else math.inf for i in range(m)]
    k = draw(st.integers(0, m - 1))
    return tuple(row[(i + k) % m] for i in range(m))


@st.composite
def instances(draw, max_jobs=6, max_machines=3, max_arrival=6, max_duration=6, allow_inf=True):
    m = draw(st.integers(1, max_machines))
    n = draw(st.integers(0, max_jobs))
    jobs = []
    for k in range(n):
        d = draw(st.integers(1, max_duration))
        pred = draw(st.sampled_from([1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0]))
        jobs.append(Job(k, draw(st.integers(0, max_arrival)), d, pred, draw(load_rows(m, allow_inf))))
    return Instance(m, tuple(jobs))


@st.composite
def assigned(draw, **kw):
    inst = draw(instances(**kw))
    a = tuple(draw(st.sampled_from([i for i, x in enumerate(j.loads) if math.isfinite(x)])) for j in inst.jobs)
    return inst, a


def brute_loads(inst, assignment, horizon=None, window=None):
    """Per-slot loads by direct summation; ``window(job)`` overrides the alive length."""
    T = horizon or max([j.arrival + (window(j) if window else j.duration) for j in inst.jobs], default=0)
    L = np.zeros((T + 2, inst.machines))
    for j, i in zip(inst.jobs, assignment):
        span = window(j) if window else j.duration
        for t in range(j.arrival + 1, j.arrival + span + 1):
            if t < L.shape[0]:
                L[t, i] += j.loads[i]
    return L


def bisect_mu2(inst, tol=1e-12):
    """Smallest mu2 >= 1 with ceil(pred/mu2) <= d for every job, by bisection."""
    def ok(mu2):
        return all(math.ceil(j.predicted / mu2 - 1e-12) <= j.duration for j in inst.jobs)

    lo, hi = 1.0, max(j.predicted for j in inst.jobs) + 1.0
    if ok(lo):
        return 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return hi


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
