import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import instances
from predload.errors import InfeasibleError, ParameterError
from predload.model import Arrival, Instance, Job, floor_slots
from predload.policies import AlgParams, GreedyLp, LinfExp, NaiveBaseline, RoundRobin, effective_p, logsumexp, pick_min
from predload.simulate import build_policy, feed, run_online


def unit_jobs(rows, t=0, d=1):
    return Instance(len(rows[0]), tuple(Job(k, t, d, float(d), tuple(r)) for k, r in enumerate(rows)))


def exact_costs(history, job, m, p, w, mu1):
    """Greedy objective per machine, summed slot by slot in 60-digit arithmetic."""
    mpmath.mp.dps = 60
    lo, hi = job.arrival + 1, job.arrival + floor_slots(mu1 * job.predicted)
    out = []
    for i in range(m):
        if not math.isfinite(job.loads[i]):
            out.append(mpmath.inf)
            continue
        total = mpmath.mpf(0)
        for t in range(lo, hi + 1):
            v = [mpmath.mpf(0)] * m
            for h, z in history:
                if h.arrival + 1 <= t <= h.arrival + floor_slots(mu1 * h.predicted):
                    v[z] += mpmath.mpf(h.loads[z])
            before = sum(x**p for x in v) ** w
            v[i] += mpmath.mpf(job.loads[i])
            total += sum(x**p for x in v) ** w - before
        out.append(total)
    return out


class TestGreedy:
    def test_empty_system_prefers_cheaper(self):
        assert feed(GreedyLp(2, 1), unit_jobs([(1.0, 2.0)])) == (0,)

    def test_prefers_lighter_machine(self):
        rows = [(3.0, math.inf), (math.inf, 1.0), (1.0, 1.0)]
        assert feed(GreedyLp(2, 2), unit_jobs(rows))[-1] == 1

    def test_three_job_sequence(self):
        inst = unit_jobs([(1.0, 1.0), (1.0, 1.0), (2.0, 1.0)])
        pol = GreedyLp(2, 2)
        assert pol.params.t_tilde == 2 and pol.params.w == 1.5
        assert feed(pol, inst) == (0, 1, 1)

    def test_three_job_sequence_exact_oracle(self):
        inst = unit_jobs([(1.0, 1.0), (1.0, 1.0), (2.0, 1.0)])
        hist, picks = [], []
        for j in inst.jobs:
            c = exact_costs(hist, j, 2, 2, mpmath.mpf(3) / 2, 1)
            i = min(range(2), key=lambda k: (c[k], k))
            hist.append((j, i))
            picks.append(i)
        assert picks == [0, 1, 1]

    def test_infeasible(self):
        pol = GreedyLp(2, 2)
        with pytest.raises(InfeasibleError):
            pol.on_arrival(Arrival(0, 0, 1.0, (math.inf, math.inf)))

    def test_huge_window_no_overflow(self):
        inst = Instance(2, tuple(Job(k, 0, 4**13, 4.0**13, (1.0, 1.0)) for k in range(3)))
        assert feed(GreedyLp(2, 2, dtilde=4.0**13), inst) == (0, 1, 0)

    @given(instances(max_jobs=5, max_arrival=4, max_duration=4), st.sampled_from([1.0, 2.0, 3.0]),
           st.sampled_from([1.0, 2.0]))
    def test_argmin_matches_exact_evaluator(self, inst, p, mu1):
        pol = GreedyLp(inst.machines, p, mu1=mu1, dtilde=6.0)
        w = mpmath.mpf(p + math.log2(2 * mu1 * 6.0)) / p
        hist = []
        for j in inst.jobs:
            i = pol.on_arrival(j.announce())
            c = exact_costs(hist, j, inst.machines, p, w, mu1)
            best = min(c)
            assert c[i] <= best * (1 + mpmath.mpf("1e-10"))
            hist.append((j, i))

    @given(instances(max_jobs=6), st.sampled_from([1.0, 2.0, 3.0]), st.sampled_from([1.0, 1.5, 3.0]))
    def test_telescoping(self, inst, p, mu1):
        pol = GreedyLp(inst.machines, p, mu1=mu1, dtilde=8.0)
        feed(pol, inst)
        if not inst.jobs:
            return
        total = pol.potential_log_total()
        parts = logsumexp(pol.log_increments)
        assert math.expm1(total - parts) == pytest.approx(0.0, abs=1e-6)


class TestLinf:
    def test_tie_goes_low(self):
        pol = LinfExp(3, lam=1.0)
        assert pol.on_arrival(Arrival(0, 0, 1.0, (1.0, 1.0, 1.0))) == 0

    def test_lighter_machine(self):
        pol = LinfExp(2, lam=1.0)
        pol.on_arrival(Arrival(0, 0, 1.0, (0.9, math.inf)))
        pol.on_arrival(Arrival(1, 0, 1.0, (math.inf, 0.1)))
        assert pol.on_arrival(Arrival(2, 0, 1.0, (0.5, 0.5))) == 1

    def test_normalised_example(self):
        a = 1.25
        assert a**0.6 - a**0.5 < a**0.7 - a**0.4
        pol = LinfExp(2, lam=1.0, mu=2.0)
        assert pol.params.a == a
        pol.on_arrival(Arrival(0, 0, 1.0, (0.5, math.inf)))
        pol.on_arrival(Arrival(1, 0, 1.0, (math.inf, 0.4)))
        assert pol.on_arrival(Arrival(2, 0, 1.0, (0.1, 0.3))) == 0

    def test_lambda_scale_invariance(self):
        inst = unit_jobs([(1.0, 2.0), (2.0, 1.0), (1.0, 1.0), (3.0, 1.0)])
        twice = unit_jobs([tuple(2 * x for x in r) for r in [(1.0, 2.0), (2.0, 1.0), (1.0, 1.0), (3.0, 1.0)]])
        assert feed(LinfExp(2, lam=1.0), inst) == feed(LinfExp(2, lam=2.0), twice)


class TestNaive:
    @given(instances(max_jobs=6))
    def test_equals_greedy_when_exact(self, inst):
        exact = Instance(inst.machines, tuple(Job(j.id, j.arrival, j.duration, float(j.duration), j.loads)
                                              for j in inst.jobs))
        assert feed(NaiveBaseline(inst.machines, 2, mu1=5.0), exact) == feed(GreedyLp(inst.machines, 2), exact)

    def test_single_job_min_load(self):
        assert feed(NaiveBaseline(3, 2), unit_jobs([(4.0, 1.5, 2.0)])) == (1,)


@given(instances(max_jobs=6), st.sampled_from(["greedy-lp", "naive", "round-robin"]))
def test_estimation_only_ignores_departures(inst, name):
    a = feed(build_policy(name, inst.machines, 2.0, mu1=2.0, dtilde=4.0), inst, notify_departures=True)
    b = feed(build_policy(name, inst.machines, 2.0, mu1=2.0, dtilde=4.0), inst, notify_departures=False)
    assert a == b


@given(instances(max_jobs=6))
def test_linf_estimation_only(inst):
    a = feed(LinfExp(inst.machines, lam=2.0, mu1=2.0, dtilde=4.0), inst)
    b = feed(LinfExp(inst.machines, lam=2.0, mu1=2.0, dtilde=4.0), inst, notify_departures=False)
    assert a == b


class TestRun:
    def test_empty(self):
        assert run_online(GreedyLp(2, 2), Instance(2, ()), 2).objective == 0

    def test_one_job(self):
        assert run_online(GreedyLp(2, 2), unit_jobs([(3.0, 5.0)]), 2).objective == 3.0

    def test_round_robin_skips_infeasible(self):
        rows = [(1.0, 1.0, 1.0), (math.inf, math.inf, 1.0), (1.0, math.inf, 1.0)]
        assert feed(RoundRobin(3), unit_jobs(rows)) == (0, 2, 0)

    def test_trace_shapes(self):
        res = run_online(GreedyLp(2, 2), Instance(2, (Job(0, 0, 2, 2.0, (1.0, 1.0)), Job(1, 1, 2, 2.0, (1.0, 1.0)))), 2)
        assert res.slots.tolist() == [1, 2, 3]
        assert res.p_norms.tolist() == pytest.approx([1.0, math.sqrt(2), 1.0])


class TestParams:
    def test_effective_p(self):
        assert effective_p(2, 2) == 2
        assert effective_p(math.inf, 8) == 3
        assert effective_p(math.inf, 1) == 1
        with pytest.raises(ParameterError):
            effective_p(0.5, 4)

    def test_derived(self):
        ap = AlgParams(2.0, mu1=2.0, dtilde=4.0, mu=3.0)
        assert ap.t_tilde == 16 and ap.w == 3.0 and ap.a == pytest.approx(1 + 1 / 6)
        assert ap.window(2.5) == 5

    def test_bad_hints(self):
        with pytest.raises(ParameterError):
            AlgParams(2.0, mu1=0.5)
        with pytest.raises(ParameterError):
            AlgParams(2.0, lam=0.0)

    def test_pick_min_ties(self):
        assert pick_min([1.0, 1.0 + 1e-14, 0.5 + 0.5]) == 0
        with pytest.raises(InfeasibleError):
            pick_min([np.inf, np.inf])

    def test_unknown_policy(self):
        with pytest.raises(ParameterError):
            build_policy("fifo", 2, 2)
        with pytest.raises(ParameterError):
            build_policy("greedy-lp", 2, 2, lambda_doubling=True)
