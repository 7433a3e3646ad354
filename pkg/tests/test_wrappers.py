import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from conftest import instances
from predload.model import Instance, Job, event_slots, machine_loads
from predload.policies import GreedyLp, LinfExp
from predload.simulate import build_policy, feed
from predload.wrappers import Doubling, LambdaDoubling, TimeBlocking, blocking_violations


def greedy_factory(m, p):
    return lambda mu1, dtilde, mu: GreedyLp(m, p, mu1=mu1, dtilde=dtilde, mu=mu)


def one(t, d, pred, loads=(1.0, 1.0), k=0):
    return Job(k, t, d, float(pred), loads)


class TestDoubling:
    def test_single_copy_when_within_first_guess(self):
        inst = Instance(2, tuple(one(t, 2, 2, k=t) for t in range(5)))
        w = Doubling(greedy_factory(2, 2), 2)
        feed(w, inst)
        assert len(w.copies) == 1 and w.copy_params[0]["dtilde"] == 4

    def test_large_prediction_opens_second_copy(self):
        w = Doubling(greedy_factory(2, 1), 1)
        feed(w, Instance(2, (one(0, 4, 4),)))
        assert len(w.copies) == 2
        assert w.copy_params[1]["mu1"] == 2 and w.copy_params[1]["dtilde"] == 32

    def test_late_departure_doubles_mu1(self):
        w = Doubling(greedy_factory(2, 1), 1)
        feed(w, Instance(2, (one(0, 6, 2), one(6, 1, 1, k=1))))
        assert w.obs_mu1 == 3
        assert w.copy_params[-1]["mu1"] == 6 and w.copy_params[-1]["dtilde"] == 24

    def test_active_job_lower_bound(self):
        w = Doubling(greedy_factory(2, 1), 1)
        feed(w, Instance(2, (one(0, 10, 1), one(4, 1, 1, k=1))))
        # at time 4 job 0 is still alive, so d_0 >= 5
        assert w.copy_params[1]["mu1"] == 10

    def test_mu_hint_includes_overestimation(self):
        seen = []
        w = Doubling(lambda mu1, dtilde, mu: seen.append(mu) or GreedyLp(2, 1, mu1, dtilde, mu), 1)
        feed(w, Instance(2, (one(0, 1, 2), one(1, 4, 1, k=1), one(5, 1, 1, k=2))))
        assert seen[-1] == w.copy_params[-1]["mu1"] * 2


class TestBlocking:
    def test_one_group(self):
        w = TimeBlocking(greedy_factory(2, 2), 2.0, 3.0)
        feed(w, Instance(2, tuple(one(t, 1, 1, k=t) for t in range(6))))
        assert len(w.copies) == 1

    def test_half_open_boundary(self):
        w = TimeBlocking(greedy_factory(2, 2), 2.0, 3.0)
        feed(w, Instance(2, (one(0, 1, 1), one(6, 1, 1, k=1))))
        assert len(w.copies) == 2 and sorted(w.group_copy) == [0, 1]

    @given(instances(max_jobs=8, max_arrival=20))
    def test_jobs_depart_within_two_blocks(self, inst):
        if inst.jobs:
            d = inst.params()
            assert blocking_violations(inst, d.mu1, d.Dtilde) == []


class TestLambdaDoubling:
    def test_single_job(self):
        w = LambdaDoubling(lambda lam: LinfExp(2, lam), 2)
        feed(w, Instance(2, (one(0, 1, 1, loads=(3.0, 2.0)),)))
        assert w.lam == 2.0 and w.restarts == 0

    def test_one_restart(self):
        w = LambdaDoubling(lambda lam: LinfExp(2, lam), 2)
        feed(w, Instance(2, (one(0, 1, 1, loads=(1.0, 1.0)), one(1, 1, 1, loads=(3.0, 3.0), k=1))))
        assert w.restarts == 1 and w.lam == 6.0

    def test_per_slot_bound(self):
        m = 4
        w = LambdaDoubling(lambda lam: LinfExp(m, lam), m)
        jobs = tuple(Job(k, 0, 5, 5.0, (0.5,) + (math.inf,) * (m - 1)) for k in range(m))
        feed(w, Instance(m, jobs))
        assert w.lb == 0.5
        jobs = tuple(Job(k, 0, 5, 5.0, (1.0,) + (math.inf,) * (m - 1)) for k in range(2 * m))
        w = LambdaDoubling(lambda lam: LinfExp(m, lam), m)
        feed(w, Instance(m, jobs))
        assert w.lb >= 2.0


@given(instances(max_jobs=8, max_arrival=12), st.sampled_from(["doubling", "blocking", "both", "lambda"]))
def test_load_is_sum_of_copies(inst, kind):
    m = inst.machines
    if kind == "lambda":
        pol = build_policy("linf-exp", m, math.inf)
    else:
        pol = build_policy("greedy-lp", m, 2.0, mu1=2.0, dtilde=4.0,
                           doubling=kind in ("doubling", "both"), blocking=kind in ("blocking", "both"))
    a = feed(pol, inst)
    if not inst.jobs:
        return
    slots = event_slots([j.arrival for j in inst.jobs], [j.duration for j in inst.jobs])
    total = machine_loads(inst, a, slots)
    parts = np.zeros_like(total)
    for k in set(pol.copy_of.values()):
        ids = [jid for jid, c in pol.copy_of.items() if c == k]
        sub = inst.restrict(ids)
        parts += machine_loads(sub, [a[i] for i in sorted(ids)], slots)
    assert np.allclose(total, parts, rtol=0, atol=1e-12)
    assert sorted(pol.copy_of) == list(range(len(inst.jobs)))
