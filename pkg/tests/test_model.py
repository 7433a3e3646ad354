import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import assigned, bisect_mu2, brute_loads, instances
from predload.errors import InfeasibleError, ParameterError, UnassignedJobError
from predload.model import (
    Instance, Job, LoadLedger, distortion_params, floor_slots, lp_norm, lp_norms, objective, scale_durations,
)


def job(t, d, pred=None, loads=(1.0,), k=0):
    return Job(k, t, d, float(pred if pred is not None else d), tuple(loads))


class TestNorms:
    def test_examples(self):
        assert lp_norm([3, 4], 2) == pytest.approx(5.0)
        assert lp_norm([3, 4], math.inf) == 4.0
        assert lp_norm([1, 1, 1, 1], 1) == 4.0

    def test_negative_entry_rejected(self):
        with pytest.raises(ValueError):
            lp_norm([1, -1], 2)

    def test_large_p_no_overflow(self):
        assert lp_norm([1e200, 1e200], 4) == pytest.approx(1e200 * 2 ** 0.25)

    @given(st.lists(st.floats(0, 100), min_size=1, max_size=8), st.floats(1, 6), st.floats(1, 6))
    def test_monotone_in_p(self, v, p, q):
        p, q = min(p, q), max(p, q)
        assert lp_norm(v, q) <= lp_norm(v, p) * (1 + 1e-12) + 1e-12

    @given(st.lists(st.floats(0, 100), min_size=2, max_size=16))
    def test_log_m_norm_within_two_of_max(self, v):
        assert lp_norm(v, max(1.0, math.log2(len(v)))) <= 2 * lp_norm(v, math.inf) + 1e-9


class TestObjective:
    def test_single_job(self):
        assert objective(Instance(1, (job(0, 3, loads=(2.0,)),)), [0], 1) == 2.0

    def test_disjoint_jobs(self):
        inst = Instance(1, (job(0, 1), job(1, 1, k=1)))
        assert objective(inst, [0, 0], 1) == 1.0

    def test_overlap_at_slot_two(self):
        inst = Instance(1, (job(0, 2), job(1, 2, k=1)))
        assert objective(inst, [0, 0], 1) == 2.0

    def test_empty(self):
        assert objective(Instance(2, ()), [], 2) == 0.0

    def test_unassigned(self):
        inst = Instance(1, (job(0, 2),))
        with pytest.raises(UnassignedJobError):
            objective(inst, [None], 1)
        with pytest.raises(UnassignedJobError):
            objective(inst, [], 1)

    def test_infeasible_choice(self):
        inst = Instance(2, (job(0, 2, loads=(1.0, math.inf)),))
        with pytest.raises(InfeasibleError):
            objective(inst, [1], 1)

    @given(assigned(), st.sampled_from([1.0, 2.0, 3.0, math.inf]))
    def test_matches_all_slots(self, case, p):
        inst, a = case
        L = brute_loads(inst, a)
        expect = max((lp_norm(row, p) for row in L), default=0.0)
        assert objective(inst, a, p) == pytest.approx(expect, rel=1e-12, abs=1e-12)


class TestDistortion:
    def test_exact(self):
        d = distortion_params(Instance(1, (job(0, 3), job(1, 5, k=1))))
        assert (d.mu1, d.mu2, d.mu, d.D, d.Dtilde) == (1, 1, 1, 5, 5)

    def test_under(self):
        d = distortion_params(Instance(1, (job(0, 4, pred=2),)))
        assert (d.mu1, d.mu2, d.mu) == (2, 1, 2)

    def test_over(self):
        d = distortion_params(Instance(1, (job(0, 1, pred=3),)))
        assert (d.mu1, d.mu2, d.mu) == (1, 3, 3)

    def test_empty(self):
        with pytest.raises(ParameterError):
            distortion_params(Instance(1, ()))

    @given(instances(max_jobs=5))
    def test_minimal_and_feasible(self, inst):
        if not inst.jobs:
            return
        d = inst.params()
        for j in inst.jobs:
            assert floor_slots(d.mu1 * j.predicted) >= j.duration
            assert math.ceil(j.predicted / d.mu2 - 1e-12) <= j.duration
        assert d.mu2 == pytest.approx(bisect_mu2(inst), abs=1e-9)


class TestScale:
    def test_identity(self):
        inst = Instance(1, (job(0, 3), job(2, 5, k=1)))
        assert scale_durations(inst, 1) == inst

    def test_product(self):
        assert scale_durations(Instance(1, (job(0, 2),)), 3).jobs[0].duration == 6

    def test_floor(self):
        assert scale_durations(Instance(1, (job(0, 3),)), 2.5).jobs[0].duration == 7

    def test_keeps_predictions(self):
        inst = Instance(1, (job(0, 3, pred=2.5),))
        assert scale_durations(inst, 2).jobs[0].predicted == 2.5

    def test_rejects_shrink(self):
        with pytest.raises(ParameterError):
            scale_durations(Instance(1, ()), 0.5)


class TestValidation:
    def test_bad_jobs(self):
        with pytest.raises(ParameterError):
            Job(0, -1, 1, 1.0, (1.0,))
        with pytest.raises(ParameterError):
            Job(0, 0, 0, 1.0, (1.0,))
        with pytest.raises(ParameterError):
            Job(0, 0, 1, 0.5, (1.0,))
        with pytest.raises(InfeasibleError):
            Job(0, 0, 1, 1.0, (math.inf, math.inf))

    def test_row_length(self):
        with pytest.raises(ParameterError):
            Instance(2, (job(0, 1),))

    def test_ordering(self):
        inst = Instance(1, (job(3, 1, k=0), job(1, 1, k=1), job(1, 2, k=2)))
        assert [(j.id, j.arrival, j.duration) for j in inst.jobs] == [(0, 1, 1), (1, 1, 2), (2, 3, 1)]


class TestJson:
    def test_inf_sentinel(self):
        inst = Instance(2, (job(0, 2, pred=1.5, loads=(math.inf, 2.0)),))
        data = inst.to_dict()
        assert data["jobs"][0]["loads"] == ["inf", 2.0]
        assert Instance.from_dict(data) == inst

    def test_length_checked(self):
        with pytest.raises(ParameterError):
            Instance.from_dict({"machines": 2, "jobs": [{"arrival": 0, "duration": 1, "predicted": 1, "loads": [1]}]})

    @given(instances())
    def test_round_trip(self, inst):
        assert Instance.loads_json(inst.dumps()) == inst


class TestLedger:
    def test_segments(self):
        led = LoadLedger(2)
        led.add(1, 4, 0, 1.0)
        led.add(3, 6, 1, 2.0)
        bps, loads = led.segments(1, 6)
        assert bps.tolist() == [1, 3, 5, 7]
        assert loads.tolist() == [[1, 0], [1, 2], [0, 2]]

    def test_huge_horizon(self):
        led = LoadLedger(1)
        led.add(1, 4**13, 0, 1.0)
        led.add(4**12, 4**13 + 5, 0, 1.0)
        bps, loads = led.segments(1, 4**13 + 10)
        assert loads[:, 0].tolist() == [1, 2, 1, 0]
        assert bps[-1] == 4**13 + 11

    @given(assigned(), st.sampled_from([1.0, 1.5, 2.0, 3.0]))
    def test_pseudo_load_dominance(self, case, mu1):
        """Charging floor(mu1*d~) slots, with mu1 from the instance, covers the true load."""
        inst, a = case
        if not inst.jobs:
            return
        mu1 = max(mu1, inst.params().mu1)
        real = brute_loads(inst, a)
        pseudo = brute_loads(inst, a, horizon=real.shape[0] - 2, window=lambda j: floor_slots(mu1 * j.predicted))
        assert np.all(real <= pseudo + 1e-12)

    @given(assigned(), st.data())
    def test_snapshot_monotone(self, case, data):
        """After job j arrives, the projected pseudo-load never increases past its arrival."""
        inst, a = case
        if not inst.jobs:
            return
        mu1 = inst.params().mu1
        led = LoadLedger(inst.machines)
        for j, i in zip(inst.jobs, a):
            led.add(j.arrival + 1, j.arrival + floor_slots(mu1 * j.predicted), i, j.loads[i], j.id)
        k = data.draw(st.integers(0, len(inst.jobs) - 1))
        snap = led.prefix(k + 1)
        t0 = inst.jobs[k].arrival
        _, loads = snap.segments(t0 + 1, int(snap.breakpoints().max()) + 1)
        assert np.all(np.diff(loads, axis=0) <= 1e-12)

    def test_prefix(self):
        led = LoadLedger(1)
        led.add(1, 2, 0, 1.0, job=0)
        led.add(1, 2, 0, 1.0, job=1)
        assert led.prefix(1).at(1).tolist() == [1.0]
        assert led.at(1).tolist() == [2.0]


def test_lp_norms_rows():
    rows = np.array([[3.0, 4.0], [0.0, 0.0]])
    assert lp_norms(rows, 2).tolist() == [5.0, 0.0]
