import math
import time
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mgmtta import simplex, theory
from mgmtta.dsmix import blend_identity_uniform, random_birkhoff, sinkhorn_project

from conftest import posteriors, seeds


class TestBeneficialDemixing:
    def test_constructed_instance(self):
        pi = np.array([0.6, 0.3, 0.1])
        v = theory.check_beneficial_demixing(pi, np.full(3, 1 / 3), pi)
        assert v.hypotheses_hold and v.conclusions_hold
        assert simplex.entropy(pi) == pytest.approx(0.897946, abs=1e-6)
        assert simplex.entropy(np.full(3, 1 / 3)) == pytest.approx(math.log(3))

    def test_reflexive(self):
        p = np.array([0.5, 0.3, 0.2])
        v = theory.check_beneficial_demixing(p, p, np.array([0.6, 0.3, 0.1]))
        assert v.cond_majorize and v.entropy_reduced

    def test_margin_violation_with_flip(self):
        pi = np.array([0.6, 0.3, 0.1])
        gamma = 0.3
        q = pi + np.array([-gamma, gamma, 0.0])  # (0.3, 0.6, 0.1)
        assert np.abs(q - pi).max() == pytest.approx(gamma)
        v = theory.check_beneficial_demixing(q, np.full(3, 1 / 3), pi)
        assert not v.cond_margin and not v.cond_top2_order and not v.argmax_preserved

    def test_non_separable_warns(self):
        with pytest.warns(theory.NonSeparableWarning):
            v = theory.check_beneficial_demixing([0.4, 0.4, 0.2], np.full(3, 1 / 3), [0.4, 0.4, 0.2])
        assert not v.separable

    def test_top2_tie_counts_as_violated(self):
        pi = np.array([0.6, 0.3, 0.1])
        v = theory.check_beneficial_demixing([0.45, 0.45, 0.1], np.full(3, 1 / 3), pi)
        assert not v.cond_top2_order

    def test_ten_thousand_certified_instances(self):
        rng = np.random.default_rng(2024)
        t0 = time.perf_counter()
        for _ in range(10_000):
            inst = theory.sample_demixing_instance(rng, int(rng.integers(2, 11)))
            v = theory.check_beneficial_demixing(inst.q, inst.p_shift, inst.pi_clean)
            assert v.hypotheses_hold and v.entropy_reduced and v.argmax_preserved
        assert time.perf_counter() - t0 < 30

    @given(seeds, st.integers(2, 10))
    def test_generator_certifies(self, seed, k):
        inst = theory.sample_demixing_instance(np.random.default_rng(seed), k)
        gamma, _ = simplex.top_one_margin(inst.pi_clean)
        assert gamma >= 0.1 and 0 <= inst.epsilon < gamma / 2
        assert theory.check_beneficial_demixing(inst.q, inst.p_shift, inst.pi_clean).conclusions_hold


class TestCorrectnessTransfer:
    def test_transfer_on_instances(self, rng):
        for _ in range(200):
            inst = theory.sample_demixing_instance(rng, 5)
            label = int(np.argmax(inst.pi_clean))
            assert theory.correctness_transfer(inst.q, inst.pi_clean, label)

    def test_vacuous_when_clean_wrong(self):
        assert theory.correctness_transfer([0.2, 0.8], [0.7, 0.3], 1) is True
        assert theory.correctness_transfer([0.8, 0.2], [0.7, 0.3], 1) is False

    def test_one_hot_clean(self):
        pi = np.array([0.0, 1.0, 0.0])
        assert theory.correctness_transfer([0.2, 0.6, 0.2], pi, 1)

    def test_violation_raises(self):
        with pytest.raises(theory.TheoremViolation):
            theory.correctness_transfer([0.2, 0.8], [0.8, 0.2], 0)


class TestFailureThreshold:
    def test_worked_instance(self):
        th = theory.failure_threshold([0.3, 0.5, 0.2], [0.5, 0.2, 0.3], 0, 1)
        assert (th.delta_v, th.delta_t) == (pytest.approx(-0.2), pytest.approx(0.3))
        assert th.threshold == pytest.approx(0.6, abs=1e-12)
        assert th.fused_margin(0.7) == pytest.approx(0.7 * -0.2 + 0.3 * 0.3, abs=1e-12)
        assert th.fused_margin(0.7) == pytest.approx(-0.05, abs=1e-12)
        assert th.flips(0.7) and not th.flips(0.6)

    def test_symmetric_margins(self):
        th = theory.failure_threshold([0.2, 0.5, 0.3], [0.5, 0.2, 0.3], 0, 1)
        assert th.threshold == pytest.approx(0.5)

    def test_precondition(self):
        with pytest.raises(theory.PreconditionError):
            theory.failure_threshold([0.5, 0.3, 0.2], [0.5, 0.2, 0.3], 0, 1)

    @given(st.floats(0.01, 0.9), st.floats(0.01, 0.9), st.floats(0.05, 1.0))
    def test_scale_invariant(self, dv, dt, s):
        a = dt / (dt + dv)
        b = (s * dt) / (s * dt + s * dv)
        assert a == pytest.approx(b, rel=1e-12)

    def test_sweep_matches_closed_form(self, rng):
        for _ in range(300):
            k = int(rng.integers(2, 8))
            p_v, p_t = rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k))
            if p_v[0] > p_v[1]:
                p_v[[0, 1]] = p_v[[1, 0]]
            if p_t[0] < p_t[1]:
                p_t[[0, 1]] = p_t[[1, 0]]
            th = theory.failure_threshold(p_v, p_t, 0, 1)
            assert abs(theory.locate_flip(p_v, p_t, 0, 1) - th.threshold) <= 1e-3

    def test_locate_flip_rejects_no_change(self):
        with pytest.raises(ValueError):
            theory.locate_flip([0.6, 0.4], [0.7, 0.3], 0, 1)


class TestEntropyIncrease:
    def test_identity_and_uniform(self):
        pi = np.array([0.7, 0.2, 0.1])
        assert theory.verify_entropy_increase(pi, np.eye(3))
        assert theory.verify_entropy_increase(pi, np.full((3, 3), 1 / 3))
        mixed = np.full((3, 3), 1 / 3) @ pi
        assert simplex.entropy(mixed) == pytest.approx(math.log(3))

    def test_thousand_pairs(self, rng):
        for _ in range(1000):
            k = int(rng.integers(2, 10))
            pi = rng.dirichlet(np.ones(k))
            d = random_birkhoff(k, 4, rng) if rng.random() < 0.5 else sinkhorn_project(
                rng.uniform(0.05, 1, (k, k)), tol=1e-12, max_iter=5000
            ).matrix
            assert theory.verify_entropy_increase(pi, d)

    @given(posteriors(), st.floats(0, 1))
    def test_blend_family(self, pi, s):
        assert theory.verify_entropy_increase(pi, blend_identity_uniform(pi.size, s))


def test_top_two():
    assert theory.top_two(np.array([0.1, 0.6, 0.3])) == (1, 2)
    assert theory.top_two(np.array([0.4, 0.4, 0.2])) is None
    assert theory.top_two(np.array([0.5, 0.25, 0.25])) is None


def test_verdict_without_warning_on_separable():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        theory.check_beneficial_demixing([0.6, 0.4], [0.5, 0.5], [0.7, 0.3])
