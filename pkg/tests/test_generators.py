import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opseq import convergence as cv
from opseq import generators as gen
from opseq.generators import DecaySchedule
from opseq.hermitian import (
    HermitianMatrix,
    abs_op,
    is_psd,
    loewner_leq,
    min_eigenvalue,
    op_norm,
    sqrt_psd,
)

seeds = st.integers(0, 2**64 - 1)
dims = st.integers(1, 12)


class TestRandomMatrices:
    def test_hermitian_exact(self):
        a = np.asarray(gen.rand_hermitian(5, 7))
        assert np.array_equal(a, a.conj().T)

    def test_determinism(self):
        a = gen.rand_hermitian(4, 42, 1)
        b = gen.rand_hermitian(4, 42, 1)
        assert np.asarray(a).tobytes() == np.asarray(b).tobytes()
        assert a != gen.rand_hermitian(4, 43, 1)

    @settings(max_examples=40, deadline=None)
    @given(dims, seeds, st.floats(1e-3, 1e3))
    def test_hermitian_scale(self, dim, seed, scale):
        assert abs(op_norm(gen.rand_hermitian(dim, seed, scale)) - scale) <= 1e-10 * max(1.0, scale)

    @settings(max_examples=40, deadline=None)
    @given(dims, seeds, st.floats(1e-3, 1e3))
    def test_psd(self, dim, seed, scale):
        p = gen.rand_psd(dim, seed, scale)
        assert is_psd(p)
        assert min_eigenvalue(p) >= -1e-12 * scale
        assert abs(op_norm(p) - scale) <= 1e-10 * max(1.0, scale)
        sqrt_psd(p)
        assert op_norm(abs_op(p) - p) <= 1e-9 * scale

    @settings(max_examples=30, deadline=None)
    @given(dims, seeds)
    def test_unitary(self, dim, seed):
        u = gen.rand_unitary(dim, seed)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(dim), atol=1e-12)

    def test_seed_range(self):
        # the full 64-bit range is accepted
        gen.rand_hermitian(3, 2**64 - 1)
        assert gen.derive_seed(2**64 - 1, 5) < 2**64


class TestCommutingFamily:
    @pytest.mark.parametrize("positive", [False, True])
    def test_commutators(self, positive):
        fam = gen.rand_commuting_family(6, 5, 17, positive=positive)
        for a in fam:
            for b in fam:
                aa, bb = np.asarray(a), np.asarray(b)
                scale = max(1.0, op_norm(a) * op_norm(b))
                assert op_norm(aa @ bb - bb @ aa) <= 1e-10 * scale

    def test_single_member(self):
        assert len(gen.rand_commuting_family(3, 1, 0)) == 1

    def test_positive_members(self):
        assert all(is_psd(m) for m in gen.rand_commuting_family(5, 8, 2, positive=True))

    def test_invalid_count(self):
        with pytest.raises(ValueError):
            gen.rand_commuting_family(3, 0, 0)

    def test_product_sequences(self):
        a_seq, b_seq = gen.commuting_product_sequences(4, 10, 3, DecaySchedule())
        for n in range(1, 11):
            assert op_norm(a_seq[n]) == pytest.approx(1.0, abs=1e-12)
            assert op_norm(b_seq[n]) == pytest.approx(1.0 / n, rel=1e-10)
            assert is_psd(b_seq[n])


class TestSchedules:
    def test_values(self):
        assert DecaySchedule()(4) == 0.25
        assert DecaySchedule("harmonic", 3.0)(3) == 1.0
        assert DecaySchedule("geometric", 2.0, 0.5)(3) == 0.25
        t = DecaySchedule("table", table=(1.0, 0.5, 0.5, 0.1))
        assert [t(n) for n in range(1, 7)] == [1.0, 0.5, 0.5, 0.1, 0.1, 0.1]

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(form="cubic"),
            dict(K=0.0),
            dict(form="geometric", r=1.0),
            dict(form="table", table=()),
            dict(form="table", table=(1.0, 2.0)),
            dict(form="table", table=(1.0, 0.0)),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            DecaySchedule(**kwargs)

    def test_index_starts_at_one(self):
        with pytest.raises(ValueError):
            DecaySchedule()(0)

    @pytest.mark.parametrize("text", ["harmonic", "harmonic:2.5", "geometric:1.0:0.25", "table:1.0,0.5"])
    def test_parse_round_trip(self, text):
        s = DecaySchedule.parse(text)
        assert DecaySchedule.parse(s.describe()) == s

    @pytest.mark.parametrize("text", ["sqrt", "harmonic:1:2", "geometric:x", "table:"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            DecaySchedule.parse(text)

    @given(st.sampled_from(["harmonic", "geometric"]), st.floats(0.01, 100), st.floats(0.01, 0.99))
    def test_positive_nonincreasing(self, form, k, r):
        s = DecaySchedule(form, k, r)
        values = [s(n) for n in range(1, 60)]
        assert all(v > 0 for v in values)
        assert all(b <= a for a, b in zip(values, values[1:]))


class TestSandwichFactory:
    def test_premises_dim8(self):
        inst = gen.make_sandwich_instance(gen.rand_hermitian(8, 3), DecaySchedule(), 200, 3)
        assert inst.horizon == 200
        assert all(p.ok for p in cv.check_sandwich_premises(inst))

    def test_envelope_residuals_match_schedule(self):
        sched = DecaySchedule("geometric", 2.0, 0.8)
        limit = gen.rand_hermitian(5, 1)
        inst = gen.make_sandwich_instance(limit, sched, 30, 9)
        for n in range(1, 31):
            assert abs(op_norm(inst.upper[n] - limit) - sched(n)) <= 1e-10
            assert abs(op_norm(inst.lower[n] - limit) - sched(n)) <= 1e-10

    def test_degenerate_t(self):
        inst = gen.make_sandwich_instance(gen.rand_hermitian(4, 1), DecaySchedule(), 10, 2, t_values=np.zeros(10))
        for n in range(1, 11):
            assert inst.middle[n] == inst.lower[n]

    def test_deterministic(self):
        a = gen.make_sandwich_instance(gen.rand_hermitian(3, 1), DecaySchedule(), 5, 4)
        b = gen.make_sandwich_instance(gen.rand_hermitian(3, 1), DecaySchedule(), 5, 4)
        assert all(x == y for x, y in zip(a.middle, b.middle))

    def test_invalid_horizon(self):
        with pytest.raises(ValueError):
            gen.make_sandwich_instance(gen.rand_hermitian(3, 1), DecaySchedule(), 0, 4)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(1, 8), seeds)
    def test_premises_property(self, dim, seed):
        inst = gen.make_sandwich_instance(gen.rand_hermitian(dim, seed), DecaySchedule(), 12, seed)
        assert all(p.ok for p in cv.check_sandwich_premises(inst))


class TestIntervalSearch:
    def test_scalars_never(self):
        assert gen.search_interval_counterexample(1, 50, 0) is None

    def test_stored_witness(self):
        a, b = gen.STORED_INTERVAL_WITNESS
        assert loewner_leq(-b, a) and loewner_leq(a, b)
        assert not loewner_leq(abs_op(a), b)
        assert abs(min_eigenvalue(b - abs_op(a)) + 0.3) <= 1e-9
        # |A| = I, and B - I has eigenvalues 0.1 +- 0.4
        assert abs_op(a) == HermitianMatrix.identity(2)

    def test_dim2_search(self):
        found = gen.search_interval_counterexample(2, 10_000, 1)
        assert found is not None
        a, b = found
        assert loewner_leq(-b, a) and loewner_leq(a, b) and not loewner_leq(abs_op(a), b)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 6), seeds)
    def test_returned_pairs_reverify(self, dim, seed):
        found = gen.search_interval_counterexample(dim, 200, seed)
        if found is not None:
            a, b = found
            assert loewner_leq(-b, a) and loewner_leq(a, b) and not loewner_leq(abs_op(a), b)

    def test_first_success_is_returned(self):
        found = gen.search_interval_counterexample(3, 500, 5)
        trials = [gen.interval_trial(3, 5, t) for t in range(500)]
        first = next(t for t in trials if t[3])
        assert found[0] == first[0] and found[1] == first[1]

    def test_invalid_trials(self):
        with pytest.raises(ValueError):
            gen.search_interval_counterexample(2, 0, 0)
