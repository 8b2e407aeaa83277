import itertools
import pickle

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polycheck.field import (
    MERSENNE_61,
    Field,
    FieldElement,
    FieldMismatchError,
    OpCounter,
    ShapeError,
    Substreams,
    add,
    inv,
    is_prime,
    make_rng,
    mul,
    pow_,
    uniform_below,
)

SMALL_PRIMES = [2, 3, 5, 7]


def egcd_inverse(a, q):
    """Extended Euclid, independent of the Fermat route used by Field.inv."""
    r0, r1, s0, s1 = q, a % q, 0, 1
    while r1:
        k = r0 // r1
        r0, r1 = r1, r0 - k * r1
        s0, s1 = s1, s0 - k * s1
    assert r0 == 1
    return s0 % q


def trial_division(n):
    return n >= 2 and all(n % d for d in range(2, int(n ** 0.5) + 1))


class TestPrimality:
    def test_matches_trial_division(self):
        assert [n for n in range(2000) if is_prime(n)] == [n for n in range(2000) if trial_division(n)]

    def test_known_large(self):
        assert is_prime(MERSENNE_61)
        assert not is_prime(MERSENNE_61 - 2)
        assert not is_prime(3215031751)  # strong pseudoprime to bases 2, 3, 5, 7

    def test_composite_modulus_rejected(self):
        with pytest.raises(ValueError):
            Field(15)
        with pytest.raises(ValueError):
            Field(1)

    def test_modulus_above_63_bits_rejected(self):
        with pytest.raises(ValueError):
            Field((1 << 64) - 59)


class TestScalarExamples:
    def test_add(self):
        F = Field(7)
        assert F(5) + F(4) == 2
        assert add(F(5), F(4)) == F(2)
        assert all(F(a) + 0 == a for a in range(7))

    def test_inverse(self):
        F = Field(7)
        assert F(3).inverse() == 5
        assert inv(F(3)) == 5

    def test_pow(self):
        assert pow_(Field(7)(3), 0) == 1
        assert Field(17)(2) ** 4 == 16

    def test_inverse_of_zero(self):
        F = Field(7)
        with pytest.raises(ZeroDivisionError):
            F(0).inverse()
        with pytest.raises(ZeroDivisionError):
            F.inv(0)

    def test_context_mismatch(self):
        with pytest.raises(FieldMismatchError):
            Field(7)(1) + Field(11)(1)
        with pytest.raises(FieldMismatchError):
            mul(Field(7)(2), Field(5)(2))

    def test_elements_are_immutable(self):
        a = Field(7)(3)
        with pytest.raises(AttributeError):
            a.value = 4

    def test_non_residue_rejected(self):
        with pytest.raises(ValueError):
            FieldElement(7, Field(7))

    def test_division(self):
        F = Field(11)
        assert F(6) / F(3) == 2


@pytest.mark.parametrize("q", SMALL_PRIMES)
class TestAxiomsExhaustive:
    def test_ring_axioms(self, q):
        F = Field(q)
        els = [F(v) for v in range(q)]
        for a, b, c in itertools.product(els, repeat=3):
            assert (a + b) + c == a + (b + c)
            assert (a * b) * c == a * (b * c)
            assert a * (b + c) == a * b + a * c
        for a, b in itertools.product(els, repeat=2):
            assert a + b == b + a
            assert a * b == b * a

    def test_identities_and_inverses(self, q):
        F = Field(q)
        for v in range(q):
            a = F(v)
            assert a + 0 == a and a * 1 == a
            assert a + (-a) == 0
            if v:
                assert a * a.inverse() == 1


@pytest.mark.parametrize("q", [p for p in range(2, 102) if trial_division(p)])
def test_inverse_against_euclid(q):
    F = Field(q)
    for a in range(1, q):
        assert F.inv(a) == egcd_inverse(a, q)


class TestLargeField:
    @given(st.integers(0, MERSENNE_61 - 1), st.integers(0, MERSENNE_61 - 1))
    def test_mul_matches_python_ints(self, a, b):
        F = Field()
        assert F.mul(a, b) == (a * b) % MERSENNE_61

    @given(st.integers(1, MERSENNE_61 - 1))
    @settings(max_examples=50)
    def test_inverse(self, a):
        assert Field().inv(a) == egcd_inverse(a, MERSENNE_61)

    @given(st.integers(0, MERSENNE_61 - 1), st.integers(0, 10 ** 6))
    @settings(max_examples=50)
    def test_pow_matches_builtin(self, a, e):
        assert Field().pow(a, e) == pow(a, e, MERSENNE_61)

    @given(st.lists(st.integers(0, MERSENNE_61 - 1), min_size=3, max_size=3))
    def test_distributivity(self, abc):
        F = Field()
        a, b, c = (F(v) for v in abc)
        assert a * (b + c) == a * b + a * c


class TestVectorOps:
    def test_matvec_against_loop_oracle(self):
        F = Field(101)
        rng = make_rng(3)
        for rows, cols in [(1, 1), (3, 5), (7, 2)]:
            m = F.sample_matrix(rng, rows, cols)
            v = F.sample_vector(rng, cols)
            expect = []
            for i in range(rows):
                acc = 0
                for j in range(cols):
                    acc = (acc + m[i][j] * v[j]) % 101
                expect.append(acc)
            assert F.matvec(m, v) == expect

    def test_identity_matvec(self):
        F = Field(13)
        eye = [[int(i == j) for j in range(4)] for i in range(4)]
        assert F.matvec(eye, [3, 1, 4, 1]) == [3, 1, 4, 1]

    def test_shape_errors(self):
        F = Field(7)
        with pytest.raises(ShapeError):
            F.matvec([[1, 2]], [1, 2, 3])
        with pytest.raises(ShapeError):
            F.dot([1], [1, 2])
        with pytest.raises(ShapeError):
            F.matmul([[1, 2]], [[1, 2]])

    def test_matvec_count(self):
        F = Field(7)
        F.matvec([[1, 2, 3], [4, 5, 6]], [1, 1, 1])
        assert F.counter.total_muls == 6

    def test_running_powers(self):
        F = Field(7)
        assert F.running_powers(3, 4) == [1, 3, 2, 6]
        assert F.counter.total_muls == 3


class TestSampling:
    def test_empty_shapes(self):
        F = Field(5)
        rng = make_rng(0)
        assert F.sample_matrix(rng, 0, 3) == []
        assert F.sample_matrix(rng, 2, 0) == [[], []]
        assert F.sample_vector(rng, 0) == []

    def test_q2_reproducible(self):
        F = Field(2)
        a = F.sample_matrix(make_rng(42), 4, 4)
        b = F.sample_matrix(make_rng(42), 4, 4)
        assert a == b
        assert {v for row in a for v in row} <= {0, 1}

    def test_q17_frequencies(self):
        n, q = 10 ** 5, 17
        draws = uniform_below(make_rng(2024), q, n)
        counts = np.bincount(draws, minlength=q)
        p = 1 / q
        sigma = (n * p * (1 - p)) ** 0.5
        assert np.all(np.abs(counts - n * p) < 5 * sigma)
        chi2 = float(((counts - n * p) ** 2 / (n * p)).sum())
        assert chi2 < 50  # 16 dof; upper 0.01% point is about 42

    def test_no_modulo_bias_for_awkward_bound(self):
        # bound just above 2^63: naive w % bound would favour small values heavily
        bound = (1 << 63) + 1
        draws = uniform_below(make_rng(5), bound, 20000)
        below_half = sum(d < bound // 2 for d in draws) / len(draws)
        assert abs(below_half - 0.5) < 0.02

    def test_nonzero_vector(self):
        F = Field(2)
        rng = make_rng(1)
        assert all(any(F.sample_nonzero_vector(rng, 2)) for _ in range(200))

    def test_streams_differ_by_path(self):
        a = uniform_below(make_rng(7, 1), 1000, 8)
        b = uniform_below(make_rng(7, 2), 1000, 8)
        assert a != b
        assert a == uniform_below(make_rng(7, 1), 1000, 8)


class TestSubstreams:
    def test_independent_of_history(self):
        s = Substreams(9, 1)
        first = uniform_below(s.at(5), 97, 10)
        uniform_below(s.at(3), 97, 50)
        assert uniform_below(s.at(5), 97, 10) == first

    def test_distinct_indices(self):
        s = Substreams(9, 1)
        assert uniform_below(s.at(0), 1 << 40, 4) != uniform_below(s.at(1), 1 << 40, 4)

    def test_index_range(self):
        with pytest.raises(ValueError):
            Substreams(1).at(-1)


class TestOpCounter:
    def test_phase_tagging_and_conservation(self):
        F = Field(7)
        with F.counter.phase("verify"):
            F.mul(2, 3)
            F.add(2, 3)
        F.mul(1, 1)
        snap = F.counter.snapshot()
        assert snap["verify"] == {"muls": 1, "adds": 1}
        assert snap["other"]["muls"] == 1
        assert sum(v["muls"] for v in snap.values()) == F.counter.total_muls

    def test_nested_phase_restores(self):
        c = OpCounter()
        with c.phase("init"):
            with c.phase("serve"):
                assert c.current_phase == "serve"
            assert c.current_phase == "init"
        assert c.current_phase == "other"

    def test_unknown_phase(self):
        with pytest.raises(ValueError):
            OpCounter().phase("bogus")

    def test_field_pickles(self):
        F = Field(11)
        G = pickle.loads(pickle.dumps(F))
        assert G == F
