import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cokerlab import padic
from cokerlab.padic import (
    EntrySampler,
    MatModPk,
    add,
    categorical_sampler,
    cokernel_type,
    haar_sampler,
    make_b_sequence,
    match_group,
    matrix,
    philox_gen,
    read_matrix_text,
    residual_rank,
    sample_matrix,
    scalar_p_shift,
    shift,
    smith_normal_form,
    sparse_sampler,
    trial_stream,
    write_matrix_text,
)
from cokerlab.pgroup import PGroupType, trivial_group
from helpers_oracle import snf_exponents_oracle


def random_matrix(rng, p, k, m, n):
    return matrix(p, k, rng.integers(0, p**k, (m, n)))


def random_unimodular(rng, p, k, n):
    """L * U * P with unit diagonals: invertible over Z/p^k."""
    pk = p**k
    lo = np.tril(rng.integers(0, pk, (n, n)), -1) + np.eye(n, dtype=np.int64)
    up = np.triu(rng.integers(0, pk, (n, n)), 1) + np.eye(n, dtype=np.int64)
    perm = np.eye(n, dtype=np.int64)[rng.permutation(n)]
    return (lo @ up @ perm) % pk


class TestMatModPk:
    def test_reduction_and_immutability(self):
        a = matrix(3, 2, [[10, -1], [4, 9]])
        assert a.entries.tolist() == [[1, 8], [4, 0]]
        with pytest.raises(ValueError):
            a.entries[0, 0] = 5

    def test_rejects_bad_ring(self):
        with pytest.raises(ValueError):
            matrix(4, 2, [[0]])
        with pytest.raises(ValueError):
            matrix(2, 0, [[0]])
        with pytest.raises(ValueError):
            matrix(2, 40, [[0]])

    def test_text_roundtrip(self, tmp_path):
        a = matrix(5, 3, [[1, 2, 3], [4, 5, 6]])
        path = tmp_path / "m.txt"
        write_matrix_text(a, path)
        b = read_matrix_text(path)
        assert (a.p, a.k) == (b.p, b.k)
        assert np.array_equal(a.entries, b.entries)

    def test_text_errors(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 3 2 2\n1 2 3\n")
        with pytest.raises(ValueError):
            read_matrix_text(path)


class TestSampling:
    def test_haar_mean(self):
        a = sample_matrix(haar_sampler(), 300, 300, 2, 1, 1, 0)
        mean = a.entries.mean()
        # 9e4 draws of Bernoulli(1/2): 3 sigma ~ 0.005
        assert abs(mean - 0.5) < 0.005

    def test_categorical_residue_frequency(self):
        s = categorical_sampler([0.6, 0.4], eps=0.4)
        a = sample_matrix(s, 300, 300, 2, 3, 1, 0)
        freq = np.mean(a.entries % 2 == 0)
        assert abs(freq - 0.6) < 3 * 0.5 / 300
        # higher digits uniform: mean of entry//2 is (2^2-1)/2 = 1.5
        assert abs((a.entries // 2).mean() - 1.5) < 0.02

    def test_sparse_zero_probability(self):
        n = 50
        alpha = np.log(n) / n
        a = sample_matrix(sparse_sampler(alpha), 200, 200, 2, 2, 3, 1)
        freq = np.mean(a.entries % 2 == 0)
        expected = 1 - alpha
        assert abs(freq - expected) < 3 * np.sqrt(alpha * (1 - alpha)) / 200

    def test_determinism_and_stream_independence(self):
        s = haar_sampler()
        a = sample_matrix(s, 20, 20, 2, 4, 7, trial_stream(20, 5))
        b = sample_matrix(s, 20, 20, 2, 4, 7, trial_stream(20, 5))
        c = sample_matrix(s, 20, 20, 2, 4, 7, trial_stream(20, 6))
        d = sample_matrix(s, 20, 20, 2, 4, 8, trial_stream(20, 5))
        assert np.array_equal(a.entries, b.entries)
        assert not np.array_equal(a.entries, c.entries)
        assert not np.array_equal(a.entries, d.entries)

    def test_sampler_validation(self):
        with pytest.raises(ValueError):
            EntrySampler("categorical-mod-p", probs=(0.5, 0.4)).validate(2)
        with pytest.raises(ValueError):
            EntrySampler("categorical-mod-p", probs=(0.9, 0.1), eps=0.2).validate(2)
        with pytest.raises(ValueError):
            EntrySampler("sparse-alpha", alpha=1.5).validate(2)
        with pytest.raises(ValueError):
            EntrySampler("nope").validate(2)
        with pytest.raises(ValueError):
            categorical_sampler([0.5, 0.5]).validate(3)


class TestSmithNormalForm:
    def test_examples(self):
        assert smith_normal_form(matrix(2, 3, np.eye(4))).exponents == (0, 0, 0, 0)
        assert smith_normal_form(matrix(2, 4, [[2, 0], [0, 8]])).exponents == (1, 3)
        assert smith_normal_form(matrix(2, 3, [[2, 1], [1, 2]])).exponents == (0, 0)
        snf = smith_normal_form(matrix(2, 3, [[0]]))
        assert snf.exponents == (3,) and snf.saturated == (True,)

    def test_ascending_and_zero_matrix(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = random_matrix(rng, 2, 3, 4, 4)
            e = smith_normal_form(a).exponents
            assert list(e) == sorted(e)
        assert smith_normal_form(matrix(3, 2, np.zeros((2, 3)))).exponents == (2, 2)

    def test_python_numba_parity(self):
        rng = np.random.default_rng(42)
        for t in range(200):
            p = [2, 3, 5][t % 3]
            k = 1 + t % 4
            m, n = rng.integers(1, 6, 2)
            a = random_matrix(rng, p, k, m, n)
            fast = smith_normal_form(a).exponents
            ref = tuple(padic._snf_exponents(a.entries, p, k))
            assert fast == ref

    def test_against_integer_snf_oracle(self):
        rng = np.random.default_rng(7)
        for t in range(1000):
            p = [2, 3, 5][t % 3]
            k = 1 + t % 4
            a = random_matrix(rng, p, k, 4, 4)
            assert smith_normal_form(a).exponents == snf_exponents_oracle(
                a.entries.tolist(), p, k
            ), a.entries

    def test_unimodular_invariance(self):
        rng = np.random.default_rng(3)
        base_cases = [
            matrix(2, 3, [[2, 1, 0], [4, 6, 2], [0, 0, 4]]),
            matrix(3, 2, [[3, 1], [0, 3]]),
            matrix(2, 4, [[2, 0], [0, 8]]),
        ]
        for a in base_cases:
            want = smith_normal_form(a).exponents
            n = a.rows
            for _ in range(100):
                u = random_unimodular(rng, a.p, a.k, n)
                v = random_unimodular(rng, a.p, a.k, a.cols)
                b = MatModPk(a.p, a.k, (u @ a.entries @ v) % a.modulus)
                assert smith_normal_form(b).exponents == want

    def test_transpose_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(60):
            a = random_matrix(rng, 2, 3, 5, 5)
            at = MatModPk(a.p, a.k, a.entries.T)
            assert cokernel_type(a) == cokernel_type(at)

    def test_residual_rank_equals_zero_exponents(self):
        rng = np.random.default_rng(5)
        for t in range(60):
            p = [2, 3][t % 2]
            a = random_matrix(rng, p, 3, 4, 6)
            zeros = sum(1 for e in smith_normal_form(a).exponents if e == 0)
            assert residual_rank(a) == zeros


class TestCokernelType:
    def test_examples(self):
        assert cokernel_type(matrix(2, 3, [[0]])) == ((3,), True)
        assert cokernel_type(matrix(2, 4, [[2, 0], [0, 8]])) == ((3, 1), False)

    def test_wide_matrices_saturate(self):
        # u extra coordinates with no relations saturate at every precision
        for k in (1, 2, 3):
            a = matrix(2, k, np.concatenate([np.eye(3), np.zeros((3, 2))], axis=1))
            parts, sat = cokernel_type(a)
            assert sat and parts.count(k) >= 2

    def test_extra_relations_shrink(self):
        a = matrix(2, 2, [[1, 0], [0, 2], [0, 2]])
        assert cokernel_type(a) == ((1,), False)

    def test_match_group(self):
        assert match_group(matrix(2, 2, np.eye(3)), trivial_group(2))
        assert match_group(matrix(2, 2, np.diag([2, 1, 1])), PGroupType(2, (1,)))
        assert not match_group(matrix(2, 2, np.diag([4, 1])), PGroupType(2, (1,)))
        assert match_group(matrix(2, 3, np.diag([4, 1])), PGroupType(2, (2,)))
        with pytest.raises(ValueError):
            match_group(matrix(2, 2, np.eye(2)), PGroupType(2, (2,)))


class TestTransforms:
    def test_shift_add(self):
        z = matrix(3, 2, np.zeros((2, 2)))
        assert np.array_equal(shift(z, 1).entries, np.eye(2))
        a = matrix(3, 2, [[1, 2], [3, 4]])
        assert np.array_equal(add(a, z).entries, a.entries)
        assert np.array_equal(scalar_p_shift(z).entries, 3 * np.eye(2))
        with pytest.raises(ValueError):
            shift(matrix(2, 1, np.zeros((2, 3))), 1)
        with pytest.raises(ValueError):
            add(a, matrix(3, 2, np.zeros((3, 2))))

    def test_shift_by_p_cokernel(self):
        s = shift(matrix(3, 2, np.eye(2)), 2)  # entries 3 on the diagonal
        assert smith_normal_form(s).exponents == (1, 1)
        assert cokernel_type(s) == ((1, 1), False)

    def test_pshift_preserves_residual_rank(self):
        rng = np.random.default_rng(9)
        for _ in range(40):
            a = random_matrix(rng, 2, 3, 6, 6)
            assert residual_rank(a) == residual_rank(scalar_p_shift(a))


class TestBSequences:
    def test_ranks(self):
        assert residual_rank(make_b_sequence("identity", 5, 0, 2, 2)) == 5
        assert residual_rank(make_b_sequence("identity", 5, 2, 2, 2)) == 5
        assert residual_rank(make_b_sequence("block-rank", 5, 0, 2, 2, d=2)) == 2
        assert residual_rank(make_b_sequence("p-scalar", 5, 0, 2, 2)) == 0
        assert residual_rank(make_b_sequence("zero", 5, 1, 3, 2)) == 0

    def test_guards(self):
        with pytest.raises(ValueError):
            make_b_sequence("block-rank", 5, 0, 2, 2, d=6)
        with pytest.raises(ValueError):
            make_b_sequence("wat", 5, 0, 2, 2)


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
@settings(max_examples=20, deadline=None)
def test_philox_streams_reproducible(seed, stream):
    x = philox_gen(seed, stream).integers(0, 100, 8)
    y = philox_gen(seed, stream).integers(0, 100, 8)
    assert np.array_equal(x, y)
