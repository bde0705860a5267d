import numpy as np
import pytest

from speechprune import (
    TIE_LOW_INDEX,
    ShapeError,
    ValidationError,
    l2_normalize_rows,
    matmul,
    mean_axis,
    sign_binarize,
    softmax,
    topk_indices,
)
from oracles import naive_matmul, naive_softmax, naive_topk


class TestMatmul:
    def test_identity(self):
        m = np.array([[1.5, -2.0, 3.0], [0.0, 4.0, -1.0]], dtype=np.float32)
        out = matmul(np.eye(2, dtype=np.float32), m)
        assert np.array_equal(out, m)

    def test_hand_case(self):
        out = matmul([[1, 2], [3, 4]], [[1], [1]])
        assert out.tolist() == [[3.0], [7.0]]

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(42)
        a = rng.standard_normal((5, 4)).astype(np.float32)
        b = rng.standard_normal((4, 3)).astype(np.float32)
        expected = np.array(naive_matmul(a, b))
        assert np.allclose(matmul(a, b), expected, atol=1e-6)

    def test_dimension_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeError) as err:
            matmul(np.zeros((2, 3)), np.zeros((4, 2)))
        assert "(2, 3)" in str(err.value) and "(4, 2)" in str(err.value)

    def test_zero_sized_operands(self):
        out = matmul(np.zeros((0, 3)), np.zeros((3, 2)))
        assert out.shape == (0, 2)

    def test_deterministic_across_calls(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((13, 9)).astype(np.float32)
        b = rng.standard_normal((9, 11)).astype(np.float32)
        first = matmul(a, b)
        assert np.array_equal(first, matmul(a, b))


class TestL2NormalizeRows:
    def test_three_four_five(self):
        out = l2_normalize_rows(np.array([[3.0, 4.0]]))
        assert np.allclose(out, [[0.6, 0.8]], atol=1e-7)

    def test_zero_row_stays_zero(self):
        out = l2_normalize_rows(np.array([[0.0, 0.0]]), eps=1e-12)
        assert np.array_equal(out, [[0.0, 0.0]])
        assert not np.any(np.isnan(out))

    def test_row_norms_unit_or_zero(self):
        rng = np.random.default_rng(11)
        m = rng.standard_normal((6, 8)).astype(np.float32)
        norms = np.linalg.norm(l2_normalize_rows(m), axis=1)
        assert np.all((norms == 0) | (np.abs(norms - 1) <= 1e-6))

    def test_scale_invariance(self):
        rng = np.random.default_rng(12)
        m = rng.standard_normal((4, 5)).astype(np.float32)
        assert np.allclose(
            l2_normalize_rows(m), l2_normalize_rows(3.7 * m), atol=1e-6
        )

    def test_eps_must_be_positive(self):
        with pytest.raises(ValidationError):
            l2_normalize_rows(np.ones((1, 2)), eps=0.0)


class TestSoftmax:
    def test_uniform_on_equal_inputs(self):
        assert np.allclose(softmax([5.0, 5.0, 5.0]), [1 / 3] * 3, atol=1e-12)

    def test_overflow_safe(self):
        out = softmax([1000.0, 0.0])
        assert np.all(np.isfinite(out))
        assert out[0] == pytest.approx(1.0, abs=1e-6)
        assert out[1] == pytest.approx(0.0, abs=1e-6)

    def test_hand_case(self):
        out = softmax([2.0, 1.0, 1.0])
        expected = naive_softmax([2.0, 1.0, 1.0])
        assert expected[0] == pytest.approx(0.5761168847658291, abs=1e-12)
        assert np.allclose(out, expected, atol=1e-9)

    def test_sums_to_one_and_shift_invariant(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            v = rng.standard_normal(rng.integers(1, 30)) * 10
            out = softmax(v)
            assert out.sum() == pytest.approx(1.0, abs=1e-6)
            assert np.all(out > 0)
            assert np.allclose(out, softmax(v + 123.456), atol=1e-6)

    def test_permutation_equivariant(self):
        rng = np.random.default_rng(22)
        v = rng.standard_normal(17)
        perm = rng.permutation(17)
        assert np.allclose(softmax(v)[perm], softmax(v[perm]), atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            softmax([])

    def test_nonfinite_rejected(self):
        with pytest.raises(ValidationError):
            softmax([1.0, np.inf])


class TestTopkIndices:
    def test_hand_case(self):
        assert topk_indices([5.0, 1.0, 9.0], 2).tolist() == [0, 2]

    def test_tie_break_low_index(self):
        assert topk_indices([7.0, 7.0, 7.0], 2).tolist() == [0, 1]

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            scores = rng.choice([0.0, 1.0, 2.5, -1.0, 2.5], size=50)
            k = int(rng.integers(0, 51))
            assert topk_indices(scores, k).tolist() == naive_topk(scores.tolist(), k)

    def test_output_strictly_ascending_unique(self):
        rng = np.random.default_rng(32)
        scores = rng.standard_normal(40)
        out = topk_indices(scores, 17)
        assert np.all(np.diff(out) > 0)

    def test_k_out_of_range(self):
        with pytest.raises(ValidationError):
            topk_indices([1.0, 2.0], 3)

    def test_unknown_policy(self):
        with pytest.raises(ValidationError):
            topk_indices([1.0], 1, tie_break="coin-flip")

    def test_tie_policy_named(self):
        assert topk_indices([1.0, 1.0], 1, tie_break=TIE_LOW_INDEX).tolist() == [0]


class TestSignBinarize:
    def test_sign_of_zero_is_positive(self):
        out = sign_binarize(np.array([[0.5, -0.2], [0.0, -3.0]]))
        assert out.tolist() == [[1.0, -1.0], [1.0, -1.0]]

    def test_idempotent(self):
        rng = np.random.default_rng(41)
        m = rng.standard_normal((4, 4)).astype(np.float32)
        once = sign_binarize(m)
        assert np.array_equal(once, sign_binarize(once))

    def test_matches_entrywise_oracle(self):
        rng = np.random.default_rng(42)
        m = rng.standard_normal((4, 4)).astype(np.float32)
        expected = np.where(m >= 0, 1.0, -1.0)
        assert np.array_equal(sign_binarize(m), expected)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValidationError):
            sign_binarize(np.array([[np.nan]]))


class TestMeanAxis:
    def test_over_cols(self):
        assert mean_axis(np.array([[1.0, 3.0], [5.0, 7.0]]), "cols").tolist() == [2.0, 6.0]

    def test_over_rows(self):
        assert mean_axis(np.array([[1.0, 3.0], [5.0, 7.0]]), "rows").tolist() == [3.0, 5.0]

    def test_matches_summation_oracle(self):
        rng = np.random.default_rng(51)
        m = rng.standard_normal((7, 3)).astype(np.float32)
        expected = [sum(float(x) for x in row) / 3 for row in m]
        assert np.allclose(mean_axis(m, "cols"), expected, atol=1e-6)

    def test_empty_axis_rejected(self):
        with pytest.raises(ShapeError):
            mean_axis(np.zeros((0, 3)), "rows")
        with pytest.raises(ShapeError):
            mean_axis(np.zeros((3, 0)), "cols")

    def test_unknown_axis_rejected(self):
        with pytest.raises(ValidationError):
            mean_axis(np.zeros((2, 2)), "diagonal")
