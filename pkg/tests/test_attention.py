import math

import numpy as np
import pytest

from prunerank.attention import (
    attention_mass_per_token,
    attention_output,
    check_pruning_error_bound,
    pruned_attention_output,
    softmax,
    tail_gap_bound_check,
)
from prunerank.errors import (
    AllMassPrunedError,
    DimensionMismatchError,
    EmptyInputError,
    KOutOfRangeError,
)

EXAMPLE_ALPHA = [0.5, 0.3, 0.2]
EXAMPLE_V = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]


class TestSoftmax:
    def test_symmetric_pair(self):
        np.testing.assert_allclose(softmax([0.0, 0.0]), [0.5, 0.5], atol=1e-15)

    def test_no_overflow_for_huge_scores(self):
        out = softmax([1000.0, 0.0])
        assert np.isfinite(out).all()
        assert out[0] == pytest.approx(1.0, abs=1e-12)
        assert out[1] == pytest.approx(0.0, abs=1e-12)

    def test_derived_pair(self):
        np.testing.assert_allclose(
            softmax([1.0, 0.0]), [0.7310585786300049, 0.2689414213699951], atol=1e-12
        )

    def test_shift_invariance(self):
        rng = np.random.default_rng(0)
        scores = rng.standard_normal(9)
        np.testing.assert_allclose(softmax(scores), softmax(scores + 123.456), atol=1e-12)

    def test_simplex_output(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            out = softmax(rng.standard_normal(rng.integers(1, 20)) * 10)
            assert np.all(out >= 0)
            assert out.sum() == pytest.approx(1.0, abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            softmax([])


class TestAttentionOutput:
    def test_one_hot_selects_row(self):
        np.testing.assert_allclose(attention_output([1.0, 0.0], [[3.0, 4.0], [5.0, 6.0]]), [3.0, 4.0])

    def test_uniform_over_identical_rows(self):
        row = [2.0, -1.0, 0.5]
        np.testing.assert_allclose(attention_output([0.25] * 4, [row] * 4), row, atol=1e-15)

    def test_hand_weighted_sum(self):
        np.testing.assert_allclose(
            attention_output(EXAMPLE_ALPHA, EXAMPLE_V), [0.7, 0.5], atol=1e-15
        )

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            attention_output([0.5, 0.5], [[1.0, 0.0]])

    def test_invalid_weights(self):
        with pytest.raises(ValueError):
            attention_output([0.6, 0.6], [[1.0], [1.0]])


class TestPrunedAttentionOutput:
    def test_keep_all_is_identity(self):
        c = attention_output(EXAMPLE_ALPHA, EXAMPLE_V)
        c_prime, tail = pruned_attention_output(EXAMPLE_ALPHA, EXAMPLE_V, [0, 1, 2])
        np.testing.assert_allclose(c_prime, c, atol=1e-12)
        assert tail == 0.0

    def test_hand_renormalization(self):
        c_prime, tail = pruned_attention_output(EXAMPLE_ALPHA, EXAMPLE_V, [0, 1])
        assert tail == pytest.approx(0.2, abs=1e-12)
        np.testing.assert_allclose(c_prime, [0.625, 0.375], atol=1e-12)

    def test_singleton_argmax_returns_row(self):
        c_prime, _ = pruned_attention_output(EXAMPLE_ALPHA, EXAMPLE_V, [0])
        np.testing.assert_allclose(c_prime, EXAMPLE_V[0], atol=1e-12)

    def test_all_mass_pruned(self):
        with pytest.raises(AllMassPrunedError):
            pruned_attention_output([1.0, 0.0], [[1.0], [2.0]], [1])

    def test_empty_kept_set(self):
        with pytest.raises(EmptyInputError):
            pruned_attention_output(EXAMPLE_ALPHA, EXAMPLE_V, [])

    def test_kept_index_out_of_range(self):
        with pytest.raises(KOutOfRangeError):
            pruned_attention_output(EXAMPLE_ALPHA, EXAMPLE_V, [0, 3])


class TestPruningErrorBound:
    def test_hand_example(self):
        report = check_pruning_error_bound(EXAMPLE_ALPHA, EXAMPLE_V, [0, 1])
        assert report.error_norm == pytest.approx(math.sqrt(0.02125), abs=1e-12)
        assert report.error_norm == pytest.approx(0.14577, abs=5e-6)
        assert report.v_max == pytest.approx(math.sqrt(2.0), abs=1e-12)
        assert report.bound == pytest.approx(0.4 * math.sqrt(2.0), abs=1e-12)
        assert report.bound == pytest.approx(0.56569, abs=5e-6)
        assert report.holds

    def test_keep_all_zero_error_zero_bound(self):
        report = check_pruning_error_bound(EXAMPLE_ALPHA, EXAMPLE_V, [0, 1, 2])
        assert report.error_norm == pytest.approx(0.0, abs=1e-12)
        assert report.bound == pytest.approx(0.0, abs=1e-12)
        assert report.holds

    def test_monte_carlo_always_holds(self):
        rng = np.random.default_rng(2)
        for _ in range(2000):
            n = int(rng.integers(2, 40))
            d = int(rng.integers(1, 10))
            alpha = rng.dirichlet(np.ones(n))
            values = rng.standard_normal((n, d)) * rng.uniform(0.1, 3.0)
            kept = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
            if alpha[kept].sum() < 1e-9:
                kept = np.unique(np.append(kept, int(np.argmax(alpha))))
            assert check_pruning_error_bound(alpha, values, kept).holds

    def test_antipodal_case_attains_bound(self):
        # Removed mass pulls one way, kept mass the other: error equals the bound.
        report = check_pruning_error_bound(
            [0.3, 0.7], [[2.0, 0.0], [-2.0, 0.0]], [1]
        )
        assert report.error_norm == pytest.approx(report.bound, abs=1e-12)
        assert report.holds


class TestTailGapBound:
    def test_hand_example(self):
        report = tail_gap_bound_check([3.0, 3.0, 0.0], k=2)
        assert report.epsilon == pytest.approx(1.0 / (2.0 * math.e**3 + 1.0), abs=1e-12)
        assert report.delta == 3.0
        assert report.bound == pytest.approx(0.5 * math.exp(-3.0), abs=1e-15)
        assert report.epsilon <= report.bound
        assert report.holds

    def test_all_equal_scores(self):
        report = tail_gap_bound_check([1.5, 1.5], k=1)
        assert report.delta == 0.0
        assert report.epsilon == pytest.approx(0.5, abs=1e-12)
        assert report.bound == pytest.approx(1.0)
        assert report.holds

    def test_monte_carlo_always_holds(self):
        rng = np.random.default_rng(3)
        for _ in range(2000):
            n = int(rng.integers(2, 60))
            g = rng.normal(0.0, rng.uniform(0.3, 3.0), size=n)
            k = int(rng.integers(1, n))
            assert tail_gap_bound_check(g, k).holds

    def test_k_out_of_range(self):
        with pytest.raises(KOutOfRangeError):
            tail_gap_bound_check([1.0, 2.0], k=2)


class TestReportSerialization:
    def test_prune_error_report_to_json(self):
        report = check_pruning_error_bound(EXAMPLE_ALPHA, EXAMPLE_V, [0, 1])
        obj = report.to_json()
        assert set(obj) == {"error_norm", "tail_mass", "v_max", "bound", "holds"}
        assert obj["holds"] is True

    def test_tail_gap_report_to_json(self):
        obj = tail_gap_bound_check([3.0, 3.0, 0.0], k=2).to_json()
        assert set(obj) == {"epsilon", "delta", "bound", "holds"}
        assert obj["holds"] is True


class TestAttentionMassPerToken:
    def test_single_head_identity(self):
        head = [[0.2, 0.8], [0.6, 0.4]]
        np.testing.assert_allclose(attention_mass_per_token([head], position=1), [0.6, 0.4])

    def test_two_heads_average(self):
        heads = [[[1.0, 0.0]], [[0.0, 1.0]]]
        np.testing.assert_allclose(attention_mass_per_token(heads, position=0), [0.5, 0.5])

    def test_preserves_row_normalization(self):
        rng = np.random.default_rng(4)
        heads = [softmax(rng.standard_normal(6))[None, :] for _ in range(5)]
        mass = attention_mass_per_token(np.stack(heads), position=0)
        assert mass.sum() == pytest.approx(1.0, abs=1e-12)

    def test_ragged_heads_rejected(self):
        with pytest.raises(DimensionMismatchError):
            attention_mass_per_token([[[1.0, 0.0]], [[1.0, 0.0, 0.0]]], position=0)

    def test_position_out_of_range(self):
        with pytest.raises(KOutOfRangeError):
            attention_mass_per_token([[[1.0, 0.0]]], position=1)
