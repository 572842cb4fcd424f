import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logsumexp

from prunerank.errors import EmptyInputError, InvalidRatioError, KOutOfRangeError
from prunerank.linalg import similarity_matrix
from prunerank.pruning import (
    PruneScores,
    keep_count,
    lse_scores,
    maxsim_scores,
    prune_images,
    random_prune,
    round_half_away_from_zero,
    select_topk_preserve_order,
    topk_stability_check,
)


class TestMaxsimScores:
    def test_columnwise_max(self):
        np.testing.assert_allclose(
            maxsim_scores([[0.1, 0.8, 0.3], [0.4, 0.2, 0.9]]), [0.4, 0.8, 0.9]
        )

    def test_single_row_identity(self):
        row = [0.2, -0.5, 0.9]
        np.testing.assert_allclose(maxsim_scores([row]), row)

    def test_all_zeros(self):
        np.testing.assert_allclose(maxsim_scores(np.zeros((2, 3))), [0.0, 0.0, 0.0])

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            maxsim_scores(np.zeros((0, 3)))
        with pytest.raises(EmptyInputError):
            maxsim_scores(np.zeros((2, 0)))


class TestLseScores:
    def test_equal_scores_add_log_count(self):
        np.testing.assert_allclose(lse_scores([[0.0], [0.0]]), [math.log(2.0)], atol=1e-12)

    def test_single_row_is_identity(self):
        np.testing.assert_allclose(lse_scores([[5.0]]), [5.0], atol=0)

    def test_derived_log_e_plus_one(self):
        np.testing.assert_allclose(
            lse_scores([[1.0], [0.0]]), [math.log(math.e + 1.0)], atol=1e-12
        )

    def test_matches_scipy_logsumexp(self):
        rng = np.random.default_rng(0)
        sims = rng.uniform(-1, 1, size=(7, 13))
        np.testing.assert_allclose(lse_scores(sims), logsumexp(sims, axis=0), atol=1e-12)

    def test_no_overflow_on_large_scores(self):
        out = lse_scores([[1000.0], [999.0]])
        assert np.isfinite(out).all()


class TestSandwichProperty:
    @given(st.integers(0, 2**32 - 1), st.integers(1, 16), st.integers(1, 64))
    @settings(max_examples=150, deadline=None)
    def test_max_le_lse_le_max_plus_log(self, seed, n_query, n_tokens):
        rng = np.random.default_rng(seed)
        sims = rng.uniform(-1, 1, size=(n_query, n_tokens))
        scores = PruneScores.from_similarity(sims)
        assert np.all(scores.max_sim <= scores.lse + 1e-9)
        assert np.all(scores.lse <= scores.max_sim + math.log(n_query) + 1e-9)

    def test_upper_bound_tight_iff_column_constant(self):
        sims = np.array([[0.4, 0.1], [0.4, 0.8]])
        scores = PruneScores.from_similarity(sims)
        assert scores.lse[0] == pytest.approx(scores.max_sim[0] + math.log(2), abs=1e-12)
        assert scores.lse[1] < scores.max_sim[1] + math.log(2) - 1e-6


class TestKeepCount:
    @pytest.mark.parametrize(
        "rho,n,expected",
        [(0.1, 3, 1), (0.5, 4, 2), (0.5, 7, 4), (1.0, 9, 9), (0.01, 50, 1), (0.25, 10, 3)],
    )
    def test_examples(self, rho, n, expected):
        assert keep_count(rho, n) == expected

    def test_half_ties_round_away_from_zero(self):
        # round(3.5) -> 4, unlike banker's rounding.
        assert round_half_away_from_zero(3.5) == 4
        assert round_half_away_from_zero(2.5) == 3
        assert round_half_away_from_zero(-2.5) == -3

    @pytest.mark.parametrize("rho", [0.0, -0.1, 1.2])
    def test_invalid_ratio(self, rho):
        with pytest.raises(InvalidRatioError):
            keep_count(rho, 5)

    def test_bad_token_count(self):
        with pytest.raises(EmptyInputError):
            keep_count(0.5, 0)

    @given(st.floats(0.001, 1.0), st.integers(1, 500))
    @settings(max_examples=200, deadline=None)
    def test_always_in_range(self, rho, n):
        k = keep_count(rho, n)
        assert 1 <= k <= n


class TestSelectTopK:
    def test_basic(self):
        np.testing.assert_array_equal(
            select_topk_preserve_order([0.9, 0.1, 0.8, 0.2], 2), [0, 2]
        )

    def test_full_selection_is_identity(self):
        np.testing.assert_array_equal(select_topk_preserve_order([0.3, 0.1, 0.2], 3), [0, 1, 2])

    def test_tie_breaks_to_lower_index(self):
        np.testing.assert_array_equal(select_topk_preserve_order([0.5, 0.5, 0.1], 1), [0])

    def test_output_ascending(self):
        rng = np.random.default_rng(1)
        scores = rng.standard_normal(30)
        kept = select_topk_preserve_order(scores, 11)
        assert np.all(np.diff(kept) > 0)

    def test_kept_dominate_dropped(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            scores = rng.standard_normal(20)
            kept = select_topk_preserve_order(scores, 7)
            dropped = np.setdiff1d(np.arange(20), kept)
            assert scores[kept].min() >= scores[dropped].max()

    @pytest.mark.parametrize("k", [0, 5, -1])
    def test_k_out_of_range(self, k):
        with pytest.raises(KOutOfRangeError):
            select_topk_preserve_order([1.0, 2.0, 3.0], k)


class TestRandomPrune:
    def test_keep_all(self):
        np.testing.assert_array_equal(random_prune(5, 5, seed=123), [0, 1, 2, 3, 4])

    def test_deterministic_per_seed(self):
        np.testing.assert_array_equal(random_prune(5, 1, seed=7), random_prune(5, 1, seed=7))

    def test_distinct_ascending(self):
        kept = random_prune(50, 20, seed=9)
        assert np.all(np.diff(kept) > 0)
        assert kept.min() >= 0 and kept.max() < 50

    def test_uniform_marginals(self):
        counts = np.zeros(100)
        trials = 10000
        for seed in range(trials):
            counts[random_prune(100, 50, seed=seed)] += 1
        freq = counts / trials
        assert np.all(np.abs(freq - 0.5) < 0.02)

    def test_k_out_of_range(self):
        with pytest.raises(KOutOfRangeError):
            random_prune(5, 6, seed=0)


class TestTopKStability:
    def test_big_gap_guarantees_equality(self):
        max_sim = [3.0, 3.0, 0.0]
        lse = [3.0 + math.log(2), 3.0 + math.log(2), math.log(2)]
        report = topk_stability_check(max_sim, lse, k=2, n_query=2)
        assert report.gap == pytest.approx(3.0)
        assert report.guaranteed_stable
        assert report.sets_equal

    def test_zero_gap_not_guaranteed(self):
        report = topk_stability_check([1.0, 1.0, 1.0], [1.5, 1.5, 1.5], k=2, n_query=2)
        assert report.gap == 0.0
        assert not report.guaranteed_stable

    def test_k_must_leave_a_boundary(self):
        with pytest.raises(KOutOfRangeError):
            topk_stability_check([1.0, 2.0], [1.0, 2.0], k=2, n_query=1)

    def test_monte_carlo_guarantee_never_violated(self):
        rng = np.random.default_rng(10)
        premise_fired = 0
        for _ in range(2000):
            n_query = int(rng.integers(1, 6))
            n_tokens = int(rng.integers(2, 40))
            k = int(rng.integers(1, n_tokens))
            if rng.random() < 0.5:
                sims = rng.uniform(-1, 1, size=(n_query, n_tokens))
            else:
                sims = rng.uniform(-1.0, -0.95, size=(n_query, n_tokens))
                sims[:, :k] = rng.uniform(0.95, 1.0, size=(n_query, k))
            scores = PruneScores.from_similarity(sims)
            report = topk_stability_check(scores.max_sim, scores.lse, k, n_query)
            if report.guaranteed_stable:
                premise_fired += 1
                assert report.sets_equal
        assert premise_fired > 100


class TestPruneImages:
    def test_keep_all_at_unit_ratio(self):
        rng = np.random.default_rng(11)
        query = rng.standard_normal((3, 8))
        images = [rng.standard_normal((n, 8)) for n in (5, 9, 2)]
        for result, image in zip(prune_images(query, images, rho=1.0), images):
            assert result.kept_indices == tuple(range(image.shape[0]))
            assert result.margin is None

    def test_planted_token_always_kept(self):
        rng = np.random.default_rng(12)
        query = rng.standard_normal((4, 16))
        image = rng.standard_normal((30, 16))
        image[17] = query[2]  # exact copy scores cosine 1.0, the global max
        for rho in (0.05, 0.1, 0.3, 0.7):
            (result,) = prune_images(query, [image], rho)
            assert 17 in result.kept_indices

    def test_identical_images_get_identical_results(self):
        rng = np.random.default_rng(13)
        query = rng.standard_normal((2, 6))
        image = rng.standard_normal((12, 6))
        first, second = prune_images(query, [image, image.copy()], rho=0.4)
        assert first == second

    def test_keep_count_rule_and_margin(self):
        rng = np.random.default_rng(14)
        query = rng.standard_normal((2, 6))
        image = rng.standard_normal((10, 6))
        (result,) = prune_images(query, [image], rho=0.25)
        assert result.keep_count == 3 == len(result.kept_indices)
        scores = np.sort(maxsim_scores(similarity_matrix(query, image)))[::-1]
        assert result.margin == pytest.approx(scores[2] - scores[3])

    def test_query_scaling_leaves_results_unchanged(self):
        rng = np.random.default_rng(15)
        query = rng.standard_normal((3, 7))
        images = [rng.standard_normal((15, 7)) for _ in range(3)]
        baseline = prune_images(query, images, rho=0.4)
        for alpha in (0.5, 2.0, 10.0):
            scaled = prune_images(alpha * query, images, rho=0.4)
            assert [r.kept_indices for r in scaled] == [r.kept_indices for r in baseline]

    def test_json_round_trip_shape(self):
        rng = np.random.default_rng(16)
        (result,) = prune_images(rng.standard_normal((2, 4)), [rng.standard_normal((6, 4))], 0.5)
        obj = result.to_json()
        assert set(obj) == {"kept_indices", "keep_count", "keep_ratio", "margin"}
        assert obj["keep_count"] == len(obj["kept_indices"]) == 3
