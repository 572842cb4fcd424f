import numpy as np
import pytest

from prunerank.errors import ConfigError
from prunerank.linalg import cosine_similarity
from prunerank.pruning import maxsim_scores
from prunerank.linalg import similarity_matrix
from prunerank.synthetic import SyntheticConfig, generate_instance


class TestConfigValidation:
    def test_defaults_valid(self):
        cfg = SyntheticConfig()
        assert cfg.tokens_per_image == (20, 20)

    def test_planted_must_fit_smallest_image(self):
        with pytest.raises(ConfigError):
            SyntheticConfig(tokens_per_image=(3, 10), planted_per_image=4)

    def test_range_must_be_ordered(self):
        with pytest.raises(ConfigError):
            SyntheticConfig(tokens_per_image=(10, 3))

    def test_counts_must_be_positive(self):
        with pytest.raises(ConfigError):
            SyntheticConfig(n_images=0)

    def test_noise_must_be_nonnegative(self):
        with pytest.raises(ConfigError):
            SyntheticConfig(noise_scale=-0.1)


class TestGenerateInstance:
    def test_deterministic_per_seed(self):
        cfg = SyntheticConfig(seed=42, tokens_per_image=(5, 15))
        a = generate_instance(cfg)
        b = generate_instance(cfg)
        np.testing.assert_array_equal(a.query, b.query)
        assert a.relevant_image == b.relevant_image
        assert a.planted == b.planted
        for left, right in zip(a.images, b.images):
            np.testing.assert_array_equal(left, right)

    def test_different_seeds_differ(self):
        a = generate_instance(SyntheticConfig(seed=0))
        b = generate_instance(SyntheticConfig(seed=1))
        assert not np.array_equal(a.query, b.query)

    def test_shapes_match_config(self):
        cfg = SyntheticConfig(n_images=5, tokens_per_image=(4, 9), embed_dim=7, n_query_tokens=3)
        inst = generate_instance(cfg)
        assert inst.query.shape == (3, 7)
        assert len(inst.images) == 5
        for image in inst.images:
            assert 4 <= image.shape[0] <= 9
            assert image.shape[1] == 7

    def test_zero_noise_plants_exact_query_rows(self):
        cfg = SyntheticConfig(seed=7, noise_scale=0.0, planted_per_image=2, n_query_tokens=3)
        inst = generate_instance(cfg)
        image = inst.images[inst.relevant_image]
        for pos in inst.planted[inst.relevant_image]:
            best = max(cosine_similarity(image[pos], q) for q in inst.query)
            assert best == pytest.approx(1.0, abs=1e-12)

    def test_only_relevant_image_has_planted_tokens(self):
        inst = generate_instance(SyntheticConfig(seed=3, n_images=6))
        assert set(inst.planted) == {inst.relevant_image}

    def test_planted_scores_dominate_noise(self):
        # At noise 0.05 and dim 64 the planted tokens should clear the 99th
        # percentile of every non-planted max-similarity score.
        cfg = SyntheticConfig(
            n_images=1,
            tokens_per_image=(20, 20),
            embed_dim=64,
            n_query_tokens=4,
            planted_per_image=1,
            noise_scale=0.05,
        )
        planted_scores, background = [], []
        for seed in range(1000):
            inst = generate_instance(SyntheticConfig(**{**cfg.__dict__, "seed": seed}))
            image = inst.images[inst.relevant_image]
            scores = maxsim_scores(similarity_matrix(inst.query, image))
            planted = set(inst.planted[inst.relevant_image])
            for j, score in enumerate(scores):
                (planted_scores if j in planted else background).append(score)
        threshold = np.percentile(background, 99)
        assert min(planted_scores) > threshold

    def test_external_query_used_verbatim(self):
        cfg = SyntheticConfig(seed=11, n_query_tokens=2, embed_dim=4)
        query = np.arange(8, dtype=float).reshape(2, 4) + 1.0
        inst = generate_instance(cfg, query=query)
        np.testing.assert_array_equal(inst.query, query)

    def test_external_query_shape_checked(self):
        with pytest.raises(ConfigError):
            generate_instance(SyntheticConfig(n_query_tokens=2, embed_dim=4), query=np.ones((3, 4)))
