import numpy as np
import pytest

from furnish.tsne import (
    BandwidthSearchError,
    conditional_probabilities,
    joint_probabilities,
    kl_divergence,
    kl_gradient,
    tsne_reduce,
)


def test_too_few_points_for_perplexity():
    points = np.random.default_rng(0).normal(size=(2, 8))
    with pytest.raises(ValueError, match="perplexity"):
        tsne_reduce(points, perplexity=5.0)


def test_conditional_rows_hit_target_entropy():
    x = np.random.default_rng(3).normal(size=(20, 16))
    p = conditional_probabilities(x, perplexity=6.0)
    assert p.shape == (20, 20)
    assert np.allclose(p.sum(axis=1), 1.0)
    assert np.all(np.diag(p) == 0.0)
    for i in range(20):
        row = p[i][p[i] > 0]
        entropy = -np.sum(row * np.log(row))
        assert abs(entropy - np.log(6.0)) < 1e-4


def test_joint_probabilities_symmetric_and_normalized():
    x = np.random.default_rng(4).normal(size=(12, 10))
    p = joint_probabilities(x, perplexity=4.0)
    assert np.allclose(p, p.T)
    assert np.isclose(p.sum(), 1.0)


def test_bandwidth_search_error_names_the_point():
    x = np.zeros((10, 5))  # all-identical points: entropy cannot drop to the target
    with pytest.raises(BandwidthSearchError, match="point 0"):
        conditional_probabilities(x, perplexity=3.0)


def test_gradient_matches_central_finite_differences():
    # Oracle: perturb each embedding coordinate by +-eps and difference the KL.
    rng = np.random.default_rng(11)
    x = rng.normal(size=(10, 12))
    p = joint_probabilities(x, perplexity=4.0)
    y = rng.normal(size=(10, 3))
    analytic = kl_gradient(p, y)

    eps = 1e-6
    numeric = np.zeros_like(y)
    for i in range(y.shape[0]):
        for j in range(y.shape[1]):
            plus = y.copy()
            plus[i, j] += eps
            minus = y.copy()
            minus[i, j] -= eps
            numeric[i, j] = (kl_divergence(p, plus) - kl_divergence(p, minus)) / (2 * eps)

    rel = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
    assert rel < 1e-4


def test_final_kl_below_initial_kl(embedding_table):
    p = joint_probabilities(embedding_table.vectors, perplexity=5.0)
    y_init = np.random.default_rng(0).normal(0.0, 1e-2, size=(len(embedding_table), 3))
    y_final = tsne_reduce(embedding_table.vectors, seed=0)
    assert kl_divergence(p, y_final) < kl_divergence(p, y_init)


def test_deterministic_given_seed(embedding_table):
    a = tsne_reduce(embedding_table.vectors, iterations=50, seed=7)
    b = tsne_reduce(embedding_table.vectors, iterations=50, seed=7)
    assert np.array_equal(a, b)
    c = tsne_reduce(embedding_table.vectors, iterations=50, seed=8)
    assert not np.array_equal(a, c)
