"""Exact t-SNE for small point sets.

Dense O(N^2) implementation: Gaussian input affinities with per-point
bandwidths found by binary search on perplexity, symmetrized joint
probabilities, Student-t (1 d.o.f.) output affinities, and plain
momentum gradient descent with an early-exaggeration phase.  Intended
for reducing a few dozen high-dimensional vectors to 3-D; no tree
approximations.
"""

from __future__ import annotations

import numpy as np

# Entropy tolerance for the bandwidth binary search.
_ENTROPY_TOL = 1e-5
# Hard cap on binary-search steps per point; exceeding it is an error.
_MAX_SEARCH_STEPS = 64

_EPS = np.finfo(np.float64).tiny


class BandwidthSearchError(RuntimeError):
    """Raised when the perplexity binary search fails to converge for a point."""

    def __init__(self, point_index: int, steps: int):
        self.point_index = point_index
        super().__init__(
            f"bandwidth binary search for point {point_index} did not reach "
            f"entropy tolerance {_ENTROPY_TOL} within {steps} iterations"
        )


def _squared_distances(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def _entropy_and_probs(d2_row: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    """Shannon entropy (nats) and conditional probabilities for one precision."""
    p = np.exp(-d2_row * beta)
    total = p.sum()
    if total <= 0.0:
        return 0.0, np.zeros_like(p)
    p /= total
    # H = log(sum exp(-beta d)) + beta * E[d]
    entropy = np.log(total) + beta * float(np.dot(d2_row, p))
    return entropy, p


def conditional_probabilities(x: np.ndarray, perplexity: float) -> np.ndarray:
    """Row-stochastic conditional affinities p_{j|i} matching ``perplexity``.

    Each row's Gaussian bandwidth is found by binary search so the row
    entropy equals log(perplexity).  Raises :class:`BandwidthSearchError`
    naming the offending point if the search does not converge.
    """
    n = x.shape[0]
    d2 = _squared_distances(x)
    target = np.log(perplexity)
    p_cond = np.zeros((n, n))
    others = np.arange(n)
    for i in range(n):
        row = d2[i, others != i]
        beta, beta_min, beta_max = 1.0, -np.inf, np.inf
        entropy, p = _entropy_and_probs(row, beta)
        step = 0
        while abs(entropy - target) > _ENTROPY_TOL:
            step += 1
            if step > _MAX_SEARCH_STEPS:
                raise BandwidthSearchError(i, _MAX_SEARCH_STEPS)
            if entropy > target:
                beta_min = beta
                beta = beta * 2.0 if np.isinf(beta_max) else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if np.isinf(beta_min) else (beta + beta_min) / 2.0
            entropy, p = _entropy_and_probs(row, beta)
        p_cond[i, others != i] = p
    return p_cond


def joint_probabilities(x: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized joint affinities P with zero diagonal, summing to 1."""
    p_cond = conditional_probabilities(x, perplexity)
    p = (p_cond + p_cond.T) / (2.0 * x.shape[0])
    return np.maximum(p, 0.0)


def _student_t_weights(y: np.ndarray) -> np.ndarray:
    """Unnormalized heavy-tail output kernel w_ij = 1 / (1 + |y_i - y_j|^2)."""
    w = 1.0 / (1.0 + _squared_distances(y))
    np.fill_diagonal(w, 0.0)
    return w


def kl_divergence(p: np.ndarray, y: np.ndarray) -> float:
    """KL(P || Q) of the joint input affinities and the embedding affinities."""
    w = _student_t_weights(y)
    q = w / max(w.sum(), _EPS)
    mask = p > 0.0
    return float(np.sum(p[mask] * np.log(p[mask] / np.maximum(q[mask], _EPS))))


def kl_gradient(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Analytic gradient of KL(P || Q) with respect to the embedding.

    dC/dy_i = 4 * sum_j (p_ij - q_ij) * w_ij * (y_i - y_j)
    """
    w = _student_t_weights(y)
    q = w / max(w.sum(), _EPS)
    pqw = (p - q) * w
    # sum_j pqw_ij (y_i - y_j) = y_i * rowsum - pqw @ y
    return 4.0 * (y * pqw.sum(axis=1)[:, None] - pqw @ y)


def tsne_reduce(
    vectors: np.ndarray,
    n_components: int = 3,
    perplexity: float = 5.0,
    iterations: int = 1000,
    learning_rate: float = 100.0,
    momentum_start: float = 0.5,
    momentum_final: float = 0.8,
    momentum_switch: int = 250,
    exaggeration: float = 4.0,
    exaggeration_iters: int = 100,
    seed: int = 0,
) -> np.ndarray:
    """Embed ``vectors`` (N x D) into ``n_components`` dimensions.

    Deterministic given ``seed``: the only randomness is the Gaussian
    (variance 1e-4) initialization of the embedding.  The first
    ``exaggeration_iters`` steps multiply P by ``exaggeration``;
    momentum switches from ``momentum_start`` to ``momentum_final`` at
    iteration ``momentum_switch``.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a 2-D array of row vectors")
    n = x.shape[0]
    if not perplexity > 0:
        raise ValueError("perplexity must be positive")
    if not perplexity < n - 1:
        raise ValueError(
            f"perplexity {perplexity} requires more than {int(perplexity) + 1} points, got {n}"
        )
    if iterations < 1:
        raise ValueError("iterations must be >= 1")

    p = joint_probabilities(x, perplexity)

    rng = np.random.default_rng(seed)
    y = rng.normal(0.0, 1e-2, size=(n, n_components))
    update = np.zeros_like(y)
    for it in range(iterations):
        p_eff = p * exaggeration if it < exaggeration_iters else p
        grad = kl_gradient(p_eff, y)
        momentum = momentum_start if it < momentum_switch else momentum_final
        update = momentum * update - learning_rate * grad
        y = y + update
    return y
