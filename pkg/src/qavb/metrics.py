"""Clustering quality and annealing diagnostics.

Success rate is the fraction of points whose predicted label matches the
truth under the best injective relabeling, computed exactly as a maximum
weight assignment on the confusion matrix. The Bayes-optimal rate applies
the same matching to the decision rule that knows the generative parameters,
giving each dataset its own achievable ceiling.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import linalg
from .errors import ValidationError

# Eigenvalue gap below which a ground space is treated as degenerate and the
# overlap generalizes to the largest principal-angle cosine.
DEGENERACY_TOL = 1e-10


def _confusion(predicted: np.ndarray, truth: np.ndarray) -> np.ndarray:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise ValidationError(
            f"label arrays must be 1-D and equal length, got {predicted.shape} "
            f"and {truth.shape}"
        )
    if predicted.size == 0:
        raise ValidationError("label arrays are empty")
    _, t_idx = np.unique(truth, return_inverse=True)
    _, p_idx = np.unique(predicted, return_inverse=True)
    counts = np.zeros((t_idx.max() + 1, p_idx.max() + 1), dtype=np.int64)
    np.add.at(counts, (t_idx, p_idx), 1)
    return counts


def success_rate(predicted: np.ndarray, truth: np.ndarray) -> float:
    """Permutation-invariant clustering accuracy.

    Maximizes the matched fraction over injective maps between truth and
    predicted labels (exact, via optimal assignment on the confusion matrix).
    Label values are arbitrary; only their partition matters.
    """
    counts = _confusion(predicted, truth)
    rows, cols = linear_sum_assignment(counts, maximize=True)
    return float(counts[rows, cols].sum()) / float(np.asarray(truth).size)


def bayes_optimal_labels(
    points: np.ndarray,
    weights: np.ndarray,
    means: np.ndarray,
    covariances: np.ndarray,
) -> np.ndarray:
    """Posterior-mode labels (1-based) under the true generative parameters:
    argmax_k of ln w_k + ln N(y | mu_k, Sigma_k)."""
    points = np.asarray(points, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    means = np.asarray(means, dtype=np.float64)
    covariances = np.asarray(covariances, dtype=np.float64)
    if np.any(weights <= 0.0) or abs(weights.sum() - 1.0) > 1e-8:
        raise ValidationError("weights must be positive and sum to 1")
    c, d = means.shape
    log_scores = np.empty((points.shape[0], c))
    for k in range(c):
        chol = np.linalg.cholesky(covariances[k])
        half = np.linalg.solve(chol, (points - means[k]).T)  # (D, N)
        quad = np.sum(half * half, axis=0)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        log_scores[:, k] = (
            np.log(weights[k]) - 0.5 * (quad + logdet + d * np.log(2.0 * np.pi))
        )
    return np.argmax(log_scores, axis=1) + 1


def bayes_optimal_rate(dataset) -> float:
    """Success rate of the Bayes decision rule on a dataset that carries its
    generative parameters and truth labels."""
    if dataset.labels is None or dataset.weights is None:
        raise ValidationError(
            "Bayes-optimal rate needs truth labels and generative parameters"
        )
    labels = bayes_optimal_labels(
        dataset.points, dataset.weights, dataset.means, dataset.covariances
    )
    return success_rate(labels, dataset.labels)


def effective_cluster_count(alpha: np.ndarray, threshold: float = 0.01) -> int:
    """Number of components whose posterior-mean weight alpha_k / sum(alpha)
    exceeds ``threshold``."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(alpha <= 0.0):
        raise ValidationError("Dirichlet parameters must be strictly positive")
    return int(np.count_nonzero(alpha / alpha.sum() > threshold))


def _ground_space(values: np.ndarray, vectors: np.ndarray, tol: float) -> np.ndarray:
    span = values - values[0] < tol
    return vectors[:, span]


def subspace_overlap(u: np.ndarray, v: np.ndarray) -> float:
    """Largest cosine of a principal angle between the column spans of two
    orthonormal bases; reduces to |<u|v>| when both are single vectors."""
    sigma = np.linalg.svd(u.conj().T @ v, compute_uv=False)
    return float(min(sigma[0], 1.0)) if sigma.size else 0.0


def ground_state_overlap(
    prev_h: np.ndarray, next_h: np.ndarray, degeneracy_tol: float = DEGENERACY_TOL
) -> float:
    """Overlap between the ground states of two Hermitian matrices.

    For simple ground states this is |<g_prev | g_next>|; if either ground
    space is degenerate (eigenvalue gap below ``degeneracy_tol``), it is the
    largest singular value of the overlap matrix between the two ground
    spaces, which coincides with the simple case in one dimension.
    """
    prev_vals, prev_vecs = linalg.eigh(prev_h)
    next_vals, next_vecs = linalg.eigh(next_h)
    u = _ground_space(prev_vals, prev_vecs, degeneracy_tol)
    v = _ground_space(next_vals, next_vecs, degeneracy_tol)
    return subspace_overlap(u, v)
