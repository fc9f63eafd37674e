"""Conjugate Gaussian-mixture machinery.

The mixture carries a Dirichlet posterior over weights and one
Normal-Wishart posterior per component (mean conditioned on precision).
This module provides the expected assignment energies under that posterior,
responsibility-weighted sufficient statistics, and the tempered conjugate
hyperparameter update used by all three solvers: the effective count of each
component is scaled by w = beta * s_cl before being added to the prior, so
w = 1 is textbook variational Bayes, w = beta is deterministic annealing,
and w = 0 recovers the prior exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gammaln

from .errors import DegeneratePosteriorError, ValidationError

# A component with responsibility mass below this is treated as empty: its
# weighted mean and scatter are defined as zero so the update degrades to
# prior recovery instead of dividing by ~0.
EMPTY_COMPONENT_EPS = 1e-12

# Expected log-determinants are undefined at nu = D - 1; anything within this
# margin of the boundary counts as degenerate.
NU_MARGIN = 1e-8

_LOG_2PI = float(np.log(2.0 * np.pi))


def _as_batch_spd(w: np.ndarray, dim: int, name: str) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 3 or w.shape[1:] != (dim, dim):
        raise ValidationError(f"{name} must have shape (K, {dim}, {dim}), got {w.shape}")
    if np.max(np.abs(w - np.swapaxes(w, 1, 2))) > 1e-10 * max(1.0, np.max(np.abs(w))):
        raise ValidationError(f"{name} matrices must be symmetric")
    return w


def _chol_batch(w: np.ndarray, name: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(w)
    except np.linalg.LinAlgError as exc:
        raise ValidationError(f"{name} matrices must be positive definite") from exc


@dataclass(frozen=True)
class PriorHyperParams:
    """Prior for the mixture: Dirichlet pseudo-counts ``alpha``, and per
    component the Normal-Wishart quadruple (mean ``m``, mean-precision scale
    ``gamma``, scale matrix ``w``, degrees of freedom ``nu``).

    ``nu`` may sit exactly at the boundary D - 1 (the default); expected
    energies are then undefined until data mass has been absorbed.
    """

    alpha: np.ndarray
    m: np.ndarray
    gamma: np.ndarray
    w: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64)
        m = np.asarray(self.m, dtype=np.float64)
        gamma = np.asarray(self.gamma, dtype=np.float64)
        nu = np.asarray(self.nu, dtype=np.float64)
        if m.ndim != 2:
            raise ValidationError(f"component means must be (K, D), got {m.shape}")
        k, d = m.shape
        for name, arr in (("alpha", alpha), ("gamma", gamma), ("nu", nu)):
            if arr.shape != (k,):
                raise ValidationError(f"{name} must have shape ({k},), got {arr.shape}")
        w = _as_batch_spd(self.w, d, "scale")
        if w.shape[0] != k:
            raise ValidationError("scale matrix count does not match component count")
        _chol_batch(w, "scale")
        if np.any(alpha <= 0.0) or np.any(gamma <= 0.0):
            raise ValidationError("alpha and gamma must be strictly positive")
        if np.any(nu < d - 1.0):
            raise ValidationError(f"nu must be >= D - 1 = {d - 1}")
        for name, arr in (("alpha", alpha), ("m", m), ("gamma", gamma), ("nu", nu)):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "w", w)

    @property
    def n_components(self) -> int:
        return self.m.shape[0]

    @property
    def dim(self) -> int:
        return self.m.shape[1]


@dataclass(frozen=True)
class ThetaPosterior(PriorHyperParams):
    """Variational posterior over mixture parameters; same shape as the
    prior (conjugacy), produced by :func:`update_theta`."""


@dataclass(frozen=True)
class SufficientStats:
    """Responsibility-weighted statistics: per-component mass ``counts``,
    weighted means, and weighted scatter matrices about those means."""

    counts: np.ndarray
    means: np.ndarray
    scatters: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.float64)
        means = np.asarray(self.means, dtype=np.float64)
        scatters = np.asarray(self.scatters, dtype=np.float64)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "scatters", scatters)


def default_prior(data: np.ndarray, n_components: int) -> PriorHyperParams:
    """Data-scaled default prior.

    Unit Dirichlet pseudo-counts and unit mean-precision scale; component
    means centred on the sample mean; scale matrix set to the inverse of the
    mean per-dimension sample variance times identity; degrees of freedom at
    the boundary D - 1, so an unused component recovers the prior exactly.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValidationError(f"data must be (N >= 2, D), got {data.shape}")
    k = int(n_components)
    if k < 1:
        raise ValidationError(f"need at least one component, got {k}")
    n, d = data.shape
    centre = data.mean(axis=0)
    mean_var = float(np.mean(data.var(axis=0)))
    if mean_var <= 0.0:
        raise ValidationError("data has zero variance; cannot scale the prior")
    return PriorHyperParams(
        alpha=np.ones(k),
        m=np.tile(centre, (k, 1)),
        gamma=np.ones(k),
        w=np.tile(np.eye(d) / mean_var, (k, 1, 1)),
        nu=np.full(k, d - 1.0),
    )


def expected_log_pi(alpha: np.ndarray) -> np.ndarray:
    """E[ln pi_k] under Dirichlet(alpha): digamma(alpha_k) - digamma(sum)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(alpha <= 0.0):
        raise ValidationError("Dirichlet parameters must be strictly positive")
    return digamma(alpha) - digamma(alpha.sum())


def expected_log_det_precision(nu: np.ndarray, w: np.ndarray) -> np.ndarray:
    """E[ln |Lambda_k|] under Wishart(w_k, nu_k):
    sum_d digamma((nu + 1 - d)/2) + D ln 2 + ln |w|, d = 1..D."""
    nu = np.asarray(nu, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    d = w.shape[-1]
    if np.any(nu <= d - 1.0 + NU_MARGIN):
        raise DegeneratePosteriorError(
            f"expected log-determinant undefined: min nu = {nu.min():.12g} "
            f"<= D - 1 + {NU_MARGIN:g}"
        )
    args = (nu[:, None] + 1.0 - np.arange(1, d + 1)[None, :]) / 2.0
    chol = _chol_batch(w, "scale")
    logdet = 2.0 * np.sum(np.log(np.einsum("kii->ki", chol)), axis=1)
    return digamma(args).sum(axis=1) + d * np.log(2.0) + logdet


def expected_energies(data: np.ndarray, post: PriorHyperParams) -> np.ndarray:
    """Expected assignment energies E_q[-ln(pi_k N(y_i | mu_k, Lambda_k^{-1}))].

    Returns an (N, K) array:
        -E[ln pi_k] - (1/2) E[ln |Lambda_k|] + (D/2) ln(2 pi)
        + (1/2) (D / gamma_k + nu_k (y_i - m_k)^T w_k (y_i - m_k)).

    Raises :class:`DegeneratePosteriorError` if any component sits within
    ``NU_MARGIN`` of the degrees-of-freedom boundary.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != post.dim:
        raise ValidationError(
            f"data shape {data.shape} incompatible with posterior dim {post.dim}"
        )
    d = post.dim
    elog_pi = expected_log_pi(post.alpha)
    elog_det = expected_log_det_precision(post.nu, post.w)
    dev = data[:, None, :] - post.m[None, :, :]  # (N, K, D)
    quad = np.einsum("nkd,kde,nke->nk", dev, post.w, dev)
    energies = (
        -elog_pi[None, :]
        - 0.5 * elog_det[None, :]
        + 0.5 * d * _LOG_2PI
        + 0.5 * (d / post.gamma[None, :] + post.nu[None, :] * quad)
    )
    if not np.all(np.isfinite(energies)):
        raise DegeneratePosteriorError("non-finite expected energies")
    return energies


def accumulate_stats(resp: np.ndarray, data: np.ndarray) -> SufficientStats:
    """Responsibility-weighted counts, means, and scatters.

    ``resp`` rows must be nonnegative and sum to 1 within 1e-8. Components
    with mass below ``EMPTY_COMPONENT_EPS`` get zero mean and scatter.
    """
    resp = np.asarray(resp, dtype=np.float64)
    data = np.asarray(data, dtype=np.float64)
    if resp.ndim != 2 or data.ndim != 2 or resp.shape[0] != data.shape[0]:
        raise ValidationError(
            f"responsibilities {resp.shape} and data {data.shape} do not align"
        )
    if np.any(resp < -1e-12):
        raise ValidationError("responsibilities must be nonnegative")
    row_sums = resp.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-8):
        worst = float(np.max(np.abs(row_sums - 1.0)))
        raise ValidationError(f"responsibility rows sum to 1 +/- {worst:.3e} (> 1e-8)")
    n, d = data.shape
    k = resp.shape[1]
    counts = resp.sum(axis=0)
    means = np.zeros((k, d))
    scatters = np.zeros((k, d, d))
    occupied = counts >= EMPTY_COMPONENT_EPS
    means[occupied] = (resp.T[occupied] @ data) / counts[occupied, None]
    for j in np.flatnonzero(occupied):
        dev = data - means[j]
        scatters[j] = (resp[:, j] * dev.T) @ dev / counts[j]
    return SufficientStats(counts=counts, means=means, scatters=scatters)


def update_theta(
    stats: SufficientStats,
    prior: PriorHyperParams,
    beta: float,
    s_cl: float,
) -> ThetaPosterior:
    """Tempered conjugate update with effective counts w * N_k, w = beta * s_cl.

    At w = 1 this is the standard variational posterior; at w = 0 every
    component recovers the prior exactly (bitwise, since the increments are
    all zero).
    """
    if beta <= 0.0:
        raise ValidationError(f"beta must be positive, got {beta}")
    if not 0.0 <= s_cl <= 1.0 + 1e-12:
        raise ValidationError(f"classical weight s_cl must lie in [0, 1], got {s_cl}")
    counts = np.asarray(stats.counts, dtype=np.float64)
    if counts.shape != (prior.n_components,):
        raise ValidationError("statistics do not match the prior's component count")
    if np.any(counts < 0.0):
        raise ValidationError("component masses must be nonnegative")
    w = beta * s_cl
    wn = w * counts
    alpha = prior.alpha + wn
    gamma = prior.gamma + wn
    nu = prior.nu + wn
    m = (prior.gamma[:, None] * prior.m + wn[:, None] * stats.means) / gamma[:, None]
    dev = stats.means - prior.m  # (K, D)
    coeff = prior.gamma * wn / gamma
    w_inv_prior = _spd_inverse(prior.w)
    w_inv = (
        w_inv_prior
        + wn[:, None, None] * stats.scatters
        + coeff[:, None, None] * np.einsum("kd,ke->kde", dev, dev)
    )
    w_post = _spd_inverse(w_inv)
    # Components with zero effective mass recover the prior exactly; copy the
    # prior fields so recovery is bitwise rather than up to inversion roundoff.
    frozen = wn == 0.0
    if np.any(frozen):
        m[frozen] = prior.m[frozen]
        w_post[frozen] = prior.w[frozen]
    return ThetaPosterior(alpha=alpha, m=m, gamma=gamma, w=w_post, nu=nu)


def _spd_inverse(mats: np.ndarray) -> np.ndarray:
    """Inverse of a batch of SPD matrices via Cholesky."""
    mats = np.asarray(mats, dtype=np.float64)
    chol = _chol_batch(mats, "posterior scale")
    eye = np.broadcast_to(np.eye(mats.shape[-1]), mats.shape)
    # L L^T X = I  =>  X = L^-T L^-1
    inv_chol = np.linalg.solve(chol, eye.copy())
    out = np.swapaxes(inv_chol, -1, -2) @ inv_chol
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def expected_mixture_weights(alpha: np.ndarray) -> np.ndarray:
    """Posterior-mean mixture weights alpha_k / sum(alpha)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    return alpha / alpha.sum()


def dirichlet_kl(alpha: np.ndarray, alpha0: np.ndarray) -> float:
    """KL(Dirichlet(alpha) || Dirichlet(alpha0))."""
    alpha = np.asarray(alpha, dtype=np.float64)
    alpha0 = np.asarray(alpha0, dtype=np.float64)
    if np.any(alpha <= 0.0) or np.any(alpha0 <= 0.0):
        raise ValidationError("Dirichlet parameters must be strictly positive")
    total = alpha.sum()
    return float(
        gammaln(total)
        - gammaln(alpha).sum()
        - gammaln(alpha0.sum())
        + gammaln(alpha0).sum()
        + np.sum((alpha - alpha0) * (digamma(alpha) - digamma(total)))
    )


def _wishart_log_normalizer(nu: np.ndarray, w: np.ndarray) -> np.ndarray:
    """ln B(w, nu): the negative log normalizing constant of a Wishart."""
    d = w.shape[-1]
    chol = _chol_batch(w, "scale")
    logdet = 2.0 * np.sum(np.log(np.einsum("kii->ki", chol)), axis=1)
    args = (nu[:, None] + 1.0 - np.arange(1, d + 1)[None, :]) / 2.0
    return (
        -0.5 * nu * logdet
        - 0.5 * nu * d * np.log(2.0)
        - 0.25 * d * (d - 1) * np.log(np.pi)
        - gammaln(args).sum(axis=1)
    )


def normal_wishart_divergence(
    post: PriorHyperParams, prior: PriorHyperParams
) -> np.ndarray:
    """Per-component divergence E_q[ln q - ln p] between Normal-Wishart
    distributions (mean conditioned on precision).

    For prior components with nu strictly above D - 1 this is the exact KL.
    For prior components sitting at the D - 1 boundary, whose Wishart
    log-normalizer is infinite, the prior is treated as unnormalized (the
    constant is dropped); differences of the result across posteriors remain
    exact, which is all the variational objective needs.
    """
    d = post.dim
    elog_det = expected_log_det_precision(post.nu, post.w)  # raises at boundary
    dev = post.m - prior.m
    quad = np.einsum("kd,kde,ke->k", dev, post.w, dev)
    kl_normal = 0.5 * (
        d * np.log(post.gamma / prior.gamma)
        - d
        + prior.gamma * (d / post.gamma + post.nu * quad)
    )
    prior_w_inv = _spd_inverse(prior.w)
    cross_trace = np.einsum("kde,ked->k", prior_w_inv, post.w)
    wishart_part = (
        _wishart_log_normalizer(post.nu, post.w)
        + 0.5 * (post.nu - prior.nu) * elog_det
        - 0.5 * post.nu * d
        + 0.5 * post.nu * cross_trace
    )
    proper = prior.nu > d - 1.0 + NU_MARGIN
    if np.any(proper):
        idx = np.flatnonzero(proper)
        wishart_part[idx] -= _wishart_log_normalizer(prior.nu[idx], prior.w[idx])
    return kl_normal + wishart_part


def theta_divergence(post: PriorHyperParams, prior: PriorHyperParams) -> float:
    """Divergence of the full mixture-parameter posterior from the prior:
    Dirichlet KL plus the per-component Normal-Wishart divergences.

    Components whose hyperparameters equal the prior's bitwise contribute
    exactly zero; this is the only state reachable at the nu = D - 1
    boundary (exact prior recovery), where the formulas diverge termwise.
    """
    if post.n_components != prior.n_components or post.dim != prior.dim:
        raise ValidationError("posterior and prior shapes do not match")
    total = dirichlet_kl(post.alpha, prior.alpha)
    live = post.nu > prior.dim - 1.0 + NU_MARGIN
    if not np.all(live):
        frozen = ~live
        if not _components_equal(post, prior, frozen):
            raise DegeneratePosteriorError(
                "posterior at the degrees-of-freedom boundary differs from the prior"
            )
    if np.any(live):
        live_idx = np.flatnonzero(live)
        total += float(
            np.sum(
                normal_wishart_divergence(
                    component_slice(post, live_idx), component_slice(prior, live_idx)
                )
            )
        )
    return total


def component_slice(hp: PriorHyperParams, idx: np.ndarray) -> PriorHyperParams:
    return PriorHyperParams(
        alpha=hp.alpha[idx], m=hp.m[idx], gamma=hp.gamma[idx], w=hp.w[idx], nu=hp.nu[idx]
    )


def _components_equal(
    post: PriorHyperParams, prior: PriorHyperParams, mask: np.ndarray
) -> bool:
    return (
        np.array_equal(post.nu[mask], prior.nu[mask])
        and np.array_equal(post.gamma[mask], prior.gamma[mask])
        and np.array_equal(post.m[mask], prior.m[mask])
        and np.array_equal(post.w[mask], prior.w[mask])
    )
