"""Annealed variational solvers for Gaussian mixtures.

One iteration is a coordinate-descent pair: the mixture-parameter posterior
is refreshed from the current hidden states (a tempered conjugate update with
weight beta_t * (1 - s_t)), then every point's hidden density matrix is
replaced by the Gibbs state of its effective Hamiltonian
beta_t * ((1 - s_t) * diag(energies_i) + s_t * H_hop). The classical solver
pins (beta, s) = (1, 0), deterministic annealing ramps beta with s = 0, and
the quantum-annealed solver ramps s down from s0 before cooling beta.

At fixed (beta, s) both half-updates are exact coordinate minimizers of the
variational objective, so the objective is non-increasing within a schedule
plateau.

Components whose effective mass w * N_k falls below the degeneracy margin
are rounded to zero mass before the parameter update: they recover the prior
exactly, acquire formally infinite assignment energies (the default prior
sits at the Wishart degrees-of-freedom boundary), and are therefore removed
from the live subspace of every effective Hamiltonian, which is the exact
limit of the Gibbs state as those energies grow. Such components keep zero
responsibility mass from then on.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from . import annealing, gmm, metrics, quantum
from .annealing import AnnealingSchedule
from .datasets import Dataset
from .errors import DegeneratePosteriorError, NumericalError, ValidationError
from .gmm import NU_MARGIN, PriorHyperParams, ThetaPosterior
from .linalg import SIGN_TOL

METHODS = ("vb", "davb", "qavb")
INITS = ("maximally-mixed", "seeded-random")


@dataclass(frozen=True)
class SolverConfig:
    """Which solver to run and how.

    ``schedule`` is ignored by the classical method (pinned at beta = 1,
    s = 0). ``max_extra_iters`` bounds the refinement iterations allowed
    beyond the schedule end while waiting for the hidden states to stop
    moving (max trace distance below ``conv_tol``).
    """

    method: str
    n_components: int
    schedule: AnnealingSchedule
    max_extra_iters: int = 200
    conv_tol: float = 1e-6
    seed: int = 0
    init: str = "maximally-mixed"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.init not in INITS:
            raise ValidationError(f"init must be one of {INITS}, got {self.init!r}")
        if self.n_components < 2:
            raise ValidationError(
                f"need at least 2 components, got {self.n_components}"
            )
        if self.max_extra_iters < 0:
            raise ValidationError("max_extra_iters must be nonnegative")
        if not self.conv_tol >= 0.0:
            raise ValidationError("conv_tol must be nonnegative")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValidationError(f"seed must be a nonnegative integer, got {self.seed}")
        if self.method == "qavb":
            annealing.validate_qavb_schedule(self.schedule)


@dataclass(frozen=True)
class IterationRecord:
    """Diagnostics of one update pair; ``t`` is the schedule index that
    produced the recorded state."""

    t: int
    beta: float
    s: float
    objective: float
    purity_mean: float
    purity_median: float
    overlap_median: float
    overlap_p05: float
    conv: float
    success_rate: float
    n_live: int


@dataclass
class RunResult:
    """Final state plus the per-iteration trajectory of a solver run."""

    method: str
    iterations_run: int
    converged: bool
    hidden: np.ndarray
    theta: ThetaPosterior
    labels: np.ndarray
    records: list[IterationRecord]
    overlap_qa_median: float
    overlap_qa_p05: float
    runtime_seconds: float

    def record_at(self, t: int) -> IterationRecord:
        for rec in self.records:
            if rec.t == t:
                return rec
        raise ValidationError(f"no record for iteration {t}")


class _EffHamEigen:
    """Eigensystem of the per-point effective Hamiltonian, restricted to the
    live component subspace, with helpers to embed ground states back into
    the full K-dimensional label space."""

    def __init__(
        self,
        kind: str,
        k_full: int,
        live: np.ndarray,
        vals: np.ndarray,
        vecs: np.ndarray | None = None,
        order: np.ndarray | None = None,
    ):
        self.kind = kind  # "diag" | "dense"
        self.k_full = k_full
        self.live = live
        self.vals = vals  # (N, K_live) ascending
        self.vecs = vecs  # dense: (N, K_live, K_live) columns sign-fixed
        self.order = order  # diag: (N, K_live) global component index by energy
        self._ground: np.ndarray | None = None

    def ground_vectors(self) -> np.ndarray:
        """(N, K) lowest-eigenvalue eigenvectors, zero on dead components."""
        if self._ground is None:
            n = self.vals.shape[0]
            g = np.zeros((n, self.k_full))
            if self.kind == "diag":
                g[np.arange(n), self.order[:, 0]] = 1.0
            else:
                g[:, self.live] = self.vecs[:, :, 0]
            self._ground = g
        return self._ground

    def degenerate_mask(self, tol: float) -> np.ndarray:
        n, kl = self.vals.shape
        if kl < 2:
            return np.zeros(n, dtype=bool)
        return self.vals[:, 1] - self.vals[:, 0] < tol

    def ground_basis(self, i: int, tol: float) -> np.ndarray:
        """(K, g) orthonormal basis of point i's ground space."""
        span = self.vals[i] - self.vals[i, 0] < tol
        basis = np.zeros((self.k_full, int(span.sum())))
        if self.kind == "diag":
            basis[self.order[i, span], np.arange(basis.shape[1])] = 1.0
        else:
            basis[self.live] = self.vecs[i][:, span]
        return basis


def _ground_overlaps(
    prev: _EffHamEigen, cur: _EffHamEigen, tol: float = metrics.DEGENERACY_TOL
) -> np.ndarray:
    """Per-point overlap between consecutive ground states; degenerate ground
    spaces fall back to the largest principal-angle cosine."""
    ov = np.abs(np.einsum("nk,nk->n", prev.ground_vectors(), cur.ground_vectors()))
    deg = prev.degenerate_mask(tol) | cur.degenerate_mask(tol)
    for i in np.flatnonzero(deg):
        ov[i] = metrics.subspace_overlap(prev.ground_basis(i, tol), cur.ground_basis(i, tol))
    return np.minimum(ov, 1.0)


def _fix_signs_batched(vecs: np.ndarray, tol: float = SIGN_TOL) -> np.ndarray:
    """Batched version of the eigenvector sign convention: per column, the
    first component with magnitude above ``tol`` is made positive."""
    mask = np.abs(vecs) > tol
    first = mask.argmax(axis=1)  # (N, K) first qualifying row per column
    lead = np.take_along_axis(vecs, first[:, None, :], axis=1)[:, 0, :]
    return vecs * np.where(lead < 0.0, -1.0, 1.0)[:, None, :]


class Solver:
    """Stateful iteration driver; :meth:`step` runs one update pair,
    :meth:`run` loops to the schedule end plus refinement."""

    def __init__(
        self,
        config: SolverConfig,
        data: np.ndarray,
        prior: PriorHyperParams | None = None,
        truth: np.ndarray | None = None,
        initial_hidden: np.ndarray | None = None,
    ):
        self.config = config
        data = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
        if data.ndim != 2 or data.shape[0] < 2:
            raise ValidationError(f"data must be (N >= 2, D), got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValidationError("data has non-finite entries")
        self.data = data
        self.n, self.dim = data.shape
        self.k = config.n_components
        self.prior = prior if prior is not None else gmm.default_prior(data, self.k)
        if self.prior.n_components != self.k or self.prior.dim != self.dim:
            raise ValidationError(
                f"prior shape ({self.prior.n_components}, {self.prior.dim}) does not "
                f"match K={self.k}, D={self.dim}"
            )
        if truth is not None:
            truth = np.asarray(truth)
            if truth.shape != (self.n,):
                raise ValidationError("truth labels must align with data")
        self.truth = truth
        self.h_hop = quantum.build_hopping_hamiltonian(self.k)
        if initial_hidden is not None:
            states = np.array(initial_hidden, dtype=np.float64)
            if states.shape != (self.n, self.k, self.k):
                raise ValidationError(
                    f"initial hidden states must be (N, K, K), got {states.shape}"
                )
            if quantum.density_defect(states) > 1e-8:
                raise ValidationError("initial hidden states are not density matrices")
        elif config.init == "seeded-random":
            rng = np.random.default_rng(config.seed)
            states = quantum.random_diagonal_states(self.n, self.k, rng)
        else:
            states = quantum.maximally_mixed_states(self.n, self.k)
        self._states = states
        self._resp_diag: np.ndarray | None = None  # set when states are diagonal
        self._eig_prev: _EffHamEigen | None = None
        self._qa_overlaps: list[np.ndarray] = []
        self.theta: ThetaPosterior | None = None
        self.records: list[IterationRecord] = []
        self.t = 0

    # -- schedule ---------------------------------------------------------

    def _schedule_at(self, t: int) -> tuple[float, float]:
        if self.config.method == "vb":
            return 1.0, 0.0
        if self.config.method == "davb":
            return annealing.davb_schedule_at(t, self.config.schedule)
        return annealing.schedule_at(t, self.config.schedule)

    @property
    def min_iters(self) -> int:
        return 0 if self.config.method == "vb" else self.config.schedule.tau2

    @property
    def hidden(self) -> np.ndarray:
        return self._states

    # -- one update pair --------------------------------------------------

    def step(self) -> IterationRecord:
        t = self.t
        beta, s = self._schedule_at(t)
        w_cl = beta * (1.0 - s)
        try:
            resp = quantum.responsibilities(self._states)
            stats = gmm.accumulate_stats(resp, self.data)
            if w_cl > 0.0:
                stats = _round_dead_components(stats, w_cl)
            theta = gmm.update_theta(stats, self.prior, beta, 1.0 - s)

            if w_cl == 0.0:
                # Energy weight is exactly zero: energies are skipped and all
                # components ride along in the driver.
                live = np.arange(self.k)
                energies = np.zeros((self.n, self.k))
            else:
                live = np.flatnonzero(theta.nu > self.dim - 1.0 + NU_MARGIN)
                if live.size == 0:
                    raise NumericalError("every component has degenerate energies")
                energies = gmm.expected_energies(
                    self.data, gmm.component_slice(theta, live)
                )

            if s == 0.0:
                states, resp_diag, state_eigs, eig = self._diag_update(
                    energies, live, w_cl
                )
            else:
                states, resp_diag, state_eigs, eig = self._dense_update(
                    energies, live, beta, s, w_cl
                )
        except Exception as exc:
            exc.args = (f"iteration {t}: {exc.args[0] if exc.args else exc}",)
            raise

        # -- diagnostics of the state produced with (beta_t, s_t) ----------
        purity = np.sum(state_eigs * state_eigs, axis=1)
        overlaps = (
            _ground_overlaps(self._eig_prev, eig) if self._eig_prev is not None else None
        )
        if (
            overlaps is not None
            and self.config.method == "qavb"
            and 1 <= t <= self.config.schedule.tau1
        ):
            self._qa_overlaps.append(overlaps)
        conv = self._convergence_metric(states, resp_diag)
        objective = self._objective(theta, resp_diag, states, state_eigs, energies, live, beta, s)
        if self.truth is not None:
            resp_new = resp_diag if resp_diag is not None else np.einsum("nkk->nk", states)
            success = metrics.success_rate(_hard_labels(resp_new), self.truth)
        else:
            success = float("nan")
        record = IterationRecord(
            t=t,
            beta=beta,
            s=s,
            objective=objective,
            purity_mean=float(purity.mean()),
            purity_median=float(np.median(purity)),
            overlap_median=float(np.median(overlaps)) if overlaps is not None else float("nan"),
            overlap_p05=float(np.percentile(overlaps, 5)) if overlaps is not None else float("nan"),
            conv=conv,
            success_rate=success,
            n_live=int(live.size),
        )
        self._states = states
        self._resp_diag = resp_diag
        self._eig_prev = eig
        self.theta = theta
        self.records.append(record)
        self.t = t + 1
        return record

    def _diag_update(self, energies, live, w_cl):
        """s = 0: the effective Hamiltonian is diagonal, so the Gibbs state is
        the classical tempered-softmax responsibility row."""
        n, k = self.n, self.k
        scaled = -w_cl * energies
        scaled -= scaled.max(axis=1, keepdims=True)
        wexp = np.exp(scaled)
        r_live = wexp / wexp.sum(axis=1, keepdims=True)
        resp_diag = np.zeros((n, k))
        resp_diag[:, live] = r_live
        states = np.zeros((n, k, k))
        idx = np.arange(k)
        states[:, idx, idx] = resp_diag
        order = np.argsort(energies, axis=1, kind="stable")
        vals = w_cl * np.take_along_axis(energies, order, axis=1)
        eig = _EffHamEigen("diag", k, live, vals, order=live[order])
        return states, resp_diag, r_live, eig

    def _dense_update(self, energies, live, beta, s, w_cl):
        """s > 0: Gibbs state of the dense effective Hamiltonian on the live
        subspace, embedded back into the full label space."""
        n, k = self.n, self.k
        kl = live.size
        h_live = self.h_hop[np.ix_(live, live)]
        m = np.broadcast_to(beta * s * h_live, (n, kl, kl)).copy()
        if w_cl > 0.0:
            il = np.arange(kl)
            m[:, il, il] += w_cl * energies
        vals, vecs = np.linalg.eigh(m)
        vecs = _fix_signs_batched(vecs)
        wexp = np.exp(-(vals - vals[:, :1]))
        p = wexp / wexp.sum(axis=1, keepdims=True)
        rho_live = np.einsum("nik,nk,njk->nij", vecs, p, vecs)
        states = np.zeros((n, k, k))
        states[np.ix_(np.arange(n), live, live)] = rho_live
        eig = _EffHamEigen("dense", k, live, vals, vecs=vecs)
        return states, None, p, eig

    def _convergence_metric(self, states: np.ndarray, resp_diag) -> float:
        if resp_diag is not None and self._resp_diag is not None:
            return 0.5 * float(np.max(np.abs(resp_diag - self._resp_diag).sum(axis=1)))
        return float(np.max(quantum.trace_distance_batch(states, self._states)))

    def _objective(self, theta, resp_diag, states, state_eigs, energies, live, beta, s):
        entropy = float(xlogy(state_eigs, state_eigs).sum())
        divergence = gmm.theta_divergence(theta, self.prior)
        w_cl = beta * (1.0 - s)
        classical = 0.0
        if w_cl > 0.0:
            if resp_diag is not None:
                r_live = resp_diag[:, live]
            else:
                r_live = np.einsum("nkk->nk", states)[:, live]
            classical = w_cl * float(np.einsum("nk,nk->", r_live, energies))
        driver = 0.0
        if s > 0.0:
            driver = beta * s * float(np.einsum("nij,ij->", states, self.h_hop))
        return entropy + divergence + classical + driver

    # -- full run ---------------------------------------------------------

    def run(self) -> RunResult:
        start = time.perf_counter()
        converged = False
        while True:
            record = self.step()
            if self.t >= self.min_iters and record.conv < self.config.conv_tol:
                converged = True
                break
            if self.t >= self.min_iters + self.config.max_extra_iters:
                break
        runtime = time.perf_counter() - start
        if self._qa_overlaps:
            pooled = np.concatenate(self._qa_overlaps)
            qa_median = float(np.median(pooled))
            qa_p05 = float(np.percentile(pooled, 5))
        else:
            qa_median = qa_p05 = float("nan")
        resp = quantum.responsibilities(self._states)
        return RunResult(
            method=self.config.method,
            iterations_run=self.t,
            converged=converged,
            hidden=self._states,
            theta=self.theta,
            labels=_hard_labels(resp),
            records=self.records,
            overlap_qa_median=qa_median,
            overlap_qa_p05=qa_p05,
            runtime_seconds=runtime,
        )


def _round_dead_components(stats: gmm.SufficientStats, w_cl: float) -> gmm.SufficientStats:
    """Zero out component masses whose tempered count w * N_k would land
    within the degeneracy margin of the degrees-of-freedom boundary, so the
    parameter update recovers the prior for them exactly."""
    dead = w_cl * stats.counts <= NU_MARGIN
    if not np.any(dead):
        return stats
    counts = np.where(dead, 0.0, stats.counts)
    means = stats.means.copy()
    scatters = stats.scatters.copy()
    means[dead] = 0.0
    scatters[dead] = 0.0
    return gmm.SufficientStats(counts=counts, means=means, scatters=scatters)


def _hard_labels(resp: np.ndarray) -> np.ndarray:
    """1-based argmax labels."""
    return np.argmax(resp, axis=1) + 1


def variational_objective(
    hidden: np.ndarray,
    theta: ThetaPosterior,
    prior: PriorHyperParams,
    data: np.ndarray,
    beta: float,
    s: float,
) -> float:
    """Mean-field objective at mixing point (beta, s):

    sum_i Tr[rho_i ln rho_i] + D(q_theta || prior)
    + beta * (1 - s) * sum_{i,k} r_ik E_ik + beta * s * sum_i Tr[rho_i H_hop].

    The parameter divergence D is exact KL for proper priors and drops the
    prior's (infinite) Wishart log-normalizer for components pinned at the
    degrees-of-freedom boundary; either way differences across posteriors are
    exact, and both coordinate updates decrease this value at fixed (beta, s).
    """
    if beta <= 0.0:
        raise ValidationError(f"beta must be positive, got {beta}")
    if not 0.0 <= s <= 1.0:
        raise ValidationError(f"s must lie in [0, 1], got {s}")
    hidden = np.asarray(hidden, dtype=np.float64)
    data = np.asarray(data, dtype=np.float64)
    if hidden.ndim != 3 or hidden.shape[0] != data.shape[0]:
        raise ValidationError(
            f"hidden states {hidden.shape} do not align with data {data.shape}"
        )
    k = theta.n_components
    if hidden.shape[1:] != (k, k):
        raise ValidationError("hidden state size does not match component count")
    if quantum.density_defect(hidden) > 1e-8:
        raise ValidationError("hidden states are not density matrices")
    resp = quantum.responsibilities(hidden)
    eigs = np.clip(np.linalg.eigvalsh(hidden), 0.0, 1.0)
    entropy = float(xlogy(eigs, eigs).sum())
    divergence = gmm.theta_divergence(theta, prior)
    w_cl = beta * (1.0 - s)
    classical = 0.0
    if w_cl > 0.0:
        live = theta.nu > theta.dim - 1.0 + NU_MARGIN
        if not np.all(live):
            if np.any(resp[:, ~live] > 0.0):
                raise DegeneratePosteriorError(
                    "positive responsibility on a component with undefined energies"
                )
        live_idx = np.flatnonzero(live)
        energies = gmm.expected_energies(data, gmm.component_slice(theta, live_idx))
        classical = w_cl * float(np.einsum("nk,nk->", resp[:, live_idx], energies))
    driver = 0.0
    if beta * s > 0.0:
        h_hop = quantum.build_hopping_hamiltonian(k)
        driver = beta * s * float(np.einsum("nij,ij->", hidden, h_hop))
    return entropy + divergence + classical + driver


def run(
    config: SolverConfig,
    dataset: Dataset | np.ndarray,
    prior: PriorHyperParams | None = None,
    initial_hidden: np.ndarray | None = None,
) -> RunResult:
    """Run a solver on a dataset (truth labels, when present, populate the
    per-iteration success rates)."""
    if isinstance(dataset, Dataset):
        data, truth = dataset.points, dataset.labels
    else:
        data, truth = np.asarray(dataset), None
    solver = Solver(config, data, prior=prior, truth=truth, initial_hidden=initial_hidden)
    return solver.run()
