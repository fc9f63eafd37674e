"""Density-matrix hidden states and the hopping driver.

Each data point carries a K x K density matrix over cluster assignments.
The per-point update is a Gibbs state of an effective Hamiltonian that mixes
the (diagonal) expected classical energies with an off-diagonal cyclic
hopping term; at mixing weight s = 0 it collapses to the classical softmax
responsibility update, at s = 1 the assignment energies drop out entirely.

Shapes: a single state is (K, K); a batch of per-point states is (N, K, K).
"""

from __future__ import annotations

import numpy as np

from . import linalg
from .errors import ValidationError

# Default absolute tolerance for density-matrix validity checks
# (Hermiticity, unit trace, eigenvalue >= -tol).
DENSITY_ATOL = 1e-10


def build_hopping_hamiltonian(n_components: int) -> np.ndarray:
    """Cyclic hopping driver on K cluster labels.

    Adds a symmetric hop between every pair of neighbours on the cycle
    1 -> 2 -> ... -> K -> 1. For K = 2 the two directions wrap onto the same
    pair, giving off-diagonal weight 2; for K >= 3 every cycle edge carries
    weight 1.
    """
    k = int(n_components)
    if k < 2:
        raise ValidationError(f"hopping driver needs at least 2 components, got {k}")
    h = np.zeros((k, k))
    for a in range(k):
        b = (a + 1) % k
        h[a, b] += 1.0
        h[b, a] += 1.0
    return h


def gibbs_state(hamiltonian: np.ndarray) -> np.ndarray:
    """exp(-H) / Tr[exp(-H)], computed with a max-eigenvalue shift so the
    exponential never overflows regardless of the spectrum's location."""
    values, vectors = linalg.eigh(hamiltonian)
    w = np.exp(-(values - values[0]))  # values ascending; ground state -> 1
    rho = (vectors * w) @ vectors.conj().T
    return rho / np.trace(rho).real


def update_hidden_one(
    energy_row: np.ndarray,
    beta: float,
    s: float,
    h_hop: np.ndarray,
) -> np.ndarray:
    """One point's hidden-state update.

    Returns the Gibbs state of ``beta * ((1 - s) * diag(energy_row) + s * h_hop)``.
    ``energy_row`` must be finite whenever its weight beta*(1-s) is nonzero;
    at s = 1 the energies are ignored (callers may pass zeros).
    """
    energy_row = np.asarray(energy_row, dtype=np.float64)
    h_hop = np.asarray(h_hop, dtype=np.float64)
    k = h_hop.shape[0]
    if energy_row.shape != (k,):
        raise ValidationError(
            f"energy row shape {energy_row.shape} does not match driver size {k}"
        )
    if beta <= 0.0:
        raise ValidationError(f"beta must be positive, got {beta}")
    if not 0.0 <= s <= 1.0:
        raise ValidationError(f"s must lie in [0, 1], got {s}")
    w_cl = beta * (1.0 - s)
    if w_cl != 0.0 and not np.all(np.isfinite(energy_row)):
        raise ValidationError("non-finite assignment energies with nonzero weight")
    m = beta * s * h_hop
    if w_cl != 0.0:
        m = m + np.diag(w_cl * energy_row)
    return gibbs_state(m)


def responsibilities(states: np.ndarray) -> np.ndarray:
    """Per-point responsibility rows: the real diagonal of each density
    matrix, clamped to [0, 1] and renormalized (a no-op up to the 1e-10
    trace tolerance)."""
    states = np.asarray(states)
    single = states.ndim == 2
    if single:
        states = states[None]
    diag = np.einsum("nkk->nk", states).real
    r = np.clip(diag, 0.0, 1.0)
    sums = r.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-10):
        worst = float(np.max(np.abs(sums - 1.0)))
        raise ValidationError(f"state diagonals sum to 1 +/- {worst:.3e} (> 1e-10)")
    r = r / sums[:, None]
    return r[0] if single else r


def purity(rho: np.ndarray) -> float:
    """Tr[rho^2]; 1/K for the maximally mixed state, 1 for a pure state."""
    rho = np.asarray(rho)
    return float(np.sum(rho * rho.conj()).real)


def purity_batch(states: np.ndarray) -> np.ndarray:
    return np.einsum("nij,nij->n", states, states.conj()).real


def maximally_mixed(n_components: int) -> np.ndarray:
    return np.eye(n_components) / n_components


def maximally_mixed_states(n_points: int, n_components: int) -> np.ndarray:
    return np.broadcast_to(
        maximally_mixed(n_components), (n_points, n_components, n_components)
    ).copy()


def random_diagonal_states(
    n_points: int, n_components: int, rng: np.random.Generator
) -> np.ndarray:
    """Seeded random initialization: each point gets a diagonal density matrix
    with responsibilities drawn from a flat Dirichlet."""
    resp = rng.dirichlet(np.ones(n_components), size=n_points)
    states = np.zeros((n_points, n_components, n_components))
    idx = np.arange(n_components)
    states[:, idx, idx] = resp
    return states


def check_density_matrix(rho: np.ndarray, atol: float = DENSITY_ATOL) -> None:
    """Raise unless ``rho`` is Hermitian, unit-trace, and PSD within ``atol``."""
    defect = density_defect(rho)
    if defect > atol:
        raise ValidationError(
            f"density-matrix defect {defect:.3e} exceeds tolerance {atol:.1e}"
        )


def density_defect(states: np.ndarray) -> float:
    """Largest violation of the density-matrix invariants over a batch:
    max of Hermiticity defect, |trace - 1|, and negative-eigenvalue excess."""
    states = np.asarray(states)
    if states.ndim == 2:
        states = states[None]
    herm = np.max(np.abs(states - np.conj(np.swapaxes(states, -1, -2))))
    trace = np.max(np.abs(np.einsum("nkk->n", states).real - 1.0))
    min_eig = np.min(np.linalg.eigvalsh(states))
    return float(max(herm, trace, -min(min_eig, 0.0)))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1/2) * trace norm of (a - b) for Hermitian a, b."""
    values = np.linalg.eigvalsh(np.asarray(a) - np.asarray(b))
    return 0.5 * float(np.sum(np.abs(values)))


def trace_distance_batch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    values = np.linalg.eigvalsh(np.asarray(a) - np.asarray(b))
    return 0.5 * np.sum(np.abs(values), axis=-1)


def partial_trace(rho_ab: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Trace out subsystem B of a density matrix on A (x) B by direct index
    contraction."""
    da, db = dims
    rho_ab = np.asarray(rho_ab)
    if rho_ab.shape != (da * db, da * db):
        raise ValidationError(
            f"bipartite state shape {rho_ab.shape} incompatible with dims {dims}"
        )
    return np.einsum("abcb->ac", rho_ab.reshape(da, db, da, db))


def kraus_partial_trace(rho_ab: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Partial trace over B implemented as a Kraus map: K_a = I_A (x) <a|,
    summing K_a rho K_a^dagger over the B basis."""
    da, db = dims
    rho_ab = np.asarray(rho_ab)
    if rho_ab.shape != (da * db, da * db):
        raise ValidationError(
            f"bipartite state shape {rho_ab.shape} incompatible with dims {dims}"
        )
    eye_a = np.eye(da)
    out = np.zeros((da, da), dtype=rho_ab.dtype)
    for a in range(db):
        bra = np.zeros((1, db), dtype=rho_ab.dtype)
        bra[0, a] = 1.0
        kraus = np.kron(eye_a, bra)  # (da, da*db)
        out = out + kraus @ rho_ab @ kraus.conj().T
    return out


def check_partial_trace_kraus(
    rho_ab: np.ndarray, dims: tuple[int, int], atol: float = DENSITY_ATOL
) -> bool:
    """True when the Kraus-operator partial trace agrees with direct index
    contraction entrywise within ``atol`` and the result has unit trace."""
    via_kraus = kraus_partial_trace(rho_ab, dims)
    direct = partial_trace(rho_ab, dims)
    if float(np.max(np.abs(via_kraus - direct))) > atol:
        return False
    return abs(float(np.trace(via_kraus).real) - 1.0) <= atol
