"""Hermitian linear algebra kernels.

Everything downstream (Gibbs states of effective Hamiltonians, density-matrix
diagnostics, matrix logs for round-trip checks) funnels through the three
operations here: a validated eigendecomposition with a fixed eigenvector sign
convention, the matrix exponential of a Hermitian matrix, and the matrix log
of a symmetric positive-definite matrix.

All matrices produced by the solvers are real symmetric; complex Hermitian
input is accepted and handled by the same code paths (the sign convention
becomes a phase convention).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NumericalError, ValidationError

# Relative tolerance for the Hermiticity check: |H - H^T| is compared against
# this times max(1, largest magnitude entry).
HERMITIAN_TOL = 1e-12

# Components smaller than this are skipped when locating the first nonzero
# eigenvector entry for the sign convention.
SIGN_TOL = 1e-12

# exp(x) overflows double precision just above this.
_EXP_OVERFLOW = 709.0


class EigenDecomposition(NamedTuple):
    """Eigenvalues ascending; eigenvectors as columns, sign-fixed."""

    values: np.ndarray
    vectors: np.ndarray


def check_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate that ``h`` is square and Hermitian within ``tol`` (relative).

    Returns the array as float64 (or complex128) without symmetrizing.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {h.shape}")
    h = h.astype(np.complex128 if np.iscomplexobj(h) else np.float64, copy=False)
    if not np.all(np.isfinite(h)):
        raise ValidationError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(h))) if h.size else 1.0)
    defect = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if defect > tol * scale:
        raise ValidationError(
            f"matrix is not Hermitian: max |H - H^H| = {defect:.3e} "
            f"exceeds {tol:.1e} * {scale:.3e}"
        )
    return h


def fix_eigenvector_signs(vectors: np.ndarray, tol: float = SIGN_TOL) -> np.ndarray:
    """Normalize each column's gauge: first component with |v_j| > tol is made
    real and positive. Real input gets a sign flip, complex input a phase."""
    vectors = np.array(vectors, copy=True)
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        nz = np.flatnonzero(np.abs(col) > tol)
        if nz.size == 0:
            continue
        lead = col[nz[0]]
        if np.iscomplexobj(vectors):
            vectors[:, j] = col * (lead.conjugate() / abs(lead))
        elif lead < 0.0:
            vectors[:, j] = -col
    return vectors


def eigh(h: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Eigenvalues are returned in ascending order. Eigenvectors are columns of
    an orthonormal matrix with a deterministic sign convention (first
    component larger than ``SIGN_TOL`` in magnitude made positive) so that
    repeated calls on identical input are reproducible and comparable.
    """
    h = check_hermitian(h)
    values, vectors = np.linalg.eigh(h)
    return EigenDecomposition(values, fix_eigenvector_signs(vectors))


def expm_hermitian(h: np.ndarray) -> np.ndarray:
    """Matrix exponential of a Hermitian matrix via eigendecomposition.

    exp(H) = V diag(exp(lambda)) V^H. Raises :class:`NumericalError` when the
    largest eigenvalue would overflow double precision; callers that need
    exp(H)/Tr[exp(H)] should shift the spectrum by the maximum eigenvalue
    first.
    """
    values, vectors = eigh(h)
    if values.size and float(values[-1]) > _EXP_OVERFLOW:
        raise NumericalError(
            f"expm overflow: max eigenvalue {values[-1]:.3e} > {_EXP_OVERFLOW}; "
            "shift the spectrum before exponentiating"
        )
    w = np.exp(values)
    return (vectors * w) @ vectors.conj().T


def logm_spd(p: np.ndarray, singular_tol: float = 1e-12) -> np.ndarray:
    """Matrix logarithm of a symmetric/Hermitian positive-definite matrix.

    Raises :class:`NumericalError` if any eigenvalue falls at or below
    ``singular_tol`` times the largest eigenvalue (treated as singular input).
    """
    values, vectors = eigh(p)
    vmax = float(values[-1]) if values.size else 0.0
    if vmax <= 0.0 or float(values[0]) <= singular_tol * vmax:
        raise NumericalError(
            f"logm requires a positive-definite matrix; eigenvalue range "
            f"[{values[0] if values.size else float('nan'):.3e}, {vmax:.3e}]"
        )
    return (vectors * np.log(values)) @ vectors.conj().T
