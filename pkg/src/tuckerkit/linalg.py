"""Dense factorizations and subspace geometry.

Everything here is a pure function of its inputs.  Factorizations are backed
by LAPACK through numpy; the extra work in this module is the deterministic
sign convention for singular vectors, the orthonormal polar factor that stays
well defined for rank-deficient input, and canonical-angle distances computed
in a form that is exactly symmetric and accurate for small angles.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

# Columns P of a Stiefel factor must satisfy ||P^H P - I||_F <= tol*sqrt(k).
STIEFEL_TOL = 1e-12


class ThinSvd(NamedTuple):
    U: np.ndarray          # n x r, orthonormal columns
    s: np.ndarray          # r descending nonnegative singular values
    Vh: np.ndarray         # r x k, orthonormal rows


class HermEig(NamedTuple):
    values: np.ndarray     # descending eigenvalues
    vectors: np.ndarray    # unitary, column-aligned with values


def orthonormality_defect(P: np.ndarray) -> float:
    """``||P^H P - I_k||_F``; zero iff the columns are exactly orthonormal."""
    k = P.shape[1]
    return float(np.linalg.norm(P.conj().T @ P - np.eye(k)))


def is_stiefel(P: np.ndarray, tol: float = STIEFEL_TOL) -> bool:
    return P.ndim == 2 and P.shape[0] >= P.shape[1] and (
        orthonormality_defect(P) <= tol * math.sqrt(P.shape[1])
    )


def _fix_svd_signs(U: np.ndarray, Vh: np.ndarray) -> None:
    # Scale each singular pair so the largest-magnitude entry of the U column
    # is real and positive; ties broken by the first such entry.
    idx = np.argmax(np.abs(U), axis=0)
    vals = U[idx, np.arange(U.shape[1])]
    mags = np.abs(vals)
    safe = mags > 0
    phases = np.ones_like(vals)
    phases[safe] = vals[safe] / mags[safe]
    # scaling the pair by (conj(phase), phase) leaves U @ diag(s) @ Vh intact
    U *= np.conj(phases)[np.newaxis, :]
    Vh *= phases[:, np.newaxis]


def thin_svd(A: np.ndarray) -> ThinSvd:
    """Thin SVD ``A = U diag(s) Vh`` with r = min(n, k) factors.

    Tall inputs are reduced by a thin QR step before the SVD of the small
    triangular factor.  The sign convention makes the output a deterministic
    function of the input.
    """
    A = np.asarray(A)
    n, k = A.shape
    if n > 2 * k:
        Q, R = np.linalg.qr(A)
        Ur, s, Vh = np.linalg.svd(R, full_matrices=False)
        U = Q @ Ur
    else:
        U, s, Vh = np.linalg.svd(A, full_matrices=False)
    U = np.ascontiguousarray(U)
    Vh = np.ascontiguousarray(Vh)
    _fix_svd_signs(U, Vh)
    return ThinSvd(U, s, Vh)


def singular_values(A: np.ndarray) -> np.ndarray:
    """Descending singular values only."""
    return np.linalg.svd(np.asarray(A), compute_uv=False)


def herm_eig(H: np.ndarray) -> HermEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    `H` may be Hermitian only up to round-off (it is symmetrized internally);
    anything worse raises ValueError.
    """
    H = np.asarray(H)
    nrm = np.linalg.norm(H)
    defect = np.linalg.norm(H - H.conj().T)
    if defect > 1e-12 * max(nrm, 1e-300):
        raise ValueError(f"matrix is not Hermitian: ||H - H^H|| = {defect:.3e}, ||H|| = {nrm:.3e}")
    Hs = (H + H.conj().T) / 2
    w, V = np.linalg.eigh(Hs)
    return HermEig(w[::-1].copy(), V[:, ::-1].copy())


def top_k_eigvectors(H: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    """Orthonormal basis of the invariant subspace of the k largest
    eigenvalues, plus the spectral gap ``lambda_k - lambda_{k+1}``.

    When ``k == n`` there is no trailing eigenvalue and the gap is reported
    as ``math.inf``.
    """
    eig = herm_eig(H)
    n = eig.values.size
    if not 1 <= k <= n:
        raise ValueError(f"k = {k} out of range 1..{n}")
    gap = math.inf if k == n else float(eig.values[k - 1] - eig.values[k])
    return eig.vectors[:, :k].copy(), gap


def polar_factor(A: np.ndarray) -> np.ndarray:
    """Orthonormal polar factor ``U @ Vh`` from the thin SVD.

    Remains orthonormal even when ``rank(A) < k``, unlike the inverse
    square-root formula ``A (A^H A)^{-1/2}``.
    """
    A = np.asarray(A)
    if A.shape[0] < A.shape[1]:
        raise ValueError(f"need n >= k, got shape {A.shape}")
    dec = thin_svd(A)
    return dec.U @ dec.Vh


def trace_norm(A: np.ndarray) -> float:
    """Sum of singular values (nuclear norm)."""
    return float(singular_values(A).sum())


def _check_same_shape(X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Y.shape}")


def canonical_angles(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Canonical angles between equal-dimension subspaces, descending in
    ``[0, pi/2]``, computed as arccos of the singular values of ``X^H Y``."""
    _check_same_shape(X, Y)
    s = singular_values(X.conj().T @ Y)
    s = np.clip(s, 0.0, 1.0)  # absorb round-off above 1
    return np.arccos(s)[::-1].copy()


def sin_theta_dist(X: np.ndarray, Y: np.ndarray, norm: str = "fro") -> float:
    """Sine-theta distance between the column spans of `X` and `Y`.

    ``norm="fro"`` gives ``sqrt(sum_i sin^2 theta_i)`` which equals
    ``||X X^H - Y Y^H||_F / sqrt(2)``; ``norm="spectral"`` gives
    ``sin theta_max = ||X X^H - Y Y^H||_2``.  Computed from the orthogonal
    complements ``(I - X X^H) Y`` and ``(I - Y Y^H) X``, whose singular
    values are the sines; taking the max of the two evaluations keeps the
    function exactly symmetric in floating point.
    """
    _check_same_shape(X, Y)
    A = Y - X @ (X.conj().T @ Y)
    B = X - Y @ (Y.conj().T @ X)
    if norm in ("fro", "frobenius"):
        return max(float(np.linalg.norm(A)), float(np.linalg.norm(B)))
    if norm in ("spectral", "2"):
        sa = singular_values(A)
        sb = singular_values(B)
        return max(float(sa[0]) if sa.size else 0.0, float(sb[0]) if sb.size else 0.0)
    raise ValueError(f"unknown norm {norm!r}; expected 'fro' or 'spectral'")


def align(Xnew: np.ndarray, Xref: np.ndarray) -> np.ndarray:
    """Re-basis `Xnew` (same span) to be closest to `Xref`.

    Returns ``Xnew @ Q`` with ``Q`` the orthonormal polar factor of
    ``Xnew^H Xref``; the result satisfies
    ``||aligned - Xref||_F = 2 ||sin(Theta/2)||_F`` over the canonical
    angles Theta between the two spans.
    """
    _check_same_shape(Xnew, Xref)
    return Xnew @ polar_factor(Xnew.conj().T @ Xref)


def spectral_norm_estimate(A: np.ndarray) -> float:
    """Cheap upper bound ``sqrt(||A||_1 ||A||_inf) >= ||A||_2``."""
    absA = np.abs(np.asarray(A))
    col = float(absA.sum(axis=0).max())
    row = float(absA.sum(axis=1).max())
    return math.sqrt(col * row)
