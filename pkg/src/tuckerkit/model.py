"""Tucker objective machinery.

Given a tensor B and orthonormal-column factors P_0..P_{m-1}, this module
evaluates the contracted unfoldings C_mode, their Gram matrices H, the
objective f = ||B x_0 P_0^H ... x_{m-1} P_{m-1}^H||_F^2, core recovery and
reconstruction, the relative approximation error, and the normalized KKT
residuals used as the solvers' convergence measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import STIEFEL_TOL, orthonormality_defect, singular_values, spectral_norm_estimate
from .tensor import frobenius_norm, mode_mul, multi_mode_mul, unfold


@dataclass(frozen=True)
class TuckerFactors:
    """Ordered orthonormal-column factors, one per tensor mode."""

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(np.asarray(P) for P in self.factors))
        for mode, P in enumerate(self.factors):
            if P.ndim != 2 or P.shape[0] < P.shape[1] or P.shape[1] < 1:
                raise ValueError(f"factor {mode} has invalid shape {P.shape}")
            defect = orthonormality_defect(P)
            if defect > STIEFEL_TOL * math.sqrt(P.shape[1]):
                raise ValueError(
                    f"factor {mode} is not orthonormal: ||P^H P - I||_F = {defect:.3e}"
                )

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(P.shape[0] for P in self.factors)

    @property
    def core_dims(self) -> tuple[int, ...]:
        return tuple(P.shape[1] for P in self.factors)

    def __len__(self) -> int:
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)

    def __getitem__(self, mode: int) -> np.ndarray:
        return self.factors[mode]


def _factor_list(factors) -> list[np.ndarray]:
    if isinstance(factors, TuckerFactors):
        return list(factors.factors)
    return [np.asarray(P) for P in factors]


def _check_factors(B: np.ndarray, factors: list[np.ndarray]) -> None:
    if len(factors) != B.ndim:
        raise ValueError(f"{len(factors)} factors for a {B.ndim}-mode tensor")
    for mode, P in enumerate(factors):
        if P.ndim != 2 or P.shape[0] != B.shape[mode]:
            raise ValueError(
                f"factor {mode} shape {P.shape} does not match mode size {B.shape[mode]}"
            )


def contracted_unfolding(B: np.ndarray, factors, mode: int) -> np.ndarray:
    """C_mode: contract every mode except `mode` with the conjugated factors,
    then unfold along `mode`.

    Contractions are applied largest-mode-first, which shrinks the working
    tensor fastest; the result does not depend on that order.
    """
    factors = _factor_list(factors)
    _check_factors(B, factors)
    if not 0 <= mode < B.ndim:
        raise ValueError(f"mode {mode} out of range")
    order = sorted(
        (i for i in range(B.ndim) if i != mode), key=lambda i: B.shape[i], reverse=True
    )
    out = B
    for i in order:
        out = mode_mul(out, i, factors[i].conj().T)
    return unfold(out, mode)


def shared_contractions(B: np.ndarray, factors, skip_identity=()) -> list[np.ndarray]:
    """All m contracted unfoldings at one factor tuple, reusing the partial
    product over the last mode.

    The last-mode contraction ``B x_{m-1} P_{m-1}^H`` is computed once and
    shared by every C_mode with ``mode < m-1``; C_{m-1} is contracted from B
    directly.  Values agree with per-mode :func:`contracted_unfolding` up to
    round-off from the different contraction orders.

    `skip_identity` lists modes whose factor is known to be the identity;
    their contractions are skipped (a no-op).
    """
    factors = _factor_list(factors)
    _check_factors(B, factors)
    m = B.ndim
    skip = frozenset(int(i) for i in skip_identity)

    def contract_all_but(T, exclude, modes):
        order = sorted((i for i in modes if i != exclude), key=lambda i: T.shape[i], reverse=True)
        for i in order:
            if i not in skip:
                T = mode_mul(T, i, factors[i].conj().T)
        return T

    if m == 1:
        return [unfold(B, 0)]
    last = m - 1
    if last in skip:
        Z = B
    else:
        Z = mode_mul(B, last, factors[last].conj().T)
    out: list[np.ndarray | None] = [None] * m
    for mode in range(last):
        out[mode] = unfold(contract_all_but(Z, mode, range(last)), mode)
    out[last] = unfold(contract_all_but(B, last, range(last)), last)
    return out  # type: ignore[return-value]


def gram(C: np.ndarray) -> np.ndarray:
    """H = C C^H, symmetrized to machine Hermitian."""
    H = C @ C.conj().T
    return (H + H.conj().T) / 2


def objective(B: np.ndarray, factors, mode: int = 0) -> float:
    """f = ||B x_0 P_0^H ... x_{m-1} P_{m-1}^H||_F^2, evaluated through the
    unfolding of `mode`; every mode gives the same value up to round-off."""
    factors = _factor_list(factors)
    C = contracted_unfolding(B, factors, mode)
    return frobenius_norm(factors[mode].conj().T @ C) ** 2


def core(B: np.ndarray, factors) -> np.ndarray:
    """Core tensor ``B x_0 P_0^H ... x_{m-1} P_{m-1}^H``."""
    factors = _factor_list(factors)
    _check_factors(B, factors)
    order = sorted(range(B.ndim), key=lambda i: B.shape[i], reverse=True)
    return multi_mode_mul(B, [(i, factors[i].conj().T) for i in order])


def reconstruct(T: np.ndarray, factors) -> np.ndarray:
    """Expand a core tensor back: ``T x_0 P_0 ... x_{m-1} P_{m-1}``."""
    factors = _factor_list(factors)
    if len(factors) != T.ndim:
        raise ValueError(f"{len(factors)} factors for a {T.ndim}-mode core")
    for mode, P in enumerate(factors):
        if P.shape[1] != T.shape[mode]:
            raise ValueError(
                f"factor {mode} shape {P.shape} does not match core size {T.shape[mode]}"
            )
    return multi_mode_mul(T, [(i, P) for i, P in enumerate(factors)])


def approx_error(B: np.ndarray, Bhat: np.ndarray) -> float:
    """Relative error ``||B - Bhat||_F / ||B||_F``."""
    if B.shape != Bhat.shape:
        raise ValueError(f"shape mismatch: {B.shape} vs {Bhat.shape}")
    nrm = frobenius_norm(B)
    if nrm == 0:
        raise ValueError("approx_error undefined for the zero tensor")
    return frobenius_norm(B - Bhat) / nrm


def unfolding_spectral_norms(B: np.ndarray, method: str = "estimate") -> np.ndarray:
    """Per-mode ||unfold(B, mode)||_2, exact or via the 1/inf-norm bound."""
    if method not in ("exact", "estimate"):
        raise ValueError(f"method must be 'exact' or 'estimate', got {method!r}")
    out = np.empty(B.ndim)
    for mode in range(B.ndim):
        M = unfold(B, mode)
        if method == "exact":
            out[mode] = singular_values(M)[0]
        else:
            out[mode] = spectral_norm_estimate(M)
    return out


@dataclass(frozen=True)
class KktReport:
    """Normalized first-order stationarity residuals, one per mode.

    ``per_mode_residuals[mode] = ||H P - P Omega||_F / (||B||_F ||B_ufd||_2)``
    with ``Omega = P^H H P``; `total` is their sum.  The `full` variant
    evaluates every H at the same factor tuple; the `cheap` variant reuses
    the contracted unfoldings produced during a solver sweep.
    """

    per_mode_residuals: tuple[float, ...]
    total: float
    mode_multipliers: tuple[np.ndarray, ...]
    variant: str             # "full" | "cheap"
    denominator_mode: str    # "exact" | "estimate"


def _mode_residual(C: np.ndarray, P: np.ndarray, norm_b: float, denom: float):
    G = C.conj().T @ P
    W = C @ G
    Omega = G.conj().T @ G
    Omega = (Omega + Omega.conj().T) / 2
    r = float(np.linalg.norm(W - P @ Omega))
    return r / (norm_b * denom), Omega


def kkt_residual(
    B: np.ndarray,
    factors,
    variant: str = "full",
    cached_c=None,
    denominator: str = "estimate",
    unfolding_norms: np.ndarray | None = None,
) -> KktReport:
    """Normalized KKT residual of `factors` for tensor `B`.

    ``variant="full"`` forms every contracted unfolding at the given tuple
    (sharing partial products); ``variant="cheap"`` requires `cached_c`, the
    per-mode C matrices captured during a sweep (entries may be None for
    modes pinned at full dimension, which contribute zero).  Denominators
    ``||B_ufd||_2`` are exact singular values or the 1/inf-norm estimate;
    precomputed values can be passed through `unfolding_norms`.
    """
    factors = _factor_list(factors)
    _check_factors(B, factors)
    norm_b = frobenius_norm(B)
    if norm_b == 0:
        raise ValueError("KKT residual undefined for the zero tensor")
    if variant not in ("full", "cheap"):
        raise ValueError(f"variant must be 'full' or 'cheap', got {variant!r}")
    if unfolding_norms is None:
        unfolding_norms = unfolding_spectral_norms(B, denominator)
    if variant == "cheap":
        if cached_c is None:
            raise ValueError("cheap variant requires the per-mode C matrices from a sweep")
        cs = list(cached_c)
        if len(cs) != B.ndim:
            raise ValueError(f"{len(cs)} cached matrices for a {B.ndim}-mode tensor")
    else:
        cs = shared_contractions(B, factors)

    residuals = []
    multipliers = []
    for mode, P in enumerate(factors):
        C = cs[mode]
        if C is None:
            residuals.append(0.0)
            multipliers.append(np.eye(P.shape[1], dtype=P.dtype) * 0)
            continue
        r, Omega = _mode_residual(C, P, norm_b, float(unfolding_norms[mode]))
        residuals.append(r)
        multipliers.append(Omega)
    return KktReport(
        per_mode_residuals=tuple(residuals),
        total=float(sum(residuals)),
        mode_multipliers=tuple(multipliers),
        variant=variant,
        denominator_mode=denominator,
    )
