"""Alternating solvers for the Tucker decomposition.

Two schemes share one sweep structure (each factor updated in turn against
the others' current values):

* ``hooi`` replaces each factor by the top-k left singular vectors of the
  contracted unfolding C, the exact maximizer of the mode subproblem.
* ``asi`` performs one subspace-iteration step instead: the new factor is
  the orthonormal polar factor of ``H @ P = C (C^H P)``, computed via the
  thin SVD so rank deficiency is harmless.

Neither method ever forms the Gram matrix H explicitly.  Modes with
``k == n`` are pinned to the identity and skipped.  The objective sequence
is nondecreasing for both methods; sweeps stop when the cheap KKT residual
drops below ``eps_kkt``, when the objective stalls (three consecutive flat
readings backed by a KKT residual below ``sqrt(eps_kkt)``), or at the sweep
cap.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import model
from .linalg import align, sin_theta_dist, singular_values, thin_svd
from .model import TuckerFactors, KktReport
from .tensor import frobenius_norm, unfold

KKT_CONVERGED = "kkt_converged"
OBJ_STALLED = "obj_stalled"
MAX_SWEEPS = "max_sweeps"

# consecutive flat objective readings required before declaring a stall
_STALL_WINDOW = 3


class NumericalError(RuntimeError):
    """Non-finite values encountered during a solve (corrupted input)."""


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by both solvers.

    `init` accepts ``("random", seed)`` (or the string ``"random:SEED"``),
    ``"hosvd"``, or a :class:`TuckerFactors` to start from.  `denominator`
    picks how ``||B_ufd||_2`` in the KKT residual is obtained: ``"exact"``
    singular values (computed once per solve) or the cheaper
    ``sqrt(||.||_1 ||.||_inf)`` upper bound.  `record_series` enables the
    per-mode convergence-series diagnostics, which for ``asi`` cost one
    extra singular-value computation per mode and sweep.
    """

    method: str = "hooi"                # "hooi" | "asi"
    eps_obj: float = 1e-12
    eps_kkt: float = 1e-8
    max_sweeps: int = 10000
    init: object = ("random", 0)
    greedy_align: bool = False
    kkt_check_period: int = 1
    denominator: str = "estimate"       # "exact" | "estimate"
    record_series: bool = True

    def validated(self) -> "SolverConfig":
        if self.method not in ("hooi", "asi"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.eps_obj > 0 and self.eps_kkt > 0):
            raise ValueError("tolerances must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.kkt_check_period < 1:
            raise ValueError("kkt_check_period must be >= 1")
        if self.denominator not in ("exact", "estimate"):
            raise ValueError(f"unknown denominator mode {self.denominator!r}")
        return self


@dataclass(frozen=True)
class ModeDiagnostics:
    """Per-mode, per-sweep convergence data.

    `weight` is the spectral gap lambda_k - lambda_{k+1} of H for ``hooi``
    and the smallest singular value of ``H @ P`` for ``asi``; it multiplies
    the two series terms whose partial sums stay bounded when the iteration
    converges.  `multiplier_residual` is ``||H P - P Lam||_F / ||H||_F``
    with ``Lam = P^H H P`` taken at the factor entering the sweep.
    """

    weight: float
    subspace_change: float
    kkt_term: float | None = None
    multiplier_residual: float | None = None
    series_subspace: float | None = None
    series_residual: float | None = None


@dataclass(frozen=True)
class IterationRecord:
    """One sweep: `objective` is f of the factors leaving the sweep,
    `cheap_kkt` the residual of the factors that entered it (None on sweeps
    where the periodic check was skipped)."""

    sweep: int
    objective: float
    cheap_kkt: float | None
    per_mode: tuple[ModeDiagnostics | None, ...]
    wall_time: float


@dataclass(frozen=True)
class SolveResult:
    factors: TuckerFactors
    core: np.ndarray
    history: tuple[IterationRecord, ...]
    termination: str
    final_full_kkt: KktReport


def random_init(dims, core_dims, seed: int, kind: str = "real") -> TuckerFactors:
    """Orthonormalized standard-Gaussian factors, deterministic per seed.

    Complex factors draw independent real and imaginary Gaussian parts.
    """
    dims = tuple(int(n) for n in dims)
    core_dims = tuple(int(k) for k in core_dims)
    _check_core_dims(dims, core_dims)
    if kind not in ("real", "complex"):
        raise ValueError(f"kind must be 'real' or 'complex', got {kind!r}")
    rng = np.random.default_rng(seed)
    factors = []
    for n, k in zip(dims, core_dims):
        G = rng.standard_normal((n, k))
        if kind == "complex":
            G = G + 1j * rng.standard_normal((n, k))
        Q, _ = np.linalg.qr(G)
        factors.append(Q)
    return TuckerFactors(tuple(factors))


def hosvd_init(B: np.ndarray, core_dims) -> TuckerFactors:
    """Truncated higher-order SVD: per mode, the top-k left singular vectors
    of the mode unfolding."""
    core_dims = tuple(int(k) for k in core_dims)
    _check_core_dims(B.shape, core_dims)
    factors = []
    for mode, k in enumerate(core_dims):
        M = unfold(B, mode)
        if k > min(M.shape):
            raise ValueError(
                f"core dimension {k} exceeds the rank bound {min(M.shape)} of mode {mode}"
            )
        factors.append(thin_svd(M).U[:, :k].copy())
    return TuckerFactors(tuple(factors))


def sweep_shared_contractions(B: np.ndarray, factors) -> list[np.ndarray]:
    """All per-mode contracted unfoldings at one factor tuple, computing the
    shared last-mode partial product once.  See
    :func:`tuckerkit.model.shared_contractions`."""
    return model.shared_contractions(B, factors)


def hooi(B: np.ndarray, core_dims, config: SolverConfig | None = None) -> SolveResult:
    """Higher-order orthogonal iteration."""
    config = (config or SolverConfig()).validated()
    return _alternating_solve(B, core_dims, replace(config, method="hooi"))


def asi(B: np.ndarray, core_dims, config: SolverConfig | None = None) -> SolveResult:
    """Alternating subspace iteration."""
    config = (config or SolverConfig()).validated()
    return _alternating_solve(B, core_dims, replace(config, method="asi"))


def solve(B: np.ndarray, core_dims, config: SolverConfig) -> SolveResult:
    """Dispatch on ``config.method``."""
    return _alternating_solve(B, core_dims, config.validated())


def _check_core_dims(dims, core_dims) -> None:
    if len(core_dims) != len(dims):
        raise ValueError(f"{len(core_dims)} core dimensions for {len(dims)} modes")
    for mode, (n, k) in enumerate(zip(dims, core_dims)):
        if not 1 <= k <= n:
            raise ValueError(f"core dimension {k} out of range 1..{n} at mode {mode}")


def _normalize_init(init):
    if isinstance(init, TuckerFactors):
        return ("provided", init)
    if isinstance(init, str):
        if init == "hosvd":
            return ("hosvd", None)
        if init == "random":
            return ("random", 0)
        if init.startswith("random:"):
            return ("random", int(init.split(":", 1)[1]))
        raise ValueError(f"unknown init spec {init!r}")
    if isinstance(init, (tuple, list)) and len(init) == 2 and init[0] == "random":
        return ("random", int(init[1]))
    raise ValueError(f"unknown init spec {init!r}")


def _initial_factors(B, core_dims, config, pinned) -> list[np.ndarray]:
    kind, payload = _normalize_init(config.init)
    dims = B.shape
    if kind == "random":
        from .tensor import scalar_kind

        base = random_init(dims, core_dims, payload, scalar_kind(B)).factors
    elif kind == "hosvd":
        base = hosvd_init(B, core_dims).factors
    else:
        provided: TuckerFactors = payload
        if provided.dims != tuple(dims) or provided.core_dims != tuple(core_dims):
            raise ValueError(
                f"provided factors have shapes {provided.dims}/{provided.core_dims}, "
                f"expected {tuple(dims)}/{tuple(core_dims)}"
            )
        base = provided.factors
    out = []
    for mode, P in enumerate(base):
        if pinned[mode]:
            out.append(np.eye(dims[mode], dtype=B.dtype))
        else:
            out.append(np.asarray(P, dtype=B.dtype))
    return out


def _top_left_singular_vectors(C: np.ndarray, k: int):
    """Top-k left singular vectors of C plus all singular values.

    When k exceeds min(C.shape) the basis is completed from the full SVD
    (trailing singular values are zero)."""
    n, p = C.shape
    r = min(n, p)
    if k <= r:
        dec = thin_svd(C)
        return dec.U[:, :k], dec.s
    U, s, _ = np.linalg.svd(C, full_matrices=True)
    return U[:, :k], s


def _alternating_solve(B: np.ndarray, core_dims, config: SolverConfig) -> SolveResult:
    B = np.asarray(B)
    dims = B.shape
    m = B.ndim
    core_dims = tuple(int(k) for k in core_dims)
    _check_core_dims(dims, core_dims)

    norm_b = frobenius_norm(B)
    if not math.isfinite(norm_b):
        raise NumericalError("input tensor contains non-finite values")
    if norm_b == 0:
        raise ValueError("cannot decompose the zero tensor")

    pinned = [k == n for k, n in zip(core_dims, dims)]
    update_modes = [mode for mode in range(m) if not pinned[mode]]
    pinned_set = frozenset(mode for mode in range(m) if pinned[mode])

    for mode in update_modes:
        others = int(np.prod([core_dims[i] for i in range(m) if i != mode], dtype=np.int64))
        if core_dims[mode] > others:
            warnings.warn(
                f"core dimension {core_dims[mode]} at mode {mode} exceeds the product "
                f"{others} of the other core dimensions; the contracted unfolding is "
                "rank deficient and trailing factor directions are arbitrary",
                stacklevel=3,
            )

    factors = _initial_factors(B, core_dims, config, pinned)
    denoms = model.unfolding_spectral_norms(B, config.denominator)
    hooi_method = config.method == "hooi"

    history: list[IterationRecord] = []
    termination = MAX_SWEEPS
    f_prev: float | None = None
    stall = 0

    for sweep in range(config.max_sweeps):
        t0 = time.perf_counter()
        check_kkt = sweep % config.kkt_check_period == 0
        kkt_sum = 0.0 if check_kkt else None
        per_mode: list[ModeDiagnostics | None] = [None] * m
        f_new = norm_b * norm_b  # value when every mode is pinned

        for idx, mode in enumerate(update_modes):
            C = _form_c(B, factors, mode, pinned_set)
            P_old = factors[mode]
            k = core_dims[mode]
            G = C.conj().T @ P_old
            if sweep == 0 and idx == 0 and f_prev is None:
                f_prev = float(np.linalg.norm(G)) ** 2  # objective of the initial tuple

            need_resid = check_kkt or config.record_series
            resid = None
            if need_resid:
                W = C @ G
                Lam = G.conj().T @ G
                resid = float(np.linalg.norm(W - P_old @ Lam))
                if check_kkt:
                    kkt_sum += resid / (norm_b * denoms[mode])

            hnorm = None
            if hooi_method:
                P_new, s = _top_left_singular_vectors(C, k)
                lam_k = s[k - 1] ** 2 if k <= s.size else 0.0
                lam_k1 = s[k] ** 2 if k < s.size else 0.0
                weight = float(lam_k - lam_k1)
                f_part = float(np.sum(s[:k] ** 2))
                if config.record_series:
                    hnorm = float(np.sqrt(np.sum(s**4)))
            else:
                if resid is None:
                    W = C @ G
                dec = thin_svd(W)
                P_new = dec.U @ dec.Vh
                weight = float(dec.s[-1])
                f_part = float(np.linalg.norm(C.conj().T @ P_new)) ** 2
                if config.record_series:
                    sc = singular_values(C)
                    hnorm = float(np.sqrt(np.sum(sc**4)))

            if config.greedy_align:
                P_new = align(P_new, P_old)

            st = sin_theta_dist(P_new, P_old, "fro")
            mult_resid = None if (resid is None or hnorm is None or hnorm == 0) else resid / hnorm
            per_mode[mode] = ModeDiagnostics(
                weight=weight,
                subspace_change=st,
                kkt_term=(resid / (norm_b * denoms[mode])) if check_kkt else None,
                multiplier_residual=mult_resid,
                series_subspace=weight * st * st,
                series_residual=(weight * mult_resid * mult_resid) if mult_resid is not None else None,
            )
            factors[mode] = P_new
            f_new = f_part

        if not math.isfinite(f_new):
            raise NumericalError(f"objective became non-finite at sweep {sweep}")

        history.append(
            IterationRecord(
                sweep=sweep,
                objective=f_new,
                cheap_kkt=kkt_sum,
                per_mode=tuple(per_mode),
                wall_time=time.perf_counter() - t0,
            )
        )

        if check_kkt and kkt_sum <= config.eps_kkt:
            termination = KKT_CONVERGED
            break
        rel = abs(f_new - f_prev) / f_new if f_new > 0 else 0.0
        stall = stall + 1 if rel <= config.eps_obj else 0
        f_prev = f_new
        if stall >= _STALL_WINDOW and check_kkt and kkt_sum <= math.sqrt(config.eps_kkt):
            termination = OBJ_STALLED
            break

    result_factors = TuckerFactors(tuple(factors))
    core = model.core(B, result_factors)
    final_kkt = model.kkt_residual(
        B,
        result_factors,
        variant="full",
        denominator=config.denominator,
        unfolding_norms=denoms,
    )
    return SolveResult(
        factors=result_factors,
        core=core,
        history=tuple(history),
        termination=termination,
        final_full_kkt=final_kkt,
    )


def _form_c(B, factors, mode, pinned_set):
    from .tensor import mode_mul

    order = sorted(
        (i for i in range(B.ndim) if i != mode and i not in pinned_set),
        key=lambda i: B.shape[i],
        reverse=True,
    )
    out = B
    for i in order:
        out = mode_mul(out, i, factors[i].conj().T)
    return unfold(out, mode)
