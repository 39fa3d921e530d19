"""Synthetic tensors, flop-cost estimates, and the benchmark sweep driver.

The generator plants a Gaussian core of the target multilinear rank inside a
zero tensor, adds full Gaussian noise scaled by ``eta``, and rotates every
mode by an independent orthonormalized-Gaussian square matrix; ``eta``
controls how far the result sits from an exact low-multilinear-rank tensor
(``eta = 0`` is exact).
"""

from __future__ import annotations

import csv
import io as _io
import os
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import model, solvers
from .tensor import frobenius_norm, multi_mode_mul

THREAD_ENV_VAR = "TUCKERKIT_THREADS"


@dataclass(frozen=True)
class SyntheticSpec:
    dims: tuple[int, ...]
    core_dims: tuple[int, ...]
    eta: float
    seed: int
    kind: str = "real"

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        object.__setattr__(self, "core_dims", tuple(int(k) for k in self.core_dims))
        if len(self.dims) != len(self.core_dims) or not self.dims:
            raise ValueError("dims and core_dims must be equal-length and nonempty")
        if any(k < 1 or k > n for n, k in zip(self.dims, self.core_dims)):
            raise ValueError(f"core_dims {self.core_dims} must lie in 1..dims {self.dims}")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.kind not in ("real", "complex"):
            raise ValueError(f"kind must be 'real' or 'complex', got {self.kind!r}")


@dataclass(frozen=True)
class SyntheticParts:
    tensor: np.ndarray
    planted_factors: tuple[np.ndarray, ...]   # leading core_dims columns of each rotation
    rotations: tuple[np.ndarray, ...]


def _gaussian(rng, shape, kind):
    size = int(np.prod(shape, dtype=np.int64))
    draw = rng.standard_normal(size)
    if kind == "complex":
        draw = draw + 1j * rng.standard_normal(size)
    return np.reshape(draw, shape, order="F")


def gen_synthetic(spec: SyntheticSpec, return_parts: bool = False):
    """Generate the synthetic tensor for `spec`; deterministic per seed.

    With ``return_parts=True`` also returns the mode rotations and the
    planted orthonormal factors (the ground truth for ``eta = 0``).
    """
    rng = np.random.default_rng(spec.seed)
    dtype = np.complex128 if spec.kind == "complex" else np.float64
    T = np.zeros(spec.dims, dtype=dtype, order="F")
    block = tuple(slice(0, k) for k in spec.core_dims)
    T[block] = _gaussian(rng, spec.core_dims, spec.kind)
    E = _gaussian(rng, spec.dims, spec.kind)
    rotations = []
    for n in spec.dims:
        Q, _ = np.linalg.qr(_gaussian(rng, (n, n), spec.kind))
        rotations.append(Q)
    B = multi_mode_mul(T + spec.eta * E, list(enumerate(rotations)))
    B = np.asfortranarray(B)
    if not return_parts:
        return B
    planted = tuple(Q[:, :k].copy() for Q, k in zip(rotations, spec.core_dims))
    return B, SyntheticParts(tensor=B, planted_factors=planted, rotations=tuple(rotations))


def flop_estimate(dims, core_dims, method: str, kind: str = "real") -> dict:
    """Leading-order multiply-add counts per sweep.

    ``form_C`` covers forming every contracted unfolding; ``svd`` the
    factorizations (for ``hooi`` one thin SVD of each n x prod-k matrix, for
    ``asi`` of the thinner n x k update matrices); ``polar`` the ``H @ P``
    products only ``asi`` performs.  Complex arithmetic quadruples the total.
    """
    dims = tuple(int(n) for n in dims)
    core_dims = tuple(int(k) for k in core_dims)
    if len(dims) != len(core_dims):
        raise ValueError("dims and core_dims must have equal length")
    if method not in ("hooi", "asi"):
        raise ValueError(f"unknown method {method!r}")
    n_prod = int(np.prod(dims, dtype=np.int64))
    k_prod = int(np.prod(core_dims, dtype=np.int64))
    form_c = n_prod * sum(core_dims)
    if method == "hooi":
        svd = sum(
            n * (k_prod // k) ** 2 for n, k in zip(dims, core_dims)
        )
        polar = 0
    else:
        svd = sum(n * k * k for n, k in zip(dims, core_dims))
        polar = k_prod * sum(dims)
    factor = 4 if kind == "complex" else 1
    return {
        "form_C": factor * form_c,
        "svd": factor * svd,
        "polar": factor * polar,
        "total": factor * (form_c + svd + polar),
    }


@dataclass(frozen=True)
class BenchCell:
    """One benchmark cell, held as raw values so that invalid cells are
    reported as failed rows at run time instead of aborting plan loading."""

    dims: tuple[int, ...]
    core_dims: tuple[int, ...]
    eta: float
    seed: int
    method: str
    init: str  # "random:SEED" or "hosvd"
    kind: str = "real"

    def spec(self) -> SyntheticSpec:
        return SyntheticSpec(
            dims=self.dims, core_dims=self.core_dims, eta=self.eta, seed=self.seed, kind=self.kind
        )

    @classmethod
    def from_spec(cls, spec: SyntheticSpec, method: str, init: str) -> "BenchCell":
        return cls(
            dims=spec.dims,
            core_dims=spec.core_dims,
            eta=spec.eta,
            seed=spec.seed,
            method=method,
            init=init,
            kind=spec.kind,
        )


@dataclass
class BenchRow:
    cell: int
    rep: int
    method: str
    init: str
    dims: tuple[int, ...]
    core_dims: tuple[int, ...]
    eta: float
    seed: int
    kind: str
    status: str = "ok"
    error: str | None = None
    sweeps: int | None = None
    cpu_seconds: float | None = None
    final_cheap_kkt: float | None = None
    final_full_kkt: float | None = None
    approx_error: float | None = None
    objective: float | None = None
    tensor_norm: float | None = None
    termination: str | None = None
    history: list[dict] = field(default_factory=list)


def paperlike_small_plan(seeds=(0, 1, 2)) -> list[BenchCell]:
    """Small-scale replication plan: 100x110x120 tensors, core 12x11x10,
    eta in {2^-3, 2^-4, 2^-5}, both methods, shared random inits."""
    plan = []
    for eta_exp in (3, 4, 5):
        for seed in seeds:
            for method in ("hooi", "asi"):
                plan.append(
                    BenchCell(
                        dims=(100, 110, 120),
                        core_dims=(12, 11, 10),
                        eta=2.0**-eta_exp,
                        seed=seed,
                        method=method,
                        init=f"random:{seed}",
                    )
                )
    return plan


def _run_cell(cell_index: int, rep: int, cell: BenchCell, config: solvers.SolverConfig) -> BenchRow:
    row = BenchRow(
        cell=cell_index,
        rep=rep,
        method=cell.method,
        init=cell.init,
        dims=tuple(cell.dims),
        core_dims=tuple(cell.core_dims),
        eta=cell.eta,
        seed=cell.seed,
        kind=cell.kind,
    )
    try:
        spec = cell.spec()
        B = gen_synthetic(spec)
        cfg = solvers.SolverConfig(
            method=cell.method,
            init=cell.init,
            eps_obj=config.eps_obj,
            eps_kkt=config.eps_kkt,
            max_sweeps=config.max_sweeps,
            greedy_align=config.greedy_align,
            kkt_check_period=config.kkt_check_period,
            denominator=config.denominator,
            record_series=config.record_series,
        )
        t0 = time.perf_counter()
        result = solvers.solve(B, spec.core_dims, cfg)
        elapsed = time.perf_counter() - t0
        nrm = frobenius_norm(B)
        bhat = model.reconstruct(result.core, result.factors)
        row.sweeps = len(result.history)
        row.cpu_seconds = elapsed
        row.final_cheap_kkt = _last_cheap_kkt(result)
        row.final_full_kkt = result.final_full_kkt.total
        row.approx_error = model.approx_error(B, bhat)
        row.objective = result.history[-1].objective
        row.tensor_norm = nrm
        row.termination = result.termination
        row.history = [
            {"sweep": rec.sweep, "objective": rec.objective, "cheap_kkt": rec.cheap_kkt}
            for rec in result.history
        ]
    except Exception as exc:  # cell isolation: a failed cell must not abort the sweep
        row.status = "failed"
        row.error = f"{type(exc).__name__}: {exc}"
        row.history = []
        traceback.clear_frames(exc.__traceback__)
    return row


def _last_cheap_kkt(result: solvers.SolveResult) -> float | None:
    for rec in reversed(result.history):
        if rec.cheap_kkt is not None:
            return rec.cheap_kkt
    return None


def _worker_count(requested: int | None) -> int:
    limit = os.environ.get(THREAD_ENV_VAR)
    workers = 1 if requested is None else max(1, int(requested))
    if limit:
        workers = min(workers, max(1, int(limit)))
    return workers


@dataclass
class BenchReport:
    rows: list[BenchRow]

    def ok_rows(self) -> list[BenchRow]:
        return [r for r in self.rows if r.status == "ok"]

    def summary(self) -> list[dict]:
        """Median sweeps and mean CPU time per (method, init, eta) group."""
        groups: dict[tuple, list[BenchRow]] = {}
        for r in self.ok_rows():
            groups.setdefault((r.method, r.init.split(":")[0], r.eta), []).append(r)
        out = []
        for (method, init_kind, eta), rows in sorted(groups.items()):
            out.append(
                {
                    "method": method,
                    "init": init_kind,
                    "eta": eta,
                    "runs": len(rows),
                    "median_sweeps": float(np.median([r.sweeps for r in rows])),
                    "mean_cpu_seconds": float(np.mean([r.cpu_seconds for r in rows])),
                    "max_final_cheap_kkt": max((r.final_cheap_kkt for r in rows if r.final_cheap_kkt is not None), default=None),
                }
            )
        return out

    _CSV_FIELDS = (
        "cell rep method init eta seed kind dims core_dims status sweeps cpu_seconds "
        "final_cheap_kkt final_full_kkt approx_error objective tensor_norm termination error"
    ).split()

    def to_csv(self) -> str:
        buf = _io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self._CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for r in self.rows:
            writer.writerow(
                {
                    **{k: getattr(r, k) for k in self._CSV_FIELDS if k not in ("dims", "core_dims")},
                    "dims": "x".join(map(str, r.dims)),
                    "core_dims": "x".join(map(str, r.core_dims)),
                }
            )
        return buf.getvalue()

    def to_long_csv(self) -> str:
        """Plot-ready long format: one (run, sweep, series, value) per line."""
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["cell", "rep", "method", "init", "eta", "seed", "sweep", "series", "value"])
        for r in self.rows:
            for rec in r.history:
                base = [r.cell, r.rep, r.method, r.init, r.eta, r.seed, rec["sweep"]]
                writer.writerow(base + ["objective", rec["objective"]])
                if rec["cheap_kkt"] is not None:
                    writer.writerow(base + ["cheap_kkt", rec["cheap_kkt"]])
        return buf.getvalue()

    def to_jsonable(self) -> dict:
        rows = []
        for r in self.rows:
            d = {k: getattr(r, k) for k in self._CSV_FIELDS}
            d["dims"] = list(r.dims)
            d["core_dims"] = list(r.core_dims)
            d["history"] = r.history
            rows.append(d)
        return {"rows": rows, "summary": self.summary()}


def bench_sweep(
    plan: list[BenchCell],
    repetitions: int = 1,
    max_workers: int | None = None,
    config: solvers.SolverConfig | None = None,
) -> BenchReport:
    """Run every (cell, repetition), collecting one row each.

    Failed cells are recorded with their error and do not abort the sweep.
    Cells run concurrently up to ``max_workers`` (further capped by the
    ``TUCKERKIT_THREADS`` environment variable).
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    base = config or solvers.SolverConfig()
    tasks = [
        (i, rep, cell)
        for i, cell in enumerate(plan)
        for rep in range(repetitions)
    ]
    workers = _worker_count(max_workers)
    if workers == 1:
        rows = [_run_cell(i, rep, cell, base) for i, rep, cell in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda t: _run_cell(t[0], t[1], t[2], base), tasks))
    return BenchReport(rows=rows)
