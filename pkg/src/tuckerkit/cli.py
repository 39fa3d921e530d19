"""Command-line front end.

Subcommands: ``generate`` (synthetic tensors), ``decompose`` (run a solver),
``bench`` (benchmark sweeps), ``info`` (inspect tensor files).  All numeric
JSON output is printed with 17 significant digits; identical flags plus a
fixed seed produce byte-identical output apart from the timing fields
(the ``timing`` subtree and per-record ``wall_time``).

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import genbench, io as tio, model, solvers
from ._jsonout import dumps
from .tensor import frobenius_norm, scalar_kind
from .linalg import singular_values
from .tensor import unfold


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the CLI contract wants 1
        raise UsageError(message)


def _parse_ints(text: str, flag: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise UsageError(f"{flag} expects a comma-separated integer list, got {text!r}")
    if not values or any(v < 1 for v in values):
        raise UsageError(f"{flag} entries must be positive integers, got {text!r}")
    return values


def _build_parser() -> _Parser:
    parser = _Parser(prog="tuckerkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a synthetic tensor file")
    gen.add_argument("--dims", required=True)
    gen.add_argument("--core-dims", required=True)
    gen.add_argument("--eta", type=float, required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--kind", choices=("real", "complex"), default="real")
    gen.add_argument("--out", required=True)

    dec = sub.add_parser("decompose", help="compute a Tucker decomposition")
    dec.add_argument("--in", dest="infile", required=True)
    dec.add_argument("--method", choices=("hooi", "asi"), required=True)
    dec.add_argument("--core-dims", required=True)
    dec.add_argument("--init", default="random:0", help="random:SEED or hosvd")
    dec.add_argument("--eps-obj", type=float, default=1e-12)
    dec.add_argument("--eps-kkt", type=float, default=1e-8)
    dec.add_argument("--max-sweeps", type=int, default=10000)
    dec.add_argument("--greedy-align", action="store_true")
    dec.add_argument("--kkt-period", type=int, default=1)
    dec.add_argument("--denominator", choices=("exact", "estimate"), default="estimate")
    dec.add_argument("--history", help="write per-sweep records to this JSON file")
    dec.add_argument("--factors-out", help="prefix for core/factor TNSR1 files")

    ben = sub.add_parser("bench", help="run a benchmark sweep")
    group = ben.add_mutually_exclusive_group(required=True)
    group.add_argument("--plan", help="JSON file with a list of cells")
    group.add_argument("--preset", choices=("paperlike-small",))
    ben.add_argument("--out-prefix", required=True)
    ben.add_argument("--reps", type=int, default=1)
    ben.add_argument("--workers", type=int, default=1)
    ben.add_argument("--eps-kkt", type=float, default=1e-8)
    ben.add_argument("--max-sweeps", type=int, default=10000)

    inf = sub.add_parser("info", help="describe a tensor file")
    inf.add_argument("--in", dest="infile", required=True)
    inf.add_argument("--raw", choices=("f32", "f64"), help="read a headerless float stream")
    inf.add_argument("--dims", help="dimensions for --raw input")
    inf.add_argument("--probe-core-dims", help="also report per-mode top-(k+1) singular values")

    return parser


def _cmd_generate(args) -> dict:
    dims = _parse_ints(args.dims, "--dims")
    core_dims = _parse_ints(args.core_dims, "--core-dims")
    try:
        spec = genbench.SyntheticSpec(
            dims=dims, core_dims=core_dims, eta=args.eta, seed=args.seed, kind=args.kind
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    B = genbench.gen_synthetic(spec)
    tio.write_tensor(args.out, B)
    ratios = []
    for mode, k in enumerate(core_dims):
        s = singular_values(unfold(B, mode))
        ratios.append(float(s[k] / s[0]) if k < s.size else None)
    return {
        "path": args.out,
        "dims": list(dims),
        "core_dims": list(core_dims),
        "eta": args.eta,
        "seed": args.seed,
        "kind": args.kind,
        "frobenius_norm": frobenius_norm(B),
        "mode_sigma_ratios": ratios,
    }


def _mode_diag_payload(diag: solvers.ModeDiagnostics | None):
    if diag is None:
        return None
    return {
        "weight": diag.weight,
        "subspace_change": diag.subspace_change,
        "kkt_term": diag.kkt_term,
        "multiplier_residual": diag.multiplier_residual,
        "series_subspace": diag.series_subspace,
        "series_residual": diag.series_residual,
    }


def _kkt_payload(report: model.KktReport) -> dict:
    eigs = [
        sorted((float(v) for v in np.linalg.eigvalsh(Om)), reverse=True)
        for Om in report.mode_multipliers
    ]
    return {
        "variant": report.variant,
        "denominator": report.denominator_mode,
        "total": report.total,
        "per_mode": list(report.per_mode_residuals),
        "multiplier_eigenvalues": eigs,
    }


def _cmd_decompose(args) -> dict:
    core_dims = _parse_ints(args.core_dims, "--core-dims")
    B = tio.read_tensor(args.infile)
    config = solvers.SolverConfig(
        method=args.method,
        eps_obj=args.eps_obj,
        eps_kkt=args.eps_kkt,
        max_sweeps=args.max_sweeps,
        init=args.init,
        greedy_align=args.greedy_align,
        kkt_check_period=args.kkt_period,
        denominator=args.denominator,
    )
    try:
        config.validated()
        _ = solvers._normalize_init(args.init)
    except ValueError as exc:
        raise UsageError(str(exc))
    t0 = time.perf_counter()
    try:
        result = solvers.solve(B, core_dims, config)
    except ValueError as exc:
        raise UsageError(str(exc))
    elapsed = time.perf_counter() - t0

    nrm = frobenius_norm(B)
    bhat = model.reconstruct(result.core, result.factors)
    err = model.approx_error(B, bhat)

    outputs: dict = {}
    if args.factors_out:
        core_path = f"{args.factors_out}.core.tnsr"
        tio.write_tensor(core_path, np.asfortranarray(result.core))
        outputs["core"] = core_path
        factor_paths = []
        for mode, P in enumerate(result.factors):
            path = f"{args.factors_out}.factor{mode}.tnsr"
            tio.write_tensor(path, np.asfortranarray(P))
            factor_paths.append(path)
        outputs["factors"] = factor_paths
    if args.history:
        records = [
            {
                "sweep": rec.sweep,
                "objective": rec.objective,
                "cheap_kkt": rec.cheap_kkt,
                "per_mode": [_mode_diag_payload(d) for d in rec.per_mode],
                "wall_time": rec.wall_time,
            }
            for rec in result.history
        ]
        with open(args.history, "w") as fh:
            fh.write(dumps({"records": records}))
        outputs["history"] = args.history

    last_kkt = next(
        (rec.cheap_kkt for rec in reversed(result.history) if rec.cheap_kkt is not None), None
    )
    return {
        "method": args.method,
        "input": args.infile,
        "dims": list(B.shape),
        "core_dims": list(core_dims),
        "kind": scalar_kind(B),
        "tensor_norm": nrm,
        "objective": result.history[-1].objective,
        "approx_error": err,
        "termination": result.termination,
        "sweeps": len(result.history),
        "final_cheap_kkt": last_kkt,
        "kkt": _kkt_payload(result.final_full_kkt),
        "config": {
            "init": args.init,
            "eps_obj": args.eps_obj,
            "eps_kkt": args.eps_kkt,
            "max_sweeps": args.max_sweeps,
            "greedy_align": args.greedy_align,
            "kkt_check_period": args.kkt_period,
            "denominator": args.denominator,
        },
        "outputs": outputs,
        "timing": {"solve_seconds": elapsed},
    }


def _load_plan(path) -> list[genbench.BenchCell]:
    import json

    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise UsageError("plan file must hold a JSON list of cells")
    cells = []
    for i, entry in enumerate(raw):
        try:
            cells.append(
                genbench.BenchCell(
                    dims=tuple(int(v) for v in entry["dims"]),
                    core_dims=tuple(int(v) for v in entry["core_dims"]),
                    eta=float(entry["eta"]),
                    seed=int(entry["seed"]),
                    method=entry["method"],
                    init=entry.get("init", f"random:{entry['seed']}"),
                    kind=entry.get("kind", "real"),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad plan cell {i}: {exc}")
    return cells


def _cmd_bench(args) -> tuple[dict, int]:
    if args.plan:
        plan = _load_plan(args.plan)
    else:
        plan = genbench.paperlike_small_plan()
    config = solvers.SolverConfig(eps_kkt=args.eps_kkt, max_sweeps=args.max_sweeps)
    report = genbench.bench_sweep(
        plan, repetitions=args.reps, max_workers=args.workers, config=config
    )
    csv_path = f"{args.out_prefix}.csv"
    json_path = f"{args.out_prefix}.json"
    long_path = f"{args.out_prefix}.long.csv"
    with open(csv_path, "w") as fh:
        fh.write(report.to_csv())
    with open(json_path, "w") as fh:
        fh.write(dumps(report.to_jsonable()))
    with open(long_path, "w") as fh:
        fh.write(report.to_long_csv())
    failed = sum(1 for r in report.rows if r.status == "failed")
    payload = {
        "cells": len(plan),
        "rows": len(report.rows),
        "failed": failed,
        "outputs": {"csv": csv_path, "json": json_path, "long_csv": long_path},
    }
    code = 2 if report.rows and failed == len(report.rows) else 0
    return payload, code


def _cmd_info(args) -> dict:
    if args.raw:
        if not args.dims:
            raise UsageError("--raw requires --dims")
        dims = _parse_ints(args.dims, "--dims")
        B = tio.read_raw(args.infile, dims, args.raw)
        fmt = f"raw-{args.raw}"
    else:
        if args.dims:
            raise UsageError("--dims is only valid together with --raw")
        B = tio.read_tensor(args.infile)
        fmt = "tnsr1"
    payload = {
        "path": args.infile,
        "format": fmt,
        "dims": list(B.shape),
        "kind": scalar_kind(B),
        "frobenius_norm": frobenius_norm(B),
    }
    if args.probe_core_dims:
        core_dims = _parse_ints(args.probe_core_dims, "--probe-core-dims")
        if len(core_dims) != B.ndim:
            raise UsageError(
                f"--probe-core-dims lists {len(core_dims)} values for a {B.ndim}-mode tensor"
            )
        tops = []
        for mode, k in enumerate(core_dims):
            s = singular_values(unfold(B, mode))
            tops.append([float(v) for v in s[: min(k + 1, s.size)]])
        payload["mode_top_singular_values"] = tops
    return payload


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "generate":
            payload = _cmd_generate(args)
            code = 0
        elif args.command == "decompose":
            payload = _cmd_decompose(args)
            code = 0
        elif args.command == "bench":
            payload, code = _cmd_bench(args)
        else:
            payload = _cmd_info(args)
            code = 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except solvers.NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except (tio.TensorFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    sys.stdout.write(dumps(payload))
    return code


if __name__ == "__main__":
    sys.exit(main())
