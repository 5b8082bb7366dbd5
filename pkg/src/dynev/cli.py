"""Benchmark command line for the dynamic top-eigenvalue tracker.

Subcommands
-----------
gen       write a seeded instance (matrix + update stream) to disk
run       drive the tracker over a stream, emit a per-step CSV report
sweep     recompute-count scaling table across problem sizes
checkpsd  factorization-or-refutation check for a symmetric matrix
profile   spectrum level profile of a single matrix

Determinism contract: the CSV written by any subcommand is a pure function
of the flags and the seed.  Wall-clock time appears only in the JSON
summary, never in CSV output.  Floats are rendered with ``repr``, i.e. the
shortest string that round-trips the exact double.

The default seed is 0, overridable by the DYNEV_SEED environment variable
or an explicit ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from typing import IO, Sequence

import numpy as np

from . import eigtracker, oracle, psdcheck, sparse, streams

__all__ = ["main", "build_parser"]

_ORACLE_DIM_CAP = 512

RUN_CSV_HEADER = "t,lambda_t,oracle_lambda_max,witness_quality,recompute_flag,epoch,touched_nnz"
SWEEP_CSV_HEADER = "n,eps,T,trials,mean_recompute,bound,ratio"


def _default_seed() -> int:
    raw = os.environ.get("DYNEV_SEED", "0")
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"DYNEV_SEED must be an integer, got {raw!r}") from exc


def _fmt(x: float) -> str:
    return repr(float(x))


def recompute_bound(n: int, eps: float) -> float:
    """Reference envelope log2(n) * log2(n/eps)^5 / eps^2 for sweep ratios."""
    return math.log2(max(n, 2)) * math.log2(n / eps) ** 5 / eps**2


def _open_out(path: str | None) -> tuple[IO[str], bool]:
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline="\n"), True


def _parse_stream_spec(args: argparse.Namespace) -> streams.StreamSpec:
    return streams.StreamSpec(
        mode=args.gen,
        n=args.n,
        T=args.T,
        density=args.density,
        seed=args.seed,
        eps_target=args.eps_target,
        drain_all=getattr(args, "drain_all", False),
        depth=getattr(args, "depth", 0.25),
    )


def _load_instance(
    args: argparse.Namespace,
) -> tuple[sparse.SparseSymMatrix, list[sparse.SparseVector]]:
    if args.gen is not None:
        return streams.generate(_parse_stream_spec(args))
    if args.matrix is None:
        raise ValueError("either --gen or --matrix/--stream is required")
    A0 = sparse.read_matrix_market(args.matrix)
    updates = sparse.read_stream_jsonl(args.stream, A0.n) if args.stream else []
    return A0, updates


# ---------------------------------------------------------------------------
# gen


def cmd_gen(args: argparse.Namespace) -> int:
    spec = _parse_stream_spec(args)
    A0, updates = streams.generate(spec)
    sparse.write_matrix_market(args.out_matrix, A0)
    sparse.write_stream_jsonl(args.out_stream, updates)
    info = {
        "mode": spec.mode,
        "n": spec.n,
        "T": len(updates),
        "seed": spec.seed,
        "nnz_matrix": A0.nnz,
        "nnz_stream": int(sum(v.nnz for v in updates)),
        "matrix": args.out_matrix,
        "stream": args.out_stream,
    }
    print(json.dumps(info, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# run


class _VerifyChain:
    """Per-step exact-spectrum oracle, warm-started between rank-one steps."""

    def __init__(self, A0: sparse.SparseSymMatrix):
        if A0.n > _ORACLE_DIM_CAP:
            raise ValueError(
                f"--verify/--profile supports n <= {_ORACLE_DIM_CAP}, got n = {A0.n}"
            )
        self.dense = A0.to_dense()
        self.spectrum = oracle.exact_spectrum(self.dense)

    def step(self, v: sparse.SparseVector) -> None:
        vd = v.to_dense()
        self.dense -= np.outer(vd, vd)
        self.spectrum = oracle.exact_spectrum_warm(self.dense, self.spectrum.vectors)

    @property
    def lambda_max(self) -> float:
        return float(self.spectrum.values[0])


def _verify_step(
    t: int, lam: float, quality: float, lam_max: float, eps: float
) -> str | None:
    tol = 1e-9
    lo = (1.0 - eps) * lam_max - tol
    hi = lam_max * (1.0 + tol) + tol
    if not (lo <= lam <= hi):
        return (
            f"step {t}: lambda_t = {lam!r} outside sandwich "
            f"[{lo!r}, {hi!r}] (oracle lambda_max = {lam_max!r})"
        )
    if quality < lo:
        return (
            f"step {t}: witness quality {quality!r} below "
            f"(1 - eps) * lambda_max - 1e-9 = {lo!r}"
        )
    return None


def cmd_run(args: argparse.Namespace) -> int:
    A0, updates = _load_instance(args)
    T = len(updates)
    need_oracle = args.verify or args.profile is not None
    chain = _VerifyChain(A0) if need_oracle else None

    out, close_out = _open_out(args.out_csv)
    t0 = time.perf_counter()
    events: list[tuple[str, np.ndarray]] = []
    epochs_final = 0
    rc_total = 0
    touched_total = 0
    failure: str | None = None
    try:
        out.write(RUN_CSV_HEADER + "\n")
        tr = eigtracker.new(args.eps, A0, seed=args.seed)
        prev_rc = 0
        prev_touched = 0

        def emit(t: int, est: eigtracker.EigenEstimate) -> str | None:
            nonlocal prev_rc, prev_touched, epochs_final, rc_total, touched_total
            snap = tr.snapshot()
            rc_flag = snap["recompute_count"] - prev_rc
            touched = snap["touched_nnz_total"] - prev_touched
            prev_rc = snap["recompute_count"]
            prev_touched = snap["touched_nnz_total"]
            epochs_final = snap["epoch"]
            rc_total += rc_flag
            touched_total += touched
            quality = tr.witness_quality()
            oracle_field = ""
            err = None
            if chain is not None:
                oracle_field = _fmt(chain.lambda_max)
                if args.verify:
                    err = _verify_step(t, est.lambda_, quality, chain.lambda_max, args.eps)
            out.write(
                f"{t},{_fmt(est.lambda_)},{oracle_field},{_fmt(quality)},"
                f"{rc_flag},{snap['epoch']},{touched}\n"
            )
            if args.profile is not None and rc_flag > 0 and chain is not None:
                events.append((f"t={t}", chain.dense.copy()))
            return err

        failure = emit(0, tr.query())
        if failure is None:
            for t, v in enumerate(updates, start=1):
                if chain is not None:
                    chain.step(v)
                est = tr.update(v)
                failure = emit(t, est)
                if failure is not None:
                    break
    finally:
        if close_out:
            out.close()
    wall = time.perf_counter() - t0

    if failure is not None:
        print(f"verification failed at {failure}", file=sys.stderr)
        return 1

    if args.profile is not None and chain is not None and events:
        lambda0 = float(oracle.exact_spectrum(A0.to_dense()).values[0])
        rows = oracle.potential_trace(events, lambda0, args.eps)
        oracle.write_potential_csv(args.profile, rows)

    summary = {
        "n": A0.n,
        "T": T,
        "eps": args.eps,
        "seed": args.seed,
        "recompute_count": rc_total,
        "epochs": epochs_final,
        "total_touched_nnz": touched_total,
        "wall_time_s": wall,
    }
    stream = sys.stderr if args.out_summary is None else open(args.out_summary, "w")
    try:
        print(json.dumps(summary, sort_keys=True), file=stream)
    finally:
        if args.out_summary is not None:
            stream.close()
    return 0


# ---------------------------------------------------------------------------
# sweep


def cmd_sweep(args: argparse.Namespace) -> int:
    ns = [int(x) for x in args.n.split(",") if x]
    epss = [float(x) for x in args.eps.split(",") if x]
    if not ns or not epss:
        raise ValueError("--n and --eps must be non-empty comma-separated lists")
    out, close_out = _open_out(args.out_csv)
    try:
        out.write(SWEEP_CSV_HEADER + "\n")
        for n in ns:
            for eps in epss:
                T = args.T_mult * n
                counts = []
                for trial in range(args.trials):
                    spec = streams.StreamSpec(
                        mode=args.mode,
                        n=n,
                        T=T,
                        density=args.density,
                        seed=args.seed + trial,
                        eps_target=eps,
                        depth=args.depth,
                    )
                    A0, updates = streams.generate(spec)
                    tr = eigtracker.new(eps, A0, seed=args.seed + trial)
                    for v in updates:
                        tr.update(v)
                    counts.append(tr.snapshot()["recompute_count"])
                mean = sum(counts) / len(counts)
                bound = recompute_bound(n, eps)
                out.write(
                    f"{n},{_fmt(eps)},{T},{args.trials},{_fmt(mean)},"
                    f"{_fmt(bound)},{_fmt(mean / bound)}\n"
                )
    finally:
        if close_out:
            out.close()
    return 0


# ---------------------------------------------------------------------------
# checkpsd


def cmd_checkpsd(args: argparse.Namespace) -> int:
    A = sparse.read_matrix_market(args.matrix)
    verdict = psdcheck.check_psd(args.delta, args.kappa, A, seed=args.seed)
    report = {
        "n": A.n,
        "delta": args.delta,
        "kappa": args.kappa,
        "seed": args.seed,
        "steps": verdict.steps,
        "budget_T": verdict.config.T,
        "sigma": verdict.sigma,
    }
    if verdict.is_psd:
        report["result"] = "certificate"
        if args.out_x is not None:
            sparse.write_dense_matrix_market(args.out_x, verdict.X)
            report["x_path"] = args.out_x
    else:
        report["result"] = "not-psd"
        report["reason"] = verdict.reason
    print(json.dumps(report, sort_keys=True))
    return 0 if verdict.is_psd else 1


# ---------------------------------------------------------------------------
# profile


def cmd_profile(args: argparse.Namespace) -> int:
    A = sparse.read_matrix_market(args.matrix)
    if A.n > _ORACLE_DIM_CAP:
        raise ValueError(f"profile supports n <= {_ORACLE_DIM_CAP}, got n = {A.n}")
    dense = A.to_dense()
    spec = oracle.exact_spectrum(dense)
    lambda0 = args.lambda0 if args.lambda0 is not None else float(spec.values[0])
    prof = oracle.spectrum_profile(spec.values, lambda0, args.eps)
    if args.out_csv is not None:
        rows = [("A", j, phi) for j, phi in enumerate(prof.potentials)]
        oracle.write_potential_csv(args.out_csv, rows)
    info = {
        "n": A.n,
        "eps": args.eps,
        "lambda0": lambda0,
        "level_width": prof.level_width,
        "levels": [int(x) for x in prof.levels],
        "below": int(prof.below),
        "important": [int(x) for x in prof.important],
        "dim_span": int(prof.dim_span),
    }
    print(json.dumps(info, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gen", choices=streams._MODES, default=None,
                   help="generate the instance in-process instead of reading files")
    p.add_argument("--matrix", default=None, help="Matrix Market input matrix")
    p.add_argument("--stream", default=None, help="JSONL update stream")
    p.add_argument("--n", type=int, default=50, help="dimension for --gen")
    p.add_argument("--T", type=int, default=0, help="stream length for --gen")
    p.add_argument("--density", type=float, default=0.15,
                   help="factor-column density for --gen")
    p.add_argument("--eps-target", dest="eps_target", type=float, default=0.2,
                   help="accuracy the generated instance is aimed at")
    p.add_argument("--drain-all", dest="drain_all", action="store_true",
                   help="eig-drain: fully remove every planted direction")
    p.add_argument("--depth", type=float, default=0.25,
                   help="eig-drain: target top-eigenvalue decay factor")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynev",
        description="dynamic top-eigenvalue tracking benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    seed_kw = dict(type=int, default=None,
                   help="RNG seed (default: DYNEV_SEED env var, else 0)")

    p = sub.add_parser("gen", help="write a seeded instance to disk")
    _add_instance_flags(p)
    p.add_argument("--seed", **seed_kw)
    p.add_argument("--out-matrix", required=True)
    p.add_argument("--out-stream", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="track a stream and emit a per-step CSV")
    _add_instance_flags(p)
    p.add_argument("--eps", type=float, required=True, help="target accuracy")
    p.add_argument("--seed", **seed_kw)
    p.add_argument("--verify", action="store_true",
                   help="cross-check every step against the exact oracle "
                        f"(n <= {_ORACLE_DIM_CAP})")
    p.add_argument("--profile", default=None, metavar="CSV",
                   help="write level-set potentials at recompute events")
    p.add_argument("--out-csv", default=None, help="per-step report (default stdout)")
    p.add_argument("--out-summary", default=None,
                   help="JSON summary (default stderr)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="recompute-count scaling table")
    p.add_argument("--n", required=True, help="comma-separated dimensions")
    p.add_argument("--eps", required=True, help="comma-separated accuracies")
    p.add_argument("--T-mult", dest="T_mult", type=int, default=4,
                   help="stream length multiplier: T = T_mult * n")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--mode", choices=streams._MODES, default="eig-drain")
    p.add_argument("--density", type=float, default=0.15)
    p.add_argument("--depth", type=float, default=0.25)
    p.add_argument("--seed", **seed_kw)
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("checkpsd", help="factorize or refute a symmetric matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--seed", **seed_kw)
    p.add_argument("--out-x", default=None, help="write the factor X (Matrix Market)")
    p.set_defaults(func=cmd_checkpsd)

    p = sub.add_parser("profile", help="spectrum level profile of one matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--lambda0", type=float, default=None,
                   help="reference top eigenvalue (default: computed)")
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_profile)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None:
        args.seed = _default_seed()
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"dynev: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
