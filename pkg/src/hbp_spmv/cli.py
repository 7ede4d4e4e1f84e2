"""Command-line surface: convert, verify, bench, analyze, generate, fetch.

Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 verification
failure, 4 network error.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
from pathlib import Path

import numpy as np

from .engine import (block2d_spmv_baseline, combine, hbp_spmv, plan_execution,
                     run_spmv)
from .fetch import FetchError, default_cache_dir, fetch
from .formats import (MatrixMarketError, TripletMatrix, coo_to_csr, csr_spmv,
                      dense_oracle_spmv, expand_symmetric, load_mtx, save_mtx)
from .hbp import HbpFormatError, build_hbp, hbp_to_triplets, load_hbp, save_hbp
from .metrics import (BenchReport, Timing, group_stats, group_stats_csv,
                      mean_group_std, reduction_summary, time_kernel)
from .partition import PartitionConfig, make_grid
from .reorder import (hash_permutations, sample_hash_params, sort_permutations)
from .synth import SyntheticSpec, generate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VERIFY = 3
EXIT_NETWORK = 4

KERNELS = ("csr", "2d", "hbp")
ORDERINGS = ("none", "hash", "sort")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this surface promises 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--col-width", type=int, default=4096,
                   help="column block width C (default 4096)")
    p.add_argument("--row-height", type=int, default=512,
                   help="row block height R (default 512)")
    p.add_argument("--warp-size", type=int, default=32,
                   help="lanes per warp group W (default 32)")
    p.add_argument("--fixed-fraction", type=float, default=0.7,
                   help="share of blocks scheduled statically (default 0.7)")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="worker threads (default: hardware parallelism)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")


def _config_from(args) -> PartitionConfig:
    return PartitionConfig(col_width=args.col_width, row_height=args.row_height,
                           warp_size=args.warp_size,
                           fixed_fraction=args.fixed_fraction)


def _load_matrix(path) -> TripletMatrix:
    header, trip = load_mtx(path)
    if header.symmetry == "symmetric":
        trip = expand_symmetric(trip)
    return trip


def _load_input(args):
    """Load .mtx or .hbp input; a prebuilt HbpMatrix rides along for .hbp."""
    path = Path(args.input)
    config = _config_from(args)
    if path.suffix == ".hbp":
        hbp = load_hbp(path)
        config = dataclasses.replace(hbp.config,
                                     fixed_fraction=args.fixed_fraction)
        trip = hbp_to_triplets(hbp).canonicalized()
        return trip, config, hbp
    return _load_matrix(path), config, None


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def cmd_convert(args) -> int:
    trip = _load_matrix(args.input)
    config = _config_from(args)
    csr = coo_to_csr(trip)
    grid, grid_s = _timed(lambda: make_grid(csr, config))
    params, sample_s = _timed(
        lambda: sample_hash_params(grid, config, seed=args.seed))
    perms, hash_s = _timed(lambda: hash_permutations(grid, params))
    hbp, build_s = _timed(lambda: build_hbp(csr, grid, perms))
    save_hbp(hbp, args.output)
    print(f"wrote {args.output}: {hbp.rows}x{hbp.cols}, nnz {hbp.nnz}, "
          f"grid {hbp.num_row_blocks}x{hbp.num_col_blocks}")
    print(f"preprocessing: grid {grid_s:.4f}s, sampling {sample_s:.4f}s, "
          f"hash {hash_s:.4f}s, build {build_s:.4f}s")
    return EXIT_OK


def cmd_verify(args) -> int:
    trip, config, hbp = _load_input(args)
    csr = coo_to_csr(trip)
    grid = make_grid(csr, config)
    if hbp is None:
        params = sample_hash_params(grid, config, seed=args.seed)
        hbp = build_hbp(csr, grid, hash_permutations(grid, params))

    rng = np.random.default_rng(args.seed)
    x = rng.uniform(-1.0, 1.0, csr.cols)
    oracle = dense_oracle_spmv(trip, x)
    floor = np.maximum(1.0, np.abs(oracle))

    results = {
        "csr": csr_spmv(csr, x),
        "2d": block2d_spmv_baseline(csr, grid, x, workers=args.workers),
        "hbp": hbp_spmv(hbp, x, workers=args.workers),
    }
    status = EXIT_OK
    for name, y in results.items():
        err = float(np.max(np.abs(y - oracle) / floor)) if y.size else 0.0
        ok = err <= args.tolerance
        print(f"{name}: max relative error {err:.3e} "
              f"({'ok' if ok else 'FAIL'} at {args.tolerance:g})")
        if not ok:
            status = EXIT_VERIFY
    return status


def cmd_bench(args) -> int:
    kernels = [k.strip() for k in args.kernels.split(",") if k.strip()]
    for k in kernels:
        if k not in KERNELS:
            raise ValueError(f"unknown kernel {k!r}; choose from {KERNELS}")
    trip, config, prebuilt = _load_input(args)
    csr = coo_to_csr(trip)

    grid, grid_s = _timed(lambda: make_grid(csr, config))
    params, sample_s = _timed(
        lambda: sample_hash_params(grid, config, seed=args.seed))
    perms, hash_s = _timed(lambda: hash_permutations(grid, params))
    _, sort_s = _timed(lambda: sort_permutations(grid))
    if prebuilt is None:
        hbp, build_s = _timed(lambda: build_hbp(csr, grid, perms))
    else:
        hbp, build_s = prebuilt, 0.0

    report = BenchReport(
        matrix=str(args.input), rows=csr.rows, cols=csr.cols, nnz=csr.nnz,
        workers=args.workers, fixed_fraction=config.fixed_fraction,
        config={"col_width": config.col_width, "row_height": config.row_height,
                "warp_size": config.warp_size})
    report.preprocessing = {
        "grid_s": grid_s, "sample_s": sample_s, "hash_reorder_s": hash_s,
        "sort_reorder_s": sort_s, "build_s": build_s,
    }

    rng = np.random.default_rng(args.seed)
    x = rng.uniform(-1.0, 1.0, csr.cols)
    iters, warmup = args.iters, args.warmup

    if "csr" in kernels:
        report.add_kernel("csr", time_kernel(lambda: csr_spmv(csr, x),
                                             iters, warmup))
    if "2d" in kernels:
        report.add_kernel("2d", time_kernel(
            lambda: block2d_spmv_baseline(csr, grid, x, args.workers),
            iters, warmup))
    if "hbp" in kernels:
        plan = plan_execution(hbp, config, args.workers)
        spmv_t = time_kernel(lambda: run_spmv(hbp, x, plan, args.workers),
                             iters, warmup)
        partial, _ = run_spmv(hbp, x, plan, args.workers)
        combine_t = time_kernel(lambda: combine(partial), iters, warmup)
        total = Timing(spmv_t.median + combine_t.median,
                       spmv_t.min + combine_t.min,
                       spmv_t.max + combine_t.max, iters)
        report.add_kernel("hbp", total, spmv_s=spmv_t.median,
                          combine_s=combine_t.median)

    for name in kernels:
        entry = report.kernels[name]
        line = (f"{name}: median {entry['time_s']:.6f}s, "
                f"{entry['gflops']:.3f} GFLOPS")
        if "spmv_s" in entry:
            line += (f" (spmv {entry['spmv_s']:.6f}s, "
                     f"combine {entry['combine_s']:.6f}s)")
        print(line)
    print(f"preprocessing: grid {grid_s:.4f}s, sampling {sample_s:.4f}s, "
          f"hash {hash_s:.4f}s, sort {sort_s:.4f}s, build {build_s:.4f}s")

    if args.json:
        Path(args.json).write_text(report.to_json())
        print(f"wrote {args.json}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    trip = _load_matrix(args.input)
    config = _config_from(args)
    csr = coo_to_csr(trip)
    grid = make_grid(csr, config)
    params = sample_hash_params(grid, config, seed=args.seed)

    orderings = {
        "none": None,
        "hash": hash_permutations(grid, params),
        "sort": sort_permutations(grid),
    }
    stats = {name: group_stats(grid, perm) for name, perm in orderings.items()}
    W = config.warp_size

    for name in ORDERINGS:
        print(f"{name}: mean group std_dev "
              f"{mean_group_std(stats[name], W):.4f}")
    for name in ("hash", "sort"):
        red = reduction_summary(stats["none"], stats[name], W)
        print(f"reduction {name} vs none: {red * 100.0:.1f}%")

    if args.csv:
        Path(args.csv).write_text(
            group_stats_csv(stats[args.reorder], args.reorder))
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_generate(args) -> int:
    spec = SyntheticSpec(rows=args.rows, cols=args.cols, pattern=args.pattern,
                         mean_nnz_per_row=args.mean, alpha=args.alpha,
                         seed=args.seed)
    trip = generate(spec)
    save_mtx(trip, args.output)
    print(f"wrote {args.output}: {trip.rows}x{trip.cols}, nnz {trip.nnz}")
    return EXIT_OK


def cmd_fetch(args) -> int:
    cache = Path(args.cache_dir) if args.cache_dir else default_cache_dir()
    path = fetch(args.name, cache_dir=cache)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hbp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert .mtx to .hbp")
    p.add_argument("input")
    p.add_argument("output")
    _add_config_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("verify", help="check all kernels against the dense oracle")
    p.add_argument("input", help=".mtx or .hbp file")
    p.add_argument("--tolerance", type=float, default=1e-10,
                   help="max relative error (default 1e-10)")
    _add_config_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="time kernels and report GFLOPS")
    p.add_argument("input", help=".mtx or .hbp file")
    p.add_argument("--kernels", default="csr,2d,hbp",
                   help="comma list from csr,2d,hbp (default all)")
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--json", help="write the report as JSON to this path")
    _add_config_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("analyze", help="per-group load-balance statistics")
    p.add_argument("input")
    p.add_argument("--reorder", choices=ORDERINGS, default="hash",
                   help="ordering written to --csv (default hash)")
    p.add_argument("--csv", help="write GroupStats CSV to this path")
    _add_config_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("generate", help="write a synthetic matrix")
    p.add_argument("output")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--pattern", choices=("uniform", "powerlaw"),
                   default="uniform")
    p.add_argument("--mean", type=float, required=True,
                   help="target mean nonzeros per row")
    p.add_argument("--alpha", type=float, default=2.0,
                   help="powerlaw tail index (default 2.0)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fetch", help="download a SuiteSparse matrix")
    p.add_argument("name", help="collection path, e.g. Rajat/rajat30")
    p.add_argument("--cache-dir", default=None,
                   help="cache directory (default $HBP_CACHE_DIR "
                        "or ~/.cache/hbp-spmv)")
    p.set_defaults(func=cmd_fetch)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FetchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except (MatrixMarketError, HbpFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
