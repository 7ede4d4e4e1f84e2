"""How row reordering evens out warp-group workloads.

Generates a heavy-tailed matrix, then compares per-group standard
deviation and lane utilization for the unordered, hash-reordered, and
fully sorted layouts.

Run: python demos/02_load_balance.py
"""
import numpy as np

from hbp_spmv import (
    PartitionConfig,
    SyntheticSpec,
    coo_to_csr,
    generate,
    group_stats,
    hash_permutations,
    make_grid,
    mean_group_std,
    reduction_summary,
    sample_hash_params,
    sort_permutations,
)

cfg = PartitionConfig(col_width=4096, row_height=64, warp_size=8)
spec = SyntheticSpec(rows=1024, cols=1024, pattern="powerlaw",
                     mean_nnz_per_row=8.0, alpha=2.0, seed=0)
trip = generate(spec)
counts = np.bincount(trip.row, minlength=1024)
print(f"matrix: 1024x1024 powerlaw, nnz {trip.nnz}, row nnz median "
      f"{np.median(counts):.0f}, max {counts.max()}")

grid = make_grid(coo_to_csr(trip), cfg)
params = sample_hash_params(grid, cfg)
print(f"hash constants: shift a={params.a}, bucket stride b={params.b}, "
      f"spread c={params.c}")
print()

orderings = {
    "unordered": None,
    "hash": hash_permutations(grid, params),
    "sorted": sort_permutations(grid),
}
stats = {name: group_stats(grid, p) for name, p in orderings.items()}

print(f"{'ordering':<10} {'mean group std':>15} {'mean utilization':>17}")
for name, st in stats.items():
    std = mean_group_std(st, cfg.warp_size)
    util = np.mean([s.utilization for s in st])
    print(f"{name:<10} {std:>15.3f} {util:>17.3f}")

print()
for name in ("hash", "sorted"):
    red = reduction_summary(stats["unordered"], stats[name], cfg.warp_size)
    print(f"{name} reduces group std by {red * 100.0:.1f}%")
print()
print("Sorting balances best but costs a comparison sort per block; the")
print("hash gets most of the reduction with a single linear pass.")
