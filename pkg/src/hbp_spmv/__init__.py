"""Hash-based partition SpMV: block format, reordering, and scheduling.

Typical flow::

    header, trip = load_mtx("matrix.mtx")
    csr = coo_to_csr(trip)
    config = PartitionConfig()
    grid = make_grid(csr, config)
    params = sample_hash_params(grid, config)
    hbp = build_hbp(csr, grid, hash_permutations(grid, params))
    y = hbp_spmv(hbp, x, workers=4)
"""
from .engine import (ExecutionLog, ExecutionPlan, PartialVector,
                     block2d_spmv_baseline, block_spmv, combine, hbp_spmv,
                     plan_execution, run_spmv)
from .fetch import FetchError, fetch
from .formats import (CsrMatrix, MatrixMarketError, MatrixMarketHeader,
                      TripletMatrix, coo_to_csr, csr_spmv, csr_to_triplets,
                      dense_oracle_spmv, expand_symmetric, load_mtx,
                      parse_matrix_market, save_mtx, to_dense,
                      write_matrix_market)
from .hbp import (HbpFormatError, HbpMatrix, build_hbp, deserialize_hbp,
                  hbp_to_triplets, load_hbp, save_hbp, serialize_hbp)
from .metrics import (BenchReport, GroupStats, Timing, gflops, group_stats,
                      group_stats_csv, mean_group_std, reduction_summary,
                      time_kernel)
from .partition import BlockGrid, PartitionConfig, block_rows_of, make_grid
from .reorder import (HashParams, OpCounter, build_block_permutation,
                      hash_permutations, hash_slot, identity_permutations,
                      perm_for_block, sample_hash_params, sort_permutation,
                      sort_permutations)
from .synth import SyntheticSpec, generate

__version__ = "0.1.0"

__all__ = [
    "BenchReport", "BlockGrid", "CsrMatrix", "ExecutionLog", "ExecutionPlan",
    "FetchError", "GroupStats", "HashParams", "HbpFormatError", "HbpMatrix",
    "MatrixMarketError", "MatrixMarketHeader", "OpCounter", "PartialVector",
    "PartitionConfig", "SyntheticSpec", "Timing", "TripletMatrix",
    "block2d_spmv_baseline", "block_rows_of", "block_spmv",
    "build_block_permutation", "build_hbp", "combine", "coo_to_csr",
    "csr_spmv", "csr_to_triplets", "dense_oracle_spmv", "deserialize_hbp",
    "expand_symmetric", "fetch", "generate", "gflops", "group_stats",
    "group_stats_csv", "hash_permutations", "hash_slot", "hbp_spmv",
    "hbp_to_triplets", "identity_permutations", "load_hbp", "load_mtx",
    "make_grid", "mean_group_std", "parse_matrix_market", "perm_for_block",
    "plan_execution", "reduction_summary", "run_spmv", "sample_hash_params",
    "save_hbp", "save_mtx", "serialize_hbp", "sort_permutation",
    "sort_permutations", "time_kernel", "to_dense", "write_matrix_market",
]
