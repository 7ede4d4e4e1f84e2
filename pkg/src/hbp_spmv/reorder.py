"""Nonlinear-hash row reordering and the sort-based baseline.

A block permutation is a uint32 array mapping execution slot to original
local row. The batched functions return one flat array covering every block
in bc-major order; slice it at grid.slot_base(br, bc) to get one block's
table.

The hash has three stages: aggregation buckets a row by its in-block
nonzero count shifted right by `a` (clamped to bucket_max), dispersion
spreads buckets `b` slots apart, and linear mapping fine-positions within a
bucket region by (local_row * c) mod d. Collisions resolve by +1 linear
probing with wraparound, rows claiming slots in ascending local-row order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .partition import BlockGrid, PartitionConfig

__all__ = [
    "HashParams",
    "OpCounter",
    "sample_hash_params",
    "hash_slot",
    "build_block_permutation",
    "sort_permutation",
    "hash_permutations",
    "sort_permutations",
    "identity_permutations",
    "perm_for_block",
]

BUCKET_MAX = 8


@dataclass(frozen=True)
class HashParams:
    """Hash constants: shift a, bucket stride b, spread multiplier c, modulus d."""

    a: int
    b: int
    c: int
    d: int
    bucket_max: int = BUCKET_MAX

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("shift a must be >= 0")
        if self.b < 1:
            raise ValueError("bucket stride b must be >= 1")
        if self.d != self.b:
            raise ValueError("d must equal b")
        if math.gcd(self.c, self.d) != 1:
            raise ValueError("c must be co-prime with d")


@dataclass
class OpCounter:
    """Instrumentation: slot probes for hashing, comparisons for sorting."""

    probes: int = 0
    comparisons: int = 0


def sample_hash_params(grid: BlockGrid, config: PartitionConfig,
                       sample_size: int = 4096, seed: int = 0,
                       quantile: float = 0.9) -> HashParams:
    """Pick hash constants from a uniform sample of per-block row counts.

    a is the smallest shift bringing the sample's `quantile` point within
    bucket_max; b = d ties the bucket stride to the row partition size;
    c spreads the most populated bucket across its region. The modal-bucket
    rule for c is a heuristic and can be swapped out without affecting any
    format invariant.
    """
    population = grid.row_counts.reshape(-1)
    if sample_size < population.size:
        rng = np.random.default_rng(seed)
        sample = population[rng.choice(population.size, sample_size, replace=False)]
    else:
        sample = population

    b = max(1, config.row_height // (BUCKET_MAX + 1))

    a = 0
    if sample.size:
        while np.quantile(sample >> a, quantile, method="inverted_cdf") > BUCKET_MAX:
            a += 1

    if sample.size:
        buckets = np.minimum(sample >> a, BUCKET_MAX)
        modal = int(np.bincount(buckets, minlength=BUCKET_MAX + 1).max())
    else:
        modal = 0
    c = max(1, -(-modal // b))
    while math.gcd(c, b) != 1:
        c += 1

    return HashParams(a=a, b=b, c=c, d=b)


def hash_slot(nnz: int, local_row: int, params: HashParams) -> int:
    """Preliminary slot before collision resolution."""
    g = min(nnz >> params.a, params.bucket_max)
    return g * params.b + (local_row * params.c) % params.d


def build_block_permutation(row_nnz, params: HashParams,
                            counter: OpCounter | None = None) -> np.ndarray:
    """Hash one block's rows into execution slots.

    Rows claim slots in ascending local-row order; each starts at its
    preliminary slot reduced modulo the block's row count and probes +1
    with wraparound. Always terminates: table size equals row count.
    """
    row_nnz = np.asarray(row_nnz)
    n = row_nnz.size
    taken = np.zeros(n, dtype=bool)
    out = np.empty(n, dtype=np.uint32)
    probes = 0
    for r in range(n):
        pos = hash_slot(int(row_nnz[r]), r, params) % n
        while taken[pos]:
            probes += 1
            pos += 1
            if pos == n:
                pos = 0
        taken[pos] = True
        out[pos] = r
    if counter is not None:
        counter.probes += probes
    return out


def _counting_merge_sort(idx: list, key, counter: OpCounter) -> list:
    if len(idx) <= 1:
        return idx
    mid = len(idx) // 2
    left = _counting_merge_sort(idx[:mid], key, counter)
    right = _counting_merge_sort(idx[mid:], key, counter)
    out = []
    i = j = 0
    while i < len(left) and j < len(right):
        counter.comparisons += 1
        if key[left[i]] <= key[right[j]]:
            out.append(left[i])
            i += 1
        else:
            out.append(right[j])
            j += 1
    out.extend(left[i:])
    out.extend(right[j:])
    return out


def sort_permutation(row_nnz, counter: OpCounter | None = None) -> np.ndarray:
    """Baseline ordering: ascending nnz, ties by ascending local row.

    With a counter attached the sort runs through an instrumented merge
    sort whose comparison count it records; the fast path is a stable
    argsort. Both produce identical permutations.
    """
    row_nnz = np.asarray(row_nnz)
    if counter is None:
        return np.argsort(row_nnz, kind="stable").astype(np.uint32)
    order = _counting_merge_sort(list(range(row_nnz.size)), row_nnz, counter)
    return np.asarray(order, dtype=np.uint32)


def hash_permutations(grid: BlockGrid, params: HashParams,
                      counter: OpCounter | None = None) -> np.ndarray:
    """Build every block's hash permutation in one compiled pass."""
    out = np.empty(grid.num_col_blocks * grid.rows, dtype=np.uint32)
    probes = _kernels.hash_perm_kernel(
        grid.row_counts.reshape(-1), grid.rows, grid.config.row_height,
        grid.num_row_blocks, grid.num_col_blocks,
        params.a, params.b, params.c, params.d, params.bucket_max, out)
    if counter is not None:
        counter.probes += int(probes)
    return out


def sort_permutations(grid: BlockGrid) -> np.ndarray:
    """Build every block's sort permutation via one stable comparison sort.

    Slots are keyed by block_id * K + nnz as float64 so a single stable
    argsort orders all blocks at once; stability supplies the ascending
    local-row tie break.
    """
    rows, ncb = grid.rows, grid.num_col_blocks
    R = grid.config.row_height
    flat_nnz = grid.row_counts.reshape(-1)
    stride = grid.config.col_width + 1
    block_of = (np.arange(rows, dtype=np.int64) // R)[None, :] \
        + (np.arange(ncb, dtype=np.int64) * grid.num_row_blocks)[:, None]
    top = float(block_of.max(initial=0) + 1) * stride
    if top >= 2.0 ** 53:
        return _sort_permutations_blockwise(grid)
    keys = block_of.reshape(-1).astype(np.float64) * stride + flat_nnz
    order = np.argsort(keys, kind="stable")
    # sorted positions tile the array block by block, so subtracting each
    # position's block start index yields the local-row permutation
    base_of = ((np.arange(rows, dtype=np.int64) // R) * R)[None, :] \
        + (np.arange(ncb, dtype=np.int64) * rows)[:, None]
    return (order - base_of.reshape(-1)).astype(np.uint32)


def _sort_permutations_blockwise(grid: BlockGrid) -> np.ndarray:
    out = np.empty(grid.num_col_blocks * grid.rows, dtype=np.uint32)
    for bc in range(grid.num_col_blocks):
        for br in range(grid.num_row_blocks):
            base = grid.slot_base(br, bc)
            nnz = grid.nnz_per_row(br, bc)
            out[base:base + nnz.size] = sort_permutation(nnz)
    return out


def identity_permutations(grid: BlockGrid) -> np.ndarray:
    R = grid.config.row_height
    local = (np.arange(grid.rows, dtype=np.uint32) % R)
    return np.tile(local, grid.num_col_blocks)


def perm_for_block(perm_flat: np.ndarray, grid: BlockGrid, br: int, bc: int
                   ) -> np.ndarray:
    base = grid.slot_base(br, bc)
    return perm_flat[base:base + grid.rows_in_block(br)]
