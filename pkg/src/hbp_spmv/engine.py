"""Two-step SpMV execution: scheduled block kernels, then the combine step.

Scheduling is fixed+competitive: the first fixed_count blocks are split
into contiguous per-worker chunks, the rest form a shared pool claimed via
an atomic ticket counter. Each block writes a disjoint region of the
partial vector and every block's arithmetic is schedule-independent, so the
combined result is bitwise identical for any worker count or split.
"""
from __future__ import annotations

import threading
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .formats import CsrMatrix
from .hbp import HbpMatrix
from .partition import BlockGrid, PartitionConfig

__all__ = [
    "ExecutionPlan",
    "PartialVector",
    "ExecutionLog",
    "plan_execution",
    "block_spmv",
    "run_spmv",
    "combine",
    "block2d_spmv_baseline",
    "hbp_spmv",
]

KIND_FIXED = 0
KIND_COMPETITIVE = 1


@dataclass(frozen=True)
class ExecutionPlan:
    """Nonzero blocks in bc-major order plus the fixed/competitive split."""

    block_order: np.ndarray
    fixed_count: int
    worker_ranges: tuple[tuple[int, int], ...]

    @property
    def competitive_start(self) -> int:
        return self.fixed_count

    @property
    def num_blocks(self) -> int:
        return len(self.block_order)

    @property
    def workers(self) -> int:
        return len(self.worker_ranges)


@dataclass
class PartialVector:
    """Per-(column block, row) partial sums, flat with layout [bc][global row]."""

    values: np.ndarray
    rows: int
    num_col_blocks: int

    def segment(self, bc: int) -> np.ndarray:
        return self.values[bc * self.rows:(bc + 1) * self.rows]


@dataclass
class ExecutionLog:
    """Per-block audit trail, slots pre-allocated so workers never contend."""

    worker: np.ndarray
    kind: np.ndarray
    start_ns: np.ndarray
    end_ns: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "ExecutionLog":
        return cls(np.full(n, -1, np.int32), np.full(n, -1, np.int8),
                   np.zeros(n, np.int64), np.zeros(n, np.int64))


def _nonzero_blocks(source) -> np.ndarray:
    """(br, bc) pairs of nonzero blocks in bc-major order."""
    if isinstance(source, HbpMatrix):
        nnz_matrix = source.block_nnz_matrix()
    else:
        nnz_matrix = source.block_nnz
    pairs = np.argwhere(nnz_matrix.T > 0)  # (bc, br) rows, bc-major
    return np.ascontiguousarray(pairs[:, ::-1]).astype(np.int32)


def plan_execution(source, config: PartitionConfig, workers: int) -> ExecutionPlan:
    """Split the nonzero blocks into per-worker fixed chunks plus a pool.

    source may be a BlockGrid or an HbpMatrix (the latter lets a loaded
    .hbp plan without its grid). Chunks are contiguous and differ in size
    by at most one, keeping same-column blocks on one worker.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    order = _nonzero_blocks(source)
    n = len(order)
    fixed = int(config.fixed_fraction * n + 0.5)
    base, rem = divmod(fixed, workers)
    ranges = []
    s = 0
    for w in range(workers):
        size = base + (1 if w < rem else 0)
        ranges.append((s, s + size))
        s += size
    return ExecutionPlan(order, fixed, tuple(ranges))


def _block_args(hbp: HbpMatrix, br: int, bc: int):
    return (hbp.group_base(br, bc), hbp.groups_in_block(br),
            hbp.slot_base(br, bc), hbp.rows_in_block(br))


def block_spmv(hbp: HbpMatrix, block: tuple[int, int], x: np.ndarray,
               partial: PartialVector) -> None:
    """Run one block's kernel against its vector segment."""
    br, bc = block
    gb, ng, sb, rib = _block_args(hbp, br, bc)
    c0 = bc * hbp.config.col_width
    segment = x[c0:min(c0 + hbp.config.col_width, hbp.cols)]
    _kernels.hbp_block_kernel(
        hbp.col, hbp.data, hbp.add_sign, hbp.zero_row, hbp.output_hash,
        hbp.group_start, gb, ng, sb, rib, hbp.config.warp_size,
        segment, c0,
        partial.values, bc * hbp.rows + br * hbp.config.row_height)


def _run_plan(plan: ExecutionPlan, workers: int, execute) -> ExecutionLog:
    """Drive execute(idx) per block: fixed chunks, then ticket acquisition."""
    if workers != plan.workers:
        raise ValueError("plan was built for a different worker count")
    n = plan.num_blocks
    log = ExecutionLog.empty(n)
    ticket = [plan.competitive_start]
    lock = threading.Lock()
    errors: list[BaseException] = []

    def run_one(idx: int, wid: int, kind: int) -> None:
        log.start_ns[idx] = time.monotonic_ns()
        execute(idx)
        log.end_ns[idx] = time.monotonic_ns()
        log.worker[idx] = wid
        log.kind[idx] = kind

    def work(wid: int) -> None:
        try:
            lo, hi = plan.worker_ranges[wid]
            for idx in range(lo, hi):
                run_one(idx, wid, KIND_FIXED)
            while True:
                with lock:
                    idx = ticket[0]
                    ticket[0] += 1
                if idx >= n:
                    break
                run_one(idx, wid, KIND_COMPETITIVE)
        except BaseException as exc:  # propagate to caller after join
            errors.append(exc)

    threads = [threading.Thread(target=work, args=(w,)) for w in range(workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return log


def run_spmv(hbp: HbpMatrix, x: np.ndarray, plan: ExecutionPlan,
             workers: int) -> tuple[PartialVector, ExecutionLog]:
    """Execute every planned block once; bitwise deterministic output."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (hbp.cols,):
        raise ValueError(f"vector length {x.shape} != cols {hbp.cols}")
    partial = PartialVector(
        np.zeros(hbp.num_col_blocks * hbp.rows), hbp.rows, hbp.num_col_blocks)
    order = plan.block_order

    def execute(idx: int) -> None:
        block_spmv(hbp, (order[idx, 0], order[idx, 1]), x, partial)

    log = _run_plan(plan, workers, execute)
    return partial, log


def combine(partial: PartialVector) -> np.ndarray:
    """Sum partials over column blocks in fixed ascending-bc order."""
    out = partial.segment(0).copy()
    for bc in range(1, partial.num_col_blocks):
        out += partial.segment(bc)
    return out


def block2d_spmv_baseline(csr: CsrMatrix, grid: BlockGrid, x: np.ndarray,
                          workers: int = 1) -> np.ndarray:
    """Plain 2D-partitioned SpMV: per-block row-major CSR traversal, no
    reordering or interleaving, through the same partial+combine machinery."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (csr.cols,):
        raise ValueError(f"vector length {x.shape} != cols {csr.cols}")
    plan = plan_execution(grid, grid.config, workers)
    partial = PartialVector(
        np.zeros(grid.num_col_blocks * grid.rows), grid.rows, grid.num_col_blocks)
    order = plan.block_order
    R = grid.config.row_height

    def execute(idx: int) -> None:
        br, bc = order[idx, 0], order[idx, 1]
        _kernels.block2d_kernel(
            csr.col_idx, csr.values, grid.row_starts[bc], grid.row_counts[bc],
            br * R, grid.rows_in_block(br), x,
            partial.values, bc * grid.rows + br * R)

    _run_plan(plan, workers, execute)
    return combine(partial)


def hbp_spmv(hbp: HbpMatrix, x: np.ndarray, workers: int = 1) -> np.ndarray:
    """Plan, run, and combine in one call."""
    plan = plan_execution(hbp, hbp.config, workers)
    partial, _ = run_spmv(hbp, x, plan, workers)
    return combine(partial)
