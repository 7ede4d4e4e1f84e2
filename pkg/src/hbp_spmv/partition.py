"""2D partitioning of a CSR matrix into row-height by column-width blocks.

Block storage and execution order is column-block-major throughout the
package (bc outer, br inner) so blocks reading the same vector segment are
adjacent in every derived array.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .formats import CsrMatrix

__all__ = ["PartitionConfig", "BlockGrid", "make_grid", "block_rows_of"]


@dataclass(frozen=True)
class PartitionConfig:
    """Partition sizes and the scheduler's fixed/competitive split.

    col_width bounds the vector segment a block reads; row_height is the
    scope of row reordering; warp_size is the lane-group width and must
    divide row_height; fixed_fraction is the share of blocks assigned
    statically to workers.
    """

    col_width: int = 4096
    row_height: int = 512
    warp_size: int = 32
    fixed_fraction: float = 0.7

    def __post_init__(self):
        if self.col_width < 1 or self.row_height < 1 or self.warp_size < 1:
            raise ValueError("partition sizes must be >= 1")
        if self.row_height % self.warp_size != 0:
            raise ValueError("row_height must be a multiple of warp_size")
        if not 0.0 <= self.fixed_fraction <= 1.0:
            raise ValueError("fixed_fraction must be in [0, 1]")


def rows_in_row_block(rows: int, row_height: int, br: int) -> int:
    return min(row_height, rows - br * row_height)


def groups_in_row_block(rows: int, row_height: int, warp_size: int, br: int) -> int:
    n = rows_in_row_block(rows, row_height, br)
    return -(-n // warp_size)


def groups_per_col_block(rows: int, row_height: int, warp_size: int) -> int:
    num_row_blocks = -(-rows // row_height)
    full = (num_row_blocks - 1) * (row_height // warp_size)
    return full + groups_in_row_block(rows, row_height, warp_size, num_row_blocks - 1)


@dataclass(frozen=True)
class BlockGrid:
    """Per-block, per-row nonzero counts and element offsets.

    row_counts[bc, gr] is the nonzero count of global row gr restricted to
    column block bc; row_starts[bc, gr] is the CSR offset where that run
    begins. block_elem_start is the exclusive prefix sum of block_nnz in
    bc-major order, i.e. each block's first element offset in HBP storage.
    """

    rows: int
    cols: int
    config: PartitionConfig
    num_row_blocks: int
    num_col_blocks: int
    row_counts: np.ndarray
    row_starts: np.ndarray
    block_nnz: np.ndarray
    block_elem_start: np.ndarray
    nnz: int

    def rows_in_block(self, br: int) -> int:
        return rows_in_row_block(self.rows, self.config.row_height, br)

    def groups_in_block(self, br: int) -> int:
        return groups_in_row_block(
            self.rows, self.config.row_height, self.config.warp_size, br)

    def slot_base(self, br: int, bc: int) -> int:
        return bc * self.rows + br * self.config.row_height

    def group_base(self, br: int, bc: int) -> int:
        per_col = groups_per_col_block(
            self.rows, self.config.row_height, self.config.warp_size)
        return bc * per_col + br * (self.config.row_height // self.config.warp_size)

    def nnz_per_row(self, br: int, bc: int) -> np.ndarray:
        """In-block nonzero count for each local row of block (br, bc)."""
        r0 = br * self.config.row_height
        return self.row_counts[bc, r0:r0 + self.rows_in_block(br)]


def make_grid(csr: CsrMatrix, config: PartitionConfig) -> BlockGrid:
    """Split each CSR row run at multiples of col_width and count per block."""
    if csr.rows < 1 or csr.cols < 1:
        raise ValueError("matrix must have nonempty dimensions")
    rows, cols = csr.rows, csr.cols
    R, C = config.row_height, config.col_width
    nrb = -(-rows // R)
    ncb = -(-cols // C)

    row_of = np.repeat(np.arange(rows, dtype=np.int64), np.diff(csr.row_ptr))
    bc_of = csr.col_idx // C
    counts = np.bincount(bc_of * rows + row_of, minlength=ncb * rows)
    row_counts = counts.reshape(ncb, rows).astype(np.int32)

    # each row's run inside column block bc starts after its runs in lower bc
    before = np.cumsum(row_counts, axis=0, dtype=np.int64) - row_counts
    row_starts = csr.row_ptr[:-1][None, :] + before

    pad = nrb * R - rows
    padded = np.pad(row_counts, ((0, 0), (0, pad))).astype(np.int64)
    block_nnz = padded.reshape(ncb, nrb, R).sum(axis=2).T

    flat = block_nnz.T.ravel()
    starts = np.concatenate(([0], np.cumsum(flat)[:-1]))
    block_elem_start = starts.reshape(ncb, nrb).T

    return BlockGrid(rows, cols, config, nrb, ncb, row_counts, row_starts,
                     block_nnz, np.ascontiguousarray(block_elem_start), csr.nnz)


def block_rows_of(csr: CsrMatrix, grid: BlockGrid, br: int, bc: int
                  ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield each local row's (global columns, values) within block (br, bc).

    Columns come out in increasing order; concatenating a row's slices over
    all bc reproduces its full CSR run.
    """
    if not (0 <= br < grid.num_row_blocks and 0 <= bc < grid.num_col_blocks):
        raise IndexError(f"block ({br}, {bc}) out of range")
    r0 = br * grid.config.row_height
    for gr in range(r0, r0 + grid.rows_in_block(br)):
        j = grid.row_starts[bc, gr]
        n = grid.row_counts[bc, gr]
        yield csr.col_idx[j:j + n], csr.values[j:j + n]
