"""Compiled inner loops.

Every kernel is sequential and accumulates strictly left to right, so a
block's result never depends on which worker ran it or when. nogil lets the
thread-pool scheduler overlap block execution.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def csr_kernel(row_ptr, col_idx, values, x, out):
    for i in range(out.size):
        s = 0.0
        for j in range(row_ptr[i], row_ptr[i + 1]):
            s += values[j] * x[col_idx[j]]
        out[i] = s


@njit(cache=True, nogil=True)
def hbp_block_kernel(col, data, add_sign, zero_row, output_hash, group_start,
                     group_base, n_groups, slot_base, rows_in_block, warp,
                     x, col_offset, partial, partial_base):
    """Run one block: chase add_sign chains lane by lane within each group."""
    for gl in range(n_groups):
        start = group_start[group_base + gl]
        lanes = rows_in_block - gl * warp
        if lanes > warp:
            lanes = warp
        for q in range(lanes):
            slot = slot_base + gl * warp + q
            zr = zero_row[slot]
            if zr < 0:
                continue
            j = start + q - zr
            s = 0.0
            # accumulate-then-test: the element carrying add_sign == -1 is
            # the row's last and still contributes
            while True:
                s += data[j] * x[col[j] - col_offset]
                step = add_sign[j]
                if step < 0:
                    break
                j += step
            partial[partial_base + output_hash[slot]] = s


@njit(cache=True, nogil=True)
def block2d_kernel(col_idx, values, row_starts, row_counts,
                   row0, rows_in_block, x, partial, partial_base):
    for r in range(rows_in_block):
        gr = row0 + r
        j = row_starts[gr]
        s = 0.0
        for k in range(row_counts[gr]):
            s += values[j + k] * x[col_idx[j + k]]
        partial[partial_base + r] = s


@njit(cache=True, nogil=True)
def hash_perm_kernel(slot_nnz, rows, row_height, num_row_blocks, num_col_blocks,
                     a, b, c, d, bucket_max, out_perm):
    """Probe every block's rows into its hash table; returns total probes.

    slot_nnz holds each row's in-block nonzero count, blocks laid out
    bc-major. A probe is one inspection of an already-claimed slot.
    """
    taken = np.zeros(row_height, np.uint8)
    probes = 0
    for bc in range(num_col_blocks):
        for br in range(num_row_blocks):
            base = bc * rows + br * row_height
            n = rows - br * row_height
            if n > row_height:
                n = row_height
            for s in range(n):
                taken[s] = 0
            for r in range(n):
                g = slot_nnz[base + r] >> a
                if g > bucket_max:
                    g = bucket_max
                pos = (g * b + (r * c) % d) % n
                while taken[pos] != 0:
                    probes += 1
                    pos += 1
                    if pos == n:
                        pos = 0
                taken[pos] = 1
                out_perm[base + pos] = r
    return probes
