"""The six-array block storage format: build, invert, validate, serialize.

Arrays and their roles:

- col, data: global column index and value per element, nnz entries, no
  padding regardless of row-length skew.
- add_sign: per element, the forward stride to the same row's next element
  inside its block, or -1 on the row's last element.
- zero_row: one entry per (block, slot); -1 marks a row with no elements in
  the block, otherwise the number of -1 slots at lower lanes within the
  same warp group (used to rebase lane start offsets).
- group_start: first element offset of every (block, warp group) in
  bc-major block order, plus a terminal sentinel equal to nnz.
- output_hash: one entry per (block, slot); slot index is execution order,
  value is the original local row.

Within a warp group elements are laid out column-major: step t stores the
(t+1)-th nonzero of every lane that still has one, lanes in ascending
order. A lane's first element lives at group_start[g] + q - zero_row[slot].
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .formats import CsrMatrix, TripletMatrix
from .partition import (BlockGrid, PartitionConfig, groups_in_row_block,
                        groups_per_col_block, rows_in_row_block)

__all__ = [
    "HbpMatrix",
    "build_hbp",
    "hbp_to_triplets",
    "serialize_hbp",
    "deserialize_hbp",
    "save_hbp",
    "load_hbp",
    "HbpFormatError",
]

MAGIC = b"HBP1"
VERSION = 1


class HbpFormatError(ValueError):
    """Raised for malformed .hbp streams or structurally invalid matrices."""


@dataclass(frozen=True)
class HbpMatrix:
    rows: int
    cols: int
    config: PartitionConfig
    grid_shape: tuple[int, int]
    col: np.ndarray
    data: np.ndarray
    add_sign: np.ndarray
    zero_row: np.ndarray
    group_start: np.ndarray
    output_hash: np.ndarray

    @property
    def nnz(self) -> int:
        return self.data.size

    @property
    def num_row_blocks(self) -> int:
        return self.grid_shape[0]

    @property
    def num_col_blocks(self) -> int:
        return self.grid_shape[1]

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

    def block_nnz_matrix(self) -> np.ndarray:
        """Element count per block, recovered from group_start."""
        nrb, ncb = self.grid_shape
        out = np.empty((nrb, ncb), dtype=np.int64)
        for bc in range(ncb):
            for br in range(nrb):
                gb = self.group_base(br, bc)
                out[br, bc] = (self.group_start[gb + self.groups_in_block(br)]
                               - self.group_start[gb])
        return out

    def validate_structure(self) -> None:
        """Cheap structural checks; full chain validation is hbp_to_triplets."""
        nrb, ncb = self.grid_shape
        R, W = self.config.row_height, self.config.warp_size
        if nrb != -(-self.rows // R) or ncb != -(-self.cols // self.config.col_width):
            raise HbpFormatError("grid shape inconsistent with dimensions")
        nnz = self.nnz
        if not (self.col.size == self.data.size == self.add_sign.size):
            raise HbpFormatError("element array lengths differ")
        n_slots = ncb * self.rows
        if self.zero_row.size != n_slots or self.output_hash.size != n_slots:
            raise HbpFormatError("slot array length mismatch")
        n_groups = ncb * groups_per_col_block(self.rows, R, W)
        if self.group_start.size != n_groups + 1:
            raise HbpFormatError("group_start length mismatch")
        if self.group_start[0] != 0 or self.group_start[-1] != nnz:
            raise HbpFormatError("group_start must span [0, nnz]")
        if (np.diff(self.group_start) < 0).any():
            raise HbpFormatError("group_start must be non-decreasing")
        if nnz and (((self.add_sign < 1) & (self.add_sign != -1)).any()):
            raise HbpFormatError("add_sign entries must be >= 1 or -1")
        for bc in range(ncb):
            for br in range(nrb):
                base = self.slot_base(br, bc)
                n = self.rows_in_block(br)
                perm = self.output_hash[base:base + n]
                if perm.size and (np.bincount(perm, minlength=n) != 1).any():
                    raise HbpFormatError(
                        f"output_hash of block ({br}, {bc}) is not a permutation")
                zr = self.zero_row[base:base + n].astype(np.int64)
                expected = _zero_row_for(zr == -1, W)
                if (zr != expected).any():
                    raise HbpFormatError(
                        f"zero_row of block ({br}, {bc}) has wrong lane counts")


def _zero_row_for(is_zero: np.ndarray, warp: int) -> np.ndarray:
    """zero_row values implied by a block's empty-row mask."""
    n = is_zero.size
    n_groups = -(-n // warp) if n else 0
    padded = np.zeros(n_groups * warp, dtype=np.int64)
    padded[:n] = is_zero
    within = np.cumsum(padded.reshape(n_groups, warp), axis=1) - padded.reshape(
        n_groups, warp)
    out = within.reshape(-1)[:n]
    return np.where(is_zero, -1, out)


def build_hbp(csr: CsrMatrix, grid: BlockGrid, permutations: np.ndarray,
              config: PartitionConfig | None = None) -> HbpMatrix:
    """Lay out the matrix block by block in the interleaved format.

    permutations is the flat slot table described in reorder (execution
    slot -> original local row, blocks bc-major).
    """
    if config is None:
        config = grid.config
    elif config != grid.config:
        raise ValueError("config disagrees with the grid's config")
    if grid.rows != csr.rows or grid.cols != csr.cols or grid.nnz != csr.nnz:
        raise ValueError("grid does not describe this matrix")
    permutations = np.asarray(permutations, dtype=np.uint32)
    if permutations.size != grid.num_col_blocks * grid.rows:
        raise ValueError("permutation table length mismatch")

    R, W = config.row_height, config.warp_size
    col_parts: list[np.ndarray] = []
    data_parts: list[np.ndarray] = []
    add_parts: list[np.ndarray] = []
    zero_parts: list[np.ndarray] = []
    gs_parts: list[np.ndarray] = []
    emitted = 0

    for bc in range(grid.num_col_blocks):
        for br in range(grid.num_row_blocks):
            n = grid.rows_in_block(br)
            base = grid.slot_base(br, bc)
            perm = permutations[base:base + n].astype(np.int64)
            if (np.bincount(perm, minlength=n) != 1).any():
                raise ValueError(f"permutation of block ({br}, {bc}) is not a bijection")

            row_nnz = grid.nnz_per_row(br, bc).astype(np.int64)
            slot_nnz = row_nnz[perm]
            zero_parts.append(_zero_row_for(slot_nnz == 0, W).astype(np.int32))

            n_groups = grid.groups_in_block(br)
            elem_base = grid.block_elem_start[br, bc]
            total = int(slot_nnz.sum())
            if total == 0:
                gs_parts.append(np.full(n_groups, elem_base, dtype=np.int64))
                continue

            slot_rep = np.repeat(np.arange(n, dtype=np.int64), slot_nnz)
            excl = np.concatenate(([0], np.cumsum(slot_nnz)[:-1]))
            t = np.arange(total, dtype=np.int64) - np.repeat(excl, slot_nnz)
            g_rep = slot_rep // W
            q_rep = slot_rep % W

            # column-major within each group: order by (group, step, lane)
            order = np.lexsort((q_rep, t, g_rep))

            r0 = br * R
            src = grid.row_starts[bc, r0 + perm[slot_rep]] + t
            col_parts.append(csr.col_idx[src[order]].astype(np.uint32))
            data_parts.append(csr.values[src[order]])

            pos = np.empty(total, dtype=np.int64)
            pos[order] = np.arange(total)
            add = np.full(total, -1, dtype=np.int32)
            linked = np.flatnonzero(slot_rep[1:] == slot_rep[:-1])
            add[pos[linked]] = pos[linked + 1] - pos[linked]
            add_parts.append(add)

            gcount = np.bincount(g_rep, minlength=n_groups)
            gs_parts.append(elem_base + np.cumsum(gcount) - gcount)
            emitted += total

    if emitted != csr.nnz:
        raise ValueError("emitted element count disagrees with matrix nnz")

    def _cat(parts, dtype):
        return np.concatenate(parts) if parts else np.empty(0, dtype=dtype)

    group_start = np.concatenate(
        gs_parts + [np.array([csr.nnz], dtype=np.int64)]) if gs_parts \
        else np.array([csr.nnz], dtype=np.int64)

    return HbpMatrix(
        rows=csr.rows, cols=csr.cols, config=config,
        grid_shape=(grid.num_row_blocks, grid.num_col_blocks),
        col=_cat(col_parts, np.uint32),
        data=_cat(data_parts, np.float64),
        add_sign=_cat(add_parts, np.int32),
        zero_row=_cat(zero_parts, np.int32),
        group_start=group_start,
        output_hash=permutations.astype(np.uint32).copy(),
    )


def hbp_to_triplets(hbp: HbpMatrix) -> TripletMatrix:
    """Invert the layout by walking every stride chain; the integrity oracle.

    Raises HbpFormatError if a chain escapes its group region, an element is
    visited twice or never, a stride is zero, or a column leaves its block.
    """
    nrb, ncb = hbp.grid_shape
    R, W, C = hbp.config.row_height, hbp.config.warp_size, hbp.config.col_width

    starts = []
    rows_g = []
    ends = []
    lo = []
    hi = []
    for bc in range(ncb):
        for br in range(nrb):
            n = hbp.rows_in_block(br)
            base = hbp.slot_base(br, bc)
            gb = hbp.group_base(br, bc)
            slot = np.arange(n, dtype=np.int64)
            zr = hbp.zero_row[base:base + n].astype(np.int64)
            active = zr >= 0
            if not active.any():
                continue
            g_local = slot[active] // W
            q = slot[active] % W
            g_start = hbp.group_start[gb + g_local]
            g_end = hbp.group_start[gb + g_local + 1]
            j0 = g_start + q - zr[active]
            if ((j0 < g_start) | (j0 >= g_end)).any():
                raise HbpFormatError("lane start offset outside its group region")
            starts.append(j0)
            rows_g.append(br * R + hbp.output_hash[base:base + n][active].astype(np.int64))
            ends.append(g_end)
            lo.append(np.full(q.size, bc * C, dtype=np.int64))
            hi.append(np.full(q.size, min((bc + 1) * C, hbp.cols), dtype=np.int64))

    out_r: list[np.ndarray] = []
    out_c: list[np.ndarray] = []
    out_v: list[np.ndarray] = []
    seen = np.zeros(hbp.nnz, dtype=np.int32)
    if starts:
        j = np.concatenate(starts)
        row = np.concatenate(rows_g)
        end = np.concatenate(ends)
        clo = np.concatenate(lo)
        chi = np.concatenate(hi)
        while j.size:
            np.add.at(seen, j, 1)
            c = hbp.col[j].astype(np.int64)
            if ((c < clo) | (c >= chi)).any():
                raise HbpFormatError("element column outside its block's range")
            out_r.append(row.copy())
            out_c.append(c)
            out_v.append(hbp.data[j].copy())
            step = hbp.add_sign[j].astype(np.int64)
            if (step == 0).any() or ((step < 0) & (step != -1)).any():
                raise HbpFormatError("invalid add_sign stride")
            alive = step > 0
            nxt = j[alive] + step[alive]
            if (nxt >= end[alive]).any():
                raise HbpFormatError("stride chain escapes its group region")
            j, row, end, clo, chi = nxt, row[alive], end[alive], clo[alive], chi[alive]

    if (seen > 1).any():
        raise HbpFormatError("element visited more than once")
    if int(seen.sum()) != hbp.nnz:
        raise HbpFormatError("stride chains do not cover every element")

    if out_r:
        return TripletMatrix(hbp.rows, hbp.cols, np.concatenate(out_r),
                             np.concatenate(out_c), np.concatenate(out_v))
    return TripletMatrix(hbp.rows, hbp.cols,
                         np.empty(0, np.int64), np.empty(0, np.int64),
                         np.empty(0, np.float64))


_ARRAY_SPECS = (
    ("group_start", "<u8"),
    ("col", "<u4"),
    ("data", "<f8"),
    ("add_sign", "<i4"),
    ("zero_row", "<i4"),
    ("output_hash", "<u4"),
)


def serialize_hbp(hbp: HbpMatrix, stream) -> None:
    """Write the .hbp binary layout (little-endian, length-prefixed arrays)."""
    stream.write(MAGIC)
    stream.write(struct.pack("<I", VERSION))
    stream.write(struct.pack(
        "<8Q", hbp.rows, hbp.cols, hbp.nnz,
        hbp.config.col_width, hbp.config.row_height, hbp.config.warp_size,
        hbp.num_row_blocks, hbp.num_col_blocks))
    for name, dt in _ARRAY_SPECS:
        arr = getattr(hbp, name)
        stream.write(struct.pack("<Q", arr.size))
        stream.write(np.ascontiguousarray(arr, dtype=dt).tobytes())


def _read_exact(stream, n: int) -> bytes:
    buf = stream.read(n)
    if len(buf) != n:
        raise HbpFormatError(f"truncated stream: wanted {n} bytes, got {len(buf)}")
    return buf


def deserialize_hbp(stream) -> HbpMatrix:
    """Read a .hbp stream, validating structure before returning."""
    if _read_exact(stream, 4) != MAGIC:
        raise HbpFormatError("bad magic; not an .hbp stream")
    (version,) = struct.unpack("<I", _read_exact(stream, 4))
    if version != VERSION:
        raise HbpFormatError(f"unsupported version {version}")
    rows, cols, nnz, C, R, W, nrb, ncb = struct.unpack("<8Q", _read_exact(stream, 64))

    arrays = {}
    for name, dt in _ARRAY_SPECS:
        (count,) = struct.unpack("<Q", _read_exact(stream, 8))
        itemsize = np.dtype(dt).itemsize
        arrays[name] = np.frombuffer(_read_exact(stream, count * itemsize), dtype=dt)

    try:
        config = PartitionConfig(col_width=C, row_height=R, warp_size=W)
    except ValueError as exc:
        raise HbpFormatError(f"invalid partition config in header: {exc}") from exc
    hbp = HbpMatrix(
        rows=int(rows), cols=int(cols), config=config,
        grid_shape=(int(nrb), int(ncb)),
        col=arrays["col"].astype(np.uint32),
        data=arrays["data"].astype(np.float64),
        add_sign=arrays["add_sign"].astype(np.int32),
        zero_row=arrays["zero_row"].astype(np.int32),
        group_start=arrays["group_start"].astype(np.int64),
        output_hash=arrays["output_hash"].astype(np.uint32),
    )
    if hbp.nnz != nnz:
        raise HbpFormatError("element array length disagrees with header nnz")
    hbp.validate_structure()
    return hbp


def save_hbp(hbp: HbpMatrix, path) -> None:
    with open(path, "wb") as fh:
        serialize_hbp(hbp, fh)


def load_hbp(path) -> HbpMatrix:
    with open(path, "rb") as fh:
        return deserialize_hbp(fh)
