"""HBP array construction, structural validation, and the binary codec."""
from __future__ import annotations

import io

import numpy as np
import pytest

from hbp_spmv import (
    HbpFormatError,
    PartitionConfig,
    build_hbp,
    coo_to_csr,
    deserialize_hbp,
    generate,
    hash_permutations,
    hbp_to_triplets,
    identity_permutations,
    load_hbp,
    make_grid,
    sample_hash_params,
    save_hbp,
    serialize_hbp,
    sort_permutations,
    SyntheticSpec,
    to_dense,
)
from conftest import triplets_from_dense


def build_identity_order(dense, cfg):
    csr = coo_to_csr(triplets_from_dense(dense))
    grid = make_grid(csr, cfg)
    return build_hbp(csr, grid, identity_permutations(grid))


def build_hashed(trip, cfg, seed=0):
    csr = coo_to_csr(trip)
    grid = make_grid(csr, cfg)
    params = sample_hash_params(grid, cfg, seed=seed)
    return build_hbp(csr, grid, hash_permutations(grid, params))


class TestInterleavedLayout:
    def test_single_group_example(self):
        # lane nnz [0, 1, 2, 1]: step 0 emits lanes 1..3, step 1 emits
        # lane 2's second element; strides link lane 2's pair
        dense = [[0.0, 0.0, 0.0, 0.0],
                 [1.0, 0.0, 0.0, 0.0],
                 [0.0, 2.0, 2.5, 0.0],
                 [0.0, 0.0, 0.0, 3.0]]
        cfg = PartitionConfig(col_width=4, row_height=4, warp_size=4)
        hbp = build_identity_order(dense, cfg)
        np.testing.assert_array_equal(hbp.col, [0, 1, 3, 2])
        np.testing.assert_array_equal(hbp.data, [1.0, 2.0, 3.0, 2.5])
        np.testing.assert_array_equal(hbp.add_sign, [-1, 2, -1, -1])
        np.testing.assert_array_equal(hbp.zero_row, [-1, 1, 1, 1])
        np.testing.assert_array_equal(hbp.output_hash, [0, 1, 2, 3])
        np.testing.assert_array_equal(hbp.group_start, [0, 4])

    def test_zero_row_counts_lower_empty_lanes(self):
        dense = np.zeros((4, 4))
        dense[3, 0] = 1.0  # lanes 0..2 empty, lane 3 holds one element
        cfg = PartitionConfig(col_width=4, row_height=4, warp_size=4)
        hbp = build_identity_order(dense, cfg)
        np.testing.assert_array_equal(hbp.zero_row, [-1, -1, -1, 3])
        np.testing.assert_array_equal(hbp.add_sign, [-1])

    def test_strides_cross_group_emissions(self):
        # two groups of 2 lanes in one block: emission interleaves only
        # within a group, so same-row strides never cross group boundaries
        dense = [[1.0, 2.0, 0.0, 0.0],
                 [3.0, 0.0, 0.0, 0.0],
                 [0.0, 4.0, 5.0, 6.0],
                 [7.0, 0.0, 0.0, 0.0]]
        cfg = PartitionConfig(col_width=4, row_height=4, warp_size=2)
        hbp = build_identity_order(dense, cfg)
        np.testing.assert_array_equal(hbp.group_start, [0, 3, 7])
        # group 0: [r0e0, r1e0, r0e1]; group 1: [r2e0, r3e0, r2e1, r2e2]
        np.testing.assert_array_equal(hbp.data,
                                      [1.0, 3.0, 2.0, 4.0, 7.0, 5.0, 6.0])
        # row 2's last two emissions are adjacent, hence the stride of 1
        np.testing.assert_array_equal(hbp.add_sign,
                                      [2, -1, -1, 2, -1, 1, -1])

    def test_block_nnz_matrix(self):
        dense = np.eye(8)
        cfg = PartitionConfig(col_width=4, row_height=4, warp_size=2)
        hbp = build_identity_order(dense, cfg)
        np.testing.assert_array_equal(hbp.block_nnz_matrix(),
                                      [[4, 0], [0, 4]])

    def test_config_mismatch_rejected(self):
        csr = coo_to_csr(triplets_from_dense(np.eye(4)))
        cfg = PartitionConfig(col_width=4, row_height=4, warp_size=4)
        grid = make_grid(csr, cfg)
        other = PartitionConfig(col_width=8, row_height=4, warp_size=4)
        with pytest.raises(ValueError, match="config"):
            build_hbp(csr, grid, identity_permutations(grid), other)


class TestRoundTrip:
    @pytest.mark.parametrize("rows, cols, pattern, mean", [
        (64, 64, "uniform", 4.0),
        (130, 70, "powerlaw", 6.0),   # indivisible by R, C, W
        (33, 190, "uniform", 9.0),
        (512, 128, "powerlaw", 3.0),
    ])
    def test_triplet_multiset_survives(self, rows, cols, pattern, mean):
        cfg = PartitionConfig(col_width=48, row_height=24, warp_size=8)
        trip = generate(SyntheticSpec(rows, cols, pattern, mean, seed=9))
        hbp = build_hashed(trip, cfg)
        back = hbp_to_triplets(hbp)
        np.testing.assert_array_equal(to_dense(back), to_dense(trip))

    def test_sorted_ordering_round_trips_too(self):
        cfg = PartitionConfig(col_width=32, row_height=16, warp_size=4)
        trip = generate(SyntheticSpec(100, 100, "powerlaw", 5.0, seed=2))
        csr = coo_to_csr(trip)
        grid = make_grid(csr, cfg)
        hbp = build_hbp(csr, grid, sort_permutations(grid))
        np.testing.assert_array_equal(to_dense(hbp_to_triplets(hbp)),
                                      to_dense(trip))

    def test_empty_matrix(self):
        cfg = PartitionConfig(col_width=16, row_height=8, warp_size=4)
        trip = triplets_from_dense(np.zeros((32, 48)))
        hbp = build_hashed(trip, cfg)
        assert hbp.nnz == 0
        assert hbp_to_triplets(hbp).nnz == 0
        hbp.validate_structure()


class TestValidation:
    def make(self):
        cfg = PartitionConfig(col_width=32, row_height=16, warp_size=4)
        trip = generate(SyntheticSpec(64, 64, "uniform", 5.0, seed=3))
        return build_hashed(trip, cfg)

    def test_clean_build_validates(self):
        self.make().validate_structure()

    def test_detects_output_hash_duplicate(self):
        hbp = self.make()
        hbp.output_hash[1] = hbp.output_hash[0]
        with pytest.raises(HbpFormatError, match="output_hash"):
            hbp.validate_structure()

    def test_detects_group_start_regression(self):
        hbp = self.make()
        hbp.group_start[1] = hbp.group_start[-1] + 1
        with pytest.raises(HbpFormatError):
            hbp.validate_structure()

    def test_detects_bad_stride_domain(self):
        hbp = self.make()
        hbp.add_sign[0] = -2
        with pytest.raises(HbpFormatError, match="add_sign"):
            hbp.validate_structure()

    def test_detects_zero_row_mismatch(self):
        hbp = self.make()
        hbp.zero_row[0] = 7 if hbp.zero_row[0] != 7 else 5
        with pytest.raises(HbpFormatError, match="zero_row"):
            hbp.validate_structure()

    def test_walker_rejects_zero_stride(self):
        hbp = self.make()
        pos = int(np.argmax(hbp.add_sign > 0))
        hbp.add_sign[pos] = 0
        with pytest.raises(HbpFormatError):
            hbp_to_triplets(hbp)

    def test_walker_rejects_out_of_block_column(self):
        hbp = self.make()
        hbp.col[0] = hbp.cols + 5
        with pytest.raises(HbpFormatError):
            hbp_to_triplets(hbp)


class TestCodec:
    def test_serialize_is_bit_exact(self):
        cfg = PartitionConfig(col_width=48, row_height=24, warp_size=8)
        trip = generate(SyntheticSpec(150, 220, "powerlaw", 7.0, seed=4))
        hbp = build_hashed(trip, cfg)
        buf = io.BytesIO()
        serialize_hbp(hbp, buf)
        first = buf.getvalue()
        back = deserialize_hbp(io.BytesIO(first))
        buf2 = io.BytesIO()
        serialize_hbp(back, buf2)
        assert buf2.getvalue() == first
        for name in ("col", "data", "add_sign", "zero_row", "group_start",
                     "output_hash"):
            np.testing.assert_array_equal(getattr(back, name),
                                          getattr(hbp, name))
        assert back.config.col_width == cfg.col_width
        assert (back.rows, back.cols) == (hbp.rows, hbp.cols)

    def test_identity_golden_size(self):
        # 8x8 identity, C=4 R=4 W=2: 72-byte header, then length-prefixed
        # group_start(9*8) col(8*4) data(8*8) add_sign(8*4) zero_row(16*4)
        # output_hash(16*4) = 448 bytes total
        cfg = PartitionConfig(col_width=4, row_height=4, warp_size=2)
        hbp = build_identity_order(np.eye(8), cfg)
        buf = io.BytesIO()
        serialize_hbp(hbp, buf)
        assert len(buf.getvalue()) == 448

    def test_file_round_trip(self, tmp_path):
        cfg = PartitionConfig(col_width=16, row_height=8, warp_size=2)
        trip = generate(SyntheticSpec(40, 30, "uniform", 3.0, seed=5))
        hbp = build_hashed(trip, cfg)
        path = tmp_path / "m.hbp"
        save_hbp(hbp, path)
        back = load_hbp(path)
        np.testing.assert_array_equal(to_dense(hbp_to_triplets(back)),
                                      to_dense(trip))

    def test_bad_magic(self):
        with pytest.raises(HbpFormatError, match="magic"):
            deserialize_hbp(io.BytesIO(b"XXXX" + b"\x00" * 100))

    def test_bad_version(self):
        buf = io.BytesIO(b"HBP1" + (99).to_bytes(4, "little") + b"\x00" * 64)
        with pytest.raises(HbpFormatError, match="version"):
            deserialize_hbp(buf)

    def test_truncated(self):
        cfg = PartitionConfig(col_width=4, row_height=4, warp_size=2)
        hbp = build_identity_order(np.eye(8), cfg)
        buf = io.BytesIO()
        serialize_hbp(hbp, buf)
        whole = buf.getvalue()
        for cut in (0, 3, 40, len(whole) - 1):
            with pytest.raises(HbpFormatError, match="truncated"):
                deserialize_hbp(io.BytesIO(whole[:cut]))

    def test_deserialized_structure_is_validated(self):
        cfg = PartitionConfig(col_width=4, row_height=4, warp_size=2)
        hbp = build_identity_order(np.eye(8), cfg)
        buf = io.BytesIO()
        serialize_hbp(hbp, buf)
        raw = bytearray(buf.getvalue())
        # corrupt one output_hash entry (last 64 bytes hold the 16 u32 slots)
        raw[-64:-60] = raw[-60:-56]
        with pytest.raises(HbpFormatError):
            deserialize_hbp(io.BytesIO(bytes(raw)))
