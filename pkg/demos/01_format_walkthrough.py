"""Walk through the six HBP arrays on a matrix small enough to read.

Run: python demos/01_format_walkthrough.py
"""
import numpy as np

from hbp_spmv import (
    PartitionConfig,
    TripletMatrix,
    build_hbp,
    coo_to_csr,
    hbp_to_triplets,
    identity_permutations,
    make_grid,
    to_dense,
)

# One 4x4 block, one warp group of 4 lanes. Row 0 is empty, row 2 holds
# two elements, so lanes do unequal work and the layout has to interleave.
dense = np.array([[0.0, 0.0, 0.0, 0.0],
                  [1.0, 0.0, 0.0, 0.0],
                  [0.0, 2.0, 2.5, 0.0],
                  [0.0, 0.0, 0.0, 3.0]])
trip = TripletMatrix(4, 4, *np.nonzero(dense), dense[np.nonzero(dense)])
cfg = PartitionConfig(col_width=4, row_height=4, warp_size=4)

csr = coo_to_csr(trip)
grid = make_grid(csr, cfg)
hbp = build_hbp(csr, grid, identity_permutations(grid))

print("matrix:")
print(dense)
print()
print("Slots are execution order. output_hash maps each slot back to the")
print("original local row; zero_row is -1 for empty rows, otherwise the")
print("number of empty lanes below it in the same warp group.")
print(f"  output_hash = {hbp.output_hash.tolist()}")
print(f"  zero_row    = {hbp.zero_row.tolist()}")
print()
print("Elements are emitted step by step: every lane that still has an")
print("element contributes one per step, so a lane's elements are strided,")
print("not contiguous. add_sign is the stride to the same row's next")
print("element, -1 on the last.")
print(f"  col      = {hbp.col.tolist()}")
print(f"  data     = {hbp.data.tolist()}")
print(f"  add_sign = {hbp.add_sign.tolist()}")
print()
print("group_start frames each warp group's element run (last entry = nnz):")
print(f"  group_start = {hbp.group_start.tolist()}")
print()
print("Reading a lane: start at group_start[g] + lane - zero_row[slot],")
print("then hop by add_sign until it goes negative. Row 2 (slot 2) starts")
print(f"at {hbp.group_start[0]} + 2 - {hbp.zero_row[2]} = 1: data[1] = "
      f"{hbp.data[1]}, hop {hbp.add_sign[1]} -> data[3] = {hbp.data[3]}.")
print()
back = to_dense(hbp_to_triplets(hbp))
print(f"decoded back to triplets, identical: {np.array_equal(back, dense)}")
