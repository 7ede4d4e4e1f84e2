"""Shared fixtures and matrix builders."""
from __future__ import annotations

import numpy as np
import pytest

from hbp_spmv import PartitionConfig, TripletMatrix


def triplets_from_dense(dense) -> TripletMatrix:
    dense = np.asarray(dense, dtype=np.float64)
    r, c = np.nonzero(dense)
    return TripletMatrix(dense.shape[0], dense.shape[1], r, c, dense[r, c])


@pytest.fixture
def small_config() -> PartitionConfig:
    # shrunk geometry so multi-block structure shows up on tiny matrices
    return PartitionConfig(col_width=64, row_height=16, warp_size=4)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
