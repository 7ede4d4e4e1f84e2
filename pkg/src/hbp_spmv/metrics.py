"""Load-balance analytics, the GFLOPS formula, and the timing harness."""
from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .partition import BlockGrid, PartitionConfig

__all__ = [
    "GroupStats",
    "group_stats",
    "mean_group_std",
    "reduction_summary",
    "group_stats_csv",
    "gflops",
    "time_kernel",
    "Timing",
    "BenchReport",
]


@dataclass(frozen=True)
class GroupStats:
    """Per-warp-group lane statistics of in-block row nonzero counts.

    Zero rows count as lane_nnz 0. utilization models lockstep lanes: the
    group costs W * max cycles of which sum(lane_nnz) do work; an all-zero
    group is vacuously fully utilized.
    """

    br: int
    bc: int
    group: int
    lane_nnz: np.ndarray
    mean: float
    std_dev: float
    max: int
    utilization: float

    @classmethod
    def from_lanes(cls, br: int, bc: int, group: int, lane_nnz: np.ndarray,
                   warp_size: int) -> "GroupStats":
        mx = int(lane_nnz.max()) if lane_nnz.size else 0
        util = float(lane_nnz.sum() / (warp_size * mx)) if mx > 0 else 1.0
        return cls(br, bc, group, lane_nnz,
                   float(lane_nnz.mean()), float(lane_nnz.std()), mx, util)


def group_stats(grid: BlockGrid, permutations: np.ndarray | None,
                config: PartitionConfig | None = None) -> list[GroupStats]:
    """Per-group lane statistics under a slot ordering (None = unordered)."""
    if config is None:
        config = grid.config
    W = config.warp_size
    out: list[GroupStats] = []
    for bc in range(grid.num_col_blocks):
        for br in range(grid.num_row_blocks):
            n = grid.rows_in_block(br)
            row_nnz = grid.nnz_per_row(br, bc).astype(np.int64)
            if permutations is None:
                slot_nnz = row_nnz
            else:
                base = grid.slot_base(br, bc)
                slot_nnz = row_nnz[permutations[base:base + n].astype(np.int64)]
            for g in range(grid.groups_in_block(br)):
                lanes = slot_nnz[g * W:(g + 1) * W]
                out.append(GroupStats.from_lanes(br, bc, g, lanes, W))
    return out


def _full_groups(stats: list[GroupStats], warp_size: int) -> list[GroupStats]:
    return [s for s in stats if s.lane_nnz.size == warp_size]


def mean_group_std(stats: list[GroupStats], warp_size: int,
                   full_only: bool = True) -> float:
    """Mean per-group standard deviation, by default over full groups only
    (orderings disagree on how to pad boundary groups)."""
    pool = _full_groups(stats, warp_size) if full_only else stats
    if not pool:
        return 0.0
    return float(np.mean([s.std_dev for s in pool]))


def reduction_summary(stats_before: list[GroupStats],
                      stats_after: list[GroupStats],
                      warp_size: int) -> float:
    """1 - mean(std after)/mean(std before) over full groups; 0 when the
    baseline is already perfectly balanced."""
    key_b = [(s.br, s.bc, s.group) for s in stats_before]
    key_a = [(s.br, s.bc, s.group) for s in stats_after]
    if key_b != key_a:
        raise ValueError("group coverage differs between orderings")
    before = mean_group_std(stats_before, warp_size)
    after = mean_group_std(stats_after, warp_size)
    if before == 0.0:
        return 0.0
    return 1.0 - after / before


def group_stats_csv(stats: list[GroupStats], ordering: str) -> str:
    lines = ["block_br,block_bc,group,ordering,mean,std_dev,utilization"]
    for s in stats:
        lines.append(f"{s.br},{s.bc},{s.group},{ordering},"
                     f"{s.mean:.6g},{s.std_dev:.6g},{s.utilization:.6g}")
    return "\n".join(lines) + "\n"


def gflops(nnz: int, seconds: float) -> float:
    """Throughput by G = 2 * nnz / t, in GFLOPS."""
    if seconds <= 0:
        raise ValueError("seconds must be positive")
    return 2.0 * nnz / seconds / 1e9


@dataclass(frozen=True)
class Timing:
    median: float
    min: float
    max: float
    iterations: int


def time_kernel(fn, iterations: int = 20, warmup: int = 3) -> Timing:
    """Median wall time of fn() over monotonic-clock samples."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(iterations):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return Timing(statistics.median(samples), min(samples), max(samples),
                  iterations)


@dataclass
class BenchReport:
    """Benchmark results; every kernel's gflops is derived from its own
    recorded median time, so G = 2*nnz/t holds by construction."""

    matrix: str
    rows: int
    cols: int
    nnz: int
    workers: int
    fixed_fraction: float
    config: dict = field(default_factory=dict)
    kernels: dict = field(default_factory=dict)
    preprocessing: dict = field(default_factory=dict)

    def add_kernel(self, name: str, timing: Timing,
                   spmv_s: float | None = None,
                   combine_s: float | None = None) -> None:
        entry = {
            "time_s": timing.median,
            "min_s": timing.min,
            "max_s": timing.max,
            "iterations": timing.iterations,
            "gflops": gflops(self.nnz, timing.median) if self.nnz else 0.0,
        }
        if spmv_s is not None:
            entry["spmv_s"] = spmv_s
        if combine_s is not None:
            entry["combine_s"] = combine_s
        self.kernels[name] = entry

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix,
            "rows": self.rows,
            "cols": self.cols,
            "nnz": self.nnz,
            "workers": self.workers,
            "fixed_fraction": self.fixed_fraction,
            "config": self.config,
            "kernels": self.kernels,
            "preprocessing": self.preprocessing,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
