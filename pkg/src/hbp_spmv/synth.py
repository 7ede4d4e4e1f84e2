"""Seeded synthetic matrix generators for benchmarks and tests.

uniform draws each row's count from Poisson(mean); powerlaw mixes a flat
body (most rows uniform on [0, B)) with a truncated Pareto tail of index
alpha starting at B, the body width bisected so the empirical mean hits
the requested value. That yields a light, evenly spread background plus a
minority of hot rows several times the median, the row-length mix the
reordering machinery targets. Columns are distinct and uniform in both
patterns. Everything is deterministic per seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formats import TripletMatrix

__all__ = ["SyntheticSpec", "generate"]

PATTERNS = ("uniform", "powerlaw")


@dataclass(frozen=True)
class SyntheticSpec:
    rows: int
    cols: int
    pattern: str
    mean_nnz_per_row: float
    alpha: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")
        if self.pattern not in PATTERNS:
            raise ValueError(f"pattern must be one of {PATTERNS}")
        if not 0 < self.mean_nnz_per_row <= self.cols:
            raise ValueError("mean_nnz_per_row must be in (0, cols]")
        if self.pattern == "powerlaw" and self.alpha <= 1.0:
            raise ValueError("alpha must be > 1 for a finite mean")


def _row_counts_uniform(rng: np.random.Generator, spec: SyntheticSpec) -> np.ndarray:
    if spec.mean_nnz_per_row >= spec.cols:
        return np.full(spec.rows, spec.cols, dtype=np.int64)
    counts = rng.poisson(spec.mean_nnz_per_row, spec.rows)
    return np.minimum(counts, spec.cols).astype(np.int64)


TAIL_FRACTION = 0.08
TAIL_CAP_MULT = 3.0


def _row_counts_powerlaw(rng: np.random.Generator, spec: SyntheticSpec) -> np.ndarray:
    u_body = rng.random(spec.rows)
    u_tail = rng.random(spec.rows)
    is_tail = rng.random(spec.rows) < TAIL_FRACTION
    pareto = u_tail ** (-1.0 / spec.alpha)

    def counts_for(body_width: float) -> np.ndarray:
        body = np.floor(body_width * u_body)
        tail_start = max(body_width, 1.0)
        cap = min(float(spec.cols), TAIL_CAP_MULT * tail_start)
        tail = np.minimum(np.floor(tail_start * pareto), cap)
        counts = np.where(is_tail, tail, body)
        return np.minimum(counts, spec.cols).astype(np.int64)

    # calibrate the body width so the empirical mean matches; monotone, so bisect
    lo, hi = 0.0, 2.2 * spec.mean_nnz_per_row + 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if counts_for(mid).mean() < spec.mean_nnz_per_row:
            lo = mid
        else:
            hi = mid
    return counts_for(hi)


def _distinct_columns(rng: np.random.Generator, counts: np.ndarray,
                      cols: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct uniform column picks per row, resampling collisions."""
    rows_idx = np.arange(counts.size, dtype=np.int64)
    dense = counts > cols // 2
    out_r = [np.repeat(rows_idx[dense], counts[dense])]
    out_c = [np.concatenate([rng.permutation(cols)[:k] for k in counts[dense]])
             if dense.any() else np.empty(0, np.int64)]

    row = np.repeat(rows_idx[~dense], counts[~dense])
    col = rng.integers(0, cols, row.size)
    while True:
        key = row * cols + col
        order = np.argsort(key, kind="stable")
        k = key[order]
        dup = np.zeros(row.size, dtype=bool)
        dup[order[1:]] = k[1:] == k[:-1]
        if not dup.any():
            break
        col[dup] = rng.integers(0, cols, int(dup.sum()))
    out_r.append(row)
    out_c.append(col)
    return np.concatenate(out_r), np.concatenate(out_c)


def generate(spec: SyntheticSpec) -> TripletMatrix:
    """Generate a canonical TripletMatrix for the spec."""
    rng = np.random.default_rng(spec.seed)
    if spec.pattern == "uniform":
        counts = _row_counts_uniform(rng, spec)
    else:
        counts = _row_counts_powerlaw(rng, spec)
    row, col = _distinct_columns(rng, counts, spec.cols)
    val = rng.uniform(-1.0, 1.0, row.size)
    return TripletMatrix(spec.rows, spec.cols, row, col, val).canonicalized()
