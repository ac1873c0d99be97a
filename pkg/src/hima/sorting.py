"""Two-stage usage sort: per-tile mesh sort plus a global parallel merge.

Functional layer and cycle model are deliberately separate:

* the functional mesh sort runs a row/column phase schedule from the
  shear-sort family (snake-direction row sorts alternating with column
  sorts) until provably sorted, which takes 2*ceil(log2(P)) + 1 phases;
* the cycle model reports the pipelined hardware latency of the 6-phase
  sorter design, ``6 * (P + dpbs_depth)`` for the local stage and
  ``n + pms_depth`` for the merge stage.

Sorting keys are (value, original index) pairs throughout, so every
permutation is deterministic and matches a stable ascending argsort.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .scriptgen import next_power_of_two

MDSA_PHASES = 6  # pipelined hardware phase count used by the cycle model
DEFAULT_PMS_DEPTH = 7

_SENTINEL = (math.inf, -1)


def default_dpbs_depth(p: int) -> int:
    """Pipeline depth default: bitonic stage count, capped at the 16-input value (5)."""
    if p <= 1:
        return 1
    lg = math.ceil(math.log2(p))
    return min(lg * (lg + 1) // 2, 5)


@dataclass(frozen=True)
class SortConfig:
    """Geometry of the two-stage sorter for one local run length."""

    local_len: int  # n, elements per tile
    p: int  # mesh dimension, ceil(sqrt(n))
    dpbs_depth: int
    n_tiles: int
    pms_depth: int

    def __post_init__(self) -> None:
        if self.p * self.p < self.local_len:
            raise ValueError("mesh dimension too small for the local run")
        if self.dpbs_depth < 1 or self.pms_depth < 1:
            raise ValueError("pipeline depths must be >= 1")

    @classmethod
    def for_sort(
        cls,
        total_len: int,
        n_tiles: int,
        dpbs_depth: int | None = None,
        pms_depth: int = DEFAULT_PMS_DEPTH,
    ) -> "SortConfig":
        if total_len < 1 or n_tiles < 1 or total_len % n_tiles != 0:
            raise ValueError("total length must be a positive multiple of n_tiles")
        local = total_len // n_tiles
        p = math.isqrt(local)
        if p * p < local:
            p += 1
        return cls(
            local_len=local,
            p=p,
            dpbs_depth=dpbs_depth if dpbs_depth is not None else default_dpbs_depth(p),
            n_tiles=n_tiles,
            pms_depth=pms_depth,
        )

    @property
    def local_cycles(self) -> int:
        return MDSA_PHASES * (self.p + self.dpbs_depth)

    @property
    def global_cycles(self) -> int:
        return self.local_len + self.pms_depth if self.n_tiles > 1 else 0


@dataclass(frozen=True)
class CycleReport:
    local_cycles: int
    global_cycles: int
    total_cycles: int


def _bitonic_network(keys: list[tuple[float, int]], ascending: bool) -> None:
    """In-place bitonic sorting network; len(keys) must be a power of two."""
    n = len(keys)
    size = 2
    while size <= n:
        stride = size >> 1
        while stride >= 1:
            for i in range(n):
                j = i ^ stride
                if j > i:
                    up = ((i & size) == 0) == ascending
                    if (keys[i] > keys[j]) == up:
                        keys[i], keys[j] = keys[j], keys[i]
            stride >>= 1
        size <<= 1


def dpbs_sort(
    values, direction: str = "ascending", indices=None
) -> tuple[np.ndarray, np.ndarray]:
    """Sort one vector through the dual-mode bitonic network.

    Pads to the next power of two with +inf sentinels; returns the sorted
    values and the matching original-index permutation (sentinels removed).
    """
    if direction not in ("ascending", "descending"):
        raise ValueError(f"unknown direction {direction!r}")
    values = np.asarray(values, dtype=np.float64)
    if indices is None:
        indices = np.arange(values.shape[0])
    keys = [(float(v), int(i)) for v, i in zip(values, indices)]
    width = next_power_of_two(len(keys))
    keys.extend([_SENTINEL] * (width - len(keys)))
    _bitonic_network(keys, ascending=(direction == "ascending"))
    kept = [k for k in keys if k is not _SENTINEL and k[1] >= 0]
    return (
        np.array([k[0] for k in kept], dtype=np.float64),
        np.array([k[1] for k in kept], dtype=np.int64),
    )


def _mesh_sort(keys: list[tuple[float, int]], p: int) -> list[tuple[float, int]]:
    """Shear-sort the padded key list as a p x p mesh; returns snake-order readout."""
    grid = [keys[r * p : (r + 1) * p] for r in range(p)]
    pairs = max(1, math.ceil(math.log2(p))) if p > 1 else 0
    for _ in range(pairs):
        _snake_row_phase(grid, p)
        _column_phase(grid, p)
    _snake_row_phase(grid, p)
    out: list[tuple[float, int]] = []
    for r in range(p):
        row = grid[r]
        out.extend(row if r % 2 == 0 else reversed(row))
    return out


def _snake_row_phase(grid: list[list[tuple[float, int]]], p: int) -> None:
    for r in range(p):
        direction = "ascending" if r % 2 == 0 else "descending"
        grid[r] = _row_sorted(grid[r], direction)


def _column_phase(grid: list[list[tuple[float, int]]], p: int) -> None:
    for c in range(p):
        col = _row_sorted([grid[r][c] for r in range(p)], "ascending")
        for r in range(p):
            grid[r][c] = col[r]


def _row_sorted(row: list[tuple[float, int]], direction: str) -> list[tuple[float, int]]:
    pad = next_power_of_two(len(row)) - len(row)
    keys = list(row) + [_SENTINEL] * pad
    _bitonic_network(keys, ascending=(direction == "ascending"))
    if not pad:
        return keys
    # Drop exactly the padding sentinels; they are interchangeable with any
    # sentinels already present in the row, so position does not matter.
    out = []
    dropped = 0
    for key in keys:
        if dropped < pad and key is _SENTINEL:
            dropped += 1
        else:
            out.append(key)
    return out


def mdsa_sort(
    values, cfg: SortConfig | None = None, index_base: int = 0
) -> tuple[np.ndarray, np.ndarray, int]:
    """Local mesh sort of one run: (sorted values, permutation, cycles).

    ``index_base`` offsets the reported permutation, for per-tile chunks.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    if cfg is None:
        cfg = SortConfig.for_sort(n, 1)
    if n != cfg.local_len:
        raise ValueError("run length does not match the sort config")
    keys = [(float(v), index_base + i) for i, v in enumerate(values)]
    keys.extend([_SENTINEL] * (cfg.p * cfg.p - n))
    ordered = [k for k in _mesh_sort(keys, cfg.p) if k is not _SENTINEL and k[1] >= 0]
    sorted_values = np.array([k[0] for k in ordered], dtype=np.float64)
    permutation = np.array([k[1] for k in ordered], dtype=np.int64)
    return sorted_values, permutation, cfg.local_cycles


def parallel_merge(
    runs: list[tuple[np.ndarray, np.ndarray]], cfg: SortConfig
) -> tuple[np.ndarray, np.ndarray, int]:
    """Merge pre-sorted (values, indices) runs: (merged values, indices, cycles)."""
    for values, _ in runs:
        if np.any(np.diff(values) < 0):
            raise ValueError("parallel merge requires ascending runs")
    streams = [
        [(float(v), int(i)) for v, i in zip(values, idx)] for values, idx in runs
    ]
    merged = list(heapq.merge(*streams))
    cycles = cfg.local_len + cfg.pms_depth
    return (
        np.array([k[0] for k in merged], dtype=np.float64),
        np.array([k[1] for k in merged], dtype=np.int64),
        cycles,
    )


def two_stage_sort(
    values,
    n_tiles: int,
    dpbs_depth: int | None = None,
    pms_depth: int = DEFAULT_PMS_DEPTH,
) -> tuple[np.ndarray, CycleReport]:
    """Ascending index permutation of ``values`` plus the cycle report.

    Stage 1 mesh-sorts each of the ``n_tiles`` equal chunks; stage 2
    merges the runs. With one tile the merge stage is skipped. Local
    sorts run concurrently in hardware, so the local stage is charged
    once, not per tile.
    """
    values = np.asarray(values, dtype=np.float64)
    cfg = SortConfig.for_sort(values.shape[0], n_tiles, dpbs_depth, pms_depth)
    n = cfg.local_len
    runs = []
    for tile in range(n_tiles):
        chunk = values[tile * n : (tile + 1) * n]
        sorted_values, perm, _ = mdsa_sort(chunk, cfg, index_base=tile * n)
        runs.append((sorted_values, perm))
    if n_tiles == 1:
        permutation = runs[0][1]
        report = CycleReport(cfg.local_cycles, 0, cfg.local_cycles)
    else:
        _, permutation, global_cycles = parallel_merge(runs, cfg)
        report = CycleReport(
            cfg.local_cycles, global_cycles, cfg.local_cycles + global_cycles
        )
    return permutation, report


def centralized_baseline_cycles(total_len: int) -> int:
    """N log2 N merge-sort cycle baseline for speedup reporting."""
    if total_len < 1:
        raise ValueError("length must be >= 1")
    return int(round(total_len * math.log2(total_len))) if total_len > 1 else 1
