"""Closed-form inter-tile traffic costs of submatrix memory partitions.

A partition splits a distributed matrix into ``block_rows`` x ``block_cols``
tiles. Costs count word-transfers between tiles; the linkage cost is kept
in its per-memory-row normalized form (fractional values are meaningful).
The external-memory objective sums the content-weighting and memory-read
costs: they are the two kernels that touch the external memory, and the
sum is what the row-wise optimum minimizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, TypeAlias

TrafficCost: TypeAlias = float

Kernel = Literal["read", "linkage"]


@dataclass(frozen=True)
class PartitionSpec:
    block_rows: int
    block_cols: int

    def __post_init__(self) -> None:
        if self.block_rows < 1 or self.block_cols < 1:
            raise ValueError("block counts must be >= 1")

    @property
    def tiles(self) -> int:
        return self.block_rows * self.block_cols


def enumerate_partitions(n_tiles: int) -> list[PartitionSpec]:
    """All factor pairs of ``n_tiles``, ascending in block_cols."""
    if n_tiles < 1:
        raise ValueError("tile count must be >= 1")
    specs = [
        PartitionSpec(n_tiles // cols, cols)
        for cols in range(1, n_tiles + 1)
        if n_tiles % cols == 0
    ]
    return specs


def content_cost(rows: int, spec: PartitionSpec) -> TrafficCost:
    """Word transfers for content-based weighting (row-norm psums + softmax scalars)."""
    return 2.0 * rows * (spec.block_cols - 1) + 2.0 * (spec.block_rows - 1)


def read_cost(rows: int, word_size: int, n_tiles: int, spec: PartitionSpec) -> TrafficCost:
    """Word transfers for the weighted memory readout under a partition."""
    return (
        spec.block_cols * (spec.block_cols - 1) * rows / n_tiles
        + word_size * (spec.block_rows - 1)
    )


def linkage_cost(n_tiles: int, spec: PartitionSpec) -> TrafficCost:
    """Normalized word transfers (per memory row) of the forward + backward passes."""
    h, w = spec.block_rows, spec.block_cols
    forward = h * (h - 1) / n_tiles + w
    backward = w * (w - 1) / n_tiles + h
    return forward + backward


def _feasible_external(rows: int, word_size: int, spec: PartitionSpec) -> bool:
    return rows % spec.block_rows == 0 and word_size % spec.block_cols == 0


def _feasible_linkage(rows: int, spec: PartitionSpec) -> bool:
    return rows % spec.block_rows == 0 and rows % spec.block_cols == 0


def optimal_external(rows: int, word_size: int, n_tiles: int) -> PartitionSpec:
    """Partition minimizing content + read cost; ties go to more block rows.

    Partitions that do not divide the matrix evenly are skipped rather
    than rejected.
    """
    best: PartitionSpec | None = None
    best_cost = float("inf")
    for spec in enumerate_partitions(n_tiles):
        if not _feasible_external(rows, word_size, spec):
            continue
        cost = content_cost(rows, spec) + read_cost(rows, word_size, n_tiles, spec)
        # Enumeration is ascending in block_cols, so a strict comparison
        # keeps the larger-block_rows candidate on ties.
        if cost < best_cost:
            best, best_cost = spec, cost
    if best is None:
        raise ValueError("no feasible external-memory partition")
    return best


def optimal_linkage(n_tiles: int, rows: int | None = None) -> PartitionSpec:
    """Partition minimizing the linkage cost (ties go to more block rows)."""
    best: PartitionSpec | None = None
    best_cost = float("inf")
    for spec in enumerate_partitions(n_tiles):
        if rows is not None and not _feasible_linkage(rows, spec):
            continue
        cost = linkage_cost(n_tiles, spec)
        if cost < best_cost:
            best, best_cost = spec, cost
    if best is None:
        raise ValueError("no feasible linkage partition")
    return best


def sweep_costs(
    rows: int,
    word_size: int,
    tile_counts: Iterable[int],
    kernel: Kernel,
) -> list[tuple[int, int, int, float, str]]:
    """Full cost surface as (n_t, n_w, n_h, cost, kernel) rows, CSV-ready."""
    if kernel not in ("read", "linkage"):
        raise ValueError(f"unknown sweep kernel {kernel!r}")
    table = []
    for n_tiles in tile_counts:
        for spec in enumerate_partitions(n_tiles):
            if kernel == "read":
                if not _feasible_external(rows, word_size, spec):
                    continue
                cost = read_cost(rows, word_size, n_tiles, spec)
            else:
                if not _feasible_linkage(rows, spec):
                    continue
                cost = linkage_cost(n_tiles, spec)
            table.append(
                (n_tiles, spec.block_cols, spec.block_rows, float(cost), kernel)
            )
    return table
