"""Per-kernel NoC traffic generation for the tiled memory engine.

Word-count accounting (the contract the tests pin down):

* ``normalize`` + ``similarity`` together move exactly the content-weighting
  closed form ``2 N (n_w - 1) + 2 (n_h - 1)``: per-row norm partial sums
  circulate inside each block row, and the softmax reduction scalars walk
  one block column up and down.
* ``memory-read`` moves exactly ``n_w (n_w - 1) N / N_t + W (n_h - 1)``:
  a representative block-row all-gather of the read weightings plus the
  per-block-column readout reductions.
* ``forward-backward`` moves exactly ``N *`` the normalized linkage cost:
  input all-gathers along one block column / one block row, plus full
  result rings over every block row and block column.
* ``linkage`` moves ``N (l_w + 2 l_h - 3)`` words (weighting and precedence
  segments shared inside block rows and columns).
* ``allocation`` chains one running product word per tile boundary;
  ``precedence`` circulates its global-sum scalar up and back.
* ``retention``, ``usage``, ``write-merge`` and ``read-merge`` are local.

Controller traffic is a model choice, not a pinned identity: key and
control words ride with ``similarity``, write/erase data with
``memory-write``, sorted runs up/down with ``usage-sort`` and the readout
with ``memory-read``. A trace describes ONE execution of its kernel; the
content-weighting pair runs once for the write key and once per read key
each step (charged by the cycle model, not duplicated here).

With a single tile every trace is empty, and in distributed mode
(``dnc-d``) only controller<->tile messages exist.
"""

from __future__ import annotations

from .noc import Message, TrafficTrace

KERNELS = (
    "normalize",
    "similarity",
    "memory-write",
    "memory-read",
    "retention",
    "usage",
    "usage-sort",
    "allocation",
    "write-merge",
    "linkage",
    "precedence",
    "forward-backward",
    "read-merge",
)

ACCESS_KERNELS = ("normalize", "similarity", "memory-write", "memory-read")
STATE_KERNELS = tuple(k for k in KERNELS if k not in ACCESS_KERNELS)

# Local-only kernels: no NoC traffic in the distributed-memory layout.
_SILENT = ("retention", "usage", "write-merge", "read-merge")

CT = -1  # placeholder id translated to the topology's controller node


def kernel_type(kernel: str) -> str:
    return "access" if kernel in ACCESS_KERNELS else "state"


def generate_kernel_trace(kernel: str, config) -> TrafficTrace:
    """Messages (tile ids; CT as -1) realizing one run of ``kernel``.

    ``config`` needs geometry, n_tiles, ext_partition, linkage_partition
    and model attributes (see :class:`hima.tilesim.ArchConfig`).
    """
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    if config.n_tiles == 1:
        return []
    if config.model == "dnc-d":
        return _dncd_trace(kernel, config)
    return _dnc_trace(kernel, config)


def trace_words(trace: TrafficTrace) -> int:
    return sum(m.words for m in trace)


def inter_pt_words(trace: TrafficTrace) -> int:
    return sum(m.words for m in trace if m.src != CT and m.dst != CT)


def ct_pt_words(trace: TrafficTrace) -> int:
    return sum(m.words for m in trace if m.src == CT or m.dst == CT)


def _dnc_trace(kernel: str, config) -> TrafficTrace:
    n = config.geometry.rows
    w = config.geometry.word_size
    r = config.geometry.read_heads
    n_tiles = config.n_tiles
    eh, ew = config.ext_partition.block_rows, config.ext_partition.block_cols
    lh, lw = config.linkage_partition.block_rows, config.linkage_partition.block_cols
    ext = _TileGrid(eh, ew)
    lnk = _TileGrid(lh, lw)
    msgs: TrafficTrace = []

    if kernel == "normalize":
        for bi in range(eh):
            for j in range(ew - 1):
                msgs.append(Message(ext.at(bi, j), ext.at(bi, j + 1), n // eh, tag=kernel))
            for j in range(ew - 1, 0, -1):
                msgs.append(Message(ext.at(bi, j), ext.at(bi, j - 1), n // eh, tag=kernel))
    elif kernel == "similarity":
        for i in range(eh - 1):
            msgs.append(Message(ext.at(i, 0), ext.at(i + 1, 0), 1, tag=kernel))
        for i in range(eh - 1, 0, -1):
            msgs.append(Message(ext.at(i, 0), ext.at(i - 1, 0), 1, tag=kernel))
        per_tile = (1 + r) * (w // ew) + 5 * r + 3  # key segments plus control scalars
        for t in range(n_tiles):
            msgs.append(Message(CT, t, per_tile, tag=kernel))
    elif kernel == "memory-write":
        for t in range(n_tiles):
            msgs.append(Message(CT, t, 2 * (w // ew), tag=kernel))
    elif kernel == "memory-read":
        msgs.extend(_ring_all_gather(ext, row=0, words=n // n_tiles, tag=kernel))
        for j in range(ew):
            for i in range(eh - 1):
                msgs.append(Message(ext.at(i, j), ext.at(i + 1, j), w // ew, tag=kernel))
            msgs.append(Message(ext.at(eh - 1, j), CT, r * (w // ew), tag=kernel))
    elif kernel == "usage-sort":
        run = n // n_tiles
        for t in range(n_tiles):
            msgs.append(Message(t, CT, run, tag=kernel))
            msgs.append(Message(CT, t, run, tag=kernel))
    elif kernel == "allocation":
        for t in range(n_tiles - 1):
            msgs.append(Message(t, t + 1, 1, tag=kernel))
    elif kernel == "precedence":
        for t in range(n_tiles - 1):
            msgs.append(Message(t, t + 1, 1, tag=kernel))
        for t in range(n_tiles - 1, 0, -1):
            msgs.append(Message(t, t - 1, 1, tag=kernel))
    elif kernel == "linkage":
        for li in range(lh):
            msgs.extend(_ring_all_gather(lnk, row=li, words=n // n_tiles, tag=kernel))
        for lj in range(lw):
            msgs.extend(_col_all_gather(lnk, col=lj, words=n // n_tiles, tag=kernel))
            msgs.extend(_col_all_gather(lnk, col=lj, words=n // n_tiles, tag=kernel))
    elif kernel == "forward-backward":
        msgs.extend(_col_all_gather(lnk, col=0, words=n // n_tiles, tag=kernel))
        msgs.extend(_row_circulate(lnk, words=n // lh, tag=kernel))
        msgs.extend(_ring_all_gather(lnk, row=0, words=n // n_tiles, tag=kernel))
        msgs.extend(_col_circulate(lnk, words=n // lw, tag=kernel))
    # retention, usage, write-merge, read-merge: local only.
    return [m for m in msgs if m.words > 0 and m.src != m.dst]


def _dncd_trace(kernel: str, config) -> TrafficTrace:
    w = config.geometry.word_size
    r = config.geometry.read_heads
    msgs: TrafficTrace = []
    if kernel == "similarity":
        per_tile = (1 + r) * w + 5 * r + 3  # full local-width sub-interface
        for t in range(config.n_tiles):
            msgs.append(Message(CT, t, per_tile, tag=kernel))
    elif kernel == "memory-write":
        for t in range(config.n_tiles):
            msgs.append(Message(CT, t, 2 * w, tag=kernel))
    elif kernel == "read-merge":
        for t in range(config.n_tiles):
            msgs.append(Message(t, CT, r * w, tag=kernel))
    return msgs


class _TileGrid:
    """Maps a partition's (block row, block col) to the flat tile id."""

    def __init__(self, block_rows: int, block_cols: int) -> None:
        self.rows = block_rows
        self.cols = block_cols

    def at(self, bi: int, bj: int) -> int:
        return bi * self.cols + bj


def _ring_all_gather(grid: _TileGrid, row: int, words: int, tag: str) -> TrafficTrace:
    """All-gather inside one block row: every tile passes its share around."""
    msgs = []
    for _round in range(grid.cols - 1):
        for j in range(grid.cols):
            msgs.append(
                Message(grid.at(row, j), grid.at(row, (j + 1) % grid.cols), words, tag=tag)
            )
    return msgs


def _col_all_gather(grid: _TileGrid, col: int, words: int, tag: str) -> TrafficTrace:
    msgs = []
    for _round in range(grid.rows - 1):
        for i in range(grid.rows):
            msgs.append(
                Message(grid.at(i, col), grid.at((i + 1) % grid.rows, col), words, tag=tag)
            )
    return msgs


def _row_circulate(grid: _TileGrid, words: int, tag: str) -> TrafficTrace:
    """One full rotation per block row; single-column rows rotate across rows."""
    msgs = []
    if grid.cols == 1:
        for i in range(grid.rows):
            msgs.append(Message(grid.at(i, 0), grid.at((i + 1) % grid.rows, 0), words, tag=tag))
        return msgs
    for i in range(grid.rows):
        for j in range(grid.cols):
            msgs.append(Message(grid.at(i, j), grid.at(i, (j + 1) % grid.cols), words, tag=tag))
    return msgs


def _col_circulate(grid: _TileGrid, words: int, tag: str) -> TrafficTrace:
    msgs = []
    if grid.rows == 1:
        for j in range(grid.cols):
            msgs.append(Message(grid.at(0, j), grid.at(0, (j + 1) % grid.cols), words, tag=tag))
        return msgs
    for j in range(grid.cols):
        for i in range(grid.rows):
            msgs.append(Message(grid.at(i, j), grid.at((i + 1) % grid.rows, j), words, tag=tag))
    return msgs
