"""Functional model of the DNC memory unit.

Single-address-space golden model, written for clarity and auditability:
plain numpy, float64 by default (float32 available through the ``dtype``
argument of :func:`zero_state`). Every kernel is a pure function; a full
time step threads an explicit :class:`MemoryState` through the write
pipeline followed by the read pipeline.

Step ordering notes:

* the write pipeline fully completes (producing the new memory matrix)
  before any read-side kernel runs;
* the linkage update consumes the precedence vector of the *previous*
  step, and the precedence vector is refreshed afterwards;
* the usage ordering is ascending with ties broken by lower index, which
  makes every step fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# Guard added to the cosine-similarity denominator so all-zero rows or
# keys degrade to similarity 0 instead of dividing by zero.
COSINE_EPS = 1e-6

# Slack applied when checking sum-to-at-most-one invariants.
SUM_TOL = 1e-9


@dataclass(frozen=True)
class MemoryGeometry:
    """Shape of the memory unit: ``rows`` x ``word_size`` matrix, ``read_heads`` parallel reads.

    A full memory unit is modeled tall (``rows > word_size``); that is
    enforced where a global configuration is validated, not here, because
    per-tile sub-memories of a distributed run may be square or wide.
    """

    rows: int
    word_size: int
    read_heads: int

    def __post_init__(self) -> None:
        if self.rows < 1 or self.word_size < 1 or self.read_heads < 1:
            raise ValueError("all geometry dimensions must be >= 1")

    @property
    def is_tall(self) -> bool:
        return self.rows > self.word_size


@dataclass
class MemoryState:
    """All persistent state of the memory unit.

    ``write_weighting`` and ``read_weightings`` hold the *previous* step's
    weightings; they feed usage and forward/backward updates of the next step.
    """

    memory: np.ndarray  # (rows, word_size)
    usage: np.ndarray  # (rows,) in [0, 1]
    precedence: np.ndarray  # (rows,) nonnegative, sums to <= 1
    linkage: np.ndarray  # (rows, rows) in [0, 1], zero diagonal
    write_weighting: np.ndarray  # (rows,) nonnegative, sums to <= 1
    read_weightings: np.ndarray  # (rows, read_heads) columns sum to <= 1

    def copy(self) -> "MemoryState":
        return MemoryState(
            self.memory.copy(),
            self.usage.copy(),
            self.precedence.copy(),
            self.linkage.copy(),
            self.write_weighting.copy(),
            self.read_weightings.copy(),
        )


@dataclass
class InterfaceInput:
    """One step's post-activation inputs to the memory unit.

    Gates, strengths and modes are expected to already lie in their valid
    ranges (the network that would produce them is out of scope here).
    """

    write_key: np.ndarray  # (word_size,)
    write_strength: float  # >= 1
    write_vector: np.ndarray  # (word_size,)
    erase_vector: np.ndarray  # (word_size,) in [0, 1]
    free_gates: np.ndarray  # (read_heads,) in [0, 1]
    alloc_gate: float  # in [0, 1]
    write_gate: float  # in [0, 1]
    read_keys: np.ndarray  # (read_heads, word_size)
    read_strengths: np.ndarray  # (read_heads,) >= 1
    read_modes: np.ndarray  # (read_heads, 3) rows on the simplex


@dataclass
class StepOutput:
    """Read vectors plus every intermediate of the step, for inspection."""

    read_vectors: np.ndarray  # (read_heads, word_size)
    content_write_weighting: np.ndarray  # (rows,)
    retention: np.ndarray  # (rows,)
    sort_order: np.ndarray  # (rows,) ascending-usage index permutation
    alloc_weighting: np.ndarray  # (rows,)
    write_weighting: np.ndarray  # (rows,)
    content_read_weightings: np.ndarray  # (rows, read_heads)
    forward: np.ndarray  # (rows, read_heads)
    backward: np.ndarray  # (rows, read_heads)
    read_weightings: np.ndarray  # (rows, read_heads)


def zero_state(geometry: MemoryGeometry, dtype=np.float64) -> MemoryState:
    """Fresh all-zero state (usage zero means every location is free)."""
    n, w, r = geometry.rows, geometry.word_size, geometry.read_heads
    return MemoryState(
        memory=np.zeros((n, w), dtype=dtype),
        usage=np.zeros(n, dtype=dtype),
        precedence=np.zeros(n, dtype=dtype),
        linkage=np.zeros((n, n), dtype=dtype),
        write_weighting=np.zeros(n, dtype=dtype),
        read_weightings=np.zeros((n, r), dtype=dtype),
    )


def invariant_violations(state: MemoryState) -> list[str]:
    """Check every state invariant; returns human-readable violations (empty = healthy)."""
    bad: list[str] = []
    u, p, link = state.usage, state.precedence, state.linkage
    if np.any(u < 0) or np.any(u > 1):
        bad.append("usage outside [0, 1]")
    if np.any(link < 0) or np.any(link > 1):
        bad.append("linkage entry outside [0, 1]")
    if np.any(np.diag(link) != 0):
        bad.append("linkage diagonal not zero")
    if np.any(p < 0) or p.sum() > 1 + SUM_TOL:
        bad.append("precedence negative or sums above 1")
    ww = state.write_weighting
    if np.any(ww < 0) or ww.sum() > 1 + SUM_TOL:
        bad.append("write weighting negative or sums above 1")
    wr = state.read_weightings
    if np.any(wr < 0) or np.any(wr.sum(axis=0) > 1 + SUM_TOL):
        bad.append("read weighting negative or a column sums above 1")
    return bad


def softmax(x: np.ndarray) -> np.ndarray:
    """Numerically-shifted exact softmax."""
    e = np.exp(x - np.max(x))
    return e / np.sum(e)


def content_weighting(
    memory: np.ndarray,
    key: np.ndarray,
    strength: float,
    softmax_fn: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Cosine-similarity weighting of memory rows against a key.

    Returns a probability vector over rows: softmax of ``strength`` times
    the cosine similarity, with an epsilon-guarded denominator.
    """
    row_norms = np.sqrt(np.sum(memory * memory, axis=1))
    key_norm = np.sqrt(np.sum(key * key))
    cos = (memory @ key) / (row_norms * key_norm + COSINE_EPS)
    fn = softmax_fn if softmax_fn is not None else softmax
    return fn(strength * cos)


def retention(free_gates: np.ndarray, read_prev: np.ndarray) -> np.ndarray:
    """Per-row fraction retained: prod over heads of (1 - gate * previous read weight)."""
    return np.prod(1.0 - free_gates[np.newaxis, :] * read_prev, axis=1)


def usage_update(
    usage_prev: np.ndarray, write_prev: np.ndarray, retain: np.ndarray
) -> np.ndarray:
    """Usage after accounting for last step's write and this step's retention."""
    return (usage_prev + write_prev - usage_prev * write_prev) * retain


def allocation(usage: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Free-list weighting from ascending-usage ``order``.

    The least-used location receives ``1 - usage`` and each subsequent
    location is discounted by the product of all smaller usages, so the
    whole vector telescopes to ``1 - prod(usage)``.
    """
    order = np.asarray(order)
    n = usage.shape[0]
    if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
        raise ValueError("order must be a permutation of 0..rows-1")
    sorted_usage = usage[order]
    shifted = np.concatenate(([sorted_usage.dtype.type(1.0)], sorted_usage[:-1]))
    weights = (1.0 - sorted_usage) * np.cumprod(shifted)
    out = np.empty_like(usage)
    out[order] = weights
    return out


def write_weighting(
    content: np.ndarray, alloc: np.ndarray, write_gate: float, alloc_gate: float
) -> np.ndarray:
    """Gate-controlled blend of free-list and content-lookup write weightings."""
    return write_gate * (alloc_gate * alloc + (1.0 - alloc_gate) * content)


def memory_write(
    memory: np.ndarray,
    weighting: np.ndarray,
    erase_vector: np.ndarray,
    write_vector: np.ndarray,
) -> np.ndarray:
    """Weighted erase followed by weighted add; zero weighting is the identity."""
    w = weighting[:, np.newaxis]
    return memory * (1.0 - w * erase_vector[np.newaxis, :]) + w * write_vector[np.newaxis, :]


def precedence_update(precedence_prev: np.ndarray, weighting: np.ndarray) -> np.ndarray:
    """Decay old precedence by the total write mass and add the new weighting."""
    return (1.0 - np.sum(weighting)) * precedence_prev + weighting


def linkage_update(
    linkage_prev: np.ndarray, weighting: np.ndarray, precedence_prev: np.ndarray
) -> np.ndarray:
    """Temporal link update, computed entrywise (no rank-expanded weighting matrix).

    ``link[i, j]`` decays by the write mass touching either end and gains
    ``weighting[i] * precedence_prev[j]``; the diagonal stays exactly zero.
    """
    w_col = weighting[:, np.newaxis]
    w_row = weighting[np.newaxis, :]
    link = (1.0 - w_col - w_row) * linkage_prev + w_col * precedence_prev[np.newaxis, :]
    np.fill_diagonal(link, 0.0)
    return link


def forward_backward(
    linkage: np.ndarray, read_prev: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Push previous read weightings one write-order step forward and backward."""
    return linkage @ read_prev, linkage.T @ read_prev


def read_weighting(
    read_modes: np.ndarray,
    backward: np.ndarray,
    content: np.ndarray,
    forward: np.ndarray,
) -> np.ndarray:
    """Per-head convex mix of backward, content and forward weightings."""
    return (
        read_modes[:, 0][np.newaxis, :] * backward
        + read_modes[:, 1][np.newaxis, :] * content
        + read_modes[:, 2][np.newaxis, :] * forward
    )


def memory_read(memory: np.ndarray, weightings: np.ndarray) -> np.ndarray:
    """Weighted readout, one row per head."""
    return weightings.T @ memory


def ascending_argsort(values: np.ndarray) -> np.ndarray:
    """Ascending order with ties broken by lower index (stable)."""
    return np.argsort(values, kind="stable")


def dnc_step(
    state: MemoryState,
    inp: InterfaceInput,
    softmax_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    alloc_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    sort_fn: Callable[[np.ndarray], np.ndarray] = ascending_argsort,
) -> tuple[MemoryState, StepOutput]:
    """One full soft-write + soft-read step.

    ``softmax_fn`` swaps the exact softmax for an approximation (see
    :mod:`hima.approx`); ``alloc_fn`` overrides the allocation weighting
    (usage skimming); ``sort_fn`` must return an ascending permutation and
    exists so a sorting engine can be swapped in for the plain argsort.
    """
    # Write pipeline, on last step's memory.
    content_w = content_weighting(
        state.memory, inp.write_key, inp.write_strength, softmax_fn
    )
    retain = retention(inp.free_gates, state.read_weightings)
    usage = usage_update(state.usage, state.write_weighting, retain)
    order = sort_fn(usage)
    if alloc_fn is not None:
        alloc = alloc_fn(usage)
    else:
        alloc = allocation(usage, order)
    ww = write_weighting(content_w, alloc, inp.write_gate, inp.alloc_gate)
    memory = memory_write(state.memory, ww, inp.erase_vector, inp.write_vector)

    linkage = linkage_update(state.linkage, ww, state.precedence)
    precedence = precedence_update(state.precedence, ww)

    # Read pipeline, on the freshly written memory.
    content_r = np.stack(
        [
            content_weighting(memory, inp.read_keys[r], inp.read_strengths[r], softmax_fn)
            for r in range(inp.read_keys.shape[0])
        ],
        axis=1,
    )
    fwd, bwd = forward_backward(linkage, state.read_weightings)
    wr = read_weighting(inp.read_modes, bwd, content_r, fwd)
    vr = memory_read(memory, wr)

    new_state = MemoryState(
        memory=memory,
        usage=usage,
        precedence=precedence,
        linkage=linkage,
        write_weighting=ww,
        read_weightings=wr,
    )
    out = StepOutput(
        read_vectors=vr,
        content_write_weighting=content_w,
        retention=retain,
        sort_order=order,
        alloc_weighting=alloc,
        write_weighting=ww,
        content_read_weightings=content_r,
        forward=fwd,
        backward=bwd,
        read_weightings=wr,
    )
    return new_state, out


def run_script(
    state: MemoryState,
    script: Sequence[InterfaceInput],
    **step_kwargs,
) -> tuple[MemoryState, list[StepOutput]]:
    """Run a sequence of steps, returning the final state and all outputs."""
    outputs = []
    for inp in script:
        state, out = dnc_step(state, inp, **step_kwargs)
        outputs.append(out)
    return state, outputs
