"""Efficiency approximations: affine-table softmax and usage skimming.

Both are optional plug-ins for the memory-unit step. The softmax table
replaces exp on [-bound, 0] by per-segment chords, so one multiply and one
add per input; skimming drops a fraction of usage entries before the
sort/allocation pair.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .dnc import allocation, ascending_argsort

SKIM_LARGEST = "skim-largest"
SKIM_SMALLEST = "skim-smallest"

# Defaults chosen so exp(-bound) is below float32 noise: clamping at the
# left edge then costs nothing visible after normalization.
DEFAULT_SEGMENTS = 32
DEFAULT_BOUND = 16.0


@dataclass(frozen=True)
class AffineTable:
    """Chord interpolation of exp over [-bound, 0] in ``segments`` uniform pieces.

    Each piece is evaluated as ``slope * x + intercept``. Intercepts are
    anchored at the right knot of each segment, so the value at x = 0 is
    exactly 1.0.
    """

    slopes: np.ndarray
    intercepts: np.ndarray
    bound: float
    segments: int

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        h = self.bound / self.segments
        idx = np.clip(np.floor((x + self.bound) / h).astype(int), 0, self.segments - 1)
        return self.slopes[idx] * x + self.intercepts[idx]

    def knots(self) -> np.ndarray:
        return np.linspace(-self.bound, 0.0, self.segments + 1)

    def dump_csv(self, path) -> None:
        """Write (knot, slope, intercept) rows, one per segment (left knot shown)."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["knot", "slope", "intercept"])
            for k, (s, b) in enumerate(zip(self.slopes, self.intercepts)):
                writer.writerow([repr(self.knots()[k]), repr(float(s)), repr(float(b))])


def build_exp_table(
    segments: int = DEFAULT_SEGMENTS, bound: float = DEFAULT_BOUND
) -> AffineTable:
    """Build the chord table; raises on nonpositive sizes."""
    if segments < 1:
        raise ValueError("segments must be >= 1")
    if not bound > 0:
        raise ValueError("bound must be positive")
    knots = np.linspace(-bound, 0.0, segments + 1)
    values = np.exp(knots)
    h = bound / segments
    slopes = (values[1:] - values[:-1]) / h
    # Right-knot anchoring keeps the x = 0 endpoint exact.
    intercepts = values[1:] - slopes * knots[1:]
    return AffineTable(slopes=slopes, intercepts=intercepts, bound=bound, segments=segments)


def softmax_pla(x: np.ndarray, table: AffineTable) -> np.ndarray:
    """Approximate softmax: shift by the max, clamp to the table domain, normalize."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("softmax of an empty vector")
    shifted = np.maximum(x - np.max(x), -table.bound)
    y = table(shifted)
    return y / np.sum(y)


@dataclass(frozen=True)
class SkimConfig:
    """Drop ``floor(fraction * n)`` usage entries before sorting.

    ``skim-largest`` removes the most-used locations (they carry the least
    allocation weight); ``skim-smallest`` removes the least-used ones.
    """

    fraction: float = 0.0
    policy: str = SKIM_LARGEST

    def __post_init__(self) -> None:
        if not 0.0 <= self.fraction < 1.0:
            raise ValueError("skim fraction must be in [0, 1)")
        if self.policy not in (SKIM_LARGEST, SKIM_SMALLEST):
            raise ValueError(f"unknown skim policy {self.policy!r}")

    def drop_count(self, n: int) -> int:
        return int(math.floor(self.fraction * n + 1e-12))


def skim_usage(usage: np.ndarray, cfg: SkimConfig) -> np.ndarray:
    """Indices kept after skimming, in original index order."""
    n = usage.shape[0]
    drop = cfg.drop_count(n)
    if drop == 0:
        return np.arange(n)
    order = ascending_argsort(usage)
    dropped = order[n - drop:] if cfg.policy == SKIM_LARGEST else order[:drop]
    keep = np.ones(n, dtype=bool)
    keep[dropped] = False
    return np.nonzero(keep)[0]


def allocation_skimmed(usage: np.ndarray, cfg: SkimConfig) -> np.ndarray:
    """Allocation weighting over the kept indices only; skimmed entries get 0.

    With fraction 0 this is bit-identical to plain :func:`allocation`.
    """
    n = usage.shape[0]
    kept = skim_usage(usage, cfg)
    if kept.shape[0] == n:
        return allocation(usage, ascending_argsort(usage))
    sub = usage[kept]
    sub_alloc = allocation(sub, ascending_argsort(sub))
    out = np.zeros_like(usage)
    out[kept] = sub_alloc
    return out
