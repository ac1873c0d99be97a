"""Deterministic interface-input scripts.

Inputs are drawn from a splitmix64 stream so the same seed yields
bit-identical scripts on every platform and in every language with IEEE
doubles. Constants and mappings (documented contract):

* state update: ``s += 0x9E3779B97F4A7C15`` (mod 2^64), output is the
  splitmix64 finalizer of ``s`` (xor-shift 30 / mul 0xBF58476D1CE4E5B9 /
  xor-shift 27 / mul 0x94D049BB133111EB / xor-shift 31);
* uniform double in [0, 1): top 53 bits scaled by 2^-53;
* keys and write vectors: ``2u - 1`` (uniform in [-1, 1));
* gates and erase entries: logistic map ``1 / (1 + exp(-8 (u - 0.5)))``;
* strengths: ``1 + 4u``;
* read modes: three uniforms normalized to the simplex;
* per-tile streams: tile ``t`` reseeds with ``mix64(seed ^ mix64(t + 1))``.
"""

from __future__ import annotations

import math

import numpy as np

from .dnc import InterfaceInput, MemoryGeometry, MemoryState, dnc_step, zero_state

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix64(value: int) -> int:
    """splitmix64 finalizer (public so reseeding is reproducible elsewhere)."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Splitmix64:
    """Tiny deterministic stream; not for cryptography, only reproducibility."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return mix64(self._state)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def uniforms(self, count: int) -> np.ndarray:
        return np.array([self.uniform() for _ in range(count)], dtype=np.float64)


def _logistic(u: np.ndarray | float):
    return 1.0 / (1.0 + np.exp(-8.0 * (np.asarray(u, dtype=np.float64) - 0.5)))


def random_interface(
    geometry: MemoryGeometry, rng: Splitmix64, dtype=np.float64
) -> InterfaceInput:
    """Draw one post-activation interface input with all range constraints met."""
    w, r = geometry.word_size, geometry.read_heads
    write_key = 2.0 * rng.uniforms(w) - 1.0
    write_strength = 1.0 + 4.0 * rng.uniform()
    write_vector = 2.0 * rng.uniforms(w) - 1.0
    erase_vector = _logistic(rng.uniforms(w))
    free_gates = _logistic(rng.uniforms(r))
    alloc_gate = float(_logistic(rng.uniform()))
    write_gate = float(_logistic(rng.uniform()))
    read_keys = 2.0 * rng.uniforms(r * w).reshape(r, w) - 1.0
    read_strengths = 1.0 + 4.0 * rng.uniforms(r)
    raw_modes = rng.uniforms(r * 3).reshape(r, 3)
    sums = raw_modes.sum(axis=1, keepdims=True)
    read_modes = np.where(sums > 1e-12, raw_modes / sums, 1.0 / 3.0)
    return InterfaceInput(
        write_key=write_key.astype(dtype),
        write_strength=write_strength,
        write_vector=write_vector.astype(dtype),
        erase_vector=erase_vector.astype(dtype),
        free_gates=free_gates.astype(dtype),
        alloc_gate=alloc_gate,
        write_gate=write_gate,
        read_keys=read_keys.astype(dtype),
        read_strengths=read_strengths.astype(dtype),
        read_modes=read_modes.astype(dtype),
    )


def random_script(
    geometry: MemoryGeometry, steps: int, seed: int, dtype=np.float64
) -> list[InterfaceInput]:
    rng = Splitmix64(seed)
    return [random_interface(geometry, rng, dtype) for _ in range(steps)]


def tile_scripts(
    geometry: MemoryGeometry, n_tiles: int, steps: int, seed: int
) -> list[list[InterfaceInput]]:
    """Independent per-tile scripts; ``geometry`` is the local (per-tile) shape."""
    return [
        random_script(geometry, steps, mix64(seed ^ mix64(tile + 1)))
        for tile in range(n_tiles)
    ]


def warmed_state(
    geometry: MemoryGeometry, seed: int, steps: int = 3, dtype=np.float64
) -> MemoryState:
    """A state with non-trivial contents: zero state advanced by a few random steps."""
    state = zero_state(geometry, dtype=dtype)
    for inp in random_script(geometry, steps, seed):
        state, _ = dnc_step(state, inp)
    return state


def checksum(values: np.ndarray) -> float:
    """Order-stable digest used in CSV traces: sum + max of absolute values."""
    flat = np.asarray(values, dtype=np.float64).ravel()
    if flat.size == 0:
        return 0.0
    return float(np.sum(flat) + np.max(np.abs(flat)))


def is_power_of_two(value: int) -> bool:
    return value >= 1 and (value & (value - 1)) == 0


def next_power_of_two(value: int) -> int:
    if value <= 1:
        return 1
    return 1 << math.ceil(math.log2(value))
