"""Reproducible noise streams.

A stream is a Philox4x32-10 counter-based generator. Its 128 bits of key
material (two key words plus the two high counter words) are hashed from
``(experiment seed, stream id, replicate index)``; the low 64 counter bits
are the draw index divided by two. Draw ``d`` of a stream is therefore a pure
function of ``(seed, stream, replicate, d)``: replications can be scheduled on
any thread in any order and chunked arbitrarily without changing a value.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _fastmath

# stream ids used by the library; callers may pick any other non-negative int
SPATIAL_STREAM = 1
TEMPORAL_STREAM = 2
SOLVER_STREAM = 3
ORACLE_STREAM = 4


@dataclass(frozen=True)
class NoiseStream:
    """Handle naming one reproducible standard-normal stream."""

    seed: int
    stream: int = 0
    replicate: int = 0

    def __post_init__(self):
        for name in ("seed", "stream", "replicate"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")

    @property
    def provenance(self) -> tuple[int, int, int]:
        return (self.seed, self.stream, self.replicate)

    def key(self) -> tuple:
        return self._key

    @cached_property
    def _key(self) -> tuple:
        words = np.random.SeedSequence([self.seed, self.stream, self.replicate]).generate_state(4)
        return tuple(np.uint64(w) for w in words)

    def normals(self, size, start: int = 0) -> np.ndarray:
        """Standard normals for draw indices ``start, start + 1, ...`` (C order)."""
        out = np.empty(size)
        self.fill(out, start)
        return out

    def fill(self, out: np.ndarray, start: int = 0) -> None:
        """In-place variant of :meth:`normals`; ``out`` must be C-contiguous float64."""
        if out.dtype != np.float64 or not out.flags.c_contiguous:
            raise ValueError("out must be a C-contiguous float64 array")
        k0, k1, c2, c3 = self.key()
        _fastmath.normals(k0, k1, c2, c3, int(start), out.reshape(-1))

    def with_replicate(self, replicate: int) -> "NoiseStream":
        return NoiseStream(self.seed, self.stream, replicate)
