"""Counter-based random streams.

Every chunk of paths gets its own Philox stream keyed by (seed, stream tag)
with the chunk index in the top counter word, so streams never overlap and
the draws for a chunk do not depend on which worker runs it.
"""
from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def chunk_generator(seed: int, stream: int, chunk: int) -> np.random.Generator:
    key = (int(seed) & MASK64) | ((int(stream) & MASK64) << 64)
    counter = np.array([0, 0, 0, int(chunk) & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def stream_tag(*parts) -> int:
    """Stable 64-bit tag from arbitrary labels (e.g. estimator name, query index)."""
    h = hashlib.sha256(repr(parts).encode()).digest()
    return int.from_bytes(h[:8], "little")
