"""Deterministic, splittable random number generation.

Built on the counter-based Philox engine keyed by (seed, stream), so
identical seeds reproduce identical draw sequences on any platform and
independent streams can be derived without coordination.  Normal variates
are produced by Box-Muller on top of the raw uniforms.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x):
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def _tag_to_int(tag):
    if isinstance(tag, int):
        return tag & _MASK64
    if isinstance(tag, str):
        digest = hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"stream tag must be int or str, got {type(tag).__name__}")


class SeededRng:
    """A deterministic generator for one (seed, stream) pair."""

    def __init__(self, seed, stream=0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream) & _MASK64
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def stream(self, tag):
        """Derive an independent child stream; same (seed, path) -> same stream."""
        child = _splitmix64(self.stream_id ^ _splitmix64(_tag_to_int(tag)))
        return SeededRng(self.seed, child)

    def uniforms(self, n):
        """n float64 uniforms in [0, 1)."""
        return self._gen.random(int(n))

    def normals(self, shape, dtype=np.float32):
        """Standard normals of the given shape via Box-Muller."""
        if isinstance(shape, int):
            shape = (shape,)
        n = int(np.prod(shape)) if shape else 1
        m = (n + 1) // 2
        u1 = self._gen.random(m)
        u2 = self._gen.random(m)
        # 1 - u1 lies in (0, 1], keeping the log argument strictly positive
        r = np.sqrt(-2.0 * np.log1p(-u1))
        theta = (2.0 * np.pi) * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return z.reshape(shape).astype(dtype)

    def integers(self, low, high, size=None):
        """Uniform integers in [low, high)."""
        return self._gen.integers(low, high, size=size, dtype=np.int64)


def derive(seed, *tags):
    """Stateless stream derivation: derive(seed, "train", step) is stable
    regardless of how many draws other streams have consumed."""
    rng = SeededRng(seed)
    for tag in tags:
        rng = rng.stream(tag)
    return rng
