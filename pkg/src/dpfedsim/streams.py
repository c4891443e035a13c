"""Label-addressed, counter-based random streams.

Every random quantity in a run is drawn from a stream named by the run's
master seed plus a short path of ``(tag, index)`` labels, e.g.
``(("noise", 0), ("round", 17))``.  The label path is folded into a numpy
``SeedSequence`` spawn key and fed to a Philox (counter-based) bit generator,
so a stream never depends on how many draws other streams have made.

Gaussian variates use a frozen Box-Muller transform on Philox doubles rather
than numpy's ziggurat sampler; the output for a given key is therefore fixed
by this module alone.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1


def _tag_word(tag: str) -> int:
    digest = hashlib.blake2b(tag.encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class StreamKey:
    master_seed: int
    labels: tuple[tuple[str, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError(f"master_seed must fit in 64 unsigned bits, got {self.master_seed}")
        object.__setattr__(self, "labels", tuple((str(t), int(i)) for t, i in self.labels))

    def child(self, tag: str, index: int = 0) -> "StreamKey":
        return StreamKey(self.master_seed, self.labels + ((tag, index),))

    def spawn_key(self) -> tuple[int, ...]:
        words: list[int] = []
        for tag, index in self.labels:
            if index < 0:
                raise ValueError(f"label index must be nonnegative, got {index} for {tag!r}")
            words.extend((_tag_word(tag), index))
        return tuple(words)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.spawn_key())
        return np.random.Generator(np.random.Philox(seq))


def standard_normals(key: StreamKey, count: int) -> np.ndarray:
    """``count`` standard normal variates from ``key`` (Box-Muller, cos/sin interleaved).

    The i-th variate depends only on ``key`` and ``i``, so longer requests
    extend shorter ones.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    pairs = (count + 1) // 2
    gen = key.generator()
    u = gen.random(2 * pairs).reshape(pairs, 2)
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1 - u in (0, 1]
    angle = 2.0 * np.pi * u[:, 1]
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count]


def uniforms(key: StreamKey, count: int) -> np.ndarray:
    """``count`` doubles uniform on [0, 1)."""
    return key.generator().random(count)
