"""Reproducible, splittable random streams.

Every replication of an experiment draws from its own ``RngStream``; the pair
``(seed, stream_id)`` fully determines the variates, independently of the
order in which replications are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_U64 = 2**64


@dataclass(frozen=True)
class RngStream:
    """Address of an independent random stream.

    The generator behind a stream is Philox (counter based), keyed through a
    ``SeedSequence`` whose spawn key is the stream id, so distinct ids give
    statistically independent streams.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= value < _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value!r}")

    def generator(self) -> np.random.Generator:
        """Return a fresh generator positioned at the start of the stream."""
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "RngStream":
        """Derive a sub-stream, e.g. for a second independent ingredient of one replication."""
        mixed = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id), int(index)))
        return RngStream(int(mixed.generate_state(1, dtype=np.uint64)[0]), int(self.stream_id))
