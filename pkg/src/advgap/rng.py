"""Deterministic random streams.

Every random draw in the package comes from a generator keyed by
``(base_seed, stream_index, *sub_keys)``.  Work split across threads keys
its streams by trial/block index, never by worker, so results do not depend
on the schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngSeed:
    base_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("base_seed", "stream_index"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def sequence(self, *sub_keys: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(int(self.base_seed), spawn_key=(int(self.stream_index), *map(int, sub_keys)))

    def generator(self, *sub_keys: int) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.sequence(*sub_keys)))

    def child(self, index: int) -> "RngSeed":
        """A seed for an independent stream derived from this one."""
        state = self.sequence(index).generate_state(1, dtype=np.uint64)[0]
        return RngSeed(int(state), 0)

    def fingerprint(self) -> int:
        """64-bit integer identifying this stream (recorded in sweep output)."""
        return int(self.sequence().generate_state(1, dtype=np.uint64)[0])


def as_seed(seed) -> RngSeed:
    if isinstance(seed, RngSeed):
        return seed
    if isinstance(seed, tuple):
        return RngSeed(*seed)
    return RngSeed(int(seed), 0)
