"""Named, independently seeded random streams.

Each stochastic subsystem (sensor noise, machine faults, link loss,
workload jitter, ...) draws from its own stream, so enabling a policy
that changes how often one subsystem draws can never shift the values
seen by another. This is what makes baseline and optimized runs honestly
paired under a shared seed.

Stream seeds are derived from (seed, stream_id) with SHA-256, so the same
pair produces the same sequence in any process on any platform.
"""

from __future__ import annotations

import hashlib
import random

__all__ = ["RngStream", "split_rng"]


class RngStream(random.Random):
    """A deterministic random stream identified by (seed, stream_id)."""

    def __new__(cls, seed: int, stream_id: str):
        # the C base class rejects extra constructor arguments
        return super().__new__(cls)

    def __init__(self, seed: int, stream_id: str):
        if not stream_id:
            raise ValueError("stream_id must be non-empty")
        self.base_seed = seed
        self.stream_id = stream_id
        digest = hashlib.sha256(f"{seed}:{stream_id}".encode("utf-8")).digest()
        super().__init__(int.from_bytes(digest, "big"))


def split_rng(seed: int, stream_id: str) -> RngStream:
    """Derive the independent stream named `stream_id` from `seed`."""
    return RngStream(seed, stream_id)
