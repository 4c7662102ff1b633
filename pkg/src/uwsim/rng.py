"""Counter-based random streams.

Every stochastic operation draws from an :class:`RngStream`, which wraps a
Philox4x64-10 generator keyed by ``(seed, stream_id)``. Draw ``n`` of a
stream is a pure function of ``(seed, stream_id, substream, n)``, so samples
in a batch can be generated on any worker, in any order, and replay exactly.

Each uniform draw consumes one 64-bit Philox word ``w`` and maps it to
``(w >> 11) * 2**-53``, which lies in ``[0, 1)``.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_INV_2_53 = 1.0 / (1 << 53)


class RngStream:
    """A replayable stream of uniform draws.

    ``substream`` selects an independent sequence under the same key (it is
    placed in the most significant counter word), e.g. one per color channel.
    """

    def __init__(self, seed: int, stream_id: int = 0, substream: int = 0, counter: int = 0):
        if counter < 0:
            raise ValueError("counter must be non-negative")
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self.substream = int(substream) & _MASK64
        self.counter = 0
        self._bitgen = np.random.Philox(
            key=[self.seed, self.stream_id], counter=[0, 0, 0, self.substream]
        )
        if counter:
            self.skip(counter)

    def __repr__(self) -> str:
        return (
            f"RngStream(seed={self.seed}, stream_id={self.stream_id}, "
            f"substream={self.substream}, counter={self.counter})"
        )

    def child(self, substream: int) -> "RngStream":
        """Fresh stream with the same key and a different substream, at counter 0."""
        return RngStream(self.seed, self.stream_id, substream)

    def skip(self, n: int) -> None:
        """Advance by ``n`` draws without returning them."""
        if n <= 0:
            return
        self.raw(n)

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit words."""
        words = self._bitgen.random_raw(int(n))
        self.counter += int(n)
        return np.asarray(words, dtype=np.uint64)

    def uniform(self, n: int) -> np.ndarray:
        """Next ``n`` uniform draws in ``[0, 1)`` as float64."""
        words = self.raw(n)
        return (words >> np.uint64(11)).astype(np.float64) * _INV_2_53


def rng_uniform(stream: RngStream) -> float:
    """Single uniform draw in ``[0, 1)``; advances ``stream.counter`` by one."""
    return float(stream.uniform(1)[0])
