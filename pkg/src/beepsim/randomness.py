"""Counted fair-coin sources.

Every random decision a station makes is built from single fair coin flips
drawn from its own :class:`CountedRandomSource`.  The source keeps an exact
count of the flips handed out, which is what the bit-complexity figures
report.

The underlying generator is numpy's PCG64, seeded through
``SeedSequence(seed, spawn_key=(stream,))``.  The test rig passes the station
index as ``stream`` so that stations get independent, reproducible streams;
protocol code never sees that index.
"""

from __future__ import annotations

import numpy as np

HEADS = 1
TAILS = 0

_REFILL_WORDS = 2


class CountedRandomSource:
    """A stream of fair bits with a consumed-bit counter.

    Bits come out of a single ordered stream, so ``bits(3)`` returns exactly
    the same value as three successive ``bits(1)`` calls packed most
    significant first.  Both forms add 3 to ``bits_consumed``.
    """

    def __init__(self, seed: int, stream: int | None = None):
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.seed = seed
        self.stream = stream
        self._bitgen = None
        self._buf = 0
        self._avail = 0
        self.bits_consumed = 0
        # bits spent on rejected uniform() attempts; observer-side bookkeeping
        self.rejected_bits = 0

    def fresh(self) -> "CountedRandomSource":
        """A new source replaying this one's stream from the start."""
        return type(self)(self.seed, self.stream)

    def bits(self, k: int) -> int:
        """Next ``k`` bits of the stream as an integer, first bit most significant."""
        if k < 0:
            raise ValueError("k must be non-negative")
        while self._avail < k:
            if self._bitgen is None:
                spawn_key = () if self.stream is None else (self.stream,)
                self._bitgen = np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=spawn_key))
            for word in self._bitgen.random_raw(_REFILL_WORDS).tolist():
                self._buf = (self._buf << 64) | word
            self._avail += 64 * _REFILL_WORDS
        self._avail -= k
        out = self._buf >> self._avail
        self._buf &= (1 << self._avail) - 1
        self.bits_consumed += k
        return out

    def __repr__(self):
        return (f"{type(self).__name__}(seed={self.seed}, stream={self.stream}, "
                f"bits_consumed={self.bits_consumed})")


class ScriptedSource(CountedRandomSource):
    """A source that plays back a fixed bit sequence, for hand-worked tests.

    Running past the end of the script raises ``IndexError``.
    """

    def __init__(self, script, seed: int = 0, stream: int | None = None):
        self.script = [int(b) for b in script]
        if any(b not in (0, 1) for b in self.script):
            raise ValueError("script must contain only 0/1 values")
        self.seed = seed
        self.stream = stream
        self._pos = 0
        self.bits_consumed = 0
        self.rejected_bits = 0

    def fresh(self) -> "ScriptedSource":
        return type(self)(self.script, self.seed, self.stream)

    def bits(self, k: int) -> int:
        if k < 0:
            raise ValueError("k must be non-negative")
        if self._pos + k > len(self.script):
            raise IndexError("scripted source exhausted")
        out = 0
        for b in self.script[self._pos:self._pos + k]:
            out = (out << 1) | b
        self._pos += k
        self.bits_consumed += k
        return out


def coin(source: CountedRandomSource) -> int:
    """One fair coin toss: ``HEADS`` (1) or ``TAILS`` (0)."""
    return source.bits(1)


def width(size: int) -> int:
    """Number of flips per attempt when sampling from ``size`` values: ceil(lg size)."""
    return (size - 1).bit_length()


def uniform(source: CountedRandomSource, lo: int, hi: int) -> int:
    """Exactly uniform integer in ``[lo, hi]`` by rejection sampling.

    Each attempt reads ``ceil(lg(hi - lo + 1))`` flips; values past the range
    are discarded and their flips are also tallied in ``rejected_bits``.
    """
    if lo > hi:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    size = hi - lo + 1
    w = width(size)
    while True:
        v = source.bits(w)
        if v < size:
            return lo + v
        source.rejected_bits += w


def bit_string(source: CountedRandomSource, k: int) -> str:
    """A uniformly random string of ``k`` bits, e.g. ``'0110'``."""
    if k < 1:
        raise ValueError("bit strings must have length >= 1")
    return format(source.bits(k), f"0{k}b")
