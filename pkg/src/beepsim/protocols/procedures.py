"""The two building-block procedures, as sub-generators for station programs.

Use them with ``yield from``; every station runs them in lockstep whether or
not it takes part, so all stations see the same return value.
"""

from __future__ import annotations

from ..channel import BEEP, PAUSE, ProtocolViolation, Station, execute
from ..randomness import HEADS, CountedRandomSource, coin


def detect_collision(source, participating: bool):
    """Two rounds; participants beep in the first on heads, in the second on tails.

    Returns True iff both rounds carried a beep.  Non-participants toss no coin.
    """
    heads = participating and coin(source) == HEADS
    tails = participating and not heads
    first = yield BEEP if heads else PAUSE
    second = yield BEEP if tails else PAUSE
    return bool(first) and bool(second)


def next_string(k: int, my_string):
    """Radix search for the smallest k-bit string held by any station, in k rounds.

    Stations holding ``None`` only listen.  Starting from all ones, round i
    lets every station still matching the prefix found so far beep if its
    i-th bit is 0; a beep fixes that bit of the result to 0.
    """
    found = ["1"] * k
    candidate = my_string is not None
    for i in range(k):
        zero = candidate and my_string[i] == "0"
        heard = yield BEEP if zero else PAUSE
        if heard:
            found[i] = "0"
        candidate = candidate and my_string[i] == found[i]
    return "".join(found)


class _DetectOnce(Station):
    def program(self):
        return (yield from detect_collision(self.source, self.knowledge["participating"]))


class _NextStringOnce(Station):
    def program(self):
        return (yield from next_string(self.knowledge["k"], self.knowledge["my_string"]))


def run_detect_collision(participating, seed: int = 0, sources=None):
    """One call on a fresh channel; returns (result, execution, stations)."""
    if sources is None:
        sources = [CountedRandomSource(seed, i) for i in range(len(participating))]
    stations = [_DetectOnce(src, participating=bool(p)) for src, p in zip(sources, participating)]
    ex = execute(stations)
    results = set(ex.outputs)
    if len(results) != 1:
        raise ProtocolViolation("stations disagree on the collision verdict")
    return results.pop(), ex, stations


def run_next_string(k: int, strings, seed: int = 0):
    """Run the radix search over ``strings`` (None = no string); returns (result, execution)."""
    if k < 1:
        raise ValueError("k must be positive")
    if all(s is None for s in strings):
        raise ProtocolViolation("next_string needs at least one non-null string")
    if any(s is not None and len(s) != k for s in strings):
        raise ValueError(f"all strings must have length {k}")
    stations = [_NextStringOnce(CountedRandomSource(seed, i), k=k, my_string=s)
                for i, s in enumerate(strings)]
    ex = execute(stations)
    results = set(ex.outputs)
    if len(results) != 1:
        raise ProtocolViolation("stations disagree on the smallest string")
    return results.pop(), ex
