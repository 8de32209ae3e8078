"""Independent references for checking the protocols.

Nothing here imports the protocol code.  The ball process shares only the
randomness module with it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .randomness import uniform

PROPER = "proper"
DUPLICATES = "duplicates"
INVALID = "invalid"


@dataclass(frozen=True)
class Classification:
    kind: str
    distinct: int | None = None

    @property
    def proper(self) -> bool:
        return self.kind == PROPER

    def __str__(self):
        if self.kind == DUPLICATES:
            return f"{DUPLICATES}({self.distinct})"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "Classification":
        if text.startswith(DUPLICATES + "("):
            return cls(DUPLICATES, int(text[len(DUPLICATES) + 1:-1]))
        if text not in (PROPER, INVALID):
            raise ValueError(f"unknown classification {text!r}")
        return cls(text)


@dataclass(frozen=True)
class NamingOutcome:
    names: tuple
    classification: Classification
    n_actual: int


def validate_names(names, n: int) -> Classification:
    """Classify a name assignment for ``n`` stations.

    proper: a permutation of 1..n.  duplicates(k'): the name set is exactly
    1..k' with k' < n.  Anything else (gaps, nulls, wrong count) is invalid.
    """
    names = list(names)
    if len(names) != n or any(not isinstance(x, int) or isinstance(x, bool) for x in names):
        return Classification(INVALID)
    distinct = set(names)
    if distinct != set(range(1, len(distinct) + 1)):
        return Classification(INVALID)
    if len(distinct) == n:
        return Classification(PROPER)
    return Classification(DUPLICATES, len(distinct))


def naming_outcome(names) -> NamingOutcome:
    names = tuple(names)
    return NamingOutcome(names, validate_names(names, len(names)), len(names))


def undetected_probability(k: int, m: int) -> float:
    """Chance that m time-disjoint calls shared by k stations all miss: 2^(m-k)."""
    if m < 1 or m > k:
        raise ValueError(f"need 1 <= m <= k, got k={k}, m={m}")
    return 2.0 ** (m - k)


def lex_min(strings) -> str:
    strings = list(strings)
    if not strings:
        raise ValueError("lex_min of an empty list")
    if len({len(s) for s in strings}) != 1:
        raise ValueError("strings must all have the same length")
    if any(set(s) - {"0", "1"} for s in strings):
        raise ValueError("strings must be made of 0 and 1")
    return min(strings)


@dataclass
class BallProcessResult:
    total_throws: int
    stages: int
    stage_balls: list


def ball_process(n: int, source) -> BallProcessResult:
    """Throw the i live balls into i * ceil(lg n) bins, drop singletons, repeat.

    Counts every throw until no ball is left.
    """
    if n < 2:
        raise ValueError("the ball process needs n >= 2")
    per_ball = (n - 1).bit_length()
    live = n
    throws = 0
    stage_balls = []
    while live:
        stage_balls.append(live)
        bins = live * per_ball
        landed = Counter(uniform(source, 0, bins - 1) for _ in range(live))
        throws += live
        live -= sum(1 for c in landed.values() if c == 1)
    return BallProcessResult(throws, len(stage_balls), stage_balls)
