from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from ..oracle import Classification


def ceil_lg(n: int) -> int:
    """ceil(lg n), clamped to at least 1 so that n = 1 and n = 2 still get bins and checks."""
    return max(1, (n - 1).bit_length())


class PassRecord(NamedTuple):
    """One scan of the Las Vegas inner loop."""
    stage: int
    bins: int
    balls: int
    occupied: int


class StageRecord(NamedTuple):
    """One stage of the Monte Carlo algorithm (strings of length k)."""
    k: int
    occupied: int


@dataclass
class TrialMetrics:
    protocol: str
    n: int
    beta: int
    seed: int
    rounds: int
    bits: int
    stages: int
    detect_calls: int
    classification: Classification
    ledger: list = field(default_factory=list, repr=False)
    rejected_bits: int = 0

    @property
    def error(self) -> bool:
        return not self.classification.proper

    def row(self) -> dict:
        return {
            "protocol": self.protocol,
            "n": self.n,
            "beta": self.beta,
            "seed": self.seed,
            "rounds": self.rounds,
            "bits": self.bits,
            "stages": self.stages,
            "detect_calls": self.detect_calls,
            "classification": str(self.classification),
        }


def all_equal(words) -> bool:
    first = words[0]
    return all(w == first for w in words)


def fair_detection(words) -> bool:
    """Collision found by some call iff the occupants' coin sequences differ."""
    return not all_equal(words)


def perfect_detection(words) -> bool:
    """Stub that finds every collision, turning the protocol into the plain ball process."""
    return len(words) > 1
