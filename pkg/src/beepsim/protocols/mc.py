"""Naming without knowing n; may hand out duplicate names, with small probability.

Stage k (k = 2, 4, 8, ...): every station picks a random k-bit string.  The
smallest string still in play is found by radix search, its holders run
``beta * k`` collision tests, and, as long as no collision has been seen in
this stage, they take the next name.  A stage with no detected collision is
the last one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..channel import BEEP, PAUSE, DivergedExecution, Station, default_max_rounds, execute
from ..oracle import naming_outcome
from ..randomness import CountedRandomSource, bit_string
from .common import StageRecord, TrialMetrics, fair_detection
from .procedures import detect_collision, next_string

PROTOCOL = "mc"


@dataclass
class MCState:
    beta: int
    name: int | None = None
    my_string: str | None = None
    smallest_string: str = ""
    k: int = 1
    counter: int = 0
    collision: bool = False
    stage: int = 0
    detect_calls: int = 0
    # private: the string drawn in each stage
    drawn: list = field(default_factory=list)


class MonteCarloStation(Station):
    def __init__(self, source, beta: int):
        super().__init__(source, beta=beta)
        self.state = MCState(beta)

    def program(self):
        s = self.state
        s.k = 1
        while True:
            s.k *= 2
            s.stage += 1
            s.collision = False
            s.counter = 0
            s.my_string = bit_string(self.source, s.k)
            s.drawn.append(s.my_string)
            while True:
                s.smallest_string = yield from next_string(s.k, s.my_string)
                mine = s.my_string is not None and s.my_string == s.smallest_string
                for _ in range(s.beta * s.k):
                    s.detect_calls += 1
                    if (yield from detect_collision(self.source, mine)):
                        s.collision = True
                if not s.collision:
                    s.counter += 1
                    if mine:
                        s.name = s.counter
                if mine:
                    s.my_string = None
                heard = yield BEEP if s.my_string is not None else PAUSE
                if not heard:
                    break
            if not s.collision:
                return s.name


def _check_args(n, beta, allow_zero_beta=False):
    if n < 1:
        raise ValueError("n must be >= 1")
    if beta < (0 if allow_zero_beta else 1):
        raise ValueError("beta must be >= 1")


def _sources(n, seed, sources):
    if sources is None:
        return [CountedRandomSource(seed, i) for i in range(n)]
    if len(sources) != n:
        raise ValueError("need one source per station")
    return list(sources)


def lockstep_run(n: int, beta: int, seed: int = 0, *, sources=None, max_rounds=None,
                 on_round=None, allow_zero_beta=False):
    """Run on the lockstep channel.  ``n`` only sizes the station list.

    Returns (outcome, metrics, execution, stations).
    """
    _check_args(n, beta, allow_zero_beta)
    sources = _sources(n, seed, sources)
    stations = [MonteCarloStation(src, beta) for src in sources]
    if max_rounds is None:
        max_rounds = default_max_rounds(n)
    ex = execute(stations, max_rounds=max_rounds, on_round=on_round)
    outcome = naming_outcome(ex.outputs)
    stages = stations[0].state.stage
    ledger = [StageRecord(2 ** (i + 1), len({st.state.drawn[i] for st in stations}))
              for i in range(stages)]
    metrics = TrialMetrics(
        protocol=PROTOCOL, n=n, beta=beta, seed=seed, rounds=ex.rounds,
        bits=sum(src.bits_consumed for src in sources), stages=stages,
        detect_calls=stations[0].state.detect_calls,
        classification=outcome.classification, ledger=ledger,
    )
    return outcome, metrics, ex, stations


def fast_run(n: int, beta: int, seed: int = 0, *, sources=None, max_rounds=None,
             detect=fair_detection, allow_zero_beta=False):
    """Whole-system simulation, equal seed-for-seed to :func:`lockstep_run`."""
    _check_args(n, beta, allow_zero_beta)
    sources = _sources(n, seed, sources)
    if max_rounds is None:
        max_rounds = default_max_rounds(n)
    names = [None] * n
    rounds = detect_calls = 0
    ledger = []
    k = 1
    while True:
        k *= 2
        calls = beta * k
        bins = {}
        for v, src in enumerate(sources):
            bins.setdefault(src.bits(k), []).append(v)
        ledger.append(StageRecord(k, len(bins)))
        rounds += len(bins) * (k + 2 * calls + 1)
        detect_calls += len(bins) * calls
        if rounds > max_rounds:
            raise DivergedExecution(max_rounds, None)
        collision = False
        counter = 0
        for key in sorted(bins):
            group = bins[key]
            words = [sources[v].bits(calls) for v in group]
            if detect(words):
                collision = True
            if not collision:
                counter += 1
                for v in group:
                    names[v] = counter
        if not collision:
            break
    outcome = naming_outcome(names)
    metrics = TrialMetrics(
        protocol=PROTOCOL, n=n, beta=beta, seed=seed, rounds=rounds,
        bits=sum(src.bits_consumed for src in sources), stages=len(ledger),
        detect_calls=detect_calls, classification=outcome.classification, ledger=ledger,
    )
    return outcome, metrics


def beep_naming_mc(n: int, beta: int = 2, seed: int = 0, *, engine: str = "lockstep", **kw):
    """Name ``n`` stations that do not know n.  Returns (outcome, metrics)."""
    if engine == "lockstep":
        outcome, metrics, _, _ = lockstep_run(n, beta, seed, **kw)
        return outcome, metrics
    if engine == "fast":
        return fast_run(n, beta, seed, **kw)
    raise ValueError(f"unknown engine {engine!r}")


def final_k(metrics: TrialMetrics) -> int:
    return metrics.ledger[-1].k


def expected_rounds(metrics: TrialMetrics) -> int:
    """Closed form: each processed string costs k + 2 beta k + 1 rounds."""
    b = metrics.beta
    return sum(r.occupied * (r.k + 2 * b * r.k + 1) for r in metrics.ledger)


def expected_bits(metrics: TrialMetrics) -> int:
    """Closed form: every station draws k bits and tosses beta k verification coins per stage."""
    return sum(metrics.n * r.k * (1 + metrics.beta) for r in metrics.ledger)


def expected_detect_calls(metrics: TrialMetrics) -> int:
    return sum(r.occupied * metrics.beta * r.k for r in metrics.ledger)
