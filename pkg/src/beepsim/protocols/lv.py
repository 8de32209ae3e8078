"""Naming with a known number of stations, never wrong when it stops.

Every unnamed station drops a ball into a random bin of the current
interval.  The bins are scanned in order, one round each; an occupied bin is
checked by ``beta * ceil(lg n)`` collision tests, and if none fires its
occupants take the next name.  Stations caught in a detected collision beep
once after the scan and are re-thrown into a fresh interval.  The whole
attempt restarts until the final counter equals n.

The next interval after a scan is ``[counter + 1, counter + (n - counter) * ceil(lg n)]``,
i.e. ``ceil(lg n)`` bins per name still missing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..channel import BEEP, PAUSE, DivergedExecution, Station, default_max_rounds, execute
from ..oracle import naming_outcome
from ..randomness import CountedRandomSource, uniform, width
from .common import PassRecord, TrialMetrics, ceil_lg, fair_detection
from .procedures import detect_collision

PROTOCOL = "lv"


@dataclass
class LVState:
    n: int
    beta: int
    name: int | None = None
    slot: int | None = None
    counter: int = 0
    left: int = 1
    right: int = 0
    stage: int = 0
    detect_calls: int = 0
    phase: str = "idle"
    # mirrored: (stage, left, right) for each scan
    scans: list = field(default_factory=list)
    # private: (scan index, slot) for each draw
    draws: list = field(default_factory=list)


class LasVegasStation(Station):
    def __init__(self, source, n: int, beta: int):
        super().__init__(source, n=n, beta=beta)
        self.state = LVState(n, beta)

    def program(self):
        s = self.state
        n, beta = s.n, s.beta
        per_name = ceil_lg(n)
        calls = beta * per_name
        while True:
            s.stage += 1
            s.counter, s.left, s.right, s.name = 0, 1, n * per_name, None
            while True:
                s.phase = "draw"
                s.scans.append((s.stage, s.left, s.right))
                if s.name is None:
                    s.slot = uniform(self.source, s.left, s.right)
                    s.draws.append((len(s.scans) - 1, s.slot))
                else:
                    s.slot = None
                for i in range(s.left, s.right + 1):
                    s.phase = "scan"
                    mine = i == s.slot
                    heard = yield BEEP if mine else PAUSE
                    if not heard:
                        continue
                    s.phase = "verify"
                    collision = False
                    for _ in range(calls):
                        s.detect_calls += 1
                        if (yield from detect_collision(self.source, mine)):
                            collision = True
                    if not collision:
                        s.counter += 1
                        if mine:
                            s.name = s.counter
                s.phase = "unnamed-check"
                heard = yield BEEP if s.name is None else PAUSE
                if not heard:
                    break
                s.left = s.counter + 1
                s.right = s.counter + (n - s.counter) * per_name
            s.phase = "outer-check"
            if s.counter == n:
                s.phase = "done"
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
    """Run on the lockstep channel.  Returns (outcome, metrics, execution, stations)."""
    _check_args(n, beta, allow_zero_beta)
    sources = _sources(n, seed, sources)
    stations = [LasVegasStation(src, n, beta) for src in sources]
    if max_rounds is None:
        max_rounds = default_max_rounds(n)
    ex = execute(stations, max_rounds=max_rounds, on_round=on_round)
    outcome = naming_outcome(ex.outputs)
    ledger = _ledger_from_stations(stations)
    metrics = TrialMetrics(
        protocol=PROTOCOL, n=n, beta=beta, seed=seed, rounds=ex.rounds,
        bits=sum(src.bits_consumed for src in sources),
        stages=stations[0].state.stage,
        detect_calls=stations[0].state.detect_calls,
        classification=outcome.classification,
        ledger=ledger,
        rejected_bits=sum(src.rejected_bits for src in sources),
    )
    return outcome, metrics, ex, stations


def _ledger_from_stations(stations):
    scans = stations[0].state.scans
    balls = [0] * len(scans)
    slots = [set() for _ in scans]
    for st in stations:
        for idx, slot in st.state.draws:
            balls[idx] += 1
            slots[idx].add(slot)
    return [PassRecord(stage, right - left + 1, balls[i], len(slots[i]))
            for i, (stage, left, right) in enumerate(scans)]


def fast_run(n: int, beta: int, seed: int = 0, *, sources=None, max_rounds=None,
             detect=fair_detection, allow_zero_beta=False):
    """Whole-system simulation, equal seed-for-seed to :func:`lockstep_run`.

    Each station's coin stream is read in the same order as its lockstep
    program reads it, so names, rounds and bit counts agree exactly.  Rounds
    are tallied per phase instead of being played one by one.  ``detect``
    decides from the occupants' verification coin words whether a bin's
    collision was found; swap in ``perfect_detection`` to get the bare ball
    process.
    """
    _check_args(n, beta, allow_zero_beta)
    sources = _sources(n, seed, sources)
    if max_rounds is None:
        max_rounds = default_max_rounds(n)
    per_name = ceil_lg(n)
    calls = beta * per_name
    rounds = 0
    detect_calls = 0
    stage = 0
    ledger = []
    names = [None] * n
    while True:
        stage += 1
        counter, left, right = 0, 1, n * per_name
        names = [None] * n
        unnamed = list(range(n))
        while True:
            bins = {}
            for v in unnamed:
                bins.setdefault(uniform(sources[v], left, right), []).append(v)
            ledger.append(PassRecord(stage, right - left + 1, len(unnamed), len(bins)))
            rounds += (right - left + 1) + len(bins) * 2 * calls + 1
            detect_calls += len(bins) * calls
            if rounds > max_rounds:
                raise DivergedExecution(max_rounds, None)
            retry = []
            for slot in sorted(bins):
                group = bins[slot]
                words = [sources[v].bits(calls) for v in group]
                if detect(words):
                    retry.extend(group)
                else:
                    counter += 1
                    for v in group:
                        names[v] = counter
            if not retry:
                break
            unnamed = sorted(retry)
            left, right = counter + 1, counter + (n - counter) * per_name
        if counter == n:
            break
    outcome = naming_outcome(names)
    metrics = TrialMetrics(
        protocol=PROTOCOL, n=n, beta=beta, seed=seed, rounds=rounds,
        bits=sum(src.bits_consumed for src in sources), stages=stage,
        detect_calls=detect_calls, classification=outcome.classification,
        ledger=ledger, rejected_bits=sum(src.rejected_bits for src in sources),
    )
    return outcome, metrics


def beep_naming_lv(n: int, beta: int = 2, seed: int = 0, *, engine: str = "lockstep", **kw):
    """Name ``n`` anonymous stations (n known to all).  Returns (outcome, metrics)."""
    if engine == "lockstep":
        outcome, metrics, _, _ = lockstep_run(n, beta, seed, **kw)
        return outcome, metrics
    if engine == "fast":
        return fast_run(n, beta, seed, **kw)
    raise ValueError(f"unknown engine {engine!r}")


def expected_rounds(metrics: TrialMetrics) -> int:
    """Closed-form round count: per scan, bins + occupied * 2 * beta * ceil(lg n) + 1."""
    calls = metrics.beta * ceil_lg(metrics.n)
    return sum(p.bins + p.occupied * 2 * calls + 1 for p in metrics.ledger)


def expected_bits(metrics: TrialMetrics) -> int:
    """Closed-form bit count: per ball, one accepted slot draw plus its verification coins."""
    calls = metrics.beta * ceil_lg(metrics.n)
    return sum(p.balls * (width(p.bins) + calls) for p in metrics.ledger) + metrics.rejected_bits


def expected_detect_calls(metrics: TrialMetrics) -> int:
    calls = metrics.beta * ceil_lg(metrics.n)
    return sum(p.occupied * calls for p in metrics.ledger)


def first_stage_throws(metrics: TrialMetrics) -> int:
    return sum(p.balls for p in metrics.ledger if p.stage == 1)
