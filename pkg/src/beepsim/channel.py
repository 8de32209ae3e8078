"""Lockstep engine for a single-hop synchronous beeping channel.

Stations are written as generator programs.  Each ``yield`` emits the
station's action for the current round and evaluates to the feedback heard
in that round::

    def program(self):
        heard = yield Action.BEEP
        if heard:
            ...

The engine polls every live station once per round, ORs the actions into a
single bit of feedback and sends that bit back to everybody.  A program
returning ends the station; its return value is the station's output.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field


class Action(enum.IntEnum):
    PAUSE = 0
    BEEP = 1


class Feedback(enum.IntEnum):
    SILENCE = 0
    BEEP = 1


BEEP = Action.BEEP
PAUSE = Action.PAUSE


class ConfigurationError(ValueError):
    pass


class ProtocolViolation(RuntimeError):
    """A station program broke the engine contract or an internal invariant."""


class DivergedExecution(RuntimeError):
    def __init__(self, max_rounds, trace):
        super().__init__(f"execution did not finish within {max_rounds} rounds")
        self.max_rounds = max_rounds
        self.trace = trace


@dataclass(frozen=True, slots=True)
class RoundTrace:
    round_index: int
    beeper_count: int
    feedback: Feedback


class Station:
    """An anonymous station.

    Subclasses implement :meth:`program`.  Everything a program may consult is
    its constructor knowledge (kept in ``self.knowledge``), its own
    ``source`` of random bits and the feedback values sent into it.
    ``emitted`` and ``output`` are written by the engine, not by the program.
    """

    def __init__(self, source, **knowledge):
        self.source = source
        self.knowledge = knowledge
        self.emitted = bytearray()
        self.output = None
        self.done = False

    def program(self):
        raise NotImplementedError

    def replica(self) -> "Station":
        """Same station, same knowledge, random stream rewound to the start."""
        return type(self)(self.source.fresh(), **self.knowledge)

    @property
    def terminal(self) -> bool:
        return self.done


class Channel:
    """The shared medium: turns one round of actions into one feedback bit.

    With ``record=False`` only the round count is kept.
    """

    def __init__(self, record: bool = True):
        self.record = record
        self.rounds = 0
        self.trace: list[RoundTrace] = []

    def run_round(self, actions) -> Feedback:
        if not actions:
            raise ConfigurationError("a round needs at least one station")
        beepers = sum(actions)
        feedback = Feedback.BEEP if beepers else Feedback.SILENCE
        if self.record:
            self.trace.append(RoundTrace(self.rounds, beepers, feedback))
        self.rounds += 1
        return feedback


@dataclass
class Execution:
    outputs: list
    rounds: int
    trace: list[RoundTrace] = field(repr=False)

    def feedback_bits(self) -> list[int]:
        return [int(t.feedback) for t in self.trace]


def default_max_rounds(n: int) -> int:
    """Safety cap 64 n (ceil(lg n) + 1)^2 on execution length."""
    lg = (n - 1).bit_length()
    return 64 * n * (lg + 1) ** 2


def _check_action(action):
    if action is not BEEP and action is not PAUSE:
        raise ProtocolViolation(f"station emitted {action!r}, expected an Action")
    return action


def execute(stations, max_rounds: int | None = None, on_round=None,
            record: bool = True) -> Execution:
    """Run ``stations`` in lockstep until all of them terminate.

    ``on_round(entry, stations)`` is called after each round's feedback has
    been delivered; it is an observer hook and must not influence stations.
    Raises :class:`DivergedExecution` once ``max_rounds`` rounds have passed
    with some station still running.  ``record=False`` skips storing the
    per-round trace (the observer hook then gets ``None`` entries).
    """
    if not stations:
        raise ConfigurationError("no stations to run")
    if max_rounds is None:
        max_rounds = default_max_rounds(len(stations))
    if max_rounds < 1:
        raise ConfigurationError("max_rounds must be positive")

    channel = Channel(record)
    outputs = [None] * len(stations)
    live = []
    for i, st in enumerate(stations):
        st.emitted = bytearray()
        st.output = None
        st.done = False
        gen = st.program()
        try:
            live.append((i, gen, _check_action(next(gen))))
        except StopIteration as stop:
            outputs[i] = st.output = stop.value
            st.done = True

    while live:
        if channel.rounds >= max_rounds:
            raise DivergedExecution(max_rounds, channel.trace)
        feedback = channel.run_round([a for _, _, a in live])
        still = []
        for i, gen, action in live:
            st = stations[i]
            st.emitted.append(action)
            try:
                nxt = gen.send(feedback)
            except StopIteration as stop:
                outputs[i] = st.output = stop.value
                st.done = True
                continue
            still.append((i, gen, _check_action(nxt)))
        live = still
        if on_round is not None:
            on_round(channel.trace[-1] if record else None, stations)

    return Execution(outputs, channel.rounds, channel.trace)


def isolation_audit(trace, stations) -> bool:
    """Check that every station is a function of its knowledge, coins and feedback.

    Each station is rebuilt with :meth:`Station.replica` and driven by the
    recorded feedback alone.  The audit passes when every replica emits the
    recorded actions, stops at the same round and returns the same output.
    """
    feedback = [t.feedback for t in trace]
    for st in stations:
        gen = st.replica().program()
        replayed = bytearray()
        try:
            action = next(gen)
            while True:
                r = len(replayed)
                if r >= len(feedback):
                    return False
                replayed.append(action)
                action = gen.send(feedback[r])
        except StopIteration as stop:
            output = stop.value
        except (TypeError, ValueError):
            return False
        if replayed != st.emitted or output != st.output:
            return False
    return True


def write_trace_csv(trace, fh) -> None:
    """Write ``round,beepers,feedback`` rows (feedback as 0/1)."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["round", "beepers", "feedback"])
    for t in trace:
        writer.writerow([t.round_index, t.beeper_count, int(t.feedback)])
