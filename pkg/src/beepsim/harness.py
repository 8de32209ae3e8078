"""Seeded trial campaigns, sweeps and small benchmarks.

Trial seeds are ``blake2b(master_seed, n, trial)`` truncated to 64 bits (see
:func:`derive_seed`), so any row of output can be replayed on its own.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import statistics
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from scipy.stats import binomtest

from .channel import DivergedExecution, Station, execute
from .oracle import ball_process, undetected_probability
from .protocols import PROTOCOLS, TrialMetrics, ceil_lg
from .protocols.procedures import detect_collision
from .randomness import CountedRandomSource

log = logging.getLogger(__name__)

METRIC_FIELDS = ["protocol", "n", "beta", "seed", "rounds", "bits", "stages",
                 "detect_calls", "classification"]
SWEEP_FIELDS = ["protocol", "n", "beta", "trials", "median_rounds", "median_bits",
                "rounds_ratio", "bits_ratio", "median_stages", "max_stages", "error_rate"]
ENGINES = ("fast", "lockstep")
U64 = (1 << 64) - 1


class UsageError(ValueError):
    pass


def derive_seed(master_seed: int, n: int, trial: int) -> int:
    """64-bit trial seed: first 8 bytes (little endian) of blake2b over the packed triple."""
    packed = struct.pack("<QQQ", master_seed & U64, n, trial)
    return int.from_bytes(hashlib.blake2b(packed, digest_size=8).digest(), "little")


@dataclass
class CampaignConfig:
    protocol: str
    n_values: list
    beta: int = 2
    trials: int = 100
    master_seed: int = 0
    output: str = "csv"
    engine: str = "fast"
    workers: int = 1
    max_rounds: int | None = None
    # test hook: lets the protocols run with beta = 0 (no verification at all)
    allow_zero_beta: bool = False

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise UsageError(f"protocol must be one of {sorted(PROTOCOLS)}")
        self.n_values = [int(n) for n in self.n_values]
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise UsageError("n_values must be a non-empty list of positive integers")
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        if self.beta < (0 if self.allow_zero_beta else 1):
            raise UsageError("beta must be >= 1")
        if not 0 <= self.master_seed <= U64:
            raise UsageError("master_seed must fit in 64 bits")
        if self.output not in ("csv", "json"):
            raise UsageError("output must be csv or json")
        if self.engine not in ENGINES:
            raise UsageError(f"engine must be one of {ENGINES}")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")


@dataclass(frozen=True)
class Diverged:
    protocol: str
    n: int
    beta: int
    seed: int
    max_rounds: int


def run_trial(protocol: str, n: int, beta: int, seed: int, engine: str = "fast",
              max_rounds=None, allow_zero_beta=False) -> TrialMetrics:
    mod = PROTOCOLS[protocol]
    kw = dict(max_rounds=max_rounds, allow_zero_beta=allow_zero_beta)
    if engine == "lockstep":
        return mod.lockstep_run(n, beta, seed, **kw)[1]
    return mod.fast_run(n, beta, seed, **kw)[1]


def _run_task(task):
    protocol, n, beta, seed, engine, max_rounds, zero = task
    try:
        return run_trial(protocol, n, beta, seed, engine, max_rounds, zero)
    except DivergedExecution as exc:
        return Diverged(protocol, n, beta, seed, exc.max_rounds)


def wilson_interval(errors: int, trials: int, confidence: float = 0.95):
    ci = binomtest(errors, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return ci.low, ci.high


def summarize(protocol: str, n: int, beta: int, results) -> dict:
    """Aggregate one n's trials.  The result does not depend on trial order."""
    done = [r for r in results if isinstance(r, TrialMetrics)]
    diverged = len(results) - len(done)
    scale = n * ceil_lg(n)
    out = {"protocol": protocol, "n": n, "beta": beta, "trials": len(results),
           "diverged": diverged}
    if not done:
        return out
    rounds = sorted(r.rounds for r in done)
    bits = sorted(r.bits for r in done)
    stages = sorted(r.stages for r in done)
    errors = sum(r.error for r in done)
    lo, hi = wilson_interval(errors, len(done))
    out.update(
        rounds_mean=math.fsum(rounds) / len(done),
        rounds_median=statistics.median(rounds),
        rounds_max=rounds[-1],
        bits_mean=math.fsum(bits) / len(done),
        bits_median=statistics.median(bits),
        bits_max=bits[-1],
        rounds_ratio=statistics.median(rounds) / scale,
        bits_ratio=statistics.median(bits) / scale,
        median_stages=statistics.median(stages),
        max_stages=stages[-1],
        errors=errors,
        error_rate=errors / len(done),
        error_low=lo,
        error_high=hi,
    )
    return out


@dataclass
class CampaignResult:
    config: CampaignConfig
    trials: list = field(repr=False)
    summaries: list = field(default_factory=list)

    @property
    def metrics(self) -> list:
        return [t for t in self.trials if isinstance(t, TrialMetrics)]

    @property
    def diverged(self) -> list:
        return [t for t in self.trials if isinstance(t, Diverged)]


def run_campaign(config: CampaignConfig) -> CampaignResult:
    """Run ``config.trials`` seeded executions for every n and aggregate them."""
    tasks = [(config.protocol, n, config.beta, derive_seed(config.master_seed, n, t),
              config.engine, config.max_rounds, config.allow_zero_beta)
             for n in config.n_values for t in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * config.workers))))
    else:
        results = [_run_task(task) for task in tasks]
    summaries = []
    for i, n in enumerate(config.n_values):
        chunk = results[i * config.trials:(i + 1) * config.trials]
        summaries.append(summarize(config.protocol, n, config.beta, chunk))
        bad = sum(isinstance(r, Diverged) for r in chunk)
        if bad:
            log.warning("%d of %d %s runs at n=%d diverged", bad, len(chunk), config.protocol, n)
    return CampaignResult(config, results, summaries)


def write_metrics_csv(results, fh) -> None:
    """One row per trial; diverged runs get rounds/bits left blank and classification ``diverged``."""
    writer = csv.DictWriter(fh, fieldnames=METRIC_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in results:
        if isinstance(r, TrialMetrics):
            writer.writerow(r.row())
        else:
            writer.writerow({"protocol": r.protocol, "n": r.n, "beta": r.beta, "seed": r.seed,
                             "classification": "diverged"})


def write_campaign_json(result: CampaignResult, fh) -> None:
    rows = io.StringIO()
    write_metrics_csv(result.trials, rows)
    doc = {
        "config": asdict(result.config),
        "summary": result.summaries,
        "trials": list(csv.DictReader(io.StringIO(rows.getvalue()))),
    }
    json.dump(doc, fh, indent=2, sort_keys=True)
    fh.write("\n")


def metrics_csv_text(result: CampaignResult) -> str:
    buf = io.StringIO()
    write_metrics_csv(result.trials, buf)
    return buf.getvalue()


def sweep_scaling(protocol: str, n_values, beta: int, trials: int, master_seed: int = 0,
                  engine: str = "fast", workers: int = 1) -> list:
    """One row per n with medians normalised by n * ceil(lg n)."""
    n_values = list(n_values)
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise UsageError("n_values must be strictly increasing")
    result = run_campaign(CampaignConfig(protocol, n_values, beta, trials, master_seed,
                                         engine=engine, workers=workers))
    rows = []
    for s in result.summaries:
        rows.append({
            "protocol": protocol, "n": s["n"], "beta": beta, "trials": s["trials"],
            "median_rounds": s.get("rounds_median"), "median_bits": s.get("bits_median"),
            "rounds_ratio": s.get("rounds_ratio"), "bits_ratio": s.get("bits_ratio"),
            "median_stages": s.get("median_stages"), "max_stages": s.get("max_stages"),
            "error_rate": s.get("error_rate"),
        })
    return rows


def write_rows_csv(rows, fields, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


class _BenchStation(Station):
    """Repeats a round of time-disjoint collision checks; knows only its call slot."""

    def program(self):
        calls, slot, trials = (self.knowledge[k] for k in ("calls", "slot", "trials"))
        misses = 0
        for _ in range(trials):
            found = False
            for c in range(calls):
                if (yield from detect_collision(self.source, c == slot)):
                    found = True
            if not found:
                misses += 1
        return misses


@dataclass
class DetectBench:
    participants: int
    calls: int
    trials: int
    misses: int
    rounds: int
    bits: int

    @property
    def frequency(self) -> float:
        return self.misses / self.trials

    @property
    def expected(self) -> float:
        return undetected_probability(self.participants, self.calls)

    @property
    def sigma(self) -> float:
        p = self.expected
        return math.sqrt(p * (1 - p) / self.trials)


def detect_bench(participants: int, calls: int, trials: int, seed: int = 0) -> DetectBench:
    """Run ``trials`` repetitions of ``calls`` time-disjoint collision checks on the channel.

    The participants are dealt round-robin into the calls, so every call has
    at least one.  Counts the repetitions in which no call detected anything.
    """
    if not 1 <= calls <= participants:
        raise UsageError("need 1 <= calls <= participants")
    if trials < 1:
        raise UsageError("trials must be >= 1")
    stations = [_BenchStation(CountedRandomSource(seed, i), calls=calls, slot=i % calls,
                              trials=trials)
                for i in range(participants)]
    ex = execute(stations, max_rounds=2 * calls * trials, record=False)
    if len(set(ex.outputs)) != 1:
        raise AssertionError("stations disagree on the bench outcome")
    return DetectBench(participants, calls, trials, ex.outputs[0], ex.rounds,
                       sum(st.source.bits_consumed for st in stations))


@dataclass
class BallBench:
    n: int
    trials: int
    throws: list = field(repr=False)

    @property
    def over_3n(self) -> int:
        return sum(t > 3 * self.n for t in self.throws)

    @property
    def bound(self) -> float:
        return math.exp(-self.n / 4)


def ball_bench(n: int, trials: int, master_seed: int = 0) -> BallBench:
    if trials < 1:
        raise UsageError("trials must be >= 1")
    throws = [ball_process(n, CountedRandomSource(derive_seed(master_seed, n, t))).total_throws
              for t in range(trials)]
    return BallBench(n, trials, throws)
