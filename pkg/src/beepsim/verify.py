"""Release checks: statistical and exact properties of the protocols.

Each ``check_*`` function runs one criterion with a fixed seed, trial count
and tolerance and returns a :class:`Check`.  ``run_all`` runs them in order;
the ledger check (10) reuses the audit collected while 3 to 8 run.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import isolation_audit
from .harness import (CampaignConfig, ball_bench, derive_seed, detect_bench, metrics_csv_text,
                      run_campaign, wilson_interval)
from .oracle import DUPLICATES, INVALID, lex_min
from .protocols import PROTOCOLS, ceil_lg
from .protocols.mc import final_k
from .protocols.procedures import run_next_string

MASTER_SEED = 20240601


@dataclass
class Check:
    number: str
    title: str
    passed: bool
    observed: str
    expected: str
    seconds: float = 0.0
    budget: float = math.inf

    @property
    def ok(self) -> bool:
        return self.passed and self.seconds < self.budget

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        timing = f"{self.seconds:.1f}s/{self.budget:.0f}s"
        return f"[{status}] {self.number:>2} {self.title}: {self.observed} | want {self.expected} | {timing}"


@dataclass
class LedgerAudit:
    """Collects closed-form round/bit/call mismatches across many trials."""
    checked: int = 0
    lockstep: int = 0
    mismatches: list = field(default_factory=list)

    def record(self, metrics, engine: str) -> None:
        mod = PROTOCOLS[metrics.protocol]
        self.checked += 1
        self.lockstep += engine == "lockstep"
        want = (mod.expected_rounds(metrics), mod.expected_bits(metrics),
                mod.expected_detect_calls(metrics))
        got = (metrics.rounds, metrics.bits, metrics.detect_calls)
        if got != want:
            self.mismatches.append((metrics.protocol, metrics.n, metrics.seed, got, want))

    def record_all(self, result) -> None:
        for m in result.metrics:
            self.record(m, result.config.engine)


def _timed(fn):
    def wrapper(*args, **kw):
        start = time.perf_counter()
        check = fn(*args, **kw)
        check.seconds = time.perf_counter() - start
        return check
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _campaign(protocol, n_values, beta, trials, engine="fast", audit=None, **kw):
    result = run_campaign(CampaignConfig(protocol, list(n_values), beta, trials, MASTER_SEED,
                                         engine=engine, **kw))
    if audit is not None:
        audit.record_all(result)
    return result


@_timed
def check_detection_miss_rate(trials: int = 100_000) -> Check:
    cases = [(2, 1), (3, 1), (5, 1), (4, 2)]
    parts, ok = [], True
    for k, m in cases:
        bench = detect_bench(k, m, trials, seed=derive_seed(MASTER_SEED, k, m))
        dev = abs(bench.frequency - bench.expected) / bench.sigma
        ok &= dev <= 3.0 and bench.rounds == 2 * m * trials and bench.bits == k * trials
        parts.append(f"({k},{m}) {bench.frequency:.4f} vs {bench.expected:.4f} [{dev:.2f}σ]")
    return Check("1", "collision-check miss rate", ok, "; ".join(parts), "each within 3σ", budget=30)


@_timed
def check_next_string(instances: int = 10_000) -> Check:
    rng = np.random.default_rng(MASTER_SEED)
    wrong = wrong_rounds = 0
    for i in range(instances):
        k = int(rng.integers(2, 17))
        size = int(rng.integers(1, 65))
        present = rng.random(size) < rng.random()
        present[rng.integers(size)] = True
        strings = ["".join("01"[b] for b in rng.integers(0, 2, k)) if p else None
                   for p in present]
        got, ex = run_next_string(k, strings, seed=i)
        wrong += got != lex_min([s for s in strings if s is not None])
        wrong_rounds += ex.rounds != k
    ok = wrong == 0 and wrong_rounds == 0
    return Check("2", "next-string correctness", ok,
                 f"{wrong} wrong results, {wrong_rounds} wrong round counts in {instances}",
                 "0 and 0", budget=30)


@_timed
def check_lv_safety(audit: LedgerAudit, trials: int = 1000) -> Check:
    bad, runs, parts = 0, 0, []
    for n_values, engine in (([1, 2, 3, 16], "lockstep"), ([64, 256], "fast")):
        result = _campaign("lv", n_values, 2, trials, engine, audit)
        runs += len(result.metrics)
        for s in result.summaries:
            parts.append(f"n={s['n']}:{s['errors']}")
        bad += sum(m.error for m in result.metrics) + len(result.diverged)
    return Check("3", "lv safety (always proper)", bad == 0,
                 f"{bad} non-proper of {runs} ({', '.join(parts)})", "0 non-proper", budget=300)


@_timed
def check_lv_envelope(audit: LedgerAudit, trials: int = 1000) -> Check:
    result = _campaign("lv", [16, 64, 256, 1024], 2, trials, "fast", audit)
    rr = [s["rounds_ratio"] for s in result.summaries]
    br = [s["bits_ratio"] for s in result.summaries]
    one = {}
    for m in result.metrics:
        if m.n >= 64:
            one.setdefault(m.n, []).append(m.stages == 1)
    single = {n: sum(v) / len(v) for n, v in one.items()}
    band_r, band_b = max(rr) / min(rr), max(br) / min(br)
    ok = band_r <= 2.0 and band_b <= 2.0 and min(single.values()) >= 0.99 and not result.diverged
    observed = (f"rounds ratios {[round(x, 2) for x in rr]} (band {band_r:.2f}); "
                f"bits ratios {[round(x, 2) for x in br]} (band {band_b:.2f}); "
                f"one-iteration {', '.join(f'n={n}:{f:.3f}' for n, f in single.items())}")
    return Check("4", "lv complexity envelope", ok, observed,
                 "bands <= 2.0, one-iteration >= 0.99", budget=600)


@_timed
def check_ball_process(trials: int = 10_000) -> Check:
    parts, ok = [], True
    for n in (32, 64):
        bench = ball_bench(n, trials, MASTER_SEED)
        frac = bench.over_3n / trials
        ok &= frac <= 1e-3 and min(bench.throws) >= n
        parts.append(f"n={n}: {bench.over_3n}/{trials} over 3n, max {max(bench.throws)}")
    return Check("5", "ball process tail", ok, "; ".join(parts), "fraction <= 1e-3", budget=60)


@_timed
def check_mc_shape(audit: LedgerAudit, trials: int = 10_000, beta: int = 1) -> Check:
    result = _campaign("mc", [4, 16, 64, 256], beta, trials, "fast", audit)
    invalid = sum(m.classification.kind == INVALID for m in result.metrics)
    errors = [m for m in result.metrics if m.error]
    not_dup = sum(m.classification.kind != DUPLICATES for m in errors)
    ok = invalid == 0 and not_dup == 0 and not result.diverged
    return Check("6", "mc safety shape (never gapped)", ok,
                 f"{invalid} invalid, {len(errors)} errors ({not_dup} not duplicates) "
                 f"in {len(result.metrics)} runs at beta={beta}",
                 "0 invalid, every error duplicates(k')", budget=600)


@_timed
def check_mc_decay(audit: LedgerAudit, trials: int = 10_000, n: int = 64) -> Check:
    rates = []
    for beta in (1, 2, 4):
        result = _campaign("mc", [n], beta, trials, "fast", audit)
        errors = sum(m.error for m in result.metrics) + len(result.diverged)
        lo, hi = wilson_interval(errors, trials)
        rates.append((beta, errors / trials, lo, hi))
    monotone = all(b[1] <= a[3] for a, b in zip(rates, rates[1:]))
    ok = monotone and rates[-1][1] < 1e-2
    observed = "; ".join(f"beta={b}: {p:.4f} [{lo:.4f},{hi:.4f}]" for b, p, lo, hi in rates)
    return Check("7", "mc error decay", ok, observed,
                 "non-increasing within Wilson bounds, beta=4 < 0.01", budget=600)


@_timed
def check_mc_termination(audit: LedgerAudit, trials: int = 2000, beta: int = 2) -> Check:
    result = _campaign("mc", [16, 64, 256], beta, trials, "fast", audit)
    parts, ok = [], not result.diverged
    for n in (16, 64, 256):
        bound = 4 * ceil_lg(n)
        ks = [final_k(m) for m in result.metrics if m.n == n]
        frac = sum(k <= bound for k in ks) / len(ks)
        ok &= frac >= 0.99
        parts.append(f"n={n}: {frac:.4f} with k<={bound}")
    return Check("8", "mc termination stage", ok, "; ".join(parts), ">= 0.99 each", budget=300)


@_timed
def check_determinism(samples: int = 100, n: int = 8) -> Check:
    same = True
    for protocol in PROTOCOLS:
        texts = [metrics_csv_text(_campaign(protocol, [16, 32], 2, 50)) for _ in range(2)]
        same &= texts[0] == texts[1]
    audits = {}
    for protocol, mod in PROTOCOLS.items():
        passed = 0
        for t in range(samples):
            _, _, ex, stations = mod.lockstep_run(n, 2, derive_seed(MASTER_SEED, n, t))
            passed += isolation_audit(ex.trace, stations)
        audits[protocol] = passed
    ok = same and all(v == samples for v in audits.values())
    return Check("9", "Determinism and isolation", ok,
                 f"CSV identical: {same}; audits passed {audits}",
                 f"identical, {samples}/{samples} per protocol", budget=60)


@_timed
def check_ledgers(audit: LedgerAudit, samples: int = 40) -> Check:
    """Closed-form accounting on every trial seen, plus lockstep-vs-fast agreement."""
    if audit.checked == 0:
        for protocol in PROTOCOLS:
            audit.record_all(_campaign(protocol, [1, 5, 16], 2, 50, "lockstep"))
    disagree = 0
    for protocol, mod in PROTOCOLS.items():
        for n in (7, 33):
            for t in range(samples // 2):
                seed = derive_seed(MASTER_SEED + 1, n, t)
                o1, m1, ex, _ = mod.lockstep_run(n, 2, seed)
                o2, m2 = mod.fast_run(n, 2, seed)
                audit.record(m1, "lockstep")
                same = (o1.names == o2.names and m1.rounds == m2.rounds == ex.rounds
                        and m1.bits == m2.bits and m1.ledger == m2.ledger)
                disagree += not same
    ok = not audit.mismatches and disagree == 0
    return Check("10", "Round/bit ledgers", ok,
                 f"{len(audit.mismatches)} mismatches in {audit.checked} trials "
                 f"({audit.lockstep} lockstep); {disagree} lockstep/fast disagreements",
                 "0 and 0")


@_timed
def check_negative_control(trials: int = 200, n: int = 64) -> Check:
    """With no verification calls at all, MC must be seen handing out duplicates."""
    result = _campaign("mc", [n], 0, trials, "fast", allow_zero_beta=True)
    errors = [m for m in result.metrics if m.error]
    all_dup = all(m.classification.kind == DUPLICATES for m in errors)
    ok = len(errors) > 0 and all_dup
    return Check("N", "negative control (MC beta=0)", ok,
                 f"{len(errors)}/{trials} duplicate runs", "> 0, all duplicates(k')")


def run_all(report=print) -> list:
    audit = LedgerAudit()
    steps = [
        check_detection_miss_rate, check_next_string,
        lambda: check_lv_safety(audit), lambda: check_lv_envelope(audit),
        check_ball_process,
        lambda: check_mc_shape(audit), lambda: check_mc_decay(audit),
        lambda: check_mc_termination(audit),
        check_determinism, lambda: check_ledgers(audit), check_negative_control,
    ]
    checks = []
    for step in steps:
        check = step()
        report(check.line())
        checks.append(check)
    return checks
