import pytest

from beepsim.channel import DivergedExecution
from beepsim.oracle import DUPLICATES, INVALID
from beepsim.protocols import mc
from beepsim.protocols.common import StageRecord
from beepsim.randomness import ScriptedSource


def test_single_station_first_stage():
    outcome, metrics, ex, _ = mc.lockstep_run(1, 2, 0)
    assert outcome.names == (1,)
    assert outcome.classification.proper
    assert metrics.stages == 1 and mc.final_k(metrics) == 2
    # k rounds of search, 2 * beta * k rounds of checks, one closing round
    assert ex.rounds == 2 + 2 * 2 * 2 + 1 == 11
    assert metrics.bits == 2 + 2 * 2


def test_two_stations_hand_worked():
    # k = 2, beta = 1: strings 01 and 10, then two coins each
    a = ScriptedSource([0, 1, 1, 0])
    b = ScriptedSource([1, 0, 0, 1])
    outcome, metrics, ex, stations = mc.lockstep_run(2, 1, sources=[a, b])
    assert outcome.names == (1, 2)
    assert ex.rounds == 2 * (2 + 2 * 2 + 1)
    assert metrics.ledger == [StageRecord(2, 2)]
    assert stations[0].state.smallest_string == "10"


def test_shared_string_detected_moves_to_next_stage():
    # both pick 00; first check coins differ; stage 2 uses 4-bit strings
    a = ScriptedSource([0, 0, 1, 1] + [0, 0, 0, 0] + [0] * 4)
    b = ScriptedSource([0, 0, 0, 1] + [1, 1, 1, 1] + [0] * 4)
    outcome, metrics, _, _ = mc.lockstep_run(2, 1, sources=[a, b])
    assert [r.k for r in metrics.ledger] == [2, 4]
    assert outcome.names == (1, 2)


def test_shared_string_missed_gives_duplicates():
    a = ScriptedSource([1, 1, 0, 1])
    b = ScriptedSource([1, 1, 0, 1])
    outcome, metrics, _, _ = mc.lockstep_run(2, 1, sources=[a, b])
    assert outcome.names == (1, 1)
    assert outcome.classification.kind == DUPLICATES and outcome.classification.distinct == 1


def test_mirrored_variables_agree_every_round():
    def hook(entry, stations):
        views = {(s.state.counter, s.state.collision, s.state.k, s.state.smallest_string,
                  s.state.stage, s.state.detect_calls) for s in stations}
        assert len(views) == 1
        for s in stations:
            assert s.state.my_string is None or len(s.state.my_string) == s.state.k

    for seed in range(6):
        mc.lockstep_run(6, 1, seed, on_round=hook)


def test_k_doubles():
    for seed in range(20):
        _, metrics = mc.fast_run(30, 1, seed)
        assert [r.k for r in metrics.ledger] == [2 ** (i + 1) for i in range(metrics.stages)]


@pytest.mark.parametrize("n", [1, 2, 3, 8, 20])
def test_ledgers_and_engine_agreement(n):
    for seed in range(6):
        o1, m1, ex, _ = mc.lockstep_run(n, 2, seed)
        o2, m2 = mc.fast_run(n, 2, seed)
        assert o1 == o2
        assert ex.rounds == mc.expected_rounds(m1) == m2.rounds
        assert m1.bits == mc.expected_bits(m1) == m2.bits
        assert m1.detect_calls == mc.expected_detect_calls(m1) == m2.detect_calls
        assert m1.ledger == m2.ledger


def test_stage_bits_exact():
    # every station draws k bits and tosses beta * k coins per stage
    for seed in range(30):
        _, metrics = mc.fast_run(13, 3, seed)
        assert metrics.bits == sum(13 * r.k * 4 for r in metrics.ledger)


def test_never_gapped():
    for seed in range(2000):
        outcome, _ = mc.fast_run(4, 1, seed)
        assert outcome.classification.kind != INVALID


def test_zero_beta_negative_control():
    errors = 0
    for seed in range(50):
        outcome, _ = mc.fast_run(32, 0, seed, allow_zero_beta=True)
        assert outcome.classification.kind != INVALID
        errors += not outcome.classification.proper
    assert errors > 40
    with pytest.raises(ValueError):
        mc.fast_run(32, 0, 1)


def test_divergence():
    with pytest.raises(DivergedExecution):
        mc.lockstep_run(4, 2, 0, max_rounds=5)
    with pytest.raises(DivergedExecution):
        mc.fast_run(4, 2, 0, max_rounds=5)
