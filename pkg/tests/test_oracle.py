import math
import statistics

import pytest
from hypothesis import given, strategies as st

from beepsim.harness import derive_seed
from beepsim.oracle import (Classification, ball_process, undetected_probability, lex_min,
                            validate_names)
from beepsim.protocols import lv
from beepsim.protocols.common import perfect_detection
from beepsim.randomness import CountedRandomSource, ScriptedSource


@pytest.mark.parametrize("k,m,p", [(2, 1, 0.5), (5, 2, 0.125), (5, 1, 0.0625), (7, 7, 1.0)])
def test_undetected_probability(k, m, p):
    assert undetected_probability(k, m) == p


@pytest.mark.parametrize("k,m", [(3, 0), (3, 4)])
def test_undetected_probability_domain(k, m):
    with pytest.raises(ValueError):
        undetected_probability(k, m)


def test_undetected_probability_by_enumeration():
    # brute force over all coin outcomes: 5 stations, calls of sizes 2 and 3
    groups = [2, 3]
    misses = 0
    for coins in range(2 ** 5):
        bits = [(coins >> i) & 1 for i in range(5)]
        first, second = bits[:2], bits[2:]
        misses += len(set(first)) == 1 and len(set(second)) == 1
    assert misses / 2 ** 5 == undetected_probability(sum(groups), len(groups))


@pytest.mark.parametrize("strings,expected", [
    (["011", "101", "110"], "011"), (["111"], "111"), (["0000", "0001"], "0000")])
def test_lex_min(strings, expected):
    assert lex_min(strings) == expected


def test_lex_min_domain():
    with pytest.raises(ValueError):
        lex_min(["01", "011"])
    with pytest.raises(ValueError):
        lex_min([])


@pytest.mark.parametrize("names,n,expected", [
    ([2, 1], 2, Classification("proper")),
    ([1, 1], 2, Classification("duplicates", 1)),
    ([1, 3], 2, Classification("invalid")),
    ([1, None], 2, Classification("invalid")),
    ([1, 2], 3, Classification("invalid")),
    ([0, 1], 2, Classification("invalid")),
])
def test_validate_names(names, n, expected):
    assert validate_names(names, n) == expected


@given(st.permutations(list(range(1, 9))))
def test_any_permutation_is_proper(perm):
    assert validate_names(perm, 8).proper


def test_classification_text_round_trip():
    for c in (Classification("proper"), Classification("invalid"), Classification("duplicates", 4)):
        assert Classification.parse(str(c)) == c


def test_ball_process_all_distinct():
    # n = 4: 8 bins, 3 flips per throw; values 0..3 land in distinct bins
    script = [int(b) for v in range(4) for b in format(v, "03b")]
    res = ball_process(4, ScriptedSource(script))
    assert res.total_throws == 4 and res.stages == 1 and res.stage_balls == [4]


def test_ball_process_domain():
    with pytest.raises(ValueError):
        ball_process(1, CountedRandomSource(0))


@given(st.integers(2, 80), st.integers(0, 2**32))
def test_ball_process_invariants(n, seed):
    res = ball_process(n, CountedRandomSource(seed))
    assert res.total_throws >= n
    assert res.total_throws == sum(res.stage_balls)
    assert all(b > a or b == a for a, b in zip(res.stage_balls[1:], res.stage_balls))


def test_lv_throws_match_ball_process():
    # LV with every collision caught is the ball process
    n, runs = 64, 10_000
    lv_throws = [lv.first_stage_throws(lv.fast_run(n, 1, derive_seed(1, n, t), detect=perfect_detection)[1])
                 for t in range(runs)]
    bp_throws = [ball_process(n, CountedRandomSource(derive_seed(2, n, t))).total_throws
                 for t in range(runs)]
    a, b = statistics.fmean(lv_throws), statistics.fmean(bp_throws)
    assert abs(a - b) / b <= 0.02
