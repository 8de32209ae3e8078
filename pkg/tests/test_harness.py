import csv
import io
import json
import random

import pytest

from beepsim.harness import (CampaignConfig, Diverged, UsageError, derive_seed, detect_bench,
                             metrics_csv_text, run_campaign, run_trial, summarize, sweep_scaling,
                             wilson_interval, write_campaign_json)


def test_derive_seed_is_stable_and_spread():
    assert derive_seed(1, 16, 0) == derive_seed(1, 16, 0)
    seeds = {derive_seed(1, n, t) for n in (4, 8) for t in range(500)}
    assert len(seeds) == 1000
    assert all(0 <= s < 2 ** 64 for s in seeds)


@pytest.mark.parametrize("kw", [
    dict(protocol="xx", n_values=[4]),
    dict(protocol="lv", n_values=[]),
    dict(protocol="lv", n_values=[0]),
    dict(protocol="lv", n_values=[4], trials=0),
    dict(protocol="lv", n_values=[4], beta=0),
    dict(protocol="lv", n_values=[4], master_seed=-1),
    dict(protocol="lv", n_values=[4], engine="gpu"),
])
def test_config_validation(kw):
    with pytest.raises(UsageError):
        CampaignConfig(**kw)


def test_campaign_is_reproducible():
    cfg = CampaignConfig("mc", [5, 9], beta=2, trials=20, master_seed=3)
    assert metrics_csv_text(run_campaign(cfg)) == metrics_csv_text(run_campaign(cfg))


def test_rows_replay_from_their_seed():
    result = run_campaign(CampaignConfig("lv", [6], trials=10, master_seed=5))
    for row in csv.DictReader(io.StringIO(metrics_csv_text(result))):
        again = run_trial("lv", int(row["n"]), int(row["beta"]), int(row["seed"]))
        assert {k: str(v) for k, v in again.row().items()} == row


def test_engines_give_identical_rows():
    fast = run_campaign(CampaignConfig("lv", [5], trials=15, master_seed=8, engine="fast"))
    slow = run_campaign(CampaignConfig("lv", [5], trials=15, master_seed=8, engine="lockstep"))
    assert metrics_csv_text(fast) == metrics_csv_text(slow)


def test_workers_do_not_change_output():
    cfg = dict(protocol="mc", n_values=[6], trials=12, master_seed=1)
    one = run_campaign(CampaignConfig(**cfg))
    two = run_campaign(CampaignConfig(**cfg, workers=2))
    assert metrics_csv_text(one) == metrics_csv_text(two)
    assert one.summaries == two.summaries


def test_summary_ignores_trial_order():
    result = run_campaign(CampaignConfig("lv", [12], trials=40, master_seed=2))
    shuffled = result.trials[:]
    random.Random(0).shuffle(shuffled)
    assert summarize("lv", 12, 2, shuffled) == result.summaries[0]


def test_summary_fields():
    s = run_campaign(CampaignConfig("lv", [16], trials=30)).summaries[0]
    assert s["errors"] == 0 and s["error_rate"] == 0.0
    assert s["error_low"] == 0.0 and 0 < s["error_high"] < 0.2
    assert s["rounds_median"] / (16 * 4) == s["rounds_ratio"]
    assert s["rounds_max"] >= s["rounds_median"]


def test_diverged_runs_are_recorded():
    result = run_campaign(CampaignConfig("lv", [8], trials=3, max_rounds=20))
    assert len(result.diverged) == 3
    assert all(isinstance(d, Diverged) for d in result.diverged)
    text = metrics_csv_text(result)
    assert text.count("diverged") == 3
    assert result.summaries[0]["diverged"] == 3


def test_wilson_interval_at_zero():
    lo, hi = wilson_interval(0, 1000)
    assert lo == 0.0 and 0.0 < hi < 0.005


def test_sweep_rows():
    rows = sweep_scaling("lv", [8], 2, 5)
    assert len(rows) == 1 and rows[0]["rounds_ratio"] > 0
    with pytest.raises(UsageError):
        sweep_scaling("lv", [16, 8], 2, 5)


def test_json_output():
    result = run_campaign(CampaignConfig("mc", [4], trials=3, output="json"))
    buf = io.StringIO()
    write_campaign_json(result, buf)
    doc = json.loads(buf.getvalue())
    assert doc["config"]["protocol"] == "mc"
    assert len(doc["trials"]) == 3 and doc["summary"][0]["n"] == 4


def test_detect_bench_accounting():
    bench = detect_bench(5, 2, 1000, seed=1)
    assert bench.rounds == 2 * 2 * 1000
    assert bench.bits == 5 * 1000
    assert bench.expected == 2.0 ** -3
    with pytest.raises(UsageError):
        detect_bench(2, 3, 10)
