import csv
import io
import json

import pytest

from beepsim import cli
from beepsim.harness import METRIC_FIELDS


def run(argv):
    out = io.StringIO()
    code = cli.main(argv, out=out)
    return code, out.getvalue()


def test_lv_csv():
    code, text = run(["lv", "--n", "6", "--trials", "4", "--seed", "11"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == METRIC_FIELDS
    assert len(rows) == 4 and all(r["classification"] == "proper" for r in rows)


def test_mc_json_and_trace(tmp_path):
    trace = tmp_path / "trace.csv"
    code, text = run(["mc", "--n", "5", "--trials", "2", "--out", "json", "--trace", str(trace)])
    assert code == 0
    doc = json.loads(text)
    assert doc["summary"][0]["n"] == 5
    lines = trace.read_text().splitlines()
    assert lines[0] == "round,beepers,feedback"
    assert len(lines) - 1 == int(doc["trials"][0]["rounds"])


def test_same_command_same_bytes():
    args = ["lv", "--n", "9", "--trials", "5", "--seed", "77"]
    assert run(args) == run(args)


def test_detect_bench_command():
    code, text = run(["detect-bench", "--participants", "3", "--calls", "1", "--trials", "2000"])
    assert code == 0 and "expected=0.250000" in text


def test_ball_process_command():
    code, text = run(["ball-process", "--n", "32", "--trials", "50"])
    assert code == 0 and "over_3n=0" in text


def test_sweep_command():
    code, text = run(["sweep", "--protocol", "mc", "--n-list", "4,8", "--trials", "5"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["n"] for r in rows] == ["4", "8"]


@pytest.mark.parametrize("argv", [
    ["lv"],
    ["lv", "--n", "0"],
    ["lv", "--n", "4", "--trials", "0"],
    ["lv", "--n", "4", "--seed", "-3"],
    ["sweep", "--protocol", "lv", "--n-list", "16,8"],
    ["detect-bench", "--participants", "1", "--calls", "2"],
])
def test_usage_errors_exit_1(argv):
    with pytest.raises(SystemExit) as info:
        code = cli.main(argv, out=io.StringIO())
        raise SystemExit(code)
    assert info.value.code == 1


def test_divergence_exit_2():
    code, _ = run(["lv", "--n", "8", "--max-rounds", "10"])
    assert code == 2


def test_verify_failure_exit_3(monkeypatch):
    from beepsim import verify

    class Fake:
        ok = False

        def line(self):
            return "[FAIL] fake"

    monkeypatch.setattr(verify, "run_all", lambda report: [Fake()])
    code, text = run(["verify"])
    assert code == 3 and "0/1 checks passed" in text
