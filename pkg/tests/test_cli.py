import json
from pathlib import Path

import pytest

from frosty.cli import main, parse_seeds

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

SMALL = """
name = "tiny"
seed = 4
horizon = 40

[params]
n = 10
f = 1

[adversary]
kind = "sample_liar"
mode = "stall"
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "tiny.toml"
    p.write_text(SMALL)
    return p


def test_parse_seeds():
    assert parse_seeds("7") == [7]
    assert parse_seeds("1..4") == [1, 2, 3, 4]
    assert parse_seeds("1..2, 9,3..3") == [1, 2, 9, 3]
    for bad in ("", "5..1", "x"):
        with pytest.raises(ValueError):
            parse_seeds(bad)


def test_run_writes_trace_and_summary(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--seeds", "1..2", "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["tiny-seed1.summary.json", "tiny-seed1.trace.jsonl",
                     "tiny-seed2.summary.json", "tiny-seed2.trace.jsonl"]
    summ = json.loads((out / "tiny-seed1.summary.json").read_text())
    assert summ["consistency"] == "ok" and summ["ticks"] == 40
    recs = [json.loads(x) for x in (out / "tiny-seed1.trace.jsonl").read_text().splitlines()]
    assert recs[0]["kind"] == "scenario" and recs[-1]["kind"] == "summary"
    assert "all consistent" in capsys.readouterr().out


def test_horizon_and_seed_override(cfg, tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--seed", "11", "--horizon", "5",
                 "--out", str(out)]) == 0
    summ = json.loads((out / "tiny-seed11.summary.json").read_text())
    assert summ["ticks"] == 5 and summ["seed"] == 11


def test_replay_round_trip(cfg, tmp_path, capsys):
    out = tmp_path / "o"
    main(["run", "--config", str(cfg), "--out", str(out)])
    trace = out / "tiny-seed4.trace.jsonl"
    assert main(["replay", str(trace)]) == 0
    assert "replay identical" in capsys.readouterr().out
    lines = trace.read_text().splitlines()
    rec = json.loads(lines[3])
    rec["t"] += 1
    lines[3] = json.dumps(rec, sort_keys=True)
    trace.write_text("\n".join(lines) + "\n")
    assert main(["replay", str(trace)]) == 1


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('horizon = "soon"\n')
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "horizon" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 2
    broken = tmp_path / "broken.toml"
    broken.write_text("[params\n")
    assert main(["run", "--config", str(broken)]) == 2


def test_bad_seed_range(cfg, capsys):
    assert main(["run", "--config", str(cfg), "--seeds", "9..1"]) == 2


def test_replay_unreadable(tmp_path):
    empty = tmp_path / "e.jsonl"
    empty.write_text("")
    assert main(["replay", str(empty)]) == 2


def test_params_report(capsys):
    assert main(["params"]) == 0
    text = capsys.readouterr().out
    assert "5.828636414e-15" in text
    assert main(["params", "--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["ok"]
    assert main(["params", "--k", "40", "--a3", "24"]) == 1


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_scenarios_parse(path, tmp_path):
    assert main(["run", "--config", str(path), "--horizon", "3", "--out", str(tmp_path)]) == 0
