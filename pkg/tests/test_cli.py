import json
import time
from pathlib import Path

import httpx
import pytest

from precodekit.cli import load_config, main
from precodekit.scenarios import load_catalog


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "precodekit.conf"
    path.write_text(f"# test paths\npaths.report_dir = {tmp_path / 'reports'}\n"
                    f"paths.transcript_dir = {tmp_path / 'transcripts'}\n")
    return path


def stderr_error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"]


def test_scenario_list(capsys, tmp_path):
    assert main(["scenario", "list"]) == 0
    first = capsys.readouterr().out
    assert len(first.strip().splitlines()) == 1 + 9
    assert main(["scenario", "list"]) == 0
    assert capsys.readouterr().out == first
    entry = dict(load_catalog().entry(8), scenario_id=10, name="Small sum rate", N_t=4, K=2)
    extra = tmp_path / "extra.json"
    extra.write_text(json.dumps({"scenarios": [entry]}))
    assert main(["--catalog", str(extra), "scenario", "list"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 1 + 10 and "Small sum rate" in out[-1]


def test_run_pipeline_writes_transcript(capsys, config, tmp_path):
    assert main(["--config", str(config), "run", "1", "--snr", "10"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["terminated_by"] == "Accepted" and summary["revisions"] == 0
    assert summary["feasible"] and summary["violations"] == []
    transcript = Path(summary["transcript"])
    assert transcript.parent == tmp_path / "transcripts" and transcript.exists()
    assert list((tmp_path / "reports").glob("run_s01_pipeline_*.json"))


def test_run_baseline_and_strategy(capsys, config):
    assert main(["--config", str(config), "run", "8", "--method", "slnr"]) == 0
    assert json.loads(capsys.readouterr().out)["method"] == "slnr"
    assert main(["--config", str(config), "run", "8", "--method", "WmmseSumRate"]) == 0


def test_run_unknown_entities(capsys, config):
    assert main(["--config", str(config), "run", "42"]) == 2
    assert stderr_error(capsys) == "UnknownScenario"
    assert main(["--config", str(config), "run", "1", "--method", "nope"]) == 2
    assert stderr_error(capsys) == "UnknownStrategy"
    assert main(["run"]) == 2


def test_remote_without_key_is_config_error(capsys, config, monkeypatch):
    monkeypatch.delenv("AGENTIC_LLM_API_KEY", raising=False)
    monkeypatch.setenv("PRECODEKIT_BACKEND", "remote")
    monkeypatch.setenv("PRECODEKIT_LLM_BASE_URL", "http://llm.test")
    monkeypatch.setenv("PRECODEKIT_LLM_MODEL", "m")
    seen = []
    transport = httpx.MockTransport(lambda r: seen.append(r) or httpx.Response(500))
    assert main(["--config", str(config), "run", "1"], transport=transport) == 3
    assert stderr_error(capsys) == "ConfigError" and seen == []


def test_bad_config(capsys, tmp_path):
    bad = tmp_path / "bad.conf"
    bad.write_text("sweep.n_mc = 0\n")
    assert main(["--config", str(bad), "scenario", "list"]) == 3
    bad.write_text("nonsense.key = 1\n")
    assert main(["--config", str(bad), "scenario", "list"]) == 3
    env = {"PRECODEKIT_SWEEP_SNRS_DB": "0, 10", "PRECODEKIT_SWEEP_N_MC": "7"}
    cfg = load_config(None, env=env)
    assert cfg.sweep.snrs_db == [0.0, 10.0] and cfg.sweep.n_mc == 7


def test_sweep_reports(capsys, config, tmp_path):
    args = ["--config", str(config), "--jobs", "1", "--seed", "5", "sweep", "--scenarios", "8",
            "--methods", "zf,rzf", "--snrs", "0,10", "--n-mc", "5"]
    start = time.perf_counter()
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert time.perf_counter() - start < 10
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    names = sorted(p.name for p in a.iterdir())
    assert names == ["metric_table.csv", "metric_table.md", "plot_s08_rzf.csv",
                     "plot_s08_zf.csv"]
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = (a / "metric_table.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 2


def test_replay_commands(capsys, config, tmp_path):
    assert main(["--config", str(config), "run", "3", "--snr", "5"]) == 0
    path = json.loads(capsys.readouterr().out)["transcript"]
    assert main(["replay", path, "--reexecute"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["feedback_identical"] is True
    assert summary["strategies"][0] == "OneBitGreedyCD"
    text = Path(path).read_text()
    Path(path).write_text(text[:-5])
    assert main(["replay", path]) == 2
    assert stderr_error(capsys) == "CorruptTranscript"
