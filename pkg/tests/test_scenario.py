import csv
import hashlib

import pytest

from qoesim.cli import main, parse_seeds
from qoesim.config import ScenarioConfig, save_config
from qoesim.net import VIDEO
from qoesim.scenario import arrival_times, compare, run
from qoesim.video import Q_MIN

OUTPUTS = ("sessions.csv", "summary.csv", "meta.txt", "admission.csv", "adaptation.csv")


def digest(d):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(d.iterdir())}


def test_non_adaptive_stays_at_top_quality(short_runs):
    _, sim = short_runs["non_adaptive"]
    for s in sim.sessions:
        if s.record.admitted:
            assert {q for _, q in s.source.q_log} <= {Q_MIN}
            assert s.source.q == Q_MIN


def test_cross_logs_qoe_decisions(short_runs):
    _, sim = short_runs["cross"]
    assert {row[2] for row in sim.admission_log} == {"qoe_aware"}
    _, base = short_runs["adaptive"]
    assert {row[2] for row in base.admission_log} == {base.cfg.admission.baseline}


def test_arms_share_arrivals_and_background(short_runs):
    sims = [sim for _, sim in short_runs.values()]
    assert len({tuple(s.requests) for s in sims}) == 1
    assert len({tuple(f.start_at for f in s.ftp) for s in sims}) == 1
    assert sims[0].ftp[1].start_at - sims[0].ftp[0].start_at == 100_000_000


def test_session_count_conservation(short_runs):
    for summary, sim in short_runs.values():
        log = sim.admission_log
        admits = sum(r[3] == "admit" for r in log)
        assert len(log) == summary.requested == len(sim.sessions)
        assert admits == summary.admitted
        assert summary.successful_sessions <= summary.admitted <= 24


def test_utilization_bounds(short_runs):
    for summary, sim in short_runs.values():
        slack = 1052 * 8 / (sim.cfg.capacity_bps * sim.cfg.horizon_s)
        assert 0 <= summary.video_utilization <= summary.utilization <= 1 + slack
        assert 0 <= summary.drop_ratio <= 1


def test_arrivals_per_slot_and_poisson():
    cfg = ScenarioConfig(seed=5)
    t = arrival_times(cfg)
    assert len(t) == 24
    assert all(k * 10**9 <= x < (k + 1) * 10**9 for k, x in enumerate(t))
    p = arrival_times(cfg.with_(arrivals=cfg.arrivals.__class__(process="poisson")))
    assert p == sorted(p) and p != t


def test_run_outputs_are_deterministic(tmp_path):
    cfg = ScenarioConfig(architecture="cross", seed=4, horizon_s=20.0)
    run(cfg, tmp_path / "a", packet_log=True)
    run(cfg, tmp_path / "b", packet_log=True)
    a, b = digest(tmp_path / "a"), digest(tmp_path / "b")
    assert a == b
    for name in OUTPUTS + ("packets.csv", "cdf_mean_mos.csv"):
        assert name in a
    with open(tmp_path / "a" / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1 and rows[0]["architecture"] == "cross"


def test_packet_log_matches_counters(tmp_path):
    cfg = ScenarioConfig(architecture="adaptive", seed=2, horizon_s=15.0)
    _, sim = run(cfg, tmp_path, packet_log=True)
    with open(tmp_path / "packets.csv") as fh:
        rows = [r for r in csv.DictReader(fh) if r["flow_kind"] == VIDEO]
    for s in sim.sessions:
        mine = [r for r in rows if int(r["session_id"]) == s.session_id]
        assert sum(r["event"] == "send" for r in mine) == s.record.sent
        assert sum(r["event"] == "recv" for r in mine) == s.record.received
        assert sum(r["event"] == "drop" for r in mine) == s.record.dropped


def test_compare_table_shape(tmp_path):
    base = ScenarioConfig(horizon_s=10.0)
    report = compare(base, [1, 2], tmp_path)
    assert set(report["table"]) == {"non_adaptive", "adaptive", "cross"}
    assert all(len(row) == 6 for row in report["table"].values())
    with open(tmp_path / "comparison.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 4 and len(rows[0]) == 7
    assert "±" in rows[1][1]
    long = (tmp_path / "comparison_long.csv").read_text()
    assert "2.4" in long and "20" in long
    assert (tmp_path / "seed_2" / "cross" / "sessions.csv").exists()


def test_parse_seeds():
    assert parse_seeds("1..3") == [1, 2, 3]
    assert parse_seeds("4,7..8") == [4, 7, 8]


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("queue_capacity = -1\n")
    assert main(["run", "--config", str(bad), "--seed", "1", "--out", str(tmp_path / "o")]) == 1
    assert main(["trace", "--q", "40", "--out", str(tmp_path / "t.csv")]) == 1
    assert main(["trace", "--q", "17", "--out", str(tmp_path / "t.csv")]) == 0
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "index,type,size_bytes,time_ns" and len(lines) == 871
    good = tmp_path / "good.toml"
    save_config(ScenarioConfig(horizon_s=5.0, architecture="adaptive"), good)
    assert main(["run", "--config", str(good), "--seed", "3", "--out", str(tmp_path / "r")]) == 0
    assert "seed = 3" in (tmp_path / "r" / "meta.txt").read_text()
    assert main(["compare", "--config", str(good), "--seeds", "1..2",
                 "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "cdf_utilization.csv").exists()


def test_cli_runtime_violation_exit_code(tmp_path, monkeypatch):
    from qoesim import engine

    def boom(self, t_end):
        raise engine.SchedulingError("event scheduled in the past")

    monkeypatch.setattr(engine.Engine, "run_until", boom)
    assert main(["run", "--seed", "1", "--out", str(tmp_path)]) == 2
