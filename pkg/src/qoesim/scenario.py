"""Architecture wiring, session arrivals, and the run/compare drivers."""
from __future__ import annotations

import csv
import dataclasses
import logging
import statistics
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import NS_PER_S, __version__, seconds
from .adaptation import AdaptationState, VideoReceiver, loss_event_rate, on_report
from .admission import (BANDWIDTH_CHECK, QOE_AWARE, AdmissionPolicy, AdmissionRequest,
                        LinkMonitor, decide)
from .config import ARCHITECTURES, ScenarioConfig, dumps
from .engine import Engine
from .ftp import FtpFlow
from .metrics import (METRICS, ArchitectureSummary, SessionRecord, cdf, mos_from_bitrate,
                      packet_metrics, session_mos, successful, utilization)
from .net import VIDEO, Dumbbell
from .video import Q_MIN, VideoSource, nominal_rate

log = logging.getLogger(__name__)

REFERENCE_VALUES = {
    "mean_mos": {"non_adaptive": 1.0, "adaptive": 1.8, "cross": 2.4},
    "successful_sessions": {"non_adaptive": 5, "adaptive": 15, "cross": 20},
}


def arrival_times(cfg: ScenarioConfig) -> list[int]:
    """Request instants for the video sessions, a pure function of the seed."""
    rng = np.random.default_rng([cfg.seed, 0xA55])
    slot = cfg.arrivals.slot_s
    if cfg.arrivals.process == "per_slot":
        offsets = rng.uniform(0.0, slot, cfg.n_video)
        return [seconds(k * slot + float(u)) for k, u in enumerate(offsets)]
    gaps = rng.exponential(slot, cfg.n_video)
    return [seconds(float(t)) for t in np.cumsum(gaps)]


def trace_seed(cfg: ScenarioConfig) -> int:
    return int(np.random.default_rng([cfg.seed, 0x7ACE]).integers(2**31))


class VideoSession:
    def __init__(self, sim: "Simulation", session_id: int, t_request: int) -> None:
        self.sim = sim
        self.session_id = session_id
        self.record = SessionRecord(session_id, t_request, sim.cfg.content.fps)
        self.source: VideoSource | None = None
        self.receiver: VideoReceiver | None = None
        self.state: AdaptationState | None = None
        self.path = None
        self._report_k = 0

    # called by VideoSource
    def on_frame(self, frame_no, frame, now):
        self.record.on_frame(frame_no, frame, now)

    def on_send(self, pkt):
        self.record.on_send(pkt)

    def start(self, q: int, adaptive: bool) -> None:
        sim = self.sim
        now = sim.engine.now
        rec = self.record
        rec.admitted = True
        rec.t_start = now
        self.path = sim.topo.add_flow(self.session_id, self._deliver, self._dropped)
        rec.path = self.path
        self.source = VideoSource(sim, self, sim.cfg.content, sim.trace_seed, q)
        self.source.start()
        if adaptive:
            self.receiver = VideoReceiver(self.session_id, sim.report_interval)
            self.state = AdaptationState(
                current_q=q, smoothed_rtt=2 * sim.topo.propagation_sum,
                allowed_rate_bps=nominal_rate(sim.cfg.content, q))
            self._schedule_report()

    def _schedule_report(self) -> None:
        self._report_k += 1
        self.sim.engine.schedule(self.record.t_start + self._report_k * self.sim.report_interval,
                                 self._report_timer)

    def _report_timer(self, _=None) -> None:
        now = self.sim.engine.now
        report = self.receiver.make_report(now)
        if report is not None:
            self.sim.topo.send_reverse(now, self._on_report, report)
        self._schedule_report()

    def _on_report(self, report) -> None:
        sim = self.sim
        now = sim.engine.now
        report = replace(report, rtt_sample=now - report.echo_sent - report.echo_hold)
        q = on_report(self.state, report, sim.cfg.content, sim.cfg.adaptation.policy,
                      sim.cfg.adaptation.packet_size)
        self.source.request_q(q)
        sim.adaptation_log.append((now, self.session_id, loss_event_rate(self.state.loss_history),
                                   self.state.smoothed_rtt, self.state.allowed_rate_bps, q))

    def _deliver(self, pkt, now):
        self.record.on_receive(pkt, now)
        if self.receiver is not None:
            self.receiver.on_packet(pkt, now)

    def _dropped(self, pkt, now):
        self.record.on_drop(pkt, now)


class Simulation:
    """One wired scenario: topology, FTP background, video arrivals and admission."""

    def __init__(self, cfg: ScenarioConfig, record_links: bool = False,
                 packet_log: bool = False) -> None:
        self.cfg = cfg
        self.engine = Engine()
        self.horizon = seconds(cfg.horizon_s)
        self.topo = Dumbbell(self.engine, cfg.capacity_bps, seconds(cfg.bottleneck_delay_s),
                             cfg.queue_capacity, cfg.access_bps, seconds(cfg.access_delay_s),
                             record=record_links, packet_log=packet_log)
        self.report_interval = seconds(cfg.adaptation.report_interval_s)
        self.trace_seed = trace_seed(cfg)
        self.monitor = LinkMonitor(seconds(cfg.admission.window_s))
        self.topo.ingress_observers.append(self._observe)
        kind = QOE_AWARE if cfg.architecture == "cross" else cfg.admission.baseline
        a = cfg.admission
        self.policy = AdmissionPolicy(kind, a.beta, a.theta, a.max_sessions)
        self.adaptive = cfg.architecture != "non_adaptive"
        self.sessions: list[VideoSession] = []
        self.admission_log: list[tuple] = []
        self.adaptation_log: list[tuple] = []
        self.max_active = 0
        self._packet_id = 0
        self.requests = arrival_times(cfg)
        self.ftp = [FtpFlow(self, cfg.n_video + j, seconds(j * cfg.ftp_stagger_s), cfg.ftp_window)
                    for j in range(cfg.n_ftp)]
        for f in self.ftp:
            f.start()
        for i, t in enumerate(self.requests):
            self.engine.schedule(t, self._request, i)

    def next_packet_id(self) -> int:
        self._packet_id += 1
        return self._packet_id

    def _observe(self, pkt, now) -> None:
        if pkt.flow_kind == VIDEO:
            self.monitor.observe(pkt, now)

    def _request(self, session_id: int) -> None:
        now = self.engine.now
        cfg = self.cfg
        session = VideoSession(self, session_id, now)
        self.sessions.append(session)
        request = AdmissionRequest(session_id, now, nominal_rate(cfg.content, Q_MIN))
        snap = self.monitor.snapshot(now)
        d = decide(self.policy, request, snap, cfg.capacity_bps, cfg.mos, cfg.content)
        self.admission_log.append((now, session_id, self.policy.kind,
                                   "admit" if d.admitted else "reject", d.reason,
                                   d.measured_bps, d.residual_bps,
                                   "" if d.recommended_q is None else d.recommended_q,
                                   snap.active_sessions))
        if not d.admitted:
            return
        self.monitor.active_sessions += 1
        self.max_active = max(self.max_active, self.monitor.active_sessions)
        q = d.recommended_q if cfg.architecture == "cross" else Q_MIN
        session.start(q, self.adaptive)

    def run(self) -> int:
        n = self.engine.run_until(self.horizon)
        self.topo.finalize(self.horizon)
        for s in self.sessions:
            s.record.t_end = self.horizon if s.record.admitted else s.record.t_request
        return n

    # -- results ---------------------------------------------------------
    def session_rows(self) -> list[dict]:
        cfg = self.cfg
        rows = []
        for s in self.sessions:
            r = s.record
            if r.admitted:
                delay, jitter, drop = packet_metrics(r, cfg.metrics.jitter)
                mos = session_mos(r, cfg.mos)
                ok = successful(r, cfg.metrics.delta)
                ratio = r.decodable_ratio()
            else:
                delay = jitter = drop = ratio = 0.0
                mos, ok = 1.0, False
            rows.append(dict(session_id=r.session_id, architecture=cfg.architecture,
                             admitted=int(r.admitted), successful=int(ok), mean_mos=mos,
                             mean_delay_ns=delay, mean_jitter_ns=jitter, drop_ratio=drop,
                             sent=r.sent, received=r.received, dropped=r.dropped,
                             decodable_ratio=ratio))
        return rows

    def summary(self, rows: list[dict] | None = None) -> ArchitectureSummary:
        rows = self.session_rows() if rows is None else rows
        adm = [r for r in rows if r["admitted"]]

        def mean(key):
            return statistics.fmean(r[key] for r in adm) if adm else 0.0

        bl = self.topo.bottleneck
        video_bytes = bl.delivered_bytes.get(VIDEO, 0)
        cdfs = {
            "mean_mos": cdf(r["mean_mos"] for r in adm),
            "drop_ratio": cdf(r["drop_ratio"] for r in adm),
            "mean_delay": cdf(r["mean_delay_ns"] for r in adm),
            "mean_jitter": cdf(r["mean_jitter_ns"] for r in adm),
            "successful_sessions": cdf(r["successful"] for r in adm),
        }
        util = utilization(sum(bl.delivered_bytes.values()), self.cfg.capacity_bps, self.horizon)
        cdfs["utilization"] = [(util, 1.0)]
        return ArchitectureSummary(
            architecture=self.cfg.architecture,
            mean_mos=mean("mean_mos") if adm else 1.0,
            successful_sessions=sum(r["successful"] for r in adm),
            mean_delay=mean("mean_delay_ns"),
            mean_jitter=mean("mean_jitter_ns"),
            drop_ratio=mean("drop_ratio"),
            utilization=util,
            requested=len(rows),
            admitted=len(adm),
            video_utilization=utilization(video_bytes, self.cfg.capacity_bps, self.horizon),
            cdfs=cdfs,
        )


SESSION_COLUMNS = ("session_id", "architecture", "admitted", "successful", "mean_mos",
                   "mean_delay_ns", "mean_jitter_ns", "drop_ratio", "sent", "received",
                   "dropped", "decodable_ratio")
ADMISSION_COLUMNS = ("time_ns", "session_id", "policy", "decision", "reason", "measured_bps",
                     "residual_bps", "recommended_q", "active_sessions")
ADAPTATION_COLUMNS = ("time_ns", "session_id", "p", "rtt_ns", "allowed_bps", "q")
SUMMARY_COLUMNS = ("architecture",) + METRICS + ("requested", "admitted", "video_utilization")


def _write_csv(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _cell(v):
    return repr(v) if isinstance(v, float) else v


def summary_row(s: ArchitectureSummary) -> list:
    return [s.architecture] + [_cell(s.metric(m)) if m != "successful_sessions"
                               else s.successful_sessions for m in METRICS] + [
        s.requested, s.admitted, _cell(s.video_utilization)]


def meta_text(cfg: ScenarioConfig, extra: dict | None = None) -> str:
    lines = [f"code_version = \"{__version__}\"", f"seed = {cfg.seed}"]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n# config\n" + dumps(cfg)


def build_scenario(cfg: ScenarioConfig, **kw) -> Simulation:
    return Simulation(cfg, **kw)


def run(cfg: ScenarioConfig, out_dir=None, packet_log: bool = False,
        record_links: bool = False) -> tuple[ArchitectureSummary, Simulation]:
    """Execute one scenario to its horizon and write its output files."""
    sim = build_scenario(cfg, record_links=record_links, packet_log=packet_log)
    sim.run()
    rows = sim.session_rows()
    summary = sim.summary(rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "sessions.csv", SESSION_COLUMNS,
                   [[_cell(r[c]) for c in SESSION_COLUMNS] for r in rows])
        _write_csv(out / "summary.csv", SUMMARY_COLUMNS, [summary_row(summary)])
        for metric, pts in summary.cdfs.items():
            _write_csv(out / f"cdf_{metric}.csv", ("value", "fraction"),
                       [(_cell(float(v)), _cell(f)) for v, f in pts])
        _write_csv(out / "admission.csv", ADMISSION_COLUMNS,
                   [[_cell(x) for x in row] for row in sim.admission_log])
        _write_csv(out / "adaptation.csv", ADAPTATION_COLUMNS,
                   [[_cell(x) for x in row] for row in sim.adaptation_log])
        meta = meta_text(cfg, {
            "admission_policy": f"\"{sim.policy.kind}\"",
            "events_processed": sim.engine.processed,
            "mos_r1_bps": repr(cfg.mos.r1_bps),
            "mos_r5_bps": repr(cfg.mos.r5_bps),
        })
        (out / "meta.txt").write_text(meta)
        if packet_log:
            sim.topo.log.write(out / "packets.csv")
    return summary, sim


def _run_one(args):
    cfg, out_dir = args
    summary, _ = run(cfg, out_dir)
    return summary


def compare(base: ScenarioConfig, seeds, out_dir=None, jobs: int = 1) -> dict:
    """Run all three architectures for every seed; aggregate the six metrics."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("compare needs at least one seed")
    tasks = []
    for seed in seeds:
        for arch in ARCHITECTURES:
            cfg = base.with_(architecture=arch, seed=seed)
            sub = None if out_dir is None else Path(out_dir) / f"seed_{seed}" / arch
            tasks.append((cfg, sub))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(jobs) as ex:
            summaries = list(ex.map(_run_one, tasks))
    else:
        summaries = [_run_one(t) for t in tasks]

    per_seed: dict[int, dict[str, ArchitectureSummary]] = {}
    for (cfg, _), s in zip(tasks, summaries):
        per_seed.setdefault(cfg.seed, {})[cfg.architecture] = s

    table = {}
    for arch in ARCHITECTURES:
        table[arch] = {}
        for m in METRICS:
            vals = [per_seed[sd][arch].metric(m) for sd in seeds]
            sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
            table[arch][m] = (statistics.fmean(vals), sd)
    report = {"seeds": seeds, "per_seed": per_seed, "table": table}
    if out_dir is not None:
        write_comparison(report, Path(out_dir))
    return report


def format_table(report: dict) -> str:
    table = report["table"]
    head = f"{'architecture':<14}" + "".join(f"{m:>24}" for m in METRICS)
    lines = [head]
    for arch in ARCHITECTURES:
        cells = []
        for m in METRICS:
            mu, sd = table[arch][m]
            if m in ("mean_delay", "mean_jitter"):
                cells.append(f"{mu / 1e6:.2f}±{sd / 1e6:.2f} ms")
            else:
                cells.append(f"{mu:.3f}±{sd:.3f}")
        lines.append(f"{arch:<14}" + "".join(f"{c:>24}" for c in cells))
    lines.append("")
    lines.append("published reference values (different trace and simulator, not expected to match):")
    for m, ref in REFERENCE_VALUES.items():
        meas = ", ".join(f"{a}={table[a][m][0]:.2f}" for a in ARCHITECTURES)
        refs = ", ".join(f"{a}={ref[a]}" for a in ARCHITECTURES)
        lines.append(f"  {m}: reference {refs} | measured {meas}")
    return "\n".join(lines)


def write_comparison(report: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    table = report["table"]
    _write_csv(out / "comparison.csv", ("architecture",) + METRICS,
               [[a] + [f"{table[a][m][0]!r}±{table[a][m][1]!r}" for m in METRICS]
                for a in ARCHITECTURES])
    long_rows = []
    for a in ARCHITECTURES:
        for m in METRICS:
            ref = REFERENCE_VALUES.get(m, {}).get(a, "")
            long_rows.append([a, m, _cell(table[a][m][0]), _cell(table[a][m][1]),
                              len(report["seeds"]), ref])
    _write_csv(out / "comparison_long.csv",
               ("architecture", "metric", "mean", "sd", "n_seeds", "reference"), long_rows)
    seed_rows = []
    for sd in report["seeds"]:
        for a in ARCHITECTURES:
            seed_rows.append([sd] + summary_row(report["per_seed"][sd][a]))
    _write_csv(out / "per_seed.csv", ("seed",) + SUMMARY_COLUMNS, seed_rows)
    for m in METRICS:
        rows = []
        for a in ARCHITECTURES:
            vals = [report["per_seed"][sd][a].metric(m) for sd in report["seeds"]]
            rows.extend([a, _cell(float(v)), _cell(f)] for v, f in cdf(vals))
        _write_csv(out / f"cdf_{m}.csv", ("architecture", "value", "fraction"), rows)
