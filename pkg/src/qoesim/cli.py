"""Command line entry point: ``run``, ``compare`` and ``trace`` subcommands."""
from __future__ import annotations

import argparse
import sys
import time
import traceback
from pathlib import Path

from .config import ConfigError, ScenarioConfig, load_config
from .engine import SchedulingError
from .video import ContentParams, check_q, generate_trace, write_trace_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def parse_seeds(text: str) -> list[int]:
    """Accept ``n``, ``n..m`` (inclusive) or a comma list of either."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            a, b = int(lo), int(hi)
            if b < a:
                raise argparse.ArgumentTypeError(f"empty seed range {part!r}")
            seeds.extend(range(a, b + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("no seeds given")
    return seeds


def _seeds_arg(text: str) -> list[int]:
    try:
        return parse_seeds(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qoesim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one architecture for one seed")
    r.add_argument("--config", type=Path, help="TOML scenario file (defaults if omitted)")
    r.add_argument("--seed", type=int, help="override the seed in the config")
    r.add_argument("--architecture", choices=("non_adaptive", "adaptive", "cross"),
                   help="override the architecture in the config")
    r.add_argument("--out", type=Path, required=True)
    r.add_argument("--packet-log", action="store_true", help="also write packets.csv")

    c = sub.add_parser("compare", help="run all three architectures over a seed range")
    c.add_argument("--config", type=Path)
    c.add_argument("--seeds", type=_seeds_arg, required=True, help="e.g. 1..10")
    c.add_argument("--out", type=Path, required=True)
    c.add_argument("--jobs", type=int, default=1, help="worker processes")

    t = sub.add_parser("trace", help="dump a synthetic frame trace as CSV")
    t.add_argument("--q", type=int, required=True)
    t.add_argument("--seed", type=int, default=1)
    t.add_argument("--out", type=Path, required=True)
    return p


def _load(path: Path | None) -> ScenarioConfig:
    return ScenarioConfig() if path is None else load_config(path)


def _cmd_run(args) -> int:
    from .scenario import run

    cfg = _load(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.architecture is not None:
        over["architecture"] = args.architecture
    if over:
        cfg = cfg.with_(**over)
    t0 = time.perf_counter()
    s, _ = run(cfg, args.out, packet_log=args.packet_log)
    print(f"{s.architecture}: mos={s.mean_mos:.3f} successful={s.successful_sessions}/"
          f"{s.admitted} drop={s.drop_ratio:.4f} delay={s.mean_delay / 1e6:.1f}ms "
          f"jitter={s.mean_jitter / 1e6:.2f}ms util={s.utilization:.4f} "
          f"({time.perf_counter() - t0:.1f}s)")
    return EXIT_OK


def _cmd_compare(args) -> int:
    from .scenario import compare, format_table

    cfg = _load(args.config)
    t0 = time.perf_counter()
    report = compare(cfg, args.seeds, args.out, jobs=max(1, args.jobs))
    print(format_table(report))
    print(f"\n{3 * len(args.seeds)} runs in {time.perf_counter() - t0:.1f}s")
    return EXIT_OK


def _cmd_trace(args) -> int:
    try:
        check_q(args.q)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    trace = generate_trace(ContentParams(), args.q, args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, args.out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "compare": _cmd_compare, "trace": _cmd_trace}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SchedulingError, AssertionError, RuntimeError) as exc:
        tail = "".join(traceback.format_exception(exc)[-6:])
        print(f"runtime contract violation: {exc}\n{tail}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
