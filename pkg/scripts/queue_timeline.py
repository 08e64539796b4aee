"""Per-second bottleneck backlog, drops and mean video quantizer for one run.

Useful for seeing how the rate controllers and the background flows interact.
"""
import argparse
import collections

from qoesim.config import ScenarioConfig, load_config
from qoesim.scenario import run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--architecture", default="adaptive")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--horizon", type=float, default=120.0)
    ap.add_argument("--every", type=int, default=2, help="print every n-th second")
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    cfg = cfg.with_(architecture=args.architecture, seed=args.seed, horizon_s=args.horizon)
    _, sim = run(cfg, record_links=True)
    rec = sim.topo.bottleneck.record
    backlog = collections.defaultdict(int)
    for now, _start, _fin, waiting, _sid, _seq in rec.accepted:
        sec = now // 10**9
        backlog[sec] = max(backlog[sec], waiting)
    drops = collections.Counter(now // 10**9 for now, *_ in rec.drops)
    qs = collections.defaultdict(list)
    for t, _sid, _p, _rtt, _rate, q in sim.adaptation_log:
        qs[t // 10**9].append(q)
    print("second  max_backlog  drops  mean_q")
    for sec in range(0, int(args.horizon), args.every):
        mq = sum(qs[sec]) / len(qs[sec]) if qs[sec] else float("nan")
        print(f"{sec:6d}  {backlog[sec]:11d}  {drops[sec]:5d}  {mq:6.1f}")


if __name__ == "__main__":
    main()
