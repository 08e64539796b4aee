"""Mean bitrate of the synthetic trace at every quantizer, next to the MOS it would earn."""
import argparse
import csv
import sys

from qoesim.metrics import MosCurve, mos_from_bitrate
from qoesim.video import Q_MAX, Q_MIN, ContentParams, generate_trace, nominal_rate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    content = ContentParams()
    curve = MosCurve()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["q", "nominal_bps", "trace_bps", "mos_at_nominal"])
    for q in range(Q_MIN, Q_MAX + 1):
        tr = generate_trace(content, q, args.seed)
        rate = 8 * sum(tr.sizes()) * content.fps / content.frames
        nom = nominal_rate(content, q)
        w.writerow([q, round(nom), round(rate), round(mos_from_bitrate(nom, curve), 3)])


if __name__ == "__main__":
    main()
