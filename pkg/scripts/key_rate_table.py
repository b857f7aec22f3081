"""Secret-key rates and abort thresholds for d-dimensional BB84 and the six-state protocol.

    python3 scripts/key_rate_table.py            # anchor table
    python3 scripts/key_rate_table.py --sweep    # R(Q) curves as CSV
"""

import argparse
import csv
import sys

import numpy as np

from twistedqkd.protocols import ProtocolSpec, bb84_rate, six_state_rate, threshold

SPECS = (ProtocolSpec("bb84", 2), ProtocolSpec("bb84", 3), ProtocolSpec("bb84", 4),
         ProtocolSpec("six-state", 2))
# measured QBERs on the pool link
MEASURED = ((ProtocolSpec("bb84", 2), 0.0657), (ProtocolSpec("six-state", 2), 0.0635),
            (ProtocolSpec("bb84", 3), 0.1173), (ProtocolSpec("bb84", 4), 0.2977))


def _name(spec):
    return f"{spec.kind} d={spec.dimension}"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sweep", action="store_true", help="emit R(Q) on a QBER grid instead")
    ap.add_argument("--points", type=int, default=101)
    args = ap.parse_args(argv)
    w = csv.writer(sys.stdout, lineterminator="\n")
    if args.sweep:
        w.writerow(["Q"] + [_name(s) for s in SPECS])
        for q in np.linspace(0, 0.3, args.points):
            w.writerow([f"{q:.4f}"] + [f"{s.rate(q):.6f}" for s in SPECS])
        return
    w.writerow(["protocol", "threshold", "Q", "R", "abort"])
    for spec, q in MEASURED:
        q_th = threshold(spec)
        r = six_state_rate(q) if spec.kind == "six-state" else bb84_rate(spec.dimension, q)
        w.writerow([_name(spec), f"{q_th:.6f}", q, f"{r:.5f}", q >= q_th])


if __name__ == "__main__":
    main()
