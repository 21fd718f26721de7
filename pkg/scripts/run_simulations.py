#!/usr/bin/env python3
"""Closed-loop runs for both bundled controllers with decay-rate comparison.

Each run exports trace.csv (+ snapshots.csv) and prints the fitted empirical
rate next to the best available certificate.  The dynamic preset is expected
to diverge: it does not stabilize the reference plant.
"""

import sys

from pipestab.cli import main

BASE = sys.argv[1] if len(sys.argv) > 1 else "pipestab-out"

if __name__ == "__main__":
    rc = main(["--outdir", f"{BASE}/sim-feedforward", "simulate",
               "--controller", "feedforward", "--snapshots"])
    rc |= main(["--outdir", f"{BASE}/sim-dynamic", "simulate",
                "--controller", "dynamic", "--snapshots"])
    sys.exit(rc)
