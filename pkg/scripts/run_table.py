#!/usr/bin/env python3
"""Reproduce the benchmark decay-rate table for both bundled controllers.

Writes table.txt / table.csv under --outdir (default pipestab-out/table).
"""

import sys

from pipestab.cli import main

if __name__ == "__main__":
    outdir = sys.argv[1] if len(sys.argv) > 1 else "pipestab-out/table"
    sys.exit(main(["--outdir", outdir, "table", "--max-order", "3"]))
