#!/usr/bin/env python3
"""Run the four randomized bound checks and write report.json + CSV tallies.

Exits 0 iff every tally is clean and the corrupted-constant self-test detects
violations. Equivalent to `prunerank verify-bounds` with an inline config.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

from prunerank.cli import main


def run() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=10000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="out/verify-bounds")
    args = parser.parse_args()
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as handle:
        json.dump({"trials": args.trials}, handle)
        config_path = handle.name
    try:
        return main(
            ["verify-bounds", "--config", config_path, "--seed", str(args.seed), "--out", args.out]
        )
    finally:
        Path(config_path).unlink(missing_ok=True)


if __name__ == "__main__":
    sys.exit(run())
