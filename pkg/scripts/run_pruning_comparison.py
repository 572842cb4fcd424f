#!/usr/bin/env python3
"""Retention sweep: query-aware vs uniform-random pruning on planted instances.

Writes report.json plus tables/pruning_comparison.csv, along with the
correlation probe and a synthetic ranking-quality section. Equivalent to
`prunerank simulate` with an inline config.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

from prunerank.cli import main


def run() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instances", type=int, default=2000)
    parser.add_argument(
        "--ratios", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7, 0.9]
    )
    parser.add_argument("--noise", type=float, default=0.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="out/simulate")
    args = parser.parse_args()
    config = {
        "n_instances": args.instances,
        "keep_ratios": args.ratios,
        "synthetic": {"noise_scale": args.noise},
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as handle:
        json.dump(config, handle)
        config_path = handle.name
    try:
        return main(
            ["simulate", "--config", config_path, "--seed", str(args.seed), "--out", args.out]
        )
    finally:
        Path(config_path).unlink(missing_ok=True)


if __name__ == "__main__":
    sys.exit(run())
