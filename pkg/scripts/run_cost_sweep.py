#!/usr/bin/env python3
"""Sweep the FLOPs model over keep ratios and candidate-list sizes.

Writes report.json plus tables/cost_sweep.csv. Equivalent to
`prunerank cost-model` with an inline sweep config.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

from prunerank.cli import main


def run() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--ratios", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7, 0.9, 1.0]
    )
    parser.add_argument("--k", type=int, nargs="+", default=[10, 20, 40])
    parser.add_argument("--tokens-per-candidate", type=int, default=1024)
    parser.add_argument("--n-text", type=int, default=512)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="out/cost-model")
    args = parser.parse_args()
    config = {
        "sweep": {
            "rho_values": args.ratios,
            "k_values": args.k,
            "tokens_per_candidate": args.tokens_per_candidate,
            "n_text": args.n_text,
        }
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as handle:
        json.dump(config, handle)
        config_path = handle.name
    try:
        return main(
            ["cost-model", "--config", config_path, "--seed", str(args.seed), "--out", args.out]
        )
    finally:
        Path(config_path).unlink(missing_ok=True)


if __name__ == "__main__":
    sys.exit(run())
