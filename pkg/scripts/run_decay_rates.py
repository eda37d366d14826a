#!/usr/bin/env python3
"""Measure the four L^1 -> L^2 linear decay exponents against their
closed-formula targets, via the bundled config."""

import pathlib
import sys

from nsplab import ExperimentConfig, run_pipeline

CONFIG = pathlib.Path(__file__).resolve().parents[1] / "configs" / "lemma44_p1.cfg"


def main():
    summary = run_pipeline(ExperimentConfig.from_file(CONFIG))
    ok = True
    for label, entry in summary["stages"]["decay"].items():
        ok &= entry["passed"]
        print(f"{label:24s} fitted {entry['fitted']:+.4f} "
              f"target {entry['target']:+.4f} "
              f"{'ok' if entry['passed'] else 'MISMATCH'}")
    print(f"outputs in {summary['output_dir']}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
