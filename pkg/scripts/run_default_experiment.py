#!/usr/bin/env python3
"""Run the default synthetic protocol in both modes and print the tables."""

import argparse

from thermofault import ExperimentConfig, compare, compare_table, report_table, run_both
from thermofault.synthetic import default_synth_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cfg = ExperimentConfig(synth=default_synth_config(), seed=args.seed)
    supervised, weak = run_both(cfg)
    print(report_table(supervised))
    print()
    print(report_table(weak))
    print()
    print(compare_table(compare(supervised, weak)))


if __name__ == "__main__":
    main()
