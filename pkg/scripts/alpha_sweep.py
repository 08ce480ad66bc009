#!/usr/bin/env python3
"""Sweep the center-refinement weight alpha on the default synthetic data."""

import argparse

from thermofault import ExperimentConfig, sweep, sweep_table
from thermofault.synthetic import default_synth_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--values", default="0,0.25,0.5,0.75,1")
    args = ap.parse_args()
    values = [float(v) for v in args.values.split(",")]
    cfg = ExperimentConfig(synth=default_synth_config(), seed=args.seed)
    reports = sweep(cfg, "alpha", values)
    print(sweep_table("alpha", values, reports))


if __name__ == "__main__":
    main()
