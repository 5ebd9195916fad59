#!/usr/bin/env python3
"""Critical-visibility tables across the penalty weight grid.

Writes one CSV per (witness, bound kind) and prints the most robust
point of each curve, i.e. the k that tolerates the most depolarizing
noise while still certifying.

    python3 scripts/robustness_tables.py [--out-dir robustness]
"""
import argparse
from pathlib import Path

from povmcert.optimize import OptimizerConfig
from povmcert.robustness import (
    most_robust_point,
    visibility_curve,
    visibility_curve_to_csv,
)

CURVES = (("sic", "projective"), ("sic", "three-outcome"), ("trine", "projective"))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default="robustness")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=32)
    opts = p.parse_args()
    out = Path(opts.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    config = OptimizerConfig(restarts=opts.restarts, seed=opts.seed)
    for witness, kind in CURVES:
        curve = visibility_curve(witness, kind, config=config)
        path = out / f"visibility-{witness}-{kind}.csv"
        path.write_text(visibility_curve_to_csv(curve))
        best = most_robust_point(curve)
        print(f"{witness:6s} {kind:13s} best k={best.k:.2f} v_crit={best.v_crit:.4f}  -> {path}")


if __name__ == "__main__":
    main()
