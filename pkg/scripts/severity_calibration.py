"""Source-only accuracy along the textual severity ladder (10 seeds x 2000)."""

import argparse
import sys
from pathlib import Path

import numpy as np

from mgmtta.experiment import load_config, run_experiment

DEFAULT = Path(__file__).resolve().parents[1] / "configs" / "severity_calibration.yaml"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(DEFAULT))
    ap.add_argument("--tolerance", type=float, default=0.5, help="allowed rise, in points")
    args = ap.parse_args()
    reports = sorted(run_experiment(load_config(args.config)), key=lambda r: r.condition)
    for r in reports:
        print(f"{r.condition:10s} acc={r.top1_accuracy:.4f} H={r.mean_entropy_post:.4f}")
    rise = float(np.max(np.diff([r.top1_accuracy for r in reports]))) * 100
    print(f"largest level-to-level rise: {rise:+.3f} points")
    return 0 if rise <= args.tolerance else 1


if __name__ == "__main__":
    sys.exit(main())
