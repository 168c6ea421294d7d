"""Fixed-gate sweep on conflicting samples: accuracy and predicted flips vs alpha."""

import argparse

from mgmtta.experiment import ExperimentConfig
from mgmtta.sweeps import alpha_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--points", type=int, default=21)
    args = ap.parse_args()
    cfg = ExperimentConfig(n=args.n, seeds=tuple(range(args.seeds)))
    print("alpha,accuracy,flipped_fraction")
    for p in alpha_sweep(cfg, n_alpha=args.points):
        print(f"{p.alpha:.3f},{p.accuracy:.4f},{p.flipped_fraction:.4f}")


if __name__ == "__main__":
    main()
