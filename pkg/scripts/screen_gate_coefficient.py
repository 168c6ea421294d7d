"""Screen the gate coefficient and learning rate in the conflict regime.

Grid: lambda_g in {0, 0.1, 1.0} crossed with a few learning rates, on the
conflicting textual-L5 condition. Prints mean accuracy per cell next to
source-only and entropy-only.
"""

import argparse
import itertools

from mgmtta.experiment import Condition, ExperimentConfig, run_experiment
from mgmtta.gate_adapt import AdaptConfig
from mgmtta.synthgen import ShiftSpec


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=4)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--lrs", type=float, nargs="+", default=[5e-4, 1e-3, 2e-3, 5e-3])
    args = ap.parse_args()

    methods = {"entropy_only": AdaptConfig(mode="entropy_only")}
    for lg, lr in itertools.product((0.0, 0.1, 1.0), args.lrs):
        methods[f"mg_lg{lg}_lr{lr:g}"] = AdaptConfig(mode="mg_mtta", lambda_g=lg, lr=lr)
    cfg = ExperimentConfig(
        n=args.n,
        seeds=tuple(range(args.seeds)),
        conditions=(Condition("text_L5_conflict", ShiftSpec(textual_severity=5, conflicting=True)),),
        methods=methods,
    )
    for r in run_experiment(cfg):
        print(f"{r.method:24s} acc={r.top1_accuracy:.4f} delta={100 * r.delta_vs_source:+.2f}")


if __name__ == "__main__":
    main()
