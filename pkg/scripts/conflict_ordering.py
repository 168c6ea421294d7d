"""Baseline ordering in the conflicting, high-textual-severity regime.

Exits 1 unless mg_mtta beats source-only, entropy-only stays within 0.5
points of source-only, and mg_mtta leads entropy-only by 3 points.
"""

import argparse
import sys
from pathlib import Path

from mgmtta.experiment import load_config, render, run_experiment

DEFAULT = Path(__file__).resolve().parents[1] / "configs" / "conflict_text_L5.yaml"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(DEFAULT))
    args = ap.parse_args()
    cfg = load_config(args.config)
    reports = run_experiment(cfg)
    sys.stdout.write(render(reports, cfg, "table"))
    acc = {r.method: r.top1_accuracy for r in reports}
    mg, src, ent = acc["mg_mtta"], acc["source_only"], acc["entropy_only"]
    ok = mg > src and ent <= src + 0.005 and mg - ent >= 0.03
    print(f"ordering {'holds' if ok else 'FAILS'}: mg-ent = {100 * (mg - ent):.2f} points")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
