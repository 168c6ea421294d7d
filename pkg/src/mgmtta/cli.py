"""Command-line entry point: run, verify, sweep, gen."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, replace

import numpy as np
import yaml

from . import experiment, sweeps, verify
from .synthgen import RejectionBudgetExceeded, gen_clean_stream, sample_to_record, shift_stream

U64_MAX = 2**64 - 1


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer: {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgmtta", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=False):
        p.add_argument("--config", required=needs_config, help="YAML experiment config")
        p.add_argument("--seed", type=_u64, help="single seed overriding the config's seed list")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--format", choices=("table", "records"), help="report format")

    common(sub.add_parser("run", help="run an episodic experiment"), needs_config=True)
    v = sub.add_parser("verify", help="run the property suite")
    common(v)
    v.add_argument("--fail-fast", action="store_true", help="stop at the first failing check")
    s = sub.add_parser("sweep", help="fixed-gate and severity sweeps")
    common(s)
    s.add_argument("--kind", choices=("alpha", "severity", "both"), default="both")
    s.add_argument("--n-alpha", type=int, default=21)
    g = sub.add_parser("gen", help="emit a serialized shifted stream")
    common(g)
    g.add_argument("--condition", help="condition name from the config (default: first)")
    return parser


def _config(args) -> experiment.ExperimentConfig:
    cfg = experiment.load_config(args.config) if args.config else experiment.ExperimentConfig()
    if args.seed is not None:
        cfg = experiment.with_seeds(cfg, [args.seed])
    if args.format:
        cfg = replace(cfg, format=args.format)
    return cfg


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rows_text(rows: list, fmt: str, header: str = "", tag: dict | None = None) -> str:
    dicts = [{**(tag or {}), **asdict(r)} for r in rows]
    if fmt == "records":
        return "".join(json.dumps(d, sort_keys=True) + "\n" for d in dicts)
    buf = io.StringIO()
    if header:
        buf.write(header)
    if dicts:
        writer = csv.DictWriter(buf, fieldnames=list(dicts[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(dicts)
    return buf.getvalue()


def cmd_run(args) -> int:
    cfg = _config(args)
    reports = experiment.run_experiment(cfg)
    _emit(experiment.render(reports, cfg), args.out or cfg.output)
    return 0


def cmd_verify(args) -> int:
    seed = 0 if args.seed is None else args.seed
    results = verify.verify_suite(seed, stop_on_failure=args.fail_fast)
    if (args.format or "table") == "records":
        text = _rows_text(results, "records")
    else:
        text = "".join(r.line() + "\n" for r in results)
    failed = [r for r in results if not r.passed]
    text += f"{len(results) - len(failed)}/{len(results)} checks passed\n"
    _emit(text, args.out)
    if failed:
        first = failed[0]
        print(f"first failure: {first.name} (reproduce with --seed {first.seed})", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    parts = []
    if args.kind in ("alpha", "both"):
        rows = sweeps.alpha_sweep(cfg, n_alpha=args.n_alpha)
        parts.append(_rows_text(rows, cfg.format, "# alpha sweep\n", {"sweep": "alpha"}))
    if args.kind in ("severity", "both"):
        rows = sweeps.severity_sweep(cfg)
        parts.append(_rows_text(rows, cfg.format, "# severity sweep\n", {"sweep": "severity"}))
    _emit("".join(parts), args.out)
    return 0


def cmd_gen(args) -> int:
    cfg = _config(args)
    conds = {c.name: c for c in cfg.conditions}
    name = args.condition or cfg.conditions[0].name
    if name not in conds:
        raise experiment.ConfigError(f"unknown condition {name!r}; have {sorted(conds)}")
    cond = conds[name]
    lines = []
    for seed in cfg.seeds:
        clean = gen_clean_stream(
            cfg.k, cfg.n, cfg.beta_star, cfg.gamma_min, np.random.default_rng(seed), cfg.stream
        )
        stream = shift_stream(clean, cond.shift, np.random.default_rng(experiment.shift_seed(seed, name)))
        lines += [json.dumps({"seed": seed, **sample_to_record(s, cond.shift)}) + "\n" for s in stream]
    _emit("".join(lines), args.out)
    return 0


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep, "gen": cmd_gen}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (experiment.ConfigError, RejectionBudgetExceeded, ValueError, yaml.YAMLError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
