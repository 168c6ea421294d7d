"""Episodic experiment runner over shift conditions and adaptation methods.

Every (condition, seed) cell regenerates its stream from explicit seeds and
runs each method from a fresh state, so cells are independent and can be
executed in any order or in parallel.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
import yaml

from . import simplex
from .gate_adapt import MODES, AdaptConfig, AdaptState, adapt_batch
from .metrics import collapse_stat, dist_to_permutation_rows, majorization_ratio
from .synthgen import ShiftSpec, StreamParams, gen_clean_stream, shift_stream, stream_arrays

SOURCE = "source_only"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Condition:
    name: str
    shift: ShiftSpec = ShiftSpec()


@dataclass(frozen=True)
class ExperimentConfig:
    k: int = 10
    n: int = 2000
    beta_star: float = 0.5
    gamma_min: float = 0.1
    seeds: tuple[int, ...] = (0,)
    stream: StreamParams = StreamParams()
    conditions: tuple[Condition, ...] = (Condition("clean"),)
    methods: dict[str, AdaptConfig] = field(
        default_factory=lambda: {m: AdaptConfig(mode=m) for m in MODES}
    )
    output: str | None = None
    format: str = "records"
    workers: int = 1

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        if not self.conditions:
            raise ConfigError("at least one shift condition is required")
        if not self.seeds:
            raise ConfigError("seeds must be listed explicitly")
        names = [c.name for c in self.conditions]
        if len(set(names)) != len(names):
            raise ConfigError("condition names must be unique")
        if self.format not in ("records", "table"):
            raise ConfigError(f"unknown report format {self.format!r}")
        if self.k < 2 or self.n < 1:
            raise ConfigError("need k >= 2 and n >= 1")

    def to_dict(self) -> dict:
        return {
            "stream": {
                "k": self.k,
                "n": self.n,
                "beta_star": self.beta_star,
                "gamma_min": self.gamma_min,
                **asdict(self.stream),
            },
            "seeds": list(self.seeds),
            "conditions": [{"name": c.name, **asdict(c.shift)} for c in self.conditions],
            "methods": {name: asdict(cfg) for name, cfg in self.methods.items()},
        }

    def config_hash(self) -> str:
        """Hash of everything that affects results (not the output location)."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _adapt_config(base: dict, overrides: dict, method: str) -> AdaptConfig:
    merged = {**base, **(overrides or {})}
    merged.setdefault("mode", method)
    known = {f.name for f in fields(AdaptConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown adaptation keys for {method}: {sorted(unknown)}")
    return AdaptConfig(**merged)


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a config from the nested mapping used in YAML files.

    Missing keys fall back to the defaults; `defaults` holds adaptation
    settings shared by every method, overridden per method under `methods`.
    """
    data = dict(data or {})
    known_top = {"stream", "seeds", "conditions", "methods", "defaults", "output"}
    unknown = set(data) - known_top
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    stream = dict(data.get("stream", {}))
    sp_keys = {f.name for f in fields(StreamParams)}
    sp = StreamParams(**{k: stream.pop(k) for k in list(stream) if k in sp_keys})
    bad = set(stream) - {"k", "n", "beta_star", "gamma_min"}
    if bad:
        raise ConfigError(f"unknown stream keys: {sorted(bad)}")

    conditions = []
    for entry in data.get("conditions", [{"name": "clean"}]):
        entry = dict(entry)
        if "name" not in entry:
            raise ConfigError("every condition needs a name")
        name = entry.pop("name")
        try:
            conditions.append(Condition(name, ShiftSpec(**entry)))
        except TypeError as exc:
            raise ConfigError(f"condition {name}: {exc}") from None

    base = dict(data.get("defaults", {}))
    methods_raw = data.get("methods", {m: {} for m in MODES})
    if isinstance(methods_raw, list):
        methods_raw = {m: {} for m in methods_raw}
    methods = {name: _adapt_config(base, over, name) for name, over in methods_raw.items()}

    out = data.get("output", {}) or {}
    seeds = data.get("seeds", [0])
    if isinstance(seeds, int):
        seeds = [seeds]
    return ExperimentConfig(
        seeds=tuple(int(s) for s in seeds),
        stream=sp,
        conditions=tuple(conditions),
        methods=methods,
        output=out.get("path"),
        format=out.get("format", "records"),
        **stream,
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(yaml.safe_load(fh))


@dataclass(frozen=True)
class ConditionReport:
    method: str
    condition: str
    top1_accuracy: float
    delta_vs_source: float
    mean_entropy_pre: float
    mean_entropy_post: float
    majorization_ratio: float
    dist_to_perm_mean: float
    collapse: float
    n_samples: int


@dataclass(frozen=True)
class CellResult:
    """Per-(condition, seed, method) statistics before averaging over seeds."""

    condition: str
    seed: int
    method: str
    accuracy: float
    entropy_pre: float
    entropy_post: float
    majorization_ratio: float
    dist_to_perm: float
    collapse: float
    n: int


def shift_seed(seed: int, condition: str) -> np.random.SeedSequence:
    """Seed for a condition's shift noise, independent of condition order."""
    return np.random.SeedSequence([seed, zlib.crc32(condition.encode())])


def make_stream(cfg: ExperimentConfig, condition: Condition, seed: int) -> dict[str, np.ndarray]:
    clean = gen_clean_stream(
        cfg.k, cfg.n, cfg.beta_star, cfg.gamma_min, np.random.default_rng(seed), cfg.stream
    )
    rng = np.random.default_rng(shift_seed(seed, condition.name))
    return stream_arrays(shift_stream(clean, condition.shift, rng))


def run_episode(arrays: dict[str, np.ndarray], acfg: AdaptConfig, k: int) -> dict[str, float]:
    """Stream one condition through a fresh adaptation state."""
    state = AdaptState.fresh(k, acfg)
    n = len(arrays["label"])
    correct = 0
    h_pre, h_post, major, dist, collapse = [], [], [], [], []
    for start in range(0, n, acfg.batch_size):
        sl = slice(start, start + acfg.batch_size)
        res = adapt_batch(
            state, arrays["p_v"][sl], arrays["p_t"][sl], acfg, arrays["z_v"][sl], arrays["z_t"][sl]
        )
        # frozen fused posterior: the fixed alpha = 0.5 fusion
        frozen = simplex.softmax_rows(0.5 * arrays["z_v"][sl] + 0.5 * arrays["z_t"][sl])
        correct += int((res.q.argmax(axis=1) == arrays["label"][sl]).sum())
        h_pre.append(simplex.entropy_rows(frozen))
        h_post.append(simplex.entropy_rows(res.q))
        major.append(majorization_ratio(res.q, frozen) * len(res.q))
        dist.append(dist_to_permutation_rows(res.q))
        collapse.append(collapse_stat(res.q))
    return {
        "accuracy": correct / n,
        "entropy_pre": float(np.concatenate(h_pre).mean()),
        "entropy_post": float(np.concatenate(h_post).mean()),
        "majorization_ratio": float(sum(major) / n),
        "dist_to_perm": float(np.concatenate(dist).mean()),
        "collapse": float(np.mean(collapse)),
    }


def run_cell(cfg: ExperimentConfig, condition: Condition, seed: int) -> list[CellResult]:
    arrays = make_stream(cfg, condition, seed)
    methods = dict(cfg.methods)
    if SOURCE not in methods:
        methods[SOURCE] = AdaptConfig(mode=SOURCE)
    out = []
    for name, acfg in methods.items():
        stats = run_episode(arrays, acfg, cfg.k)
        out.append(CellResult(condition.name, seed, name, n=cfg.n, **stats))
    return out


def _run_cell_args(args):
    return run_cell(*args)


def aggregate(cfg: ExperimentConfig, cells: list[CellResult]) -> list[ConditionReport]:
    by_key = {(c.condition, c.seed, c.method): c for c in cells}
    reports = []
    for cond in sorted(c.name for c in cfg.conditions):
        for method in sorted(set(cfg.methods) | {SOURCE}):
            rows = [by_key[(cond, s, method)] for s in cfg.seeds]
            src = [by_key[(cond, s, SOURCE)] for s in cfg.seeds]
            delta = np.mean([r.accuracy - b.accuracy for r, b in zip(rows, src)])
            reports.append(
                ConditionReport(
                    method=method,
                    condition=cond,
                    top1_accuracy=float(np.mean([r.accuracy for r in rows])),
                    delta_vs_source=0.0 if method == SOURCE else float(delta),
                    mean_entropy_pre=float(np.mean([r.entropy_pre for r in rows])),
                    mean_entropy_post=float(np.mean([r.entropy_post for r in rows])),
                    majorization_ratio=float(np.mean([r.majorization_ratio for r in rows])),
                    dist_to_perm_mean=float(np.mean([r.dist_to_perm for r in rows])),
                    collapse=float(np.mean([r.collapse for r in rows])),
                    n_samples=sum(r.n for r in rows),
                )
            )
    return reports


def run_experiment(cfg: ExperimentConfig) -> list[ConditionReport]:
    jobs = [(cfg, cond, seed) for cond in cfg.conditions for seed in cfg.seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_cell_args, jobs))
    else:
        results = [run_cell(*job) for job in jobs]
    cells = [c for cell in results for c in cell]
    return aggregate(cfg, cells)


def format_records(reports: list[ConditionReport], config_hash: str) -> str:
    lines = [json.dumps({"config_hash": config_hash, **asdict(r)}, sort_keys=True) for r in reports]
    return "\n".join(lines) + "\n"


def format_table(reports: list[ConditionReport], config_hash: str) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash}\n")
    names = [f.name for f in fields(ConditionReport)]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for r in reports:
        row = asdict(r)
        writer.writerow(
            [f"{row[k]:.6f}" if isinstance(row[k], float) else row[k] for k in names]
        )
    return buf.getvalue()


def render(reports: list[ConditionReport], cfg: ExperimentConfig, fmt: str | None = None) -> str:
    fmt = fmt or cfg.format
    if fmt == "records":
        return format_records(reports, cfg.config_hash())
    if fmt == "table":
        return format_table(reports, cfg.config_hash())
    raise ConfigError(f"unknown report format {fmt!r}")


def with_seeds(cfg: ExperimentConfig, seeds) -> ExperimentConfig:
    return replace(cfg, seeds=tuple(seeds))
