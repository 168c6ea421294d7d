"""Fixed-gate and severity sweeps over synthetic streams."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import simplex
from .experiment import SOURCE, Condition, ExperimentConfig, make_stream, run_episode
from .gate_adapt import AdaptConfig
from .synthgen import SEVERITY_MIXING, ShiftSpec
from .theory import PreconditionError, failure_threshold


@dataclass(frozen=True)
class AlphaPoint:
    alpha: float
    accuracy: float
    flipped_fraction: float
    n_samples: int


@dataclass(frozen=True)
class SeverityPoint:
    level: int
    mixing: float
    accuracy: float
    mean_entropy: float
    n_samples: int


CONFLICT = Condition("text_L5_conflict", ShiftSpec(textual_severity=5, conflicting=True))


def _threshold_or_none(p_v, p_t, c, j):
    try:
        return failure_threshold(p_v, p_t, c, j)
    except PreconditionError:
        return None


def alpha_sweep(
    cfg: ExperimentConfig, condition: Condition = CONFLICT, n_alpha: int = 21
) -> list[AlphaPoint]:
    """Accuracy of probability-level fusion at fixed alpha.

    `flipped_fraction` counts samples whose clean top class loses to the
    runner-up at this alpha, as predicted by the closed-form threshold.
    """
    alphas = np.linspace(0.0, 1.0, n_alpha)
    correct = np.zeros(n_alpha)
    flipped = np.zeros(n_alpha)
    total = 0
    for seed in cfg.seeds:
        arr = make_stream(cfg, condition, seed)
        labels = arr["label"]
        top2 = np.argsort(-arr["pi_f"], axis=1, kind="stable")[:, :2]
        th = [_threshold_or_none(pv, pt, c, j) for pv, pt, (c, j) in zip(arr["p_v"], arr["p_t"], top2)]
        for i, a in enumerate(alphas):
            fused = a * arr["p_v"] + (1 - a) * arr["p_t"]
            correct[i] += int((fused.argmax(axis=1) == labels).sum())
            flipped[i] += sum(int(t.flips(a)) for t in th if t is not None)
        total += len(labels)
    return [
        AlphaPoint(float(a), float(c / total), float(f / total), total)
        for a, c, f in zip(alphas, correct, flipped)
    ]


def severity_sweep(cfg: ExperimentConfig, modality: str = "textual") -> list[SeverityPoint]:
    """Source-only accuracy and fused entropy at each severity level."""
    if modality not in ("textual", "visual"):
        raise ValueError("modality must be 'textual' or 'visual'")
    src = AdaptConfig(mode=SOURCE)
    out = []
    for level, mix in enumerate(SEVERITY_MIXING):
        spec = ShiftSpec(**{f"{modality}_severity": level})
        cond = Condition(f"{modality}_L{level}", spec)
        acc, ent = [], []
        for seed in cfg.seeds:
            stats = run_episode(make_stream(cfg, cond, seed), src, cfg.k)
            acc.append(stats["accuracy"])
            ent.append(stats["entropy_post"])
        out.append(
            SeverityPoint(level, mix, float(np.mean(acc)), float(np.mean(ent)), cfg.n * len(cfg.seeds))
        )
    return out


def source_accuracy_ladder(cfg: ExperimentConfig) -> list[float]:
    return [p.accuracy for p in severity_sweep(cfg)]


def clean_fusion_accuracy(cfg: ExperimentConfig, seed: int) -> float:
    """Accuracy of alpha = 0.5 logit fusion on the unshifted stream."""
    arr = make_stream(replace(cfg, conditions=(Condition("clean"),)), Condition("clean"), seed)
    q = simplex.softmax_rows(0.5 * arr["z_v"] + 0.5 * arr["z_t"])
    return float((q.argmax(axis=1) == arr["label"]).mean())
