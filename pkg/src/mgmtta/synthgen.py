"""Synthetic two-modality posterior streams under modality-specific shift.

Clean posteriors come from a shared class signal plus independent noise per
modality. Shift mixes each modality with a doubly stochastic operator whose
strength follows a six-level severity ladder.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import simplex
from .dsmix import apply_mixing, blend_identity_uniform, random_birkhoff

SEVERITY_MIXING = (0.0, 0.10, 0.25, 0.40, 0.60, 0.80)


class RejectionBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class CleanSample:
    pi_v: np.ndarray
    pi_t: np.ndarray
    beta_star: float
    pi_f: np.ndarray
    label: int
    gamma: float


@dataclass(frozen=True)
class ShiftSpec:
    visual_severity: int = 0
    textual_severity: int = 0
    residual_scale: float = 0.0
    conflicting: bool = False
    birkhoff_noise: float = 0.0
    n_perms: int = 3

    def __post_init__(self):
        for level in (self.visual_severity, self.textual_severity):
            if level not in range(len(SEVERITY_MIXING)):
                raise ValueError(f"severity level must be in 0..5, got {level}")
        if self.residual_scale < 0:
            raise ValueError("residual_scale must be nonnegative")
        if not 0.0 <= self.birkhoff_noise <= 1.0:
            raise ValueError("birkhoff_noise must lie in [0, 1]")


@dataclass(frozen=True)
class StreamSample:
    clean: CleanSample
    p_v: np.ndarray
    p_t: np.ndarray
    z_v: np.ndarray
    z_t: np.ndarray


@dataclass(frozen=True)
class StreamParams:
    """Shape of the clean-posterior generator."""

    signal: float = 2.0
    noise_v: float = 1.0
    noise_t: float = 1.0


def gen_clean_stream(
    k: int,
    n: int,
    beta_star: float = 0.5,
    gamma_min: float = 0.0,
    rng: np.random.Generator | None = None,
    params: StreamParams = StreamParams(),
    max_draws: int | None = None,
) -> list[CleanSample]:
    """Draw `n` clean samples whose fused top-one margin is at least `gamma_min`.

    Candidates are drawn in vectorized chunks and rejected on the margin.
    Raises RejectionBudgetExceeded after `max_draws` candidates (default
    max(100_000, 50 n)).
    """
    if k < 2 or n < 1:
        raise ValueError("need k >= 2 and n >= 1")
    if not 0.0 <= gamma_min <= 0.9:
        raise ValueError("gamma_min must lie in [0, 0.9]")
    if not 0.0 <= beta_star <= 1.0:
        raise ValueError("beta_star must lie in [0, 1]")
    rng = np.random.default_rng() if rng is None else rng
    budget = max(100_000, 50 * n) if max_draws is None else max_draws

    out: list[CleanSample] = []
    drawn = 0
    while len(out) < n:
        if drawn >= budget:
            raise RejectionBudgetExceeded(
                f"accepted {len(out)}/{n} samples after {drawn} draws at gamma_min={gamma_min}"
            )
        chunk = min(max(2 * (n - len(out)), 256), budget - drawn)
        drawn += chunk
        cls = rng.integers(0, k, size=chunk)
        signal = np.zeros((chunk, k))
        signal[np.arange(chunk), cls] = params.signal
        pi_v = simplex.softmax_rows(signal + params.noise_v * rng.standard_normal((chunk, k)))
        pi_t = simplex.softmax_rows(signal + params.noise_t * rng.standard_normal((chunk, k)))
        pi_f = beta_star * pi_v + (1.0 - beta_star) * pi_t
        top2 = -np.sort(-pi_f, axis=1)[:, :2]
        gamma = top2[:, 0] - top2[:, 1]
        for i in np.flatnonzero(gamma >= gamma_min)[: n - len(out)]:
            out.append(
                CleanSample(pi_v[i], pi_t[i], beta_star, pi_f[i], int(np.argmax(pi_f[i])), float(gamma[i]))
            )
    return out


def severity_to_mixing(level: int) -> float:
    if level not in range(len(SEVERITY_MIXING)):
        raise ValueError(f"severity level must be in 0..5, got {level}")
    return SEVERITY_MIXING[level]


def _zero_sum_residual(base: np.ndarray, scale: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian residual with zero sum, shrunk so base + r stays nonnegative."""
    r = scale * rng.standard_normal(base.size)
    r -= r.mean()
    neg = base + r < 0
    if np.any(neg):
        r *= np.min(base[neg] / -r[neg])
    return r


def _order_pair(p: np.ndarray, hi: int, lo: int) -> np.ndarray:
    """Swap entries so that p[hi] > p[lo]."""
    if p[hi] < p[lo]:
        p = p.copy()
        p[hi], p[lo] = p[lo], p[hi]
    return p


def _shift_modality(pi, level, spec: ShiftSpec, rng) -> np.ndarray:
    if level == 0:
        return pi.copy()
    k = pi.size
    d = blend_identity_uniform(k, severity_to_mixing(level))
    if spec.birkhoff_noise > 0:
        b = spec.birkhoff_noise
        d = (1.0 - b) * d + b * random_birkhoff(k, spec.n_perms, rng)
    base = d @ pi
    residual = _zero_sum_residual(base, spec.residual_scale, rng) if spec.residual_scale > 0 else None
    return apply_mixing(d, pi, residual)


def apply_shift(sample: CleanSample, spec: ShiftSpec, rng: np.random.Generator) -> StreamSample:
    """Shift both modalities of one clean sample.

    In conflicting mode the clean top pair (c, j) of the fused posterior is
    oriented so the visual stream prefers j and the textual stream prefers c;
    the orientation is re-imposed after mixing in case noise undid it.
    """
    pi_v, pi_t = sample.pi_v, sample.pi_t
    if spec.conflicting:
        c, j = np.argsort(-sample.pi_f, kind="stable")[:2]
        pi_v = _order_pair(pi_v, j, c)
        pi_t = _order_pair(pi_t, c, j)
    p_v = _shift_modality(pi_v, spec.visual_severity, spec, rng)
    p_t = _shift_modality(pi_t, spec.textual_severity, spec, rng)
    if spec.conflicting:
        p_v = _order_pair(p_v, j, c)
        p_t = _order_pair(p_t, c, j)
    return StreamSample(sample, p_v, p_t, simplex.to_logits(p_v), simplex.to_logits(p_t))


def shift_stream(samples, spec: ShiftSpec, rng: np.random.Generator) -> list[StreamSample]:
    return [apply_shift(s, spec, rng) for s in samples]


def stream_arrays(stream: list[StreamSample]) -> dict[str, np.ndarray]:
    """Stack a stream into (N, K) arrays plus the label vector."""
    return {
        "p_v": np.array([s.p_v for s in stream]),
        "p_t": np.array([s.p_t for s in stream]),
        "z_v": np.array([s.z_v for s in stream]),
        "z_t": np.array([s.z_t for s in stream]),
        "pi_f": np.array([s.clean.pi_f for s in stream]),
        "label": np.array([s.clean.label for s in stream]),
    }


def sample_to_record(sample: StreamSample, spec: ShiftSpec) -> dict:
    c = sample.clean
    return {
        "label": c.label,
        "beta_star": c.beta_star,
        "gamma": c.gamma,
        "pi_v": c.pi_v.tolist(),
        "pi_t": c.pi_t.tolist(),
        "pi_f": c.pi_f.tolist(),
        "p_v": sample.p_v.tolist(),
        "p_t": sample.p_t.tolist(),
        "spec": asdict(spec),
    }


def record_to_sample(record: dict) -> tuple[StreamSample, ShiftSpec]:
    clean = CleanSample(
        np.array(record["pi_v"]),
        np.array(record["pi_t"]),
        float(record["beta_star"]),
        np.array(record["pi_f"]),
        int(record["label"]),
        float(record["gamma"]),
    )
    p_v, p_t = np.array(record["p_v"]), np.array(record["p_t"])
    return StreamSample(clean, p_v, p_t, simplex.to_logits(p_v), simplex.to_logits(p_t)), ShiftSpec(**record["spec"])


def write_stream(path, stream, spec: ShiftSpec) -> None:
    with open(path, "w") as fh:
        for s in stream:
            fh.write(json.dumps(sample_to_record(s, spec)) + "\n")


def read_stream(path) -> list[tuple[StreamSample, ShiftSpec]]:
    with open(path) as fh:
        return [record_to_sample(json.loads(line)) for line in fh if line.strip()]
