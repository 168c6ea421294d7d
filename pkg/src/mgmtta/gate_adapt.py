"""Gated logit fusion and its test-time adaptation objective.

The gate is affine in five per-sample reliability features followed by a
logistic squashing. The objective combines fused-posterior entropy, a KL
pull of the gate toward the reliability prior and a batch diversity term.
Gradients are written out by hand; see ``loss_and_grad``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit, logsumexp

from . import simplex
from .reliability import ConflictParams, GatePrior, ModalityAnchor, gate_prior, rho_proxy_rows

FEATURE_NAMES = ("rho_v", "rho_t", "kappa", "h_v", "h_t")
N_FEATURES = len(FEATURE_NAMES)
MODES = ("source_only", "entropy_only", "entropy_div", "mg_mtta")
PRIOR_FLOOR = simplex.PROB_FLOOR


@dataclass
class GateParams:
    weights: np.ndarray = field(default_factory=lambda: np.zeros(N_FEATURES))
    bias: float = 0.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).copy()
        self.bias = float(self.bias)
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise ValueError("gate parameters must be finite")

    @classmethod
    def zeros(cls, n_features: int = N_FEATURES) -> "GateParams":
        return cls(np.zeros(n_features), 0.0)

    def to_vector(self) -> np.ndarray:
        return np.append(self.weights, self.bias)

    @classmethod
    def from_vector(cls, theta) -> "GateParams":
        theta = np.asarray(theta, dtype=float)
        return cls(theta[:-1], theta[-1])


@dataclass(frozen=True)
class GateFeatures:
    rho_v: float | np.ndarray
    rho_t: float | np.ndarray
    kappa: float | np.ndarray
    h_v: float | np.ndarray
    h_t: float | np.ndarray

    def as_array(self) -> np.ndarray:
        """(B, 5) array, or (5,) for a single sample."""
        return np.stack(
            [np.asarray(getattr(self, name), dtype=float) for name in FEATURE_NAMES], axis=-1
        )


@dataclass(frozen=True)
class AdaptConfig:
    lambda_g: float = 0.1
    lambda_d: float = 0.01
    lambda_c: float = 0.25
    lambda_r: float = 1.0
    tau: float = 5.0
    eta: float = 0.7
    mu: float = 0.9
    lr: float = 1e-3
    steps: int = 2
    batch_size: int = 64
    mode: str = "mg_mtta"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.lr < 0 or self.steps < 1 or self.batch_size < 1:
            raise ValueError("need lr >= 0, steps >= 1, batch_size >= 1")
        for name in ("lambda_g", "lambda_d", "lambda_c", "lambda_r"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    def loss_weights(self) -> tuple[float, float]:
        """(lambda_g, lambda_d) after switching off the terms a mode does not use."""
        if self.mode in ("source_only", "entropy_only"):
            return 0.0, 0.0
        if self.mode == "entropy_div":
            return 0.0, self.lambda_d
        return self.lambda_g, self.lambda_d

    def conflict_params(self) -> ConflictParams:
        return ConflictParams(lambda_r=self.lambda_r, lambda_c=self.lambda_c, tau=self.tau)


@dataclass(frozen=True)
class LossBreakdown:
    l_ent: float
    l_gate: float
    l_div: float
    total: float


@dataclass(frozen=True)
class Batch:
    """Logits of both streams plus the gate features, one row per sample."""

    z_v: np.ndarray
    z_t: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        if self.z_v.shape != self.z_t.shape:
            raise simplex.DimensionMismatchError("visual and textual logits differ in shape")
        if len(self.z_v) == 0:
            raise ValueError("empty batch")
        if self.features.shape != (len(self.z_v), N_FEATURES):
            raise ValueError("features must have shape (B, 5)")

    def __len__(self) -> int:
        return len(self.z_v)


def gate_alpha(params: GateParams, features) -> float | np.ndarray:
    f = features.as_array() if isinstance(features, GateFeatures) else np.asarray(features)
    s = f @ params.weights + params.bias
    return float(expit(s)) if np.ndim(s) == 0 else expit(s)


def fuse_logits(alpha, z_v, z_t) -> np.ndarray:
    """softmax(alpha * z_v + (1 - alpha) * z_t), row-wise for 2-d input."""
    z_v = np.asarray(z_v, dtype=float)
    z_t = np.asarray(z_t, dtype=float)
    if z_v.shape != z_t.shape:
        raise simplex.DimensionMismatchError("logit vectors differ in shape")
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0) or np.any(alpha > 1):
        raise ValueError("alpha must lie in [0, 1]")
    if z_v.ndim == 2:
        alpha = np.broadcast_to(alpha, (len(z_v),))[:, None]
    return simplex.softmax_rows(alpha * z_v + (1.0 - alpha) * z_t)


def fuse_probs(alpha: float, p_v, p_t) -> np.ndarray:
    p_v = simplex.as_posterior(p_v)
    p_t = simplex.as_posterior(p_t)
    if p_v.shape != p_t.shape:
        raise simplex.DimensionMismatchError("posteriors differ in shape")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return alpha * p_v + (1.0 - alpha) * p_t


def _prior_array(priors) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(priors, GatePrior):
        a_v, a_t = np.asarray(priors.a_v, dtype=float), np.asarray(priors.a_t, dtype=float)
    else:
        a_v = np.array([p.a_v for p in priors], dtype=float)
        a_t = np.array([p.a_t for p in priors], dtype=float)
    a_v = np.maximum(np.atleast_1d(a_v), PRIOR_FLOOR)
    a_t = np.maximum(np.atleast_1d(a_t), PRIOR_FLOOR)
    total = a_v + a_t
    return a_v / total, a_t / total


def loss_and_grad(
    theta: np.ndarray,
    batch: Batch,
    priors,
    lambda_g: float,
    lambda_d: float,
    need_grad: bool = True,
) -> tuple[LossBreakdown, np.ndarray | None]:
    """Objective and its gradient with respect to theta = (weights, bias)."""
    a_v, a_t = _prior_array(priors)
    if len(a_v) != len(batch):
        raise ValueError("need one prior per sample")
    n = len(batch)
    w, b = theta[:-1], theta[-1]
    s = batch.features @ w + b
    alpha = expit(s)
    log_alpha = -np.logaddexp(0.0, -s)
    log_1m_alpha = -np.logaddexp(0.0, s)

    dz = batch.z_v - batch.z_t
    z = batch.z_t + alpha[:, None] * dz
    log_q = z - logsumexp(z, axis=1, keepdims=True)
    q = np.exp(log_q)
    h = -(q * log_q).sum(axis=1)
    l_ent = float(h.mean())

    gate_kl = alpha * (log_alpha - np.log(a_v)) + (1.0 - alpha) * (log_1m_alpha - np.log(a_t))
    l_gate = float(max(gate_kl.mean(), 0.0))

    m = q.mean(axis=0)
    l_div = -simplex.entropy_rows(m)
    l_div = float(l_div)

    total = l_ent
    if lambda_g:
        total += lambda_g * l_gate
    if lambda_d:
        total += lambda_d * l_div
    losses = LossBreakdown(l_ent, l_gate, l_div, total)
    if not need_grad:
        return losses, None

    # d/dz of the per-sample entropy: -q * (log q + H)
    g_z = -q * (log_q + h[:, None]) / n
    if lambda_d:
        log_m = np.log(m)
        g_z += lambda_d * q * (log_m - (q * log_m).sum(axis=1, keepdims=True)) / n
    g_alpha = (g_z * dz).sum(axis=1)
    if lambda_g:
        g_alpha += lambda_g * ((log_alpha - np.log(a_v)) - (log_1m_alpha - np.log(a_t))) / n
    g_s = g_alpha * alpha * (1.0 - alpha)
    grad = np.append(batch.features.T @ g_s, g_s.sum())
    return losses, grad


def batch_loss(batch: Batch, params: GateParams, priors, cfg: AdaptConfig) -> LossBreakdown:
    lg, ld = cfg.loss_weights()
    return loss_and_grad(params.to_vector(), batch, priors, lg, ld, need_grad=False)[0]


def batch_gradient(batch: Batch, params: GateParams, priors, cfg: AdaptConfig) -> GateParams:
    lg, ld = cfg.loss_weights()
    grad = loss_and_grad(params.to_vector(), batch, priors, lg, ld)[1]
    return GateParams.from_vector(grad)


@dataclass
class AdaptState:
    params: GateParams
    anchor_v: ModalityAnchor
    anchor_t: ModalityAnchor

    @classmethod
    def fresh(cls, k: int, cfg: AdaptConfig = AdaptConfig()) -> "AdaptState":
        return cls(
            GateParams.zeros(),
            ModalityAnchor(k, momentum=cfg.mu, conf_threshold=cfg.eta),
            ModalityAnchor(k, momentum=cfg.mu, conf_threshold=cfg.eta),
        )


def reset_episode(state: AdaptState) -> AdaptState:
    """Zero the gate and forget both anchors, in place."""
    state.params = GateParams.zeros(len(state.params.weights))
    state.anchor_v.reset()
    state.anchor_t.reset()
    return state


@dataclass(frozen=True)
class AdaptResult:
    q: np.ndarray
    q_pre: np.ndarray
    alpha: np.ndarray
    prior: GatePrior
    loss_before: LossBreakdown
    loss_after: LossBreakdown


def batch_features(p_v: np.ndarray, p_t: np.ndarray, state: AdaptState, cfg: AdaptConfig):
    """Gate features and reliability prior for a batch against the current anchors."""
    params = cfg.conflict_params()
    rho_v = rho_proxy_rows(p_v, state.anchor_v)
    rho_t = rho_proxy_rows(p_t, state.anchor_t)
    kappa = simplex.js_rows(p_v, p_t) + params.lambda_r * simplex.kendall_rows(p_v, p_t)
    feats = GateFeatures(
        rho_v, rho_t, kappa, simplex.entropy_rows(p_v), simplex.entropy_rows(p_t)
    )
    return feats, gate_prior(rho_v, rho_t, kappa, params)


def adapt_batch(
    state: AdaptState,
    p_v,
    p_t,
    cfg: AdaptConfig,
    z_v=None,
    z_t=None,
) -> AdaptResult:
    """One test-time step on a batch: refresh anchors, then `cfg.steps` GD updates.

    Returns the fused posteriors under the updated gate. In source-only mode
    nothing is updated and fusion uses a fixed weight of 0.5.
    """
    p_v = np.atleast_2d(np.asarray(p_v, dtype=float))
    p_t = np.atleast_2d(np.asarray(p_t, dtype=float))
    z_v = simplex.to_logits(p_v) if z_v is None else np.asarray(z_v, dtype=float)
    z_t = simplex.to_logits(p_t) if z_t is None else np.asarray(z_t, dtype=float)

    if cfg.mode != "source_only":
        state.anchor_v.update(p_v)
        state.anchor_t.update(p_t)
    feats, prior = batch_features(p_v, p_t, state, cfg)
    batch = Batch(z_v, z_t, feats.as_array())
    lg, ld = cfg.loss_weights()

    theta = state.params.to_vector()
    before, _ = loss_and_grad(theta, batch, prior, lg, ld, need_grad=False)
    if cfg.mode == "source_only":
        q = fuse_logits(0.5, z_v, z_t)
        return AdaptResult(q, q, np.full(len(batch), 0.5), prior, before, before)

    q_pre = fuse_logits(expit(batch.features @ theta[:-1] + theta[-1]), z_v, z_t)
    for _ in range(cfg.steps):
        _, grad = loss_and_grad(theta, batch, prior, lg, ld)
        theta = theta - cfg.lr * grad
    state.params = GateParams.from_vector(theta)
    after, _ = loss_and_grad(theta, batch, prior, lg, ld, need_grad=False)
    alpha = expit(batch.features @ theta[:-1] + theta[-1])
    return AdaptResult(fuse_logits(alpha, z_v, z_t), q_pre, alpha, prior, before, after)


def with_mode(cfg: AdaptConfig, mode: str) -> AdaptConfig:
    return replace(cfg, mode=mode)
