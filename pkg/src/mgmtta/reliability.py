"""Running modality anchors, reliability proxies and the gate prior."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import simplex


class UninitializedAnchorError(RuntimeError):
    pass


@dataclass
class ModalityAnchor:
    """EMA of the mean posterior over confident samples of one modality."""

    k: int
    momentum: float = 0.9
    conf_threshold: float = 0.7
    probs: np.ndarray = field(default=None)
    initialized: bool = False

    def __post_init__(self):
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if not 0.0 < self.conf_threshold <= 1.0:
            raise ValueError("confidence threshold must lie in (0, 1]")
        if self.probs is None:
            self.probs = np.full(self.k, 1.0 / self.k)
        else:
            self.probs = simplex.as_posterior(self.probs).copy()

    def update(self, batch) -> "ModalityAnchor":
        """Fold the confident part of `batch` into the anchor, in place.

        Samples whose top probability reaches the threshold are averaged;
        the first confident batch replaces the anchor outright.
        """
        batch = np.atleast_2d(np.asarray(batch, dtype=float))
        if batch.shape[0] == 0:
            raise ValueError("empty batch")
        confident = batch[batch.max(axis=1) >= self.conf_threshold]
        if len(confident) == 0:
            return self
        mean = confident.mean(axis=0)
        if self.initialized:
            new = self.momentum * self.probs + (1.0 - self.momentum) * mean
        else:
            new = mean
            self.initialized = True
        self.probs = new / new.sum()
        return self

    def reset(self) -> None:
        self.probs = np.full(self.k, 1.0 / self.k)
        self.initialized = False


def update_anchor(anchor: ModalityAnchor, batch) -> ModalityAnchor:
    return anchor.update(batch)


@dataclass(frozen=True)
class ConflictParams:
    lambda_r: float = 1.0
    lambda_c: float = 0.25
    tau: float = 5.0

    def __post_init__(self):
        if self.lambda_r < 0 or self.lambda_c < 0:
            raise ValueError("conflict weights must be nonnegative")
        if self.tau <= 0:
            raise ValueError("tau must be positive")


@dataclass(frozen=True)
class GatePrior:
    """Prior fusion weights on the visual and textual streams.

    Fields are floats for a single sample or arrays for a batch.
    """

    a_v: float | np.ndarray
    a_t: float | np.ndarray


def rho_proxy(p, anchor: ModalityAnchor, strict: bool = False) -> float:
    """L1 distance between the sorted profiles of `p` and the anchor.

    An uninitialized anchor yields 0 (neutral) unless `strict` is set.
    """
    p = simplex.as_posterior(p)
    if p.size != anchor.k:
        raise simplex.DimensionMismatchError("posterior and anchor dimensions differ")
    if not anchor.initialized:
        if strict:
            raise UninitializedAnchorError("anchor has not seen a confident sample")
        return 0.0
    return float(np.abs(simplex.sorted_desc(p) - simplex.sorted_desc(anchor.probs)).sum())


def rho_proxy_rows(p: np.ndarray, anchor: ModalityAnchor) -> np.ndarray:
    p = np.atleast_2d(np.asarray(p, dtype=float))
    if not anchor.initialized:
        return np.zeros(len(p))
    return np.abs(simplex.sorted_desc(p) - simplex.sorted_desc(anchor.probs)).sum(axis=1)


def conflict_score(p_v, p_t, params: ConflictParams = ConflictParams()) -> float:
    """JS divergence plus lambda_r times the normalized Kendall disagreement."""
    return simplex.js(p_v, p_t) + params.lambda_r * simplex.kendall_disagreement(p_v, p_t)


def conflict_direction(rho_v, rho_t):
    """+1 when the visual stream drifts more, -1 when the textual one does."""
    return np.sign(np.asarray(rho_v, dtype=float) - np.asarray(rho_t, dtype=float))


def prior_logits(rho_v, rho_t, kappa, params: ConflictParams = ConflictParams()):
    rho_v = np.asarray(rho_v, dtype=float)
    rho_t = np.asarray(rho_t, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    d = conflict_direction(rho_v, rho_t)
    ell_v = -params.tau * rho_v - params.lambda_c * kappa * d
    ell_t = -params.tau * rho_t + params.lambda_c * kappa * d
    return ell_v, ell_t


def gate_prior(rho_v, rho_t, kappa, params: ConflictParams = ConflictParams()) -> GatePrior:
    """Two-way softmax over reliability logits with the conflict correction."""
    ell_v, ell_t = prior_logits(rho_v, rho_t, kappa, params)
    diff = ell_v - ell_t
    a_v = expit(diff)
    a_t = expit(-diff)
    if np.ndim(a_v) == 0:
        return GatePrior(float(a_v), float(a_t))
    return GatePrior(a_v, a_t)
