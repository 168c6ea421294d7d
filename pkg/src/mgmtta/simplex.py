"""Arithmetic on the probability simplex.

Posteriors and logit vectors are plain 1-d numpy arrays; the helpers here
validate them at the boundary and otherwise stay out of the way. All
logarithms are natural, so entropies are in nats.
"""

from __future__ import annotations

import numpy as np

SIMPLEX_ATOL = 1e-9
PROB_FLOOR = 1e-12
MAJORIZATION_TOL = 1e-9


class DimensionMismatchError(ValueError):
    pass


class DivergenceUndefinedError(ValueError):
    pass


def as_posterior(p, atol: float = SIMPLEX_ATOL) -> np.ndarray:
    """Return `p` as a float array after checking it lies on the simplex."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValueError(f"posterior must be a 1-d vector with K >= 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError("posterior entries must be finite and nonnegative")
    if abs(p.sum() - 1.0) > atol:
        raise ValueError(f"posterior sums to {p.sum():.12g}, not 1")
    return p


def as_logits(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size < 2:
        raise ValueError(f"logits must be a 1-d vector with K >= 2, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    return z


def _same_k(p: np.ndarray, q: np.ndarray) -> None:
    if p.shape != q.shape:
        raise DimensionMismatchError(f"dimension mismatch: {p.shape} vs {q.shape}")


def entropy(p) -> float:
    """Shannon entropy in nats with the convention 0 ln 0 = 0."""
    p = as_posterior(p)
    nz = p[p > 0]
    h = -float(np.sum(nz * np.log(nz)))
    return min(max(h, 0.0), float(np.log(p.size)))


def entropy_rows(p: np.ndarray) -> np.ndarray:
    """Row-wise entropy of a (B, K) array of posteriors, unvalidated."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=-1)


def floor_and_renormalize(p, floor: float = PROB_FLOOR) -> np.ndarray:
    p = np.maximum(np.asarray(p, dtype=float), floor)
    return p / p.sum(axis=-1, keepdims=True)


def sorted_desc(p) -> np.ndarray:
    return np.sort(np.asarray(p, dtype=float), axis=-1)[..., ::-1]


def majorizes(u, v, tol: float = MAJORIZATION_TOL) -> bool:
    """True iff u majorizes v: every descending prefix sum of u dominates v's."""
    u = as_posterior(u)
    v = as_posterior(v)
    _same_k(u, v)
    su = np.cumsum(sorted_desc(u))
    sv = np.cumsum(sorted_desc(v))
    return bool(np.all(su >= sv - tol))


def kl(p, q, floor: float | None = PROB_FLOOR) -> float:
    """KL(p || q) in nats.

    With `floor` set, both arguments are clamped to at least `floor` and
    renormalized first. With `floor=None`, a hard zero in q where p > 0
    raises DivergenceUndefinedError.
    """
    p = as_posterior(p)
    q = as_posterior(q)
    _same_k(p, q)
    if floor is None:
        support = p > 0
        if np.any(q[support] == 0):
            raise DivergenceUndefinedError("q has zero mass where p is positive")
        val = float(np.sum(p[support] * np.log(p[support] / q[support])))
    else:
        p = floor_and_renormalize(p, floor)
        q = floor_and_renormalize(q, floor)
        val = float(np.sum(p * np.log(p / q)))
    return max(val, 0.0)


def js(p, q) -> float:
    """Jensen-Shannon divergence in nats, bounded by ln 2."""
    p = as_posterior(p)
    q = as_posterior(q)
    _same_k(p, q)
    m = 0.5 * (p + q)
    val = 0.5 * kl(p, m) + 0.5 * kl(q, m)
    return min(max(val, 0.0), float(np.log(2.0)))


def ranking(p) -> np.ndarray:
    """Class indices ordered by decreasing probability, ties by ascending index."""
    p = np.asarray(p, dtype=float)
    # lexsort uses the last key as primary
    return np.lexsort((np.arange(p.size), -p))


def kendall_disagreement(p, q) -> float:
    """Fraction of class pairs ordered differently by p and q."""
    p = as_posterior(p)
    q = as_posterior(q)
    _same_k(p, q)
    k = p.size
    pos_p = np.empty(k, dtype=np.int64)
    pos_q = np.empty(k, dtype=np.int64)
    pos_p[ranking(p)] = np.arange(k)
    pos_q[ranking(q)] = np.arange(k)
    iu, ju = np.triu_indices(k, 1)
    discordant = np.count_nonzero((pos_p[iu] < pos_p[ju]) != (pos_q[iu] < pos_q[ju]))
    return discordant / (k * (k - 1) / 2)


def js_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise JS divergence for (B, K) arrays, with the same flooring as `js`."""
    p = floor_and_renormalize(p)
    q = floor_and_renormalize(q)
    m = floor_and_renormalize(0.5 * (p + q))
    val = 0.5 * (p * np.log(p / m)).sum(axis=-1) + 0.5 * (q * np.log(q / m)).sum(axis=-1)
    return np.clip(val, 0.0, np.log(2.0))


def kendall_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise Kendall disagreement for (B, K) arrays."""
    p = np.atleast_2d(p)
    q = np.atleast_2d(q)
    k = p.shape[1]
    # a stable sort of -p orders ties by ascending class index
    pos_p = np.argsort(np.argsort(-p, axis=1, kind="stable"), axis=1, kind="stable")
    pos_q = np.argsort(np.argsort(-q, axis=1, kind="stable"), axis=1, kind="stable")
    iu, ju = np.triu_indices(k, 1)
    disc = (pos_p[:, iu] < pos_p[:, ju]) != (pos_q[:, iu] < pos_q[:, ju])
    return disc.sum(axis=1) / (k * (k - 1) / 2)


def to_logits(p) -> np.ndarray:
    """Log-probabilities after flooring, so that softmax(to_logits(p)) ~ p."""
    return np.log(np.maximum(np.asarray(p, dtype=float), PROB_FLOOR))


def top_one_margin(p) -> tuple[float, int]:
    """Return (p_[1] - p_[2], argmax) with the argmax tie broken by lowest index."""
    p = as_posterior(p)
    top = ranking(p)
    return float(p[top[0]] - p[top[1]]), int(top[0])


def dist_to_permutation(p) -> float:
    """Distance to the nearest vertex: 1 - max p, i.e. half the L1 gap."""
    p = as_posterior(p)
    return float(1.0 - p.max())


def softmax(z, temperature: float = 1.0) -> np.ndarray:
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    z = as_logits(z) / temperature
    e = np.exp(z - z.max())
    return e / e.sum()


def softmax_rows(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)
