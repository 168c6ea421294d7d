"""Slow, independent reference computations used by the verification suite."""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


def compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length `parts` summing to `total`."""
    if parts == 1:
        return np.array([[total]], dtype=np.int32)
    rows = []
    for first in range(total + 1):
        rest = compositions(total - first, parts - 1)
        rows.append(np.column_stack([np.full(len(rest), first, dtype=np.int32), rest]))
    return np.vstack(rows)


@lru_cache(maxsize=4)
def _grid_weights(n_vertices: int, resolution: float) -> np.ndarray:
    steps = int(round(1.0 / resolution))
    return (compositions(steps, n_vertices) / steps).astype(np.float32)


def grid_ds_fit(p, anchor, resolution: float = 0.02) -> float:
    """Grid search of ||p - D @ anchor||_1 over convex combinations of all
    K! permutation matrices. Only practical for K <= 3."""
    p = np.asarray(p, dtype=float)
    anchor = np.asarray(anchor, dtype=float)
    k = p.size
    if k > 3:
        raise ValueError("grid oracle is limited to K <= 3")
    # rows are the permuted anchors P @ anchor
    vertices = np.array([anchor[list(perm)] for perm in itertools.permutations(range(k))])
    w = _grid_weights(len(vertices), resolution)
    points = w @ vertices.astype(np.float32)
    return float(np.abs(points - p.astype(np.float32)).sum(axis=1).min())


def brute_force_dist_to_vertex(p) -> float:
    p = np.asarray(p, dtype=float)
    eye = np.eye(p.size)
    return 0.5 * min(float(np.abs(p - e).sum()) for e in eye)


def pairwise_discordance(p, q) -> float:
    """Kendall disagreement by explicit pair counting (ties by class index)."""
    k = len(p)

    def before(v, a, b):
        return v[a] > v[b] or (v[a] == v[b] and a < b)

    bad = sum(
        before(p, a, b) != before(q, a, b) for a in range(k) for b in range(a + 1, k)
    )
    return bad / (k * (k - 1) / 2)


def finite_difference_gradient(f, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        grad[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return grad
