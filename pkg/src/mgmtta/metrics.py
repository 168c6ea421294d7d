"""Batch-level diagnostics for adapted posteriors."""

from __future__ import annotations

import numpy as np

from . import simplex


def majorization_ratio(adapted, shifted, tol: float = simplex.MAJORIZATION_TOL) -> float:
    """Fraction of pairs where the adapted posterior majorizes the shifted one."""
    adapted = np.atleast_2d(np.asarray(adapted, dtype=float))
    shifted = np.atleast_2d(np.asarray(shifted, dtype=float))
    if adapted.shape != shifted.shape:
        raise ValueError(f"length mismatch: {adapted.shape} vs {shifted.shape}")
    if len(adapted) == 0:
        raise ValueError("empty input")
    su = np.cumsum(simplex.sorted_desc(adapted), axis=1)
    sv = np.cumsum(simplex.sorted_desc(shifted), axis=1)
    return float(np.all(su >= sv - tol, axis=1).mean())


def collapse_stat(batch) -> float:
    """1 - H(batch mean) / ln K: 0 for a uniform marginal, 1 for a single class."""
    batch = np.atleast_2d(np.asarray(batch, dtype=float))
    if batch.shape[0] == 0:
        raise ValueError("empty batch")
    k = batch.shape[1]
    h = float(simplex.entropy_rows(batch.mean(axis=0)))
    return float(np.clip(1.0 - h / np.log(k), 0.0, 1.0))


def dist_to_permutation_rows(p) -> np.ndarray:
    return 1.0 - np.asarray(p, dtype=float).max(axis=1)
