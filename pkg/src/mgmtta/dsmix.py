"""Doubly stochastic mixing operators.

Builders for doubly stochastic matrices (Sinkhorn scaling, random Birkhoff
combinations, the identity/uniform blend), the mixing map ``D @ pi + r`` and
an L1 fit of a posterior by mixtures of a fixed anchor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression

from .simplex import as_posterior

DS_ATOL = 1e-8


class InvalidResidualError(ValueError):
    pass


@dataclass(frozen=True)
class SinkhornResult:
    matrix: np.ndarray
    iterations: int
    converged: bool


@dataclass(frozen=True)
class DsFitResult:
    residual: float
    iterations: int
    converged: bool
    fitted: np.ndarray


def is_doubly_stochastic(d, atol: float = DS_ATOL) -> bool:
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        return False
    return bool(
        np.all(d >= 0)
        and np.allclose(d.sum(axis=0), 1.0, rtol=0, atol=atol)
        and np.allclose(d.sum(axis=1), 1.0, rtol=0, atol=atol)
    )


def as_doubly_stochastic(d, atol: float = DS_ATOL) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if not is_doubly_stochastic(d, atol):
        raise ValueError("matrix is not doubly stochastic")
    return d


def _marginal_error(d: np.ndarray) -> float:
    return max(np.abs(d.sum(axis=0) - 1).max(), np.abs(d.sum(axis=1) - 1).max())


def sinkhorn_project(m, tol: float = 1e-10, max_iter: int = 500) -> SinkhornResult:
    """Alternate row and column normalization of a positive matrix."""
    d = np.array(m, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("sinkhorn_project needs a square matrix")
    if np.any(d < 0):
        raise ValueError("sinkhorn_project needs nonnegative entries")
    it = 0
    err = _marginal_error(d)
    while err >= tol and it < max_iter:
        d /= d.sum(axis=1, keepdims=True)
        d /= d.sum(axis=0, keepdims=True)
        it += 1
        err = _marginal_error(d)
    return SinkhornResult(d, it, bool(err < tol))


def permutation_matrix(perm) -> np.ndarray:
    """Matrix P with (P @ x)[perm[i]] = x[i]."""
    perm = np.asarray(perm)
    k = perm.size
    p = np.zeros((k, k))
    p[perm, np.arange(k)] = 1.0
    return p


def random_birkhoff(k: int, n_perms: int, rng: np.random.Generator) -> np.ndarray:
    """Dirichlet(1)-weighted combination of uniformly random permutation matrices."""
    if k < 2 or n_perms < 1:
        raise ValueError("need k >= 2 and n_perms >= 1")
    weights = rng.dirichlet(np.ones(n_perms))
    d = np.zeros((k, k))
    for w in weights:
        d += w * permutation_matrix(rng.permutation(k))
    return d


def blend_identity_uniform(k: int, s: float) -> np.ndarray:
    """(1 - s) I + s J / K: identity at s=0, full averaging at s=1."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("mixing strength must lie in [0, 1]")
    return (1.0 - s) * np.eye(k) + s * np.full((k, k), 1.0 / k)


def apply_mixing(d, pi, residual=None) -> np.ndarray:
    """Shifted posterior D @ pi + r, clipped at zero and renormalized.

    The residual must be mass preserving (sum zero). Raises
    InvalidResidualError if clipping would move more than 1e-6 of mass.
    """
    d = as_doubly_stochastic(d)
    pi = as_posterior(pi)
    if d.shape[0] != pi.size:
        raise ValueError("mixing matrix and posterior dimensions differ")
    out = d @ pi
    if residual is not None:
        r = np.asarray(residual, dtype=float)
        if r.shape != pi.shape:
            raise ValueError("residual must have the posterior's shape")
        if abs(r.sum()) > 1e-9:
            raise InvalidResidualError(f"residual sums to {r.sum():.3g}, not 0")
        out = out + r
    out = np.maximum(out, 0.0)
    mass = out.sum()
    if abs(mass - 1.0) > 1e-6:
        raise InvalidResidualError(f"clipping changed mass to {mass:.9f}")
    # leave exact images (e.g. the identity) untouched
    return out if abs(mass - 1.0) <= 8 * np.finfo(float).eps else out / mass


def project_simplex_rows(y: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    k = y.shape[1]
    u = -np.sort(-y, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    idx = np.arange(1, k + 1)
    cond = u - css / idx > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(y.shape[0]), rho] / (rho + 1)
    return np.maximum(y - theta[:, None], 0.0)


def project_birkhoff(y, tol: float = 1e-10, max_iter: int = 1000) -> np.ndarray:
    """Euclidean projection onto the Birkhoff polytope by Dykstra's method.

    Alternates projections onto {rows in the simplex} and
    {columns in the simplex}; the correction terms make the limit the
    projection onto the intersection rather than just a feasible point.
    """
    x = np.array(y, dtype=float)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(max_iter):
        r = project_simplex_rows(x + p)
        p = x + p - r
        x_new = project_simplex_rows((r + q).T).T
        q = r + q - x_new
        delta = np.abs(x_new - x).max()
        x = x_new
        if delta < tol and np.abs(x.sum(axis=1) - 1).max() < tol:
            break
    return x


def project_permutohedron(z, anchor) -> np.ndarray:
    """Euclidean projection onto the convex hull of all permutations of `anchor`.

    This hull is exactly {D @ anchor : D doubly stochastic}. The projection
    reduces to a decreasing isotonic regression on the sorted coordinates.
    """
    z = np.asarray(z, dtype=float)
    order = np.argsort(-z, kind="stable")
    w = np.sort(np.asarray(anchor, dtype=float))[::-1]
    shift = isotonic_regression(z[order] - w, increasing=False).x
    out = np.empty_like(z)
    out[order] = z[order] - shift
    return out


def ds_fit_residual(
    p,
    anchor,
    max_iter: int = 500,
    step: float = 0.5,
    method: str = "permutohedron",
    atol: float = 1e-12,
) -> DsFitResult:
    """min over doubly stochastic D of ||p - D @ anchor||_1, approximately.

    Projected subgradient descent from the uniform point (uniform matrix).
    The step is ``step / sqrt(t)`` capped by the Polyak step toward zero,
    which is a valid lower bound for the objective. Returns the best value
    seen.

    ``method="permutohedron"`` iterates on ``v = D @ anchor`` directly with an
    exact projection. ``method="birkhoff"`` iterates on D itself with
    Dykstra projections; it is much slower and converges poorly when p sits
    on the boundary of the reachable set.
    """
    p = as_posterior(p)
    anchor = as_posterior(anchor)
    if p.shape != anchor.shape:
        raise ValueError("p and anchor dimensions differ")
    if method not in ("permutohedron", "birkhoff"):
        raise ValueError(f"unknown method {method!r}")
    k = p.size
    if method == "birkhoff":
        x = np.full((k, k), 1.0 / k)
    else:
        x = np.full(k, 1.0 / k)

    def image(x):
        return x @ anchor if x.ndim == 2 else x

    best = float(np.abs(p - image(x)).sum())
    best_x = x
    # D = I is feasible too; scoring it makes p == anchor exact
    f_id = float(np.abs(p - anchor).sum())
    if f_id < best:
        best, best_x = f_id, (np.eye(k) if method == "birkhoff" else anchor.copy())
    history = [best]
    it = 0
    for it in range(1, max_iter + 1):
        gap = p - image(x)
        f = float(np.abs(gap).sum())
        if f < best:
            best, best_x = f, x
        history.append(best)
        if best <= atol:
            break
        g = -np.sign(gap)
        if method == "birkhoff":
            g = np.outer(g, anchor)
        gnorm2 = float((g * g).sum())
        if gnorm2 == 0.0:
            break
        eta = min(step / np.sqrt(it), f / gnorm2)
        if method == "birkhoff":
            x = project_birkhoff(x - eta * g)
        else:
            x = project_permutohedron(x - eta * g, anchor)
    f = float(np.abs(p - image(x)).sum())
    if f < best:
        best, best_x = f, x
    tail = history[-max(len(history) // 10, 1) :]
    converged = best <= atol or (tail[0] - best) <= 1e-6 * max(best, 1.0)
    return DsFitResult(min(best, 2.0), it, bool(converged), image(best_x))
