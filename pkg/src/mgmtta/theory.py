"""Executable checks of the demixing guarantees.

Each checker computes the hypotheses and conclusions independently and
raises TheoremViolation if the hypotheses hold while a conclusion fails.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import simplex
from .dsmix import apply_mixing, blend_identity_uniform, random_birkhoff

ENTROPY_TOL = 1e-9


class TheoremViolation(AssertionError):
    pass


class NonSeparableWarning(UserWarning):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class DemixingVerdict:
    cond_majorize: bool
    cond_top2_order: bool
    cond_margin: bool
    entropy_reduced: bool
    argmax_preserved: bool
    separable: bool = True

    @property
    def hypotheses_hold(self) -> bool:
        return self.cond_majorize and self.cond_top2_order and self.cond_margin

    @property
    def conclusions_hold(self) -> bool:
        return self.entropy_reduced and self.argmax_preserved


@dataclass(frozen=True)
class DominanceThreshold:
    threshold: float
    class_c: int
    class_j: int
    delta_v: float
    delta_t: float

    def fused_margin(self, alpha):
        """q_c - q_j under probability-level fusion with weight alpha."""
        return alpha * self.delta_v + (1.0 - alpha) * self.delta_t

    def flips(self, alpha: float) -> bool:
        return alpha > self.threshold


def top_two(p: np.ndarray) -> tuple[int, int] | None:
    """Indices of the two largest entries, or None on a tie at the top two."""
    order = np.argsort(-p, kind="stable")
    first, second = p[order[0]], p[order[1]]
    if first == second or (p.size > 2 and second == p[order[2]]):
        return None
    return int(order[0]), int(order[1])


def check_beneficial_demixing(q, p_shift, pi_clean, tol: float = simplex.MAJORIZATION_TOL):
    """Evaluate both sides of the demixing guarantee for one sample."""
    q = simplex.as_posterior(q)
    p_shift = simplex.as_posterior(p_shift)
    pi_clean = simplex.as_posterior(pi_clean)
    gamma, c_star = simplex.top_one_margin(pi_clean)
    separable = gamma > 0
    if not separable:
        warnings.warn("clean posterior has no top-one margin; guarantee is vacuous",
                      NonSeparableWarning, stacklevel=2)

    top_q, top_pi = top_two(q), top_two(pi_clean)
    verdict = DemixingVerdict(
        cond_majorize=simplex.majorizes(q, p_shift, tol),
        cond_top2_order=top_q is not None and top_q == top_pi,
        cond_margin=bool(np.abs(q - pi_clean).max() < gamma / 2),
        entropy_reduced=simplex.entropy(q) <= simplex.entropy(p_shift) + ENTROPY_TOL,
        argmax_preserved=int(np.argmax(q)) == c_star,
        separable=separable,
    )
    if separable and verdict.hypotheses_hold and not verdict.conclusions_hold:
        raise TheoremViolation(f"hypotheses hold but conclusions fail: {verdict}")
    return verdict


def correctness_transfer(q, pi_clean, true_label: int) -> bool:
    """If the clean fused prediction is right, the adapted one is too.

    Only asserted when argmax(pi_clean) equals the true label; otherwise the
    statement is vacuous and the adapted prediction's correctness is returned.
    """
    q = simplex.as_posterior(q)
    pi_clean = simplex.as_posterior(pi_clean)
    correct = int(np.argmax(q)) == true_label
    if int(np.argmax(pi_clean)) == true_label and not correct:
        raise TheoremViolation("clean classifier is correct but the adapted one is not")
    return correct


def failure_threshold(p_v, p_t, c: int, j: int) -> DominanceThreshold:
    """Gate weight above which convex fusion ranks j over the correct class c."""
    p_v = simplex.as_posterior(p_v)
    p_t = simplex.as_posterior(p_t)
    delta_v = float(p_v[c] - p_v[j])
    delta_t = float(p_t[c] - p_t[j])
    if not delta_v < 0 < delta_t:
        raise PreconditionError(
            f"modality margins must oppose (delta_v={delta_v:.4g}, delta_t={delta_t:.4g})"
        )
    return DominanceThreshold(delta_t / (delta_t - delta_v), c, j, delta_v, delta_t)


def locate_flip(p_v, p_t, c: int, j: int, n_points: int = 1000) -> float:
    """Sweep alpha over a uniform grid and return where the fused (c, j)
    margin first turns negative (midpoint of the bracketing grid cell).

    Raises ValueError if the sign changes more than once or never.
    """
    alphas = np.linspace(0.0, 1.0, n_points)
    p_v = np.asarray(p_v, dtype=float)
    p_t = np.asarray(p_t, dtype=float)
    fused = alphas[:, None] * p_v + (1.0 - alphas[:, None]) * p_t
    negative = fused[:, c] - fused[:, j] < 0
    changes = np.flatnonzero(negative[1:] != negative[:-1])
    if len(changes) != 1:
        raise ValueError(f"expected exactly one sign change, found {len(changes)}")
    i = changes[0]
    return 0.5 * (alphas[i] + alphas[i + 1])


def verify_entropy_increase(pi, d) -> bool:
    """Mixing by a doubly stochastic matrix never sharpens a posterior."""
    pi = simplex.as_posterior(pi)
    mixed = apply_mixing(d, pi)
    ok_major = simplex.majorizes(pi, mixed)
    ok_entropy = simplex.entropy(mixed) >= simplex.entropy(pi) - ENTROPY_TOL
    if not (ok_major and ok_entropy):
        raise TheoremViolation("doubly stochastic mixing produced a sharper posterior")
    return True


@dataclass(frozen=True)
class DemixingInstance:
    q: np.ndarray
    p_shift: np.ndarray
    pi_clean: np.ndarray
    epsilon: float


def _prefix_slack(u: np.ndarray, v: np.ndarray) -> float:
    su = np.cumsum(simplex.sorted_desc(u))[:-1]
    sv = np.cumsum(simplex.sorted_desc(v))[:-1]
    return float((su - sv).min())


def sample_demixing_instance(
    rng: np.random.Generator,
    k: int,
    gamma_min: float = 0.1,
    max_tries: int = 10_000,
) -> DemixingInstance:
    """Draw an instance that satisfies all three demixing hypotheses.

    pi has top-one margin >= gamma_min, p_shift = D @ pi for a random
    doubly stochastic D, and q moves from pi toward p_shift by less than
    both gamma/2 and the smallest prefix-sum slack between pi and p_shift.
    Every hypothesis is re-checked before the instance is returned.
    """
    for _ in range(max_tries):
        pi = rng.dirichlet(np.full(k, 0.5))
        gamma, _ = simplex.top_one_margin(pi)
        if gamma < gamma_min:
            continue
        s = rng.uniform(0.2, 0.9)
        b = rng.uniform(0.0, 0.5)
        d = (1 - b) * blend_identity_uniform(k, s) + b * random_birkhoff(k, 3, rng)
        p_shift = apply_mixing(d, pi)
        slack = _prefix_slack(pi, p_shift)
        if slack <= 1e-6:
            continue
        eps = rng.uniform(0.0, 0.99) * min(gamma / 2, slack)
        q = (1 - eps) * pi + eps * p_shift
        q = q / q.sum()
        top_q, top_pi = top_two(q), top_two(pi)
        if (
            simplex.majorizes(q, p_shift)
            and top_q is not None
            and top_q == top_pi
            and np.abs(q - pi).max() < gamma / 2
        ):
            return DemixingInstance(q, p_shift, pi, eps)
    raise RuntimeError("could not construct a hypothesis-satisfying instance")
