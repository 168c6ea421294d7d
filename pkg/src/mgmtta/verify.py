"""Property checks runnable as a single suite.

Each check takes a seed, returns a CheckResult and never raises on a
failed property; the failing instance's seed goes into `detail` so the
case can be replayed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import reliability, simplex, theory
from .dsmix import (
    blend_identity_uniform,
    ds_fit_residual,
    is_doubly_stochastic,
    random_birkhoff,
    sinkhorn_project,
)
from .gate_adapt import MODES, AdaptConfig, Batch, loss_and_grad
from .oracles import finite_difference_gradient, grid_ds_fit
from .synthgen import ShiftSpec, apply_shift, gen_clean_stream


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seed: int
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name} ({self.seconds:.2f}s, seed={self.seed}): {self.detail}"


def _timed(name, seed, fn) -> CheckResult:
    t0 = time.perf_counter()
    passed, detail = fn()
    return CheckResult(name, bool(passed), detail, seed, time.perf_counter() - t0)


def random_ds_matrix(rng: np.random.Generator, k: int) -> np.ndarray:
    """A doubly stochastic matrix from one of three generators, chosen at random."""
    kind = rng.integers(3)
    if kind == 0:
        return random_birkhoff(k, int(rng.integers(1, 6)), rng)
    if kind == 1:
        return sinkhorn_project(rng.uniform(0.01, 1.0, (k, k)), tol=1e-12, max_iter=10_000).matrix
    return blend_identity_uniform(k, rng.uniform())


def check_entropy_increase(seed: int = 0, n: int = 1000) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        for i in range(n):
            k = int(rng.integers(2, 12))
            u = rng.dirichlet(np.full(k, rng.choice([0.1, 0.5, 1.0, 5.0])))
            d = random_ds_matrix(rng, k)
            du = d @ u
            du = du / du.sum()
            if not (
                simplex.majorizes(u, du)
                and simplex.entropy(du) >= simplex.entropy(u) - theory.ENTROPY_TOL
            ):
                return False, f"instance {i} violates u >= Du"
        return True, f"{n}/{n} pairs satisfy u >= Du and H(Du) >= H(u)"

    return _timed("entropy_increase_under_mixing", seed, run)


def check_beneficial_demixing(seed: int = 0, n: int = 10_000) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        ok = 0
        for i in range(n):
            k = int(rng.integers(2, 11))
            inst = theory.sample_demixing_instance(rng, k)
            try:
                v = theory.check_beneficial_demixing(inst.q, inst.p_shift, inst.pi_clean)
                theory.correctness_transfer(inst.q, inst.pi_clean, int(np.argmax(inst.pi_clean)))
            except theory.TheoremViolation as exc:
                return False, f"instance {i}: {exc}"
            if not v.hypotheses_hold:
                return False, f"instance {i}: generator produced a non-certified instance"
            ok += v.entropy_reduced and v.argmax_preserved
        return ok == n, f"{ok}/{n} instances reduce entropy and keep the argmax"

    return _timed("beneficial_demixing", seed, run)


def check_failure_threshold(seed: int = 0, n: int = 500, k: int = 10) -> CheckResult:
    def run():
        th = theory.failure_threshold([0.3, 0.5, 0.2], [0.5, 0.2, 0.3], 0, 1)
        if abs(th.threshold - 0.6) > 1e-12 or abs(th.fused_margin(0.7) + 0.05) > 1e-12:
            return False, f"worked instance gives {th.threshold}, {th.fused_margin(0.7)}"
        rng = np.random.default_rng(seed)
        clean = gen_clean_stream(k, n, 0.5, 0.05, rng)
        spec = ShiftSpec(textual_severity=5, conflicting=True)
        worst = 0.0
        for i, sample in enumerate(clean):
            s = apply_shift(sample, spec, rng)
            c, j = np.argsort(-sample.pi_f, kind="stable")[:2]
            th = theory.failure_threshold(s.p_v, s.p_t, c, j)
            flip = theory.locate_flip(s.p_v, s.p_t, c, j, n_points=1000)
            err = abs(flip - th.threshold)
            worst = max(worst, err)
            if err > 1e-3:
                return False, f"sample {i}: sweep {flip:.5f} vs threshold {th.threshold:.5f}"
        return True, f"{n} sweeps within {worst:.2e} of the threshold; worked case 0.6 / -0.05"

    return _timed("failure_threshold_sweep", seed, run)


def random_gate_problem(rng: np.random.Generator):
    b, k = int(rng.integers(1, 33)), int(rng.integers(2, 16))
    p_v = rng.dirichlet(np.full(k, rng.choice([0.2, 1.0])), b)
    p_t = rng.dirichlet(np.full(k, rng.choice([0.2, 1.0])), b)
    feats = np.abs(rng.normal(0, 1, (b, 5)))
    a_v = rng.uniform(0.01, 0.99, b)
    prior = reliability.GatePrior(a_v, 1 - a_v)
    batch = Batch(simplex.to_logits(p_v), simplex.to_logits(p_t), feats)
    theta = rng.normal(0, 0.5, 6)
    return batch, prior, theta


def gradient_rel_error(batch, prior, theta, cfg: AdaptConfig, h: float = 1e-5) -> float:
    lg, ld = cfg.loss_weights()
    _, g = loss_and_grad(theta, batch, prior, lg, ld)
    g_fd = finite_difference_gradient(
        lambda t: loss_and_grad(t, batch, prior, lg, ld, need_grad=False)[0].total, theta, h
    )
    scale = max(np.linalg.norm(g), np.linalg.norm(g_fd))
    return 0.0 if scale < 1e-12 else float(np.linalg.norm(g - g_fd) / scale)


def check_gradients(seed: int = 0, n: int = 100) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for i in range(n):
            cfg = AdaptConfig(mode=MODES[i % len(MODES)], lambda_g=rng.choice([0.1, 1.0]))
            err = gradient_rel_error(*random_gate_problem(rng), cfg)
            worst = max(worst, err)
            if err >= 1e-4:
                return False, f"instance {i} ({cfg.mode}): relative error {err:.2e}"
        return True, f"{n} instances across {len(MODES)} modes, worst relative error {worst:.2e}"

    return _timed("gradient_vs_finite_differences", seed, run)


def check_ds_fit(seed: int = 0, n_grid: int = 50, n_zero: int = 100) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst_grid = 0.0
        for i in range(n_grid):
            k = int(rng.integers(2, 4))
            anchor, p = rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k))
            gap = abs(ds_fit_residual(p, anchor).residual - grid_ds_fit(p, anchor))
            worst_grid = max(worst_grid, gap)
            if gap > 0.02:
                return False, f"grid instance {i}: |solver - oracle| = {gap:.4f}"
        worst_zero = 0.0
        for i in range(n_zero):
            k = int(rng.integers(2, 9))
            anchor = rng.dirichlet(np.ones(k))
            p = random_ds_matrix(rng, k) @ anchor
            r = ds_fit_residual(p / p.sum(), anchor).residual
            worst_zero = max(worst_zero, r)
            if r > 1e-3:
                return False, f"zero-residual instance {i}: solver returned {r:.2e}"
        return True, f"grid gap <= {worst_grid:.4f}, zero-residual max {worst_zero:.1e}"

    return _timed("ds_fit_vs_oracle", seed, run)


def check_sinkhorn(seed: int = 0, n: int = 100) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        most = 0
        for i in range(n):
            k = int(rng.integers(2, 30))
            res = sinkhorn_project(rng.uniform(0.01, 1.0, (k, k)), tol=1e-8, max_iter=500)
            most = max(most, res.iterations)
            if not (res.converged and is_doubly_stochastic(res.matrix, 1e-8)):
                return False, f"matrix {i} did not reach 1e-8 within 500 iterations"
        return True, f"{n} matrices projected, at most {most} iterations"

    return _timed("sinkhorn_projection", seed, run)


def conflict_direction_holds(prior_fn=reliability.gate_prior, seed: int = 0, n: int = 1000):
    """When one stream drifts more, raising the conflict score must move
    the prior further toward the other stream; equal drift ignores conflict."""
    rng = np.random.default_rng(seed)
    params = reliability.ConflictParams()
    for i in range(n):
        rho_v, rho_t = rng.uniform(0, 2, 2)
        k1, k2 = np.sort(rng.uniform(0, 1.7, 2))
        if k2 - k1 < 1e-3:
            continue
        lo, hi = prior_fn(rho_v, rho_t, k1, params), prior_fn(rho_v, rho_t, k2, params)
        if rho_v > rho_t and not hi.a_v < lo.a_v:
            return False, i
        if rho_t > rho_v and not hi.a_v > lo.a_v:
            return False, i
        tie_lo, tie_hi = prior_fn(rho_v, rho_v, k1, params), prior_fn(rho_v, rho_v, k2, params)
        if tie_lo.a_v != tie_hi.a_v:
            return False, i
    return True, n


def check_conflict_direction(seed: int = 0, prior_fn=reliability.gate_prior) -> CheckResult:
    def run():
        ok, i = conflict_direction_holds(prior_fn, seed)
        return ok, "prior moves toward the steadier stream" if ok else f"violated at draw {i}"

    return _timed("conflict_direction", seed, run)


CHECKS = (
    check_entropy_increase,
    check_beneficial_demixing,
    check_failure_threshold,
    check_gradients,
    check_ds_fit,
    check_sinkhorn,
    check_conflict_direction,
)


def verify_suite(seed: int = 0, checks=CHECKS, stop_on_failure: bool = False) -> list[CheckResult]:
    results = []
    for check in checks:
        res = check(seed=seed)
        results.append(res)
        if stop_on_failure and not res.passed:
            break
    return results
