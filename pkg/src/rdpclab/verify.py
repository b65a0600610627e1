"""The oracle battery: every closed form checked against an independent route.

Each check returns a dict with a `passed` flag and the numbers behind it, so
the CLI can emit one JSON summary and the acceptance tests can assert on the
same code path the user runs.
"""
from __future__ import annotations

import math

import numpy as np

from .instances import feasible_budgets, random_codec, random_instance, random_source
from .metrics import (
    bhattacharyya_bound,
    bhattacharyya_general,
    distortion_closed_form,
    w2_gaussian_commuting,
)
from .model import ChannelNoise, GmmSource, LinearCodec, output_distribution
from .oracle import (
    bound_chain_check,
    discrete_w2,
    gaussian_quantile_grid,
    mc_bayes_error,
    mc_distortion,
)
from .rdpco import (
    SolverConfig,
    barrier_gradients,
    barrier_objective,
    barrier_weights,
    codec_gradients,
    codec_objective,
    make_barrier_state,
)


def check_codec_gradients(instances: int = 25, seed: int = 0, h: float = 1e-5) -> dict:
    """Analytic codec gradients vs central finite differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        src, codec, noise = random_instance(rng, n=5, m=2)
        sigma_hat = np.eye(5) * rng.uniform(0.2, 1.5)
        enc, dec = codec.enc, codec.dec
        g_e, g_d = codec_gradients(enc, dec, noise, sigma_hat, src.c_n)

        def obj(e, d):
            return codec_objective(e, d, noise, sigma_hat, src.c_n)

        for grad, mat, which in ((g_e, enc, "enc"), (g_d, dec, "dec")):
            fd = np.zeros_like(mat)
            for idx in np.ndindex(mat.shape):
                bump = np.zeros_like(mat)
                bump[idx] = h
                if which == "enc":
                    fd[idx] = (obj(mat + bump, dec) - obj(mat - bump, dec)) / (2 * h)
                else:
                    fd[idx] = (obj(enc, mat + bump) - obj(enc, mat - bump)) / (2 * h)
            rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12)
            worst = max(worst, rel)
    return {"name": "codec_gradients", "worst_rel_err": float(worst), "passed": bool(worst < 1e-4)}


def check_barrier_gradients(instances: int = 25, seed: int = 1, h: float = 1e-5) -> dict:
    """Analytic barrier gradients vs central finite differences at feasible points."""
    rng = np.random.default_rng(seed)
    config = SolverConfig()
    worst = 0.0
    done = 0
    while done < instances:
        src, codec, noise = random_instance(rng, n=5, m=2)
        budgets = feasible_budgets(src, codec, noise, rng)
        state = make_barrier_state(codec, src, budgets, t=1.0)
        lams = barrier_weights(budgets, src, config)
        sigma = noise.sigma
        try:
            grad = barrier_gradients(noise, codec, src, budgets, state, lams)
        except Exception:
            continue
        fd = np.zeros_like(sigma)
        ok = True
        for i in range(sigma.size):
            bump = np.zeros_like(sigma)
            bump[i] = h
            try:
                fd[i] = (
                    barrier_objective(sigma + bump, codec, src, budgets, state, lams)
                    - barrier_objective(sigma - bump, codec, src, budgets, state, lams)
                ) / (2 * h)
            except Exception:
                ok = False
                break
        if not ok:
            continue
        rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12)
        worst = max(worst, rel)
        done += 1
    return {"name": "barrier_gradients", "worst_rel_err": float(worst), "passed": bool(worst < 1e-4)}


def check_distortion(instances: int = 10, count: int = 200_000, seed: int = 2) -> dict:
    """Closed-form distortion vs its Monte Carlo estimate, 4-sigma band."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(instances):
        src, codec, noise = random_instance(rng, n=rng.integers(2, 7), m=rng.integers(1, 4))
        closed = distortion_closed_form(src, codec, noise)
        est = mc_distortion(src, codec, noise, count, seed=1000 + i)
        z = abs(closed - est.value) / max(est.std_error, 1e-300)
        worst = max(worst, z)
    return {"name": "distortion_closed_form", "worst_z": float(worst), "passed": bool(worst <= 4.0)}


def check_bhattacharyya(instances: int = 10, count: int = 1_000_000, seed: int = 3) -> dict:
    """Eq-consistency of the two Bhattacharyya routes plus the MC bound check."""
    rng = np.random.default_rng(seed)
    worst_rel = 0.0
    worst_excess = -math.inf
    for i in range(instances):
        src, codec, noise = random_instance(rng, n=5, m=2)
        bound = bhattacharyya_bound(src, codec, noise)
        out = output_distribution(src, codec, noise)
        general = bhattacharyya_general(out.mean0, out.cov, out.mean1, out.cov, src.p0, src.p1)
        worst_rel = max(worst_rel, abs(bound - general) / max(bound, 1e-300))
        est = mc_bayes_error(src, codec, noise, count, seed=2000 + i)
        worst_excess = max(worst_excess, est.value - bound - 3.0 * est.std_error)
    return {
        "name": "bhattacharyya_bound",
        "worst_rel_err": float(worst_rel),
        "worst_bound_excess": float(worst_excess),
        "passed": bool(worst_rel < 1e-10 and worst_excess <= 0.0),
    }


def check_quantile_w2(k: int = 512) -> dict:
    """Closed-form Gaussian W2 vs exact transport on 1-D quantile grids."""
    cases = [((0.0, 1.0), (3.0, 1.0), 3.0), ((0.0, 1.0), (0.0, 2.0), 1.0), ((0.0, 1.0), (2.0, 2.0), math.sqrt(5.0))]
    worst = 0.0
    for (m_a, s_a), (m_b, s_b), expected in cases:
        grid_a = gaussian_quantile_grid(m_a, s_a, k)[:, None]
        grid_b = gaussian_quantile_grid(m_b, s_b, k)[:, None]
        emp = discrete_w2(grid_a, grid_b)
        closed = w2_gaussian_commuting([m_a], [[s_a**2]], [m_b], [[s_b**2]])
        worst = max(worst, abs(emp - closed), abs(closed - expected))
    return {"name": "quantile_grid_w2", "worst_abs_err": float(worst), "passed": bool(worst < 1e-2)}


def _chain_instance(dim: int, seed: int):
    rng = np.random.default_rng(seed)
    if dim == 1:
        src = GmmSource(c_n=np.array([2.0]), p0=0.5)
        codec = LinearCodec(enc=np.array([[0.9]]), dec=np.array([[1.05]]))
        noise = ChannelNoise(sigma=np.array([0.2]))
    else:
        src = random_source(rng, 2, variance=2.0)
        codec = random_codec(rng, 2, 1)
        scale = 1.0 / np.linalg.norm(codec.dec @ codec.enc)
        codec = LinearCodec(enc=codec.enc * math.sqrt(scale), dec=codec.dec * math.sqrt(scale))
        noise = ChannelNoise(sigma=np.array([0.3]))
    return src, codec, noise


def check_bound_chain(k: int = 512, resamples: int = 20, seed: int = 4) -> dict:
    """Mixture Wasserstein bound, link by link, on 1-D and 2-D instances."""
    reports = {}
    passed = True
    for dim in (1, 2):
        src, codec, noise = _chain_instance(dim, seed + dim)
        rep = bound_chain_check(src, codec, noise, k, resamples, seed + 10 * dim)
        reports[f"{dim}d"] = {
            link.name: {"lhs": link.lhs, "rhs": link.rhs, "slack": link.slack_se, "passed": link.passed}
            for link in rep.links
        }
        passed = passed and rep.all_passed
    return {"name": "bound_chain", "instances": reports, "passed": passed}


def run_battery(quick: bool = False, seed: int = 0) -> dict:
    """Run every check; quick mode shrinks sample counts for fast smoke runs."""
    if quick:
        checks = [
            check_codec_gradients(instances=5, seed=seed),
            check_barrier_gradients(instances=5, seed=seed + 1),
            check_distortion(instances=3, count=50_000, seed=seed + 2),
            check_bhattacharyya(instances=3, count=100_000, seed=seed + 3),
            check_quantile_w2(k=256),
            check_bound_chain(k=128, resamples=10, seed=seed + 4),
        ]
    else:
        checks = [
            check_codec_gradients(seed=seed),
            check_barrier_gradients(seed=seed + 1),
            check_distortion(seed=seed + 2),
            check_bhattacharyya(seed=seed + 3),
            check_quantile_w2(),
            check_bound_chain(seed=seed + 4),
        ]
    return {"checks": checks, "all_passed": all(c["passed"] for c in checks)}
