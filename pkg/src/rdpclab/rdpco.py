"""Alternating heuristic solver for the rate budget problem.

The pipeline: (1) design a target output covariance whose unit eigenvector
along c_n preserves class separation, (2) fit the encoder/decoder pair to
factor that covariance by gradient descent, (3) pick the per-channel noise
powers by a log-barrier interior-point loop on the rate objective, and
alternate (2)-(3) until the joint iterate stops moving.

All gradients are analytic and are validated against central finite
differences in the test suite.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict, replace

import numpy as np
from numpy.typing import NDArray

from .metrics import (
    LN2,
    MetricReport,
    RdpcBudget,
    classification_margin,
    distortion_closed_form,
    metric_report,
    w1_mixture_bound,
)
from .model import ChannelNoise, GmmSource, LinearCodec, ModelError, output_covariance
from .spectral import (
    RANK_TOL,
    SpectralError,
    eig_sym,
    gen_inv_sqrt,
    gen_inverse,
    gram_schmidt,
)


class SolverError(RuntimeError):
    pass


class InfeasibleBudgetError(SolverError):
    """No strictly feasible noise vector exists for the given codec and budgets."""

    def __init__(self, message: str, violated: list[str] | None = None):
        super().__init__(message)
        self.violated = violated or []


@dataclass(frozen=True)
class SolverConfig:
    """Tuning knobs of the alternating solver; defaults follow the reference setup."""

    codec_lr: float = 1e-4
    codec_iters: int = 20000
    t0: float = 0.01
    mu: float = 2.0
    eps: float = 1e-5
    max_outer: int = 10
    barrier_gap: float = 0.01
    barrier_max_updates: int = 20
    inner_lr: float = 1e-3
    inner_iters: int = 500
    sigma_floor: float = 1e-6
    lambda_d: float | None = None
    lambda_p: float | None = None
    lambda_c: float | None = None
    seed: int = 0

    def __post_init__(self):
        if min(self.codec_lr, self.t0, self.eps, self.barrier_gap, self.inner_lr, self.sigma_floor) <= 0:
            raise SolverError("step sizes and tolerances must be positive")
        if self.mu <= 1.0:
            raise SolverError("mu must exceed 1")
        if min(self.codec_iters, self.max_outer, self.barrier_max_updates, self.inner_iters) <= 0:
            raise SolverError("iteration caps must be positive")


@dataclass(frozen=True)
class TradeoffPoint:
    """One solved operating point with its metric report and solve diagnostics."""

    codec: LinearCodec
    noise: ChannelNoise
    report: MetricReport
    budgets: RdpcBudget
    converged: bool
    outer_iters: int
    feasible: bool

    def to_dict(self) -> dict:
        return {
            "enc": self.codec.enc.tolist(),
            "dec": self.codec.dec.tolist(),
            "sigma": self.noise.sigma.tolist(),
            "report": self.report.to_dict(),
            "budgets": asdict(self.budgets),
            "converged": self.converged,
            "outer_iters": self.outer_iters,
            "feasible": self.feasible,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class BarrierState:
    """Residual budgets of the noise subproblem for a fixed codec.

    d_k absorbs every distortion term that does not depend on the noise, p_k
    is the squared perception residual after the codec's mean mismatch, and
    cls_offset is the additive constant of the classification margin.
    """

    d_k: float
    p_k: float
    cls_offset: float
    t: float


def barrier_weights(budgets: RdpcBudget, src: GmmSource, config: SolverConfig) -> tuple[float, float, float]:
    """Barrier weights 1/ln(D), 1/ln(P), -1/ln(sqrt(p0 p1)), with overrides.

    Budgets at or below 1 flip the sign of the log; fall back to weight 1
    there so the barrier stays a penalty.
    """

    def default(x: float) -> float:
        return 1.0 / math.log(x) if x > 1.0 else 1.0

    lam_d = config.lambda_d if config.lambda_d is not None else default(budgets.dist)
    lam_p = config.lambda_p if config.lambda_p is not None else default(budgets.perc)
    lam_c = (
        config.lambda_c
        if config.lambda_c is not None
        else -1.0 / math.log(math.sqrt(src.p0 * src.p1))
    )
    return lam_d, lam_p, lam_c


def design_sigma_hat(
    src: GmmSource, m: int, seed: int, *, max_retries: int = 8
) -> tuple[NDArray, NDArray, NDArray]:
    """Build the target output covariance Q Lambda Q^T.

    The first column of Q is c_n normalized to unit length (so it really is
    a unit eigenvector with eigenvalue 1); the rest orthonormalize random
    Gaussian columns. Lambda has eigenvalue 1 first, then m-1 uniform draws
    from [0, 1], then zeros.
    """
    n = src.n
    if not 1 <= m < n:
        raise SolverError(f"need 1 <= m < n, got m={m}, n={n}")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(10,)))
    first = src.c_n / np.linalg.norm(src.c_n)
    for _ in range(max_retries):
        cols = np.column_stack([first, rng.standard_normal((n, n - 1))])
        try:
            q = gram_schmidt(cols)
            break
        except SpectralError:
            continue
    else:
        raise SolverError("could not orthogonalize the random basis after retries")
    lam = np.zeros(n)
    lam[0] = 1.0
    lam[1:m] = rng.random(m - 1)
    sigma_hat = (q * lam) @ q.T
    return q, lam, (sigma_hat + sigma_hat.T) / 2.0


def codec_objective(
    enc: NDArray, dec: NDArray, sigma_prev: ChannelNoise, sigma_hat: NDArray, c_n: NDArray
) -> float:
    """Codec-fitting objective for a fixed target covariance and previous noise."""
    n = sigma_hat.shape[0]
    dsd = dec @ (np.diag(sigma_prev.sigma) @ dec.T)
    resid = np.eye(n) - sigma_hat + dsd
    mean_err = c_n - dec @ (enc @ c_n)
    return 0.5 * float(np.sum(resid * resid)) + 0.5 * float(np.sum(dsd * dsd)) + 0.5 * float(
        mean_err @ mean_err
    )


def codec_gradients(
    enc: NDArray, dec: NDArray, sigma_prev: ChannelNoise, sigma_hat: NDArray, c_n: NDArray
) -> tuple[NDArray, NDArray]:
    """Analytic gradients of codec_objective w.r.t. the encoder and decoder."""
    n = sigma_hat.shape[0]
    s_prev = np.diag(sigma_prev.sigma)
    dsd = dec @ (s_prev @ dec.T)
    mean_err = dec @ (enc @ c_n) - c_n
    grad_enc = dec.T @ np.outer(mean_err, c_n)
    grad_dec = (
        4.0 * dsd @ (dec @ s_prev)
        + 2.0 * (np.eye(n) - sigma_hat) @ (dec @ s_prev)
        + np.outer(mean_err, c_n) @ enc.T
    )
    return grad_enc, grad_dec


def fit_codec(
    sigma_hat: NDArray,
    sigma_prev: ChannelNoise,
    c_n: NDArray,
    config: SolverConfig,
    *,
    m: int | None = None,
    init: tuple[NDArray, NDArray] | None = None,
    seed_offset: int = 0,
) -> LinearCodec:
    """Gradient descent on the codec objective; returns the best iterate seen.

    The step halves whenever a step would increase the objective, so the
    accepted objective sequence is non-increasing. The returned matrices have
    their singular values floored at a tiny fraction of the largest one: the
    alternation drives decoder directions of noise-flooded channels toward
    exact zero, and downstream algebra needs full-rank factors.
    """
    n = sigma_hat.shape[0]
    if init is not None:
        enc, dec = init[0].copy(), init[1].copy()
        m = enc.shape[0]
    else:
        if m is None:
            raise SolverError("either init or m is required")
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=config.seed, spawn_key=(20, seed_offset))
        )
        enc = rng.standard_normal((m, n)) / math.sqrt(n)
        dec = rng.standard_normal((n, m)) / math.sqrt(n)

    obj = codec_objective(enc, dec, sigma_prev, sigma_hat, c_n)
    best = (obj, enc.copy(), dec.copy())
    step = config.codec_lr
    checkpoint = obj
    for it in range(config.codec_iters):
        if it % 500 == 499:
            # plateau stop: the tail of the descent only bleeds tiny amounts
            if checkpoint - obj <= 1e-8 * (1.0 + abs(obj)):
                break
            checkpoint = obj
        g_e, g_d = codec_gradients(enc, dec, sigma_prev, sigma_hat, c_n)
        accepted = False
        for attempt in range(30):
            cand_e = enc - step * g_e
            cand_d = dec - step * g_d
            cand_obj = codec_objective(cand_e, cand_d, sigma_prev, sigma_hat, c_n)
            if not math.isfinite(cand_obj):
                step /= 2.0
                continue
            if cand_obj <= obj:
                enc, dec, obj = cand_e, cand_d, cand_obj
                accepted = True
                if attempt == 0:
                    step *= 2.0  # expand while full steps keep succeeding
                break
            step /= 2.0
        if not accepted:
            break
        if obj - best[0] < -1e-15:
            best = (obj, enc.copy(), dec.copy())
    codec = LinearCodec(enc=_floor_rank(best[1]), dec=_floor_rank(best[2]))
    codec.require_full_rank()
    return codec


def _floor_rank(mat: NDArray, floor: float = 1e-7) -> NDArray:
    """Lift near-zero singular values to floor * s_max (minimal perturbation)."""
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    lift = floor * max(s[0], 1e-300)
    if s[-1] > lift:
        return mat
    return (u * np.maximum(s, lift)) @ vt


def make_barrier_state(
    codec: LinearCodec, src: GmmSource, budgets: RdpcBudget, t: float
) -> BarrierState:
    """Absorb every noise-independent constraint term into residual budgets."""
    zero_noise = ChannelNoise(sigma=np.zeros(codec.m))
    d_k = budgets.dist - distortion_closed_form(src, codec, zero_noise)
    mean_err = codec.dec @ (codec.enc @ src.c_n) - src.c_n
    p_resid = budgets.perc - float(np.linalg.norm(mean_err)) * src.p1
    p_k = p_resid**2 if p_resid > 0.0 else -1.0
    cls_offset = 8.0 * math.log(budgets.cls / math.sqrt(src.p0 * src.p1))
    return BarrierState(d_k=d_k, p_k=p_k, cls_offset=cls_offset, t=t)


def _barrier_args(
    sigma: NDArray, codec: LinearCodec, src: GmmSource, state: BarrierState
) -> tuple[float, float, float, NDArray]:
    """Log arguments (h_d, h_p, h_c) and the current output covariance."""
    d, e = codec.dec, codec.enc
    cov = output_covariance(codec, ChannelNoise(sigma=sigma))
    arg_d = state.d_k - float(np.trace(d @ (np.diag(sigma) @ d.T)))
    decomp = eig_sym(cov)
    # ||cov^(1/2) - I||_F^2 in the eigenbasis, with sub-threshold eigenvalues
    # clamped to exactly zero so float noise in the null space cancels
    cutoff = RANK_TOL * max(float(decomp.lam.max(initial=0.0)), 1.0)
    sqrt_lam = np.where(decomp.lam > cutoff, np.sqrt(np.clip(decomp.lam, 0.0, None)), 0.0)
    arg_p = state.p_k - float(np.sum((sqrt_lam - 1.0) ** 2))
    gap = d @ (e @ src.c_n)
    maha = float(gap @ (gen_inverse(decomp) @ gap))
    arg_c = maha + state.cls_offset
    return arg_d, arg_p, arg_c, cov


def barrier_terms(
    sigma: ChannelNoise, codec: LinearCodec, src: GmmSource, budgets: RdpcBudget, state: BarrierState
) -> tuple[float, float, float, float]:
    """Barrier terms (h_r, h_d, h_p, h_c); raises if any log argument is <= 0."""
    s = sigma.sigma
    if np.any(s <= 0.0):
        raise InfeasibleBudgetError("noise powers must be strictly positive", ["rate"])
    arg_d, arg_p, arg_c, _ = _barrier_args(s, codec, src, state)
    violated = [
        name for name, arg in (("distortion", arg_d), ("perception", arg_p), ("classification", arg_c))
        if arg <= 0.0
    ]
    if violated:
        raise InfeasibleBudgetError(
            f"barrier infeasible: nonpositive argument for {', '.join(violated)}", violated
        )
    h_r = float(np.sum(np.log1p(1.0 / s)))
    return h_r, math.log(arg_d), math.log(arg_p), math.log(arg_c)


def barrier_objective(
    sigma: NDArray,
    codec: LinearCodec,
    src: GmmSource,
    budgets: RdpcBudget,
    state: BarrierState,
    lams: tuple[float, float, float],
) -> float:
    h_r, h_d, h_p, h_c = barrier_terms(ChannelNoise(sigma=sigma), codec, src, budgets, state)
    lam_d, lam_p, lam_c = lams
    return state.t * h_r - lam_d * h_d - lam_p * h_p - lam_c * h_c


def barrier_gradients(
    sigma: ChannelNoise,
    codec: LinearCodec,
    src: GmmSource,
    budgets: RdpcBudget,
    state: BarrierState,
    lams: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> NDArray[np.float64]:
    """Gradient of t*h_r - lam_d*h_d - lam_p*h_p - lam_c*h_c w.r.t. sigma."""
    s = sigma.sigma
    d, e = codec.dec, codec.enc
    arg_d, arg_p, arg_c, cov = _barrier_args(s, codec, src, state)
    if min(arg_d, arg_p, arg_c) <= 0.0 or np.any(s <= 0.0):
        raise InfeasibleBudgetError("gradient requested at an infeasible point")
    lam_d, lam_p, lam_c = lams

    grad_r = -1.0 / (s * s + s)

    dtd_diag = np.einsum("ij,ij->j", d, d)
    grad_hd = -dtd_diag / arg_d

    decomp = eig_sym(cov)
    inv_sqrt = gen_inv_sqrt(decomp)
    # d/ds_i ||cov^(1/2) - I||_F^2 = diag(D^T (I - cov^(-1/2)) D)_i
    grad_norm = np.einsum("ji,jk,ki->i", d, np.eye(src.n) - inv_sqrt, d)
    grad_hp = -grad_norm / arg_p

    inv = gen_inverse(decomp)
    v = d.T @ (inv @ (d @ (e @ src.c_n)))
    grad_hc = -(v * v) / arg_c

    return state.t * grad_r - lam_d * grad_hd - lam_p * grad_hp - lam_c * grad_hc


def _find_feasible_sigma(
    codec: LinearCodec, src: GmmSource, budgets: RdpcBudget, state: BarrierState, config: SolverConfig
) -> NDArray:
    """Geometric shrink from sigma = 1 until all barrier arguments turn positive."""
    sigma = np.ones(codec.m)
    last_exc: InfeasibleBudgetError | None = None
    for _ in range(40):
        try:
            barrier_terms(ChannelNoise(sigma=sigma), codec, src, budgets, state)
            return sigma
        except InfeasibleBudgetError as exc:
            last_exc = exc
            sigma = np.maximum(sigma / 4.0, config.sigma_floor)
            if np.all(sigma == config.sigma_floor):
                break
    try:
        barrier_terms(ChannelNoise(sigma=sigma), codec, src, budgets, state)
        return sigma
    except InfeasibleBudgetError as exc:
        raise InfeasibleBudgetError(
            f"no strictly feasible noise found for the given budgets ({exc})",
            exc.violated or (last_exc.violated if last_exc else []),
        ) from exc


def fit_noise(
    codec: LinearCodec,
    src: GmmSource,
    budgets: RdpcBudget,
    config: SolverConfig,
    state: BarrierState | None = None,
    *,
    sigma_init: NDArray | None = None,
) -> ChannelNoise:
    """Log-barrier loop over the noise powers for a fixed codec.

    Each subproblem runs projected gradient descent with backtracking (steps
    that leave the feasible region or increase the objective are halved);
    the barrier parameter then grows by mu until the duality-gap proxy 3/t
    drops below barrier_gap or the update cap is hit.
    """
    if state is None:
        state = make_barrier_state(codec, src, budgets, config.t0)
    lams = barrier_weights(budgets, src, config)
    sigma = (
        np.asarray(sigma_init, dtype=float).copy()
        if sigma_init is not None
        else _find_feasible_sigma(codec, src, budgets, state, config)
    )
    try:
        barrier_terms(ChannelNoise(sigma=sigma), codec, src, budgets, state)
    except InfeasibleBudgetError:
        sigma = _find_feasible_sigma(codec, src, budgets, state, config)

    state.t = config.t0
    for _ in range(config.barrier_max_updates):
        obj = barrier_objective(sigma, codec, src, budgets, state, lams)
        step = config.inner_lr
        for _ in range(config.inner_iters):
            grad = barrier_gradients(
                ChannelNoise(sigma=sigma), codec, src, budgets, state, lams
            )
            moved = False
            for attempt in range(60):
                cand = np.maximum(sigma - step * grad, config.sigma_floor)
                try:
                    cand_obj = barrier_objective(cand, codec, src, budgets, state, lams)
                except InfeasibleBudgetError:
                    step /= 2.0
                    continue
                if cand_obj <= obj:
                    improved = obj - cand_obj
                    sigma, obj, moved = cand, cand_obj, True
                    if attempt == 0:
                        step *= 2.0  # expand while full steps keep succeeding
                    break
                step /= 2.0
            if not moved or improved <= 1e-10 * (1.0 + abs(obj)):
                break
        if 3.0 / state.t < config.barrier_gap:
            break
        state.t *= config.mu
    return ChannelNoise(sigma=sigma)


def solve(src: GmmSource, m: int, budgets: RdpcBudget, config: SolverConfig) -> TradeoffPoint:
    """Full alternating solve; returns the operating point and its metrics."""
    if not 1 <= m < src.n:
        raise SolverError(f"need 1 <= m < n, got m={m}, n={src.n}")
    _, _, sigma_hat = design_sigma_hat(src, m, config.seed)

    sigma = np.ones(m)
    enc_prev = np.zeros((m, src.n))
    dec_prev = np.zeros((src.n, m))
    converged = False
    outer = 0
    codec: LinearCodec | None = None
    best: tuple[LinearCodec, np.ndarray] | None = None
    for k in range(config.max_outer):
        outer = k + 1
        noise_prev = ChannelNoise(sigma=sigma)
        codec = fit_codec(
            sigma_hat,
            noise_prev,
            src.c_n,
            config,
            m=m,
            init=None if k == 0 else (codec.enc, codec.dec),
            seed_offset=k,
        )
        try:
            noise = fit_noise(codec, src, budgets, config)
        except InfeasibleBudgetError:
            # A later codec iterate can wander outside the strictly feasible
            # region even though earlier iterates satisfied every budget; keep
            # the last feasible pair instead of declaring the problem infeasible.
            if best is None:
                raise
            codec, sigma = best[0], best[1]
            outer = k
            break
        best = (codec, noise.sigma.copy())
        delta = math.sqrt(
            float(np.sum((codec.enc - enc_prev) ** 2))
            + float(np.sum((codec.dec - dec_prev) ** 2))
            + float(np.sum((noise.sigma - sigma) ** 2))
        )
        enc_prev, dec_prev, sigma = codec.enc.copy(), codec.dec.copy(), noise.sigma.copy()
        if delta <= config.eps:
            converged = True
            break

    noise = ChannelNoise(sigma=sigma)
    report = metric_report(src, codec, noise, budgets)
    slack = 1e-6
    feasible = (
        report.distortion <= budgets.dist + slack
        and report.perception_bound <= budgets.perc + slack
        and report.classification_margin >= -slack
    )
    return TradeoffPoint(
        codec=codec,
        noise=noise,
        report=report,
        budgets=budgets,
        converged=converged,
        outer_iters=outer,
        feasible=feasible,
    )
