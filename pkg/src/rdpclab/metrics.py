"""Closed-form evaluators for the quantities in the rate budget problem.

Covers the channel rate, the exact expected squared-error distortion of the
linear chain, the commuting-case Gaussian Wasserstein-2 distance, the mixture
Wasserstein-1 upper bound, the Bhattacharyya bound on the Bayes
classification error, and the classification margin used by the solver's
barrier. The rate objective is in nats; reporting also emits bits.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np
from numpy.typing import NDArray

from .model import ChannelNoise, GmmSource, LinearCodec, output_covariance, output_distribution
from .spectral import eig_sym, gen_det, gen_inverse, sqrt_psd

LN2 = math.log(2.0)


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class RdpcBudget:
    """Constraint levels: distortion dist, perception perc, classification cls."""

    dist: float
    perc: float
    cls: float

    def __post_init__(self):
        if not (math.isfinite(self.dist) and self.dist > 0.0):
            raise MetricError(f"dist budget must be finite and > 0, got {self.dist}")
        if not (math.isfinite(self.perc) and self.perc >= 0.0):
            raise MetricError(f"perc budget must be finite and >= 0, got {self.perc}")
        if not (math.isfinite(self.cls) and 0.0 < self.cls < 1.0):
            raise MetricError(f"cls budget must lie in (0,1), got {self.cls}")


@dataclass(frozen=True)
class MetricReport:
    """All closed-form metrics of one operating point, as one flat record."""

    rate_nats: float
    rate_bits: float
    distortion: float
    perception_bound: float
    bhattacharyya: float
    classification_margin: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def rate_nats(noise: ChannelNoise) -> float:
    """Channel rate sum_i ln(1 + 1/sigma_i) in nats; requires sigma_i > 0."""
    if np.any(noise.sigma <= 0.0):
        raise MetricError("rate requires strictly positive noise powers")
    return float(np.sum(np.log1p(1.0 / noise.sigma)))


def rate_bits(m: int, sigma_t: float) -> float:
    """Equal-noise channel rate m * log2(1 + 1/sigma_t^2) in bits."""
    if sigma_t <= 0.0:
        raise MetricError("sigma_t must be > 0")
    return m * math.log2(1.0 + 1.0 / sigma_t**2)


def snr_db(sigma_t: float) -> float:
    """SNR in dB of the unit-power equal-noise channel: -10 log10 sigma_t^2."""
    if sigma_t <= 0.0:
        raise MetricError("sigma_t must be > 0")
    return -10.0 * math.log10(sigma_t**2)


def sigma_t_from_snr_db(snr: float) -> float:
    return math.sqrt(10.0 ** (-snr / 10.0))


def distortion_closed_form(src: GmmSource, codec: LinearCodec, noise: ChannelNoise) -> float:
    """Exact expected squared reconstruction error of the linear chain."""
    e, d, c = codec.enc, codec.dec, src.c_n
    cov = output_covariance(codec, noise)
    tr_cov = float(np.trace(cov))
    dec = d @ (e @ c)
    term0 = tr_cov - 2.0 * float(np.trace(e @ d)) + src.n
    term1 = (
        tr_cov
        + float(dec @ dec)
        - 2.0 * float(np.trace(e @ d) + c @ (d @ (e @ c)))
        + src.n
        + float(c @ c)
    )
    return src.p0 * term0 + src.p1 * term1


def w2_gaussian_commuting(
    mu_a: NDArray, cov_a: NDArray, mu_b: NDArray, cov_b: NDArray, *, tol: float = 1e-8
) -> float:
    """Wasserstein-2 distance between Gaussians with commuting covariances."""
    mu_a = np.asarray(mu_a, dtype=float).reshape(-1)
    mu_b = np.asarray(mu_b, dtype=float).reshape(-1)
    cov_a = np.atleast_2d(np.asarray(cov_a, dtype=float))
    cov_b = np.atleast_2d(np.asarray(cov_b, dtype=float))
    comm = cov_a @ cov_b - cov_b @ cov_a
    scale = max(np.abs(cov_a).max(initial=0.0) * np.abs(cov_b).max(initial=0.0), 1.0)
    if np.abs(comm).max(initial=0.0) > tol * scale:
        raise MetricError("covariances do not commute; the general formula is out of scope")
    diff = sqrt_psd(cov_a) - sqrt_psd(cov_b)
    return math.sqrt(float((mu_a - mu_b) @ (mu_a - mu_b)) + float(np.sum(diff * diff)))


def w1_mixture_bound(src: GmmSource, codec: LinearCodec, noise: ChannelNoise) -> float:
    """Upper bound on W1 between source and reconstruction mixtures."""
    cov = output_covariance(codec, noise)
    mismatch = sqrt_psd(cov) - np.eye(src.n)
    mean_shift = codec.dec @ (codec.enc @ src.c_n) - src.c_n
    return float(np.linalg.norm(mismatch, "fro")) + float(np.linalg.norm(mean_shift)) * src.p1


def bhattacharyya_general(
    mu0: NDArray,
    cov0: NDArray,
    mu1: NDArray,
    cov1: NDArray,
    p0: float,
    p1: float,
) -> float:
    """Bhattacharyya upper bound on the Bayes error of a two-class Gaussian mixture.

    Determinants and the inverse of the averaged covariance are generalized,
    so rank-deficient covariances are handled; a mean gap outside the common
    range contributes only its projected Mahalanobis part.
    """
    mu0 = np.asarray(mu0, dtype=float).reshape(-1)
    mu1 = np.asarray(mu1, dtype=float).reshape(-1)
    avg = (np.atleast_2d(cov0) + np.atleast_2d(cov1)) / 2.0
    d_avg = eig_sym(avg)
    gap = mu1 - mu0
    maha = float(gap @ (gen_inverse(d_avg) @ gap))
    det_term = 0.5 * math.log(
        gen_det(d_avg) / math.sqrt(gen_det(eig_sym(np.atleast_2d(cov0))) * gen_det(eig_sym(np.atleast_2d(cov1))))
    )
    return math.sqrt(p0 * p1) * math.exp(-maha / 8.0 - det_term)


def bhattacharyya_bound(src: GmmSource, codec: LinearCodec, noise: ChannelNoise) -> float:
    """Equal-covariance Bhattacharyya bound of the reconstruction mixture."""
    cov = output_covariance(codec, noise)
    gap = codec.dec @ (codec.enc @ src.c_n)
    maha = float(gap @ (gen_inverse(eig_sym(cov)) @ gap))
    return math.sqrt(src.p0 * src.p1) * math.exp(-maha / 8.0)


def classification_margin(
    src: GmmSource, codec: LinearCodec, noise: ChannelNoise, cls_budget: float
) -> float:
    """Slack of the classification constraint; >= 0 iff the constraint holds.

    Equals the output-space Mahalanobis separation of the class means plus
    8 ln(C / sqrt(p0 p1)); algebraically the sign matches comparing the
    Bhattacharyya bound against C.
    """
    if not 0.0 < cls_budget < 1.0:
        raise MetricError("cls budget must lie in (0,1)")
    cov = output_covariance(codec, noise)
    gap = codec.dec @ (codec.enc @ src.c_n)
    maha = float(gap @ (gen_inverse(eig_sym(cov)) @ gap))
    return maha + 8.0 * math.log(cls_budget / math.sqrt(src.p0 * src.p1))


def metric_report(
    src: GmmSource, codec: LinearCodec, noise: ChannelNoise, budgets: RdpcBudget
) -> MetricReport:
    """Evaluate every closed-form metric at one operating point."""
    nats = rate_nats(noise)
    return MetricReport(
        rate_nats=nats,
        rate_bits=nats / LN2,
        distortion=distortion_closed_form(src, codec, noise),
        perception_bound=w1_mixture_bound(src, codec, noise),
        bhattacharyya=bhattacharyya_bound(src, codec, noise),
        classification_margin=classification_margin(src, codec, noise, budgets.cls),
    )
