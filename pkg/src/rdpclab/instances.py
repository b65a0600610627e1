"""Random problem instances shared by the verification suite and the tests."""
from __future__ import annotations

import math

import numpy as np

from .metrics import RdpcBudget, distortion_closed_form, w1_mixture_bound
from .model import ChannelNoise, GmmSource, LinearCodec, output_covariance
from .spectral import sqrt_psd


def random_source(rng: np.random.Generator, n: int, variance: float = 4.0, p0: float = 0.5) -> GmmSource:
    c = rng.standard_normal(n) * math.sqrt(variance)
    while np.linalg.norm(c) < 1e-6:
        c = rng.standard_normal(n) * math.sqrt(variance)
    return GmmSource(c_n=c, p0=p0)


def random_codec(rng: np.random.Generator, n: int, m: int) -> LinearCodec:
    while True:
        codec = LinearCodec(enc=rng.standard_normal((m, n)), dec=rng.standard_normal((n, m)))
        try:
            codec.require_full_rank()
            return codec
        except Exception:
            continue


def random_noise(rng: np.random.Generator, m: int, low: float = 0.05, high: float = 2.0) -> ChannelNoise:
    return ChannelNoise(sigma=rng.uniform(low, high, size=m))


def random_instance(
    rng: np.random.Generator, n: int = 5, m: int = 2
) -> tuple[GmmSource, LinearCodec, ChannelNoise]:
    return random_source(rng, n), random_codec(rng, n, m), random_noise(rng, m)


def feasible_budgets(
    src: GmmSource, codec: LinearCodec, noise: ChannelNoise, rng: np.random.Generator
) -> RdpcBudget:
    """Budgets that make (codec, noise) a strictly interior barrier point."""
    from .spectral import eig_sym, gen_inverse

    dist = distortion_closed_form(src, codec, noise) + rng.uniform(0.5, 2.0)

    cov = output_covariance(codec, noise)
    mismatch = sqrt_psd(cov) - np.eye(src.n)
    f = float(np.sum(mismatch * mismatch))
    mean_err = codec.dec @ (codec.enc @ src.c_n) - src.c_n
    perc = float(np.linalg.norm(mean_err)) * src.p1 + math.sqrt(f + rng.uniform(0.5, 2.0))

    gap = codec.dec @ (codec.enc @ src.c_n)
    maha = float(gap @ (gen_inverse(eig_sym(cov)) @ gap))
    # C chosen so the classification margin sits strictly inside its constraint
    cls = min(math.sqrt(src.p0 * src.p1) * math.exp(-maha / 16.0), 0.99)
    return RdpcBudget(dist=dist, perc=perc, cls=cls)
