"""Source, codec, and channel data model plus seeded samplers.

The source is a two-class Gaussian mixture in R^n: class 0 is N(0, I),
class 1 is N(c_n, I). A linear encoder E (m x n) maps it to m channel
symbols, independent Gaussian noise with per-channel power sigma_i is added,
and a linear decoder D (n x m) reconstructs. All sampling goes through
numpy's default_rng (PCG64) with explicit 64-bit seeds so every draw is
reproducible bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .spectral import eig_sym, rank


class ModelError(ValueError):
    """Raised on invalid model parameters or dimension mismatches."""


@dataclass(frozen=True)
class GmmSource:
    """Two-class GMM source: N(0, I) vs N(c_n, I) with priors (p0, p1)."""

    c_n: NDArray[np.float64]
    p0: float = 0.5

    def __post_init__(self):
        c = np.asarray(self.c_n, dtype=float).reshape(-1)
        object.__setattr__(self, "c_n", c)
        if not np.all(np.isfinite(c)) or np.linalg.norm(c) == 0.0:
            raise ModelError("c_n must be finite and nonzero")
        if not 0.0 < self.p0 < 1.0:
            raise ModelError(f"p0 must lie in (0,1), got {self.p0}")

    @property
    def n(self) -> int:
        return self.c_n.shape[0]

    @property
    def p1(self) -> float:
        return 1.0 - self.p0


@dataclass(frozen=True)
class LinearCodec:
    """Encoder matrix enc (m x n) and decoder matrix dec (n x m).

    Construction only checks shapes and finiteness; metric evaluators accept
    rank-deficient matrices (e.g. dec = 0) so degenerate analytic cases stay
    expressible. The solver calls require_full_rank() on its iterates.
    """

    enc: NDArray[np.float64]
    dec: NDArray[np.float64]

    def __post_init__(self):
        e = np.atleast_2d(np.asarray(self.enc, dtype=float))
        d = np.atleast_2d(np.asarray(self.dec, dtype=float))
        object.__setattr__(self, "enc", e)
        object.__setattr__(self, "dec", d)
        if e.shape[::-1] != d.shape:
            raise ModelError(f"incompatible shapes enc {e.shape} vs dec {d.shape}")
        if not (np.all(np.isfinite(e)) and np.all(np.isfinite(d))):
            raise ModelError("codec matrices must be finite")

    @property
    def m(self) -> int:
        return self.enc.shape[0]

    @property
    def n(self) -> int:
        return self.enc.shape[1]

    def require_full_rank(self, tol: float = 1e-8) -> None:
        for name, mat in (("enc", self.enc), ("dec", self.dec)):
            s = np.linalg.svd(mat, compute_uv=False)
            if s[-1] <= tol * s[0]:
                raise ModelError(f"{name} matrix is rank deficient")


@dataclass(frozen=True)
class ChannelNoise:
    """Per-channel noise powers (variances) of the m parallel Gaussian channels."""

    sigma: NDArray[np.float64]

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float).reshape(-1)
        object.__setattr__(self, "sigma", s)
        if not np.all(np.isfinite(s)) or np.any(s < 0.0):
            raise ModelError("noise powers must be finite and >= 0")

    @property
    def m(self) -> int:
        return self.sigma.shape[0]


@dataclass(frozen=True)
class OutputGmm:
    """Reconstruction distribution: a two-class GMM with shared covariance."""

    mean0: NDArray[np.float64]
    mean1: NDArray[np.float64]
    cov: NDArray[np.float64]


def _check_dims(src: GmmSource, codec: LinearCodec, noise: ChannelNoise) -> None:
    if codec.n != src.n:
        raise ModelError(f"codec dimension n={codec.n} != source n={src.n}")
    if noise.m != codec.m:
        raise ModelError(f"noise dimension m={noise.m} != codec m={codec.m}")


def output_covariance(codec: LinearCodec, noise: ChannelNoise) -> NDArray[np.float64]:
    """Shared output covariance D (E E^T + Diag(sigma)) D^T, symmetrized."""
    e, d = codec.enc, codec.dec
    cov = d @ (e @ e.T + np.diag(noise.sigma)) @ d.T
    return (cov + cov.T) / 2.0


def output_distribution(src: GmmSource, codec: LinearCodec, noise: ChannelNoise) -> OutputGmm:
    """Distribution of the decoded signal: class means 0 and D E c_n, shared cov."""
    _check_dims(src, codec, noise)
    return OutputGmm(
        mean0=np.zeros(src.n),
        mean1=codec.dec @ (codec.enc @ src.c_n),
        cov=output_covariance(codec, noise),
    )


def output_rank(src: GmmSource, codec: LinearCodec, noise: ChannelNoise) -> int:
    return rank(eig_sym(output_covariance(codec, noise)))


def sample_source(
    src: GmmSource, count: int, seed: int
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """Draw `count` labeled source samples; deterministic given the seed."""
    if count < 1:
        raise ModelError("count must be >= 1")
    rng = np.random.default_rng(seed)
    labels = (rng.random(count) < src.p1).astype(np.int64)
    x = rng.standard_normal((count, src.n))
    x[labels == 1] += src.c_n
    return x, labels


def sample_output(
    src: GmmSource, codec: LinearCodec, noise: ChannelNoise, count: int, seed: int
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.int64]]:
    """Paired (input, output, label) draws through the encoder-channel-decoder chain."""
    _check_dims(src, codec, noise)
    x, labels = sample_source(src, count, seed)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    n_ch = rng.standard_normal((count, codec.m)) * np.sqrt(noise.sigma)
    y = (x @ codec.enc.T + n_ch) @ codec.dec.T
    return x, y, labels


def sample_class_conditional(
    src: GmmSource,
    codec: LinearCodec,
    noise: ChannelNoise,
    label: int,
    count: int,
    seed: int,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Paired (input, output) draws conditioned on one class."""
    _check_dims(src, codec, noise)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2, label)))
    x = rng.standard_normal((count, src.n))
    if label == 1:
        x = x + src.c_n
    n_ch = rng.standard_normal((count, codec.m)) * np.sqrt(noise.sigma)
    y = (x @ codec.enc.T + n_ch) @ codec.dec.T
    return x, y
