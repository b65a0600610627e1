"""Independent ground-truth estimators used to validate every closed form.

Monte Carlo estimators for distortion and Bayes classification error, exact
small-instance optimal transport via the assignment problem, and the
bound-chain check that walks the mixture Wasserstein bound link by link on
sampled data.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .metrics import w1_mixture_bound, w2_gaussian_commuting
from .model import (
    ChannelNoise,
    GmmSource,
    LinearCodec,
    output_distribution,
    sample_class_conditional,
    sample_output,
)
from .spectral import eig_sym, gen_inverse, rank

MAX_ASSIGNMENT_SIZE = 512


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo estimate with its standard error and provenance."""

    value: float
    std_error: float
    count: int
    seed: int


def mc_distortion(
    src: GmmSource, codec: LinearCodec, noise: ChannelNoise, count: int, seed: int
) -> McEstimate:
    """Sample-mean estimate of the expected squared reconstruction error."""
    if count < 1000:
        raise OracleError("count must be >= 1000")
    x, y, _ = sample_output(src, codec, noise, count, seed)
    sq = np.sum((y - x) ** 2, axis=1)
    return McEstimate(
        value=float(sq.mean()),
        std_error=float(sq.std(ddof=1) / math.sqrt(count)),
        count=count,
        seed=seed,
    )


def mc_bayes_error(
    src: GmmSource, codec: LinearCodec, noise: ChannelNoise, count: int, seed: int
) -> McEstimate:
    """Misclassification frequency of the Bayes rule on decoded samples.

    Both output components share the covariance, so the Gaussian normalizers
    cancel and the decision compares projected Mahalanobis terms plus log
    priors, with the generalized inverse handling the degenerate directions.
    """
    if count < 10_000:
        raise OracleError("count must be >= 1e4")
    out = output_distribution(src, codec, noise)
    decomp = eig_sym(out.cov)
    gap = out.mean1 - out.mean0
    if np.linalg.norm(gap) > 0 and rank(decomp) < out.cov.shape[0]:
        # a mean gap outside the covariance range would make the components
        # live on disjoint affine subspaces
        proj = out.cov @ (gen_inverse(decomp) @ gap)
        if np.linalg.norm(proj - gap) > 1e-6 * max(np.linalg.norm(gap), 1.0):
            raise OracleError("class means differ outside the common range space")
    inv = gen_inverse(decomp)
    _, y, labels = sample_output(src, codec, noise, count, seed)
    d0 = y - out.mean0
    d1 = y - out.mean1
    score0 = -0.5 * np.einsum("ij,jk,ik->i", d0, inv, d0) + math.log(src.p0)
    score1 = -0.5 * np.einsum("ij,jk,ik->i", d1, inv, d1) + math.log(src.p1)
    pred = (score1 >= score0).astype(np.int64)
    err = (pred != labels).astype(float)
    return McEstimate(
        value=float(err.mean()),
        std_error=float(err.std(ddof=1) / math.sqrt(count)),
        count=count,
        seed=seed,
    )


def _assignment_cost(a: NDArray, b: NDArray, power: int) -> float:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.ndim == 2 and a.shape[0] != b.shape[0]:
        raise OracleError(f"sample counts differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] > MAX_ASSIGNMENT_SIZE:
        raise OracleError(f"at most {MAX_ASSIGNMENT_SIZE} points per side")
    cost = cdist(a, b) ** power
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


def discrete_w1(samples_a: NDArray, samples_b: NDArray) -> float:
    """Exact empirical Wasserstein-1 between equal-size point clouds."""
    return _assignment_cost(samples_a, samples_b, 1)


def discrete_w2(samples_a: NDArray, samples_b: NDArray) -> float:
    """Exact empirical Wasserstein-2 between equal-size point clouds."""
    return math.sqrt(_assignment_cost(samples_a, samples_b, 2))


def _bootstrap_w1(
    a: NDArray, b: NDArray, resamples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Empirical W1 on the base sets plus a bootstrap standard error."""
    value = discrete_w1(a, b)
    k = a.shape[0]
    reps = np.empty(resamples)
    for r in range(resamples):
        ia = rng.integers(0, k, size=k)
        ib = rng.integers(0, k, size=k)
        reps[r] = discrete_w1(a[ia], b[ib])
    return value, float(reps.std(ddof=1))


@dataclass(frozen=True)
class ChainLink:
    name: str
    lhs: float
    rhs: float
    slack_se: float
    passed: bool


@dataclass(frozen=True)
class BoundChainReport:
    """Per-link outcome of the mixture Wasserstein bound verification."""

    links: list[ChainLink]
    mixture_w1: float
    mixture_w1_se: float
    class_w1: tuple[float, float]
    class_w1_se: tuple[float, float]
    class_w2_closed: tuple[float, float]
    mixture_bound: float

    @property
    def all_passed(self) -> bool:
        return all(link.passed for link in self.links)

    def to_json(self) -> str:
        return json.dumps(
            {
                "links": [asdict(l) for l in self.links],
                "mixture_w1": self.mixture_w1,
                "mixture_w1_se": self.mixture_w1_se,
                "class_w1": list(self.class_w1),
                "class_w1_se": list(self.class_w1_se),
                "class_w2_closed": list(self.class_w2_closed),
                "mixture_bound": self.mixture_bound,
                "all_passed": self.all_passed,
            }
        )


def bound_chain_check(
    src: GmmSource,
    codec: LinearCodec,
    noise: ChannelNoise,
    k: int,
    resamples: int,
    seed: int,
) -> BoundChainReport:
    """Walk the mixture Wasserstein bound link by link on sampled data.

    Checks, with 3-sigma bootstrap slack: (i) the mixture W1 is below the
    prior-weighted sum of class-conditional W1s, (ii) each class-conditional
    empirical W1 is below its closed-form Gaussian W2, and (iii) the mixture
    W1 is below the closed-form mixture bound.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(30,)))
    # unconditioned mixture draws: sources on one side, reconstructions on the other
    x_mix, _ = _mixture_samples(src, k, seed)
    _, y_mix, _ = sample_output(src, codec, noise, k, seed + 1)
    mix_w1, mix_se = _bootstrap_w1(x_mix, y_mix, resamples, rng)

    class_w1, class_se, class_w2 = [], [], []
    out = output_distribution(src, codec, noise)
    eye = np.eye(src.n)
    means = (np.zeros(src.n), src.c_n)
    out_means = (out.mean0, out.mean1)
    for label in (0, 1):
        xs = means[label] + np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(31, label))
        ).standard_normal((k, src.n))
        _, ys = sample_class_conditional(src, codec, noise, label, k, seed + 2)
        w1, se = _bootstrap_w1(xs, ys, resamples, rng)
        class_w1.append(w1)
        class_se.append(se)
        class_w2.append(w2_gaussian_commuting(means[label], eye, out_means[label], out.cov))

    bound = w1_mixture_bound(src, codec, noise)
    mixed_rhs = src.p0 * class_w1[0] + src.p1 * class_w1[1]
    mixed_se = math.sqrt(
        mix_se**2 + (src.p0 * class_se[0]) ** 2 + (src.p1 * class_se[1]) ** 2
    )
    links = [
        ChainLink(
            name="mixture_subadditivity",
            lhs=mix_w1,
            rhs=mixed_rhs,
            slack_se=3.0 * mixed_se,
            passed=mix_w1 <= mixed_rhs + 3.0 * mixed_se,
        ),
    ]
    for label in (0, 1):
        links.append(
            ChainLink(
                name=f"class{label}_w1_le_w2",
                lhs=class_w1[label],
                rhs=class_w2[label],
                slack_se=3.0 * class_se[label],
                passed=class_w1[label] <= class_w2[label] + 3.0 * class_se[label],
            )
        )
    links.append(
        ChainLink(
            name="mixture_w1_le_bound",
            lhs=mix_w1,
            rhs=bound,
            slack_se=3.0 * mix_se,
            passed=mix_w1 <= bound + 3.0 * mix_se,
        )
    )
    return BoundChainReport(
        links=links,
        mixture_w1=mix_w1,
        mixture_w1_se=mix_se,
        class_w1=(class_w1[0], class_w1[1]),
        class_w1_se=(class_se[0], class_se[1]),
        class_w2_closed=(class_w2[0], class_w2[1]),
        mixture_bound=bound,
    )


def _mixture_samples(src: GmmSource, count: int, seed: int) -> tuple[NDArray, NDArray]:
    from .model import sample_source

    return sample_source(src, count, seed)


def gaussian_quantile_grid(mean: float, std: float, k: int) -> NDArray[np.float64]:
    """Mid-quantile grid of a 1-D Gaussian, the optimal 1-D coupling support."""
    from scipy.stats import norm

    probs = (np.arange(k) + 0.5) / k
    return mean + std * norm.ppf(probs)
