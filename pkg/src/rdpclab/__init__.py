"""Rate-distortion-perception-classification tradeoff laboratory.

Solves the linear-codec rate budget problem for two-class Gaussian mixture
sources, evaluates every closed-form metric, and cross-checks each one
against Monte Carlo and exact optimal-transport oracles.
"""

from .metrics import (
    MetricReport,
    RdpcBudget,
    bhattacharyya_bound,
    bhattacharyya_general,
    classification_margin,
    distortion_closed_form,
    metric_report,
    rate_bits,
    rate_nats,
    w1_mixture_bound,
    w2_gaussian_commuting,
)
from .model import (
    ChannelNoise,
    GmmSource,
    LinearCodec,
    OutputGmm,
    output_distribution,
    sample_output,
    sample_source,
)
from .oracle import (
    BoundChainReport,
    McEstimate,
    bound_chain_check,
    discrete_w1,
    discrete_w2,
    mc_bayes_error,
    mc_distortion,
)
from .rdpco import (
    InfeasibleBudgetError,
    SolverConfig,
    SolverError,
    TradeoffPoint,
    solve,
)
from .spectral import SpectralDecomp, eig_sym, gen_det, gen_inverse, gram_schmidt, sqrt_psd

__all__ = [
    "ChannelNoise",
    "GmmSource",
    "LinearCodec",
    "OutputGmm",
    "MetricReport",
    "RdpcBudget",
    "McEstimate",
    "BoundChainReport",
    "SolverConfig",
    "SolverError",
    "InfeasibleBudgetError",
    "TradeoffPoint",
    "SpectralDecomp",
    "bhattacharyya_bound",
    "bhattacharyya_general",
    "bound_chain_check",
    "classification_margin",
    "discrete_w1",
    "discrete_w2",
    "distortion_closed_form",
    "eig_sym",
    "gen_det",
    "gen_inverse",
    "gram_schmidt",
    "mc_bayes_error",
    "mc_distortion",
    "metric_report",
    "output_distribution",
    "rate_bits",
    "rate_nats",
    "sample_output",
    "sample_source",
    "solve",
    "sqrt_psd",
    "w1_mixture_bound",
    "w2_gaussian_commuting",
]

__version__ = "0.1.0"
