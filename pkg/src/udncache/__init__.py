"""Probabilistic caching analysis for dense small-cell networks.

The package computes the probability that a typical ground or aerial user
successfully downloads a requested file from a cache-equipped small-cell
deployment, optimizes the per-file caching probabilities, and validates
the analysis against Monte Carlo network drops.
"""

from .analysis import (
    ACTIVE_APPROX,
    ACTIVE_EXACT,
    QuadSpec,
    SdpReport,
    TierContext,
    average_sdp,
    average_sdp_split,
    pr_active,
    sdp_file,
    tier_report,
)
from .asymptotics import (
    SingleSlopeModel,
    avg_sdp_dense,
    avg_sdp_single_slope,
    avg_sdp_single_slope_quad,
    f_delta_alpha,
    limit_beta,
    limit_dense,
)
from .catalog import CacheVector, ZipfCatalog, pcs_vector, ucs_vector
from .channel import (
    ConfigError,
    NetworkConfig,
    PathLossModel,
    make_single_slope_model,
    make_tu_model,
    make_uav_model,
    urban_config,
)
from .optimizer import OptimizerError, OptimizerResult, optimize_caching
from .simulator import SimEstimate, estimate_sdp

__all__ = [
    "ACTIVE_APPROX",
    "ACTIVE_EXACT",
    "CacheVector",
    "ConfigError",
    "NetworkConfig",
    "OptimizerError",
    "OptimizerResult",
    "PathLossModel",
    "QuadSpec",
    "SdpReport",
    "SimEstimate",
    "SingleSlopeModel",
    "TierContext",
    "ZipfCatalog",
    "average_sdp",
    "average_sdp_split",
    "avg_sdp_dense",
    "avg_sdp_single_slope",
    "avg_sdp_single_slope_quad",
    "estimate_sdp",
    "f_delta_alpha",
    "limit_beta",
    "limit_dense",
    "make_single_slope_model",
    "make_tu_model",
    "make_uav_model",
    "optimize_caching",
    "pcs_vector",
    "pr_active",
    "sdp_file",
    "tier_report",
    "ucs_vector",
    "urban_config",
]
