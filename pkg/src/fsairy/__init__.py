"""Ferrari-Spohn diffusions, their non-intersecting versions and the Airy2 limit of the top path."""
from __future__ import annotations

from .airy import ai, ai_prime, airy_zero, zero_table, zeros_and_derivs
from .basis import OrderedConfiguration, drift_dyson, drift_single, ground_state_m, phi, phi_prime
from .errors import (
    CapacityError, ConfigError, DomainError, FsAiryError, IllConditionedError, NearBoundaryError,
    NumericError, SamplerError, StatisticsError, TruncationError,
)
from .fredholm import (
    FredholmResult, RuleParams, airy2_joint, build_block_matrix, fredholm_det, gap_probability,
    gap_probability_topline, tracy_widom_gue,
)
from .kernels import KernelSpec, kernel_airy_extended, kernel_extended, kernel_rescaled, kernel_stationary
from .quadrature import QuadratureRule, gauss_legendre, semiinfinite_rule
from .rwalk import WalkModel, nonintersecting_weight, scaled_cdf, transfer_marginal
from .sampling import (
    PathEnsemble, sample_stationary_dpp, simulate_dyson_fs, simulate_fs, top_path_statistics,
)

__version__ = "0.1.0"
