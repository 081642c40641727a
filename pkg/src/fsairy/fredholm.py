"""Nystrom discretization of multi-time kernels and Fredholm determinants.

The operator ``chi_s K`` on ``L2(R x {tau_1..tau_m})`` is replaced by the
matrix ``B[a, b] = sqrt(w_a) K(x_a, tau(a); x_b, tau(b)) sqrt(w_b)`` with one
composite Gauss-Legendre rule on ``(s_k, inf)`` per time, and
``det(I - chi_s K)`` by ``det(I - B)`` computed with LU.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from .errors import DomainError, NumericError
from .kernels import KernelSpec, edge_shift
from .quadrature import QuadratureRule, semiinfinite_rule


@dataclass(frozen=True)
class RuleParams:
    """Per-time composite rule on ``(s, s + length]`` with geometric panels."""

    n_panels: int = 8
    n_per_panel: int = 40
    length: float = 46.0
    growth: float = 1.5

    def doubled(self) -> "RuleParams":
        return replace(self, n_per_panel=2 * self.n_per_panel)

    def rule(self, s: float) -> QuadratureRule:
        return semiinfinite_rule(
            s, decay_scale=1.0, n_panels=self.n_panels, n_per_panel=self.n_per_panel,
            length=self.length, growth=self.growth,
        )


@dataclass(frozen=True)
class BlockKernelMatrix:
    kernel: KernelSpec
    times: tuple
    cutoffs: tuple
    rule_params: RuleParams
    rules: tuple
    matrix: np.ndarray
    truncation_budget: float

    @property
    def sizes(self):
        return tuple(len(r) for r in self.rules)


@dataclass(frozen=True)
class FredholmResult:
    value: float
    quadrature_error_estimate: float
    truncation_budget: float


def _check_times(times, cutoffs):
    times = tuple(float(t) for t in times)
    cutoffs = tuple(float(s) for s in cutoffs)
    if not times:
        raise DomainError("need at least one time")
    if len(times) != len(cutoffs):
        raise DomainError("one cutoff per time is required")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise DomainError("times must be strictly increasing")
    if not all(math.isfinite(v) for v in times + cutoffs):
        raise DomainError("times and cutoffs must be finite")
    return times, cutoffs


def build_block_matrix(kernel: KernelSpec, times, cutoffs, rule_params: RuleParams | None = None) -> BlockKernelMatrix:
    """Assemble the symmetrically weighted Nystrom matrix of ``chi_s K``.

    Block ``(i, j)`` holds ``K(x, tau_i; y, tau_j)`` for nodes ``x`` of time
    ``i`` and ``y`` of time ``j``; diagonal blocks use the ``tau_i >= tau_j``
    branch, blocks above the diagonal the ``tau_i < tau_j`` branch.
    """
    times, cutoffs = _check_times(times, cutoffs)
    params = rule_params or RuleParams()
    rules = tuple(params.rule(s) for s in cutoffs)
    sqw = [np.sqrt(r.weights) for r in rules]
    n = sum(len(r) for r in rules)
    mat = np.empty((n, n))
    offsets = np.concatenate([[0], np.cumsum([len(r) for r in rules])])
    for i, ti in enumerate(times):
        for j, tj in enumerate(times):
            blk = kernel.block(rules[i].nodes, ti, rules[j].nodes, tj)
            mat[offsets[i] : offsets[i + 1], offsets[j] : offsets[j + 1]] = sqw[i][:, None] * blk * sqw[j][None, :]
    budget = sum(r.truncation_bound for r in rules)
    if len(times) > 1 and kernel.kind in ("extended", "rescaled"):
        budget += kernel.tail_tol * n
    return BlockKernelMatrix(kernel, times, cutoffs, params, rules, mat, budget)


def det_identity_minus(mat: np.ndarray) -> float:
    """``det(I - mat)`` by LU with partial pivoting, accumulated in log form."""
    if not np.all(np.isfinite(mat)):
        raise NumericError("non-finite entries in kernel matrix")
    a = np.eye(len(mat)) - mat
    with warnings.catch_warnings():
        # an exactly singular factor is a legitimate zero determinant
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(a, check_finite=False)
    d = np.diag(lu)
    if np.any(d == 0):
        return 0.0
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    sign = (-1.0) ** swaps * np.prod(np.sign(d))
    return float(sign * np.exp(np.sum(np.log(np.abs(d)))))


def fredholm_det(matrix: BlockKernelMatrix, estimate_error: bool = True) -> FredholmResult:
    """Fredholm determinant ``det(I - chi_s K)`` with a doubled-rule error estimate."""
    value = det_identity_minus(matrix.matrix)
    err = math.nan
    if estimate_error:
        fine = build_block_matrix(matrix.kernel, matrix.times, matrix.cutoffs, matrix.rule_params.doubled())
        err = abs(det_identity_minus(fine.matrix) - value)
    return FredholmResult(value, err, matrix.truncation_budget)


def gap_probability_topline(m: int, taus, ss, rule_params: RuleParams | None = None,
                            k_tail: int = 400, estimate_error: bool = True) -> FredholmResult:
    """Joint CDF ``P(X_M(2 tau_k) <= c1 M^(2/3) + S_k for all k)`` of the top path."""
    shift = edge_shift(m)
    for s in ss:
        if shift + s < 0:
            raise DomainError(f"cutoff S={s} lies below the wall (c1 M^(2/3) = {shift:.4g})")
    spec = KernelSpec("rescaled", m_count=m, tail_truncation=k_tail)
    return fredholm_det(build_block_matrix(spec, taus, ss, rule_params), estimate_error)


def airy2_joint(taus, ss, rule_params: RuleParams | None = None, estimate_error: bool = True) -> FredholmResult:
    """Joint CDF ``P(A2(tau_k) <= S_k for all k)`` of the Airy2 process."""
    spec = KernelSpec("airy_extended")
    return fredholm_det(build_block_matrix(spec, taus, ss, rule_params), estimate_error)


def tracy_widom_gue(s: float, rule_params: RuleParams | None = None) -> float:
    """GUE Tracy-Widom distribution function ``F2(s) = det(I - K_Ai)_{L2(s, inf)}``."""
    return airy2_joint([0.0], [s], rule_params, estimate_error=False).value


def gap_probability(m: int, times, cutoffs, rule_params: RuleParams | None = None,
                    k_tail: int = 400, estimate_error: bool = True) -> FredholmResult:
    """``P(x_M(t_k) <= s_k for all k)`` for the stationary Dyson FS diffusion, unscaled."""
    if any(s < 0 for s in cutoffs):
        raise DomainError("cutoffs must be >= 0")
    kind = "stationary" if len(tuple(times)) == 1 else "extended"
    spec = KernelSpec(kind, m_count=m, tail_truncation=k_tail)
    return fredholm_det(build_block_matrix(spec, times, cutoffs, rule_params), estimate_error)
