"""Correlation kernels of non-intersecting Ferrari-Spohn diffusions and of the
Airy2 process.

Every kernel has a *block* form taking node vectors ``x`` (length n) and
``y`` (length p) at two times and returning the ``(n, p)`` matrix, and a
pointwise form that broadcasts its spatial arguments elementwise.

Eigen-sums over an infinite index range are truncated adaptively.  Tails are
bounded by ``|phi_k| <= 0.7858 / |Ai'(-omega_k)|`` together with
``omega_k >= (3 pi (k - 1/4) / 2)**(2/3)``, which turns the neglected sum
into an incomplete gamma function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import special

from .airy import MAX_ZEROS, airy_pair, zeros_and_derivs
from .basis import phi_matrix
from .errors import DomainError, IllConditionedError, TruncationError
from .quadrature import uniform_rule

C0 = 3.0 ** (1.0 / 3.0) / (2.0 ** (1.0 / 3.0) * math.pi ** (2.0 / 3.0))
C1 = 3.0 ** (2.0 / 3.0) * math.pi ** (2.0 / 3.0) / 2.0 ** (2.0 / 3.0)

#: sup |Ai| bound used in tail certificates
AI_SUP = 0.7858
TAIL_TOL = 1e-10
DEFAULT_K_TAIL = 400
DEFAULT_LAMBDA_CUTOFF = 40.0
#: smallest time gap accepted by the tau_i < tau_j branch of K_Ai
MIN_NEGATIVE_GAP = 1e-3
#: above this gap the tau_i < tau_j branch of K_Ai is integrated directly
DIRECT_GAP = 0.25

KernelKind = Literal["stationary", "extended", "rescaled", "airy_extended", "semigroup"]


def edge_shift(m: int) -> float:
    """Centre ``c1 M^(2/3)`` of the top particle."""
    return C1 * m ** (2.0 / 3.0)


# --- tail certification ------------------------------------------------------


def _log_upper_gamma_15(x):
    """log Gamma(3/2, x), using an upper bound for large x."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    big = x > 1.5
    xb = x[big]
    # Gamma(s, x) <= x^(s-1) e^-x * x / (x - s + 1) for x > s - 1
    out[big] = 0.5 * np.log(xb) - xb + np.log(xb / (xb - 0.5))
    xs = x[~big]
    out[~big] = np.log(special.gammaincc(1.5, xs) * special.gamma(1.5))
    return out


def tail_bounds(k0, rate: float, shift: float = 0.0) -> np.ndarray:
    """Upper bounds on ``sum_{k >= k0} exp(-rate (omega_k - shift)) |phi_k(x) phi_k(y)|``.

    Vectorized over candidate starting indices ``k0``.
    """
    if rate <= 0:
        raise DomainError("tail bound needs a positive decay rate")
    k0 = np.asarray(k0, dtype=int)
    omega, deriv = zeros_and_derivs(int(k0.max()))
    om = omega[k0 - 1]
    phib2 = (AI_SUP / np.abs(deriv[k0 - 1])) ** 2
    v = (1.5 * math.pi * (k0 - 0.25)) ** (2.0 / 3.0)
    log_int = rate * shift - 1.5 * math.log(rate) + _log_upper_gamma_15(rate * v) - math.log(math.pi)
    return phib2 * (np.exp(-rate * (om - shift)) + np.exp(log_int))


def certified_stop(k_first: int, k_limit: int, rate: float, shift: float = 0.0, tol: float = TAIL_TOL):
    """Smallest ``k_end`` in ``[k_first - 1, k_limit]`` whose tail beyond is ``<= tol``.

    Terms ``k_first .. k_end`` are then summed.  Raises
    :class:`TruncationError` if no such index exists within ``k_limit``.
    """
    k_limit = min(k_limit, MAX_ZEROS - 1)
    candidates = np.arange(k_first, k_limit + 2)
    bounds = tail_bounds(candidates, rate, shift)
    ok = np.nonzero(bounds <= tol)[0]
    if ok.size == 0:
        raise TruncationError(
            f"tail beyond k={k_limit} bounded only by {bounds[-1]:.3g} > {tol:g}; "
            "increase the truncation or the time gap"
        )
    return int(candidates[ok[0]] - 1), float(bounds[ok[0]])


# --- eigen-sums ---------------------------------------------------------------


def _eigen_sum(k_lo, k_hi, coef, x, y, outer):
    """sum_{k=k_lo}^{k_hi} coef_k phi_k(x) phi_k(y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not outer:
        x, y = np.broadcast_arrays(x, y)
    if k_hi < k_lo:
        if outer:
            return np.zeros((x.size, y.size))
        return np.zeros(np.broadcast(x, y).shape)
    px = phi_matrix(k_hi, x.ravel() if outer else x)[k_lo - 1 :]
    py = phi_matrix(k_hi, y.ravel() if outer else y)[k_lo - 1 :]
    coef = np.asarray(coef, dtype=float)
    if outer:
        return (px * coef[:, None]).T @ py
    shape = (len(coef),) + (1,) * x.ndim
    return np.sum(coef.reshape(shape) * px * py, axis=0)


def _nonneg(*arrs):
    for a in arrs:
        if np.any(np.asarray(a) < 0):
            raise DomainError("spatial arguments must be >= 0")


def _spectral_kernel(m, x, y, gap, rate_per_gap, shift, k_tail, outer, tol):
    """Shared body of the extended and rescaled kernels.

    ``gap = t_i - t_j``.  Coefficients are ``exp(rate_per_gap (omega_k - shift) gap)``.
    """
    _nonneg(x, y)
    omega_all = zeros_and_derivs(min(MAX_ZEROS, m + k_tail + 1))[0]
    if gap >= 0:
        coef = np.exp(rate_per_gap * (omega_all[:m] - shift) * gap)
        return _eigen_sum(1, m, coef, x, y, outer)
    rate = rate_per_gap * (-gap)
    k_end, _ = certified_stop(m + 1, m + k_tail, rate, shift, tol)
    coef = np.exp(-rate * (omega_all[m:k_end] - shift))
    return -_eigen_sum(m + 1, k_end, coef, x, y, outer)


def kernel_stationary(m: int, x, y):
    """``K_M(x, y) = sum_{k<=M} phi_k(x) phi_k(y)``, elementwise in x and y."""
    if m < 1:
        raise DomainError("M must be >= 1")
    _nonneg(x, y)
    out = _eigen_sum(1, m, np.ones(m), x, y, outer=False)
    return float(out) if out.ndim == 0 else out


def stationary_block(m: int, x, y):
    _nonneg(x, y)
    return _eigen_sum(1, m, np.ones(m), x, y, outer=True)


def kernel_extended(m: int, x, t_i: float, y, t_j: float, k_tail: int = DEFAULT_K_TAIL, tol: float = TAIL_TOL):
    """Space-time kernel of the M-path ensemble in unscaled coordinates.

    For ``t_i >= t_j`` the M-term sum with weights ``exp(-omega_k (t_j - t_i) / 2)``;
    for ``t_i < t_j`` minus the certified tail sum over ``k > M``.
    """
    if m < 1:
        raise DomainError("M must be >= 1")
    out = _spectral_kernel(m, x, y, t_i - t_j, 0.5, 0.0, k_tail, False, tol)
    return float(out) if out.ndim == 0 else out


def extended_block(m, x, t_i, y, t_j, k_tail=DEFAULT_K_TAIL, tol=TAIL_TOL):
    return _spectral_kernel(m, x, y, t_i - t_j, 0.5, 0.0, k_tail, True, tol)


def _rescaled_args(m, xi_i, xi_j):
    s = edge_shift(m)
    x = s + np.asarray(xi_i, dtype=float)
    y = s + np.asarray(xi_j, dtype=float)
    if np.any(x < 0) or np.any(y < 0):
        raise DomainError(f"rescaled argument below -c1 M^(2/3) = {-s:.4g}")
    return s, x, y


def kernel_rescaled(m: int, xi_i, tau_i: float, xi_j, tau_j: float, k_tail: int = DEFAULT_K_TAIL, tol: float = TAIL_TOL):
    """Edge-rescaled, conjugated kernel
    ``exp((tau_j - tau_i) c1 M^(2/3)) K_M(c1 M^(2/3) + xi_i, 2 tau_i; c1 M^(2/3) + xi_j, 2 tau_j)``.

    The conjugation is folded into the exponent so no intermediate overflows.
    """
    if m < 1:
        raise DomainError("M must be >= 1")
    s, x, y = _rescaled_args(m, xi_i, xi_j)
    out = _spectral_kernel(m, x, y, tau_i - tau_j, 1.0, s, k_tail, False, tol)
    return float(out) if out.ndim == 0 else out


def rescaled_block(m, xi, tau_i, xj, tau_j, k_tail=DEFAULT_K_TAIL, tol=TAIL_TOL):
    s, x, y = _rescaled_args(m, xi, xj)
    return _spectral_kernel(m, x, y, tau_i - tau_j, 1.0, s, k_tail, True, tol)


def semigroup_kernel(t: float, x, y, k_terms: int = DEFAULT_K_TAIL, tol: float = TAIL_TOL):
    """Heat kernel ``sum_k exp(-omega_k t / 2) phi_k(x) phi_k(y)`` of ``H_Ai / 2``."""
    if not t > 0:
        raise DomainError("semigroup time must be positive")
    _nonneg(x, y)
    omega = zeros_and_derivs(1)[0]
    # the tail is certified relative to the leading scale exp(-omega_1 t / 2)
    k_end, _ = certified_stop(2, k_terms, 0.5 * t, float(omega[0]), tol)
    k_end = max(k_end, 1)
    omega = zeros_and_derivs(k_end)[0]
    out = _eigen_sum(1, k_end, np.exp(-0.5 * t * omega[:k_end]), x, y, outer=False)
    return float(out) if out.ndim == 0 else out


def transition_kernel(t: float, x, y, k_terms: int = DEFAULT_K_TAIL):
    """Transition density ``exp(omega_1 t / 2) phi_1(y) / phi_1(x) * semigroup(t, x, y)``."""
    omega1 = zeros_and_derivs(1)[0][0]
    p1x = phi_matrix(1, np.asarray(x, dtype=float))[0]
    p1y = phi_matrix(1, np.asarray(y, dtype=float))[0]
    return math.exp(0.5 * omega1 * t) * p1y / p1x * semigroup_kernel(t, x, y, k_terms)


# --- edge asymptotics --------------------------------------------------------


def edge_index(m: int, lam: float) -> int:
    """Index ``[M - lam c0 M^(1/3)]`` (floor)."""
    return int(math.floor(m - lam * C0 * m ** (1.0 / 3.0)))


def edge_lambda(m: int, k: int) -> float:
    """Grid value ``(M - k) / (c0 M^(1/3))`` attached to integer index k."""
    return (m - k) / (C0 * m ** (1.0 / 3.0))


def edge_eigenfunction(m: int, k: int, xi):
    """``sqrt(c0) M^(1/6) phi_k(c1 M^(2/3) + xi)``, which tends to ``Ai(lambda_k + xi)``."""
    x = edge_shift(m) + np.asarray(xi, dtype=float)
    return math.sqrt(C0) * m ** (1.0 / 6.0) * phi_matrix(k, x)[k - 1]


# --- extended Airy kernel ----------------------------------------------------


def _positive_lambda_rule(gap, cutoff, n_panels=8, n_per_panel=24):
    # e^{-lambda gap} <= e^-40 beyond 40/gap; lambda = u^2 clusters nodes near 0
    length = cutoff if gap <= 0 else min(cutoff, max(40.0 / gap, 1.0))
    rule = uniform_rule(0.0, math.sqrt(length), n_panels, n_per_panel)
    return rule.nodes**2, 2.0 * rule.nodes * rule.weights


def _direct_negative_rule(gap, cutoff, xi_min):
    length = max(cutoff, (23.5 + math.log(1.0 / gap)) / gap)
    if length - xi_min > 200.0:
        raise IllConditionedError(
            f"negative-lambda integral would need cutoff {length:.1f}; Airy argument leaves validity range"
        )
    freq = 2.0 * math.sqrt(max(length - xi_min, 1.0))
    n_panels = max(8, int(math.ceil(length * freq / (3.0 * math.pi))))
    rule = uniform_rule(0.0, length, n_panels, 20)
    return rule.nodes, rule.weights


def _airy_gaussian(xi, xj, gap, outer):
    if outer:
        xi = np.asarray(xi, dtype=float)[:, None]
        xj = np.asarray(xj, dtype=float)[None, :]
    else:
        xi, xj = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(xj, dtype=float))
    return (4 * math.pi * gap) ** -0.5 * np.exp(
        -((xi - xj) ** 2) / (4 * gap) - 0.5 * gap * (xi + xj) + gap**3 / 12.0
    )


def _lambda_integral(xi, xj, lam, w, outer):
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    if outer:
        ai_i = airy_pair(xi.ravel()[:, None] + lam[None, :])[0]
        ai_j = airy_pair(xj.ravel()[:, None] + lam[None, :])[0]
        return (ai_i * w[None, :]) @ ai_j.T
    a, b = np.broadcast_arrays(xi, xj)
    ai_i = airy_pair(a[..., None] + lam)[0]
    ai_j = airy_pair(b[..., None] + lam)[0]
    return np.sum(ai_i * ai_j * w, axis=-1)


def _airy_extended(xi, tau_i, xj, tau_j, cutoff, outer, closed_form):
    gap = tau_i - tau_j
    if gap == 0 and closed_form:
        return airy_kernel_closed_form(xi, xj, outer=outer)
    if gap >= 0:
        lam, w = _positive_lambda_rule(gap, cutoff)
        return _lambda_integral(xi, xj, lam, w * np.exp(-lam * gap), outer)
    gap = -gap
    if gap < MIN_NEGATIVE_GAP:
        raise IllConditionedError(
            f"tau_i < tau_j with gap {gap:.2e} < {MIN_NEGATIVE_GAP:g}: kernel approaches a delta function"
        )
    if gap >= DIRECT_GAP:
        xi_min = float(min(np.min(xi), np.min(xj)))
        mu, w = _direct_negative_rule(gap, cutoff, xi_min)
        return -_lambda_integral(xi, xj, -mu, w * np.exp(-mu * gap), outer)
    # full-line integral is a Gaussian, so the (-inf, 0) piece is that minus the (0, inf) piece
    lam, w = _positive_lambda_rule(0.0, cutoff)
    pos = _lambda_integral(xi, xj, lam, w * np.exp(lam * gap), outer)
    return pos - _airy_gaussian(xi, xj, gap, outer)


def kernel_airy_extended(xi_i, tau_i: float, xi_j, tau_j: float, lambda_cutoff: float = DEFAULT_LAMBDA_CUTOFF):
    """Extended Airy kernel ``K_Ai(xi_i, tau_i; xi_j, tau_j)``, elementwise in xi.

    For ``tau_i >= tau_j`` the lambda-integral over ``(0, inf)`` is done by
    Gauss-Legendre in ``u = sqrt(lambda)``.  For ``tau_i < tau_j`` with gap at
    least 0.25 the oscillatory ``(-inf, 0)`` integral is done directly;
    for smaller gaps it is obtained as the closed-form full-line Gaussian
    minus the ``(0, inf)`` piece.
    """
    out = _airy_extended(xi_i, tau_i, xi_j, tau_j, lambda_cutoff, outer=False, closed_form=False)
    return float(out) if np.ndim(out) == 0 else out


def airy_extended_block(xi, tau_i, xj, tau_j, lambda_cutoff=DEFAULT_LAMBDA_CUTOFF, closed_form=True):
    return _airy_extended(xi, tau_i, xj, tau_j, lambda_cutoff, outer=True, closed_form=closed_form)


def airy_kernel_closed_form(x, y, outer=False):
    """Equal-time Airy kernel ``(Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if outer:
        x = x.ravel()[:, None]
        y = y.ravel()[None, :]
    x, y = np.broadcast_arrays(x, y)
    ax, apx = airy_pair(x)
    ay, apy = airy_pair(y)
    diff = x - y
    same = np.abs(diff) < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        off = (ax * apy - apx * ay) / diff
    # symmetric in (x, y): the midpoint diagonal is accurate to O((x - y)^2)
    xm = 0.5 * (x + y)
    am, apm = airy_pair(xm)
    diag = apm**2 - xm * am**2
    return np.where(same, diag, off)


# --- dispatch -----------------------------------------------------------------


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel to evaluate, with its truncation controls."""

    kind: KernelKind
    m_count: int | None = None
    tail_truncation: int = DEFAULT_K_TAIL
    lambda_cutoff: float = DEFAULT_LAMBDA_CUTOFF
    tail_tol: float = TAIL_TOL

    def __post_init__(self):
        if self.kind not in ("stationary", "extended", "rescaled", "airy_extended", "semigroup"):
            raise DomainError(f"unknown kernel kind {self.kind!r}")
        if self.kind in ("stationary", "extended", "rescaled") and (self.m_count is None or self.m_count < 1):
            raise DomainError(f"kernel kind {self.kind!r} needs m_count >= 1")
        if self.tail_truncation < 1:
            raise DomainError("tail_truncation must be positive")
        if not self.lambda_cutoff > 0:
            raise DomainError("lambda_cutoff must be positive")

    def __call__(self, xi_i, tau_i, xi_j, tau_j):
        k = self.kind
        if k == "stationary":
            return kernel_stationary(self.m_count, xi_i, xi_j)
        if k == "extended":
            return kernel_extended(self.m_count, xi_i, tau_i, xi_j, tau_j, self.tail_truncation, self.tail_tol)
        if k == "rescaled":
            return kernel_rescaled(self.m_count, xi_i, tau_i, xi_j, tau_j, self.tail_truncation, self.tail_tol)
        if k == "airy_extended":
            return kernel_airy_extended(xi_i, tau_i, xi_j, tau_j, self.lambda_cutoff)
        return semigroup_kernel(tau_j - tau_i, xi_i, xi_j, self.tail_truncation, self.tail_tol)

    def block(self, x, tau_i, y, tau_j):
        """Matrix of kernel values on node vectors ``x`` (time ``tau_i``) and ``y`` (time ``tau_j``)."""
        k = self.kind
        if k == "stationary":
            return stationary_block(self.m_count, x, y)
        if k == "extended":
            return extended_block(self.m_count, x, tau_i, y, tau_j, self.tail_truncation, self.tail_tol)
        if k == "rescaled":
            return rescaled_block(self.m_count, x, tau_i, y, tau_j, self.tail_truncation, self.tail_tol)
        if k == "airy_extended":
            return airy_extended_block(x, tau_i, y, tau_j, self.lambda_cutoff)
        t = tau_j - tau_i
        return semigroup_kernel(t, np.asarray(x)[:, None], np.asarray(y)[None, :], self.tail_truncation, self.tail_tol)
