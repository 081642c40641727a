"""Dirichlet eigenfunctions of the Airy operator on the half-line and the
ground states built from them.

``phi(k, x) = Ai(x - omega_k) / |Ai'(-omega_k)|`` solves
``-phi'' + x phi = omega_k phi`` with ``phi(0) = 0`` and unit L2 norm.  The
M-particle ground state is the Slater determinant ``det[phi_i(x_j)]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .airy import airy_pair, log_derivative, zeros_and_derivs
from .errors import DomainError, NearBoundaryError

#: default positivity threshold below which the Dyson drift is refused
BOUNDARY_THRESHOLD = 1e-300


@dataclass(frozen=True)
class OrderedConfiguration:
    """Coordinates ``0 < x_1 < ... < x_M`` in the open Weyl chamber."""

    coords: tuple

    def __init__(self, coords):
        c = tuple(float(v) for v in np.ravel(coords))
        if not c:
            raise DomainError("configuration needs at least one coordinate")
        if not all(np.isfinite(c)):
            raise DomainError("coordinates must be finite")
        if c[0] <= 0 or any(b <= a for a, b in zip(c, c[1:])):
            raise DomainError(f"coordinates must satisfy 0 < x_1 < ... < x_M, got {c}")
        object.__setattr__(self, "coords", c)

    @property
    def m_count(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.array(self.coords)


def _norms(kmax):
    omega, deriv = zeros_and_derivs(kmax)
    return omega, np.abs(deriv)


def phi_matrix(kmax: int, x, *, derivative: bool = False):
    """Rows ``phi_1 .. phi_kmax`` evaluated at the points ``x``.

    Returns an array of shape ``(kmax,) + x.shape``; with ``derivative=True``
    a pair ``(phi, phi')``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("eigenfunctions are defined on x >= 0")
    omega, norm = _norms(kmax)
    shape = (kmax,) + (1,) * x.ndim
    z = x[None, ...] - omega.reshape(shape)
    a, ap = airy_pair(z)
    nrm = norm.reshape(shape)
    val = a / nrm
    # Dirichlet condition is structural, not a rounding outcome
    val = np.where(x[None, ...] == 0.0, 0.0, val)
    if derivative:
        return val, ap / nrm
    return val


def phi(k: int, x):
    """Normalized eigenfunction ``phi_k(x)`` for ``x >= 0``."""
    if k < 1:
        raise DomainError("eigenfunction index must be >= 1")
    out = phi_matrix(k, x)[k - 1]
    return float(out) if np.ndim(x) == 0 else out


def phi_prime(k: int, x):
    if k < 1:
        raise DomainError("eigenfunction index must be >= 1")
    out = phi_matrix(k, x, derivative=True)[1][k - 1]
    return float(out) if np.ndim(x) == 0 else out


def drift_single(x):
    """Drift ``a(x) = Ai'(x - omega_1) / Ai(x - omega_1)`` of the one-particle diffusion."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("drift is singular at the wall; need x > 0")
    omega1 = zeros_and_derivs(1)[0][0]
    out = log_derivative(arr - omega1)
    return float(out) if arr.ndim == 0 else out


def stationary_density_single(x):
    """Stationary density ``rho(x) = phi_1(x)**2`` of the one-particle diffusion."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("density is supported on x >= 0")
    out = phi_matrix(1, x)[0] ** 2
    return float(out) if x.ndim == 0 else out


def _closed_chamber(coords):
    x = np.asarray(coords, dtype=float).ravel()
    if x.size == 0 or not np.all(np.isfinite(x)):
        raise DomainError("coordinates must be a non-empty finite vector")
    if x[0] < 0 or np.any(np.diff(x) < 0):
        raise DomainError("coordinates must be sorted and nonnegative")
    return x


def _coords(cfg):
    if isinstance(cfg, OrderedConfiguration):
        return cfg.as_array()
    return _closed_chamber(cfg)


def log_ground_state_m(cfg) -> tuple[float, float]:
    """``(sign, log|Omega_M|)`` via LU with partial pivoting."""
    x = _coords(cfg)
    if x[0] == 0 or np.any(np.diff(x) == 0):
        return 0.0, -np.inf
    a = phi_matrix(len(x), x)
    sign, logabs = np.linalg.slogdet(a)
    return float(sign), float(logabs)


def ground_state_m(cfg) -> float:
    """Slater determinant ``Omega_M(x) = det[phi_i(x_j)]``.

    Accepts an :class:`OrderedConfiguration` or any sorted nonnegative
    sequence; boundary points of the chamber give exactly 0.
    """
    sign, logabs = log_ground_state_m(cfg)
    return sign * float(np.exp(logabs)) if sign else 0.0


def drift_dyson(cfg, threshold: float = BOUNDARY_THRESHOLD) -> np.ndarray:
    """Gradient of ``log Omega_M`` at a point of the open chamber.

    With ``A[i, j] = phi_i(x_j)`` and ``D[i, j] = phi_i'(x_j)`` the k-th
    component is ``(A^{-1} D)[k, k]``.
    """
    if not isinstance(cfg, OrderedConfiguration):
        cfg = OrderedConfiguration(cfg)
    x = cfg.as_array()
    a, d = phi_matrix(len(x), x, derivative=True)
    sign, logabs = np.linalg.slogdet(a)
    if sign == 0 or logabs < np.log(threshold):
        raise NearBoundaryError(
            f"|Omega_M| = exp({logabs:.1f}) below threshold {threshold:g} at {cfg.coords}"
        )
    return np.diag(np.linalg.solve(a, d)).copy()


def drift_dyson_batch(x, interp=None):
    """Dyson drift for a batch of configurations of shape ``(R, M)``.

    Returns ``(drift, logabs)``; rows outside the open chamber get NaN drift
    and ``-inf`` log-determinant instead of raising.  ``interp`` is an
    optional :class:`~fsairy.airy.AiryInterpolant` used in place of the
    exact Airy routines.
    """
    x = np.asarray(x, dtype=float)
    r, m = x.shape
    omega, norm = _norms(m)
    z = x[:, None, :] - omega[None, :, None]
    if interp is None:
        a, ap = airy_pair(z)
    else:
        a, ap = interp(z)
    a = a / norm[None, :, None]
    ap = ap / norm[None, :, None]
    sign, logabs = np.linalg.slogdet(a)
    ok = (sign != 0) & np.isfinite(logabs)
    ok &= np.all(x > 0, axis=1) & np.all(np.diff(x, axis=1) > 0, axis=1)
    drift = np.full((r, m), np.nan)
    if np.any(ok):
        sol = np.linalg.solve(a[ok], ap[ok])
        drift[ok] = np.diagonal(sol, axis1=1, axis2=2)
    logabs = np.where(ok, logabs, -np.inf)
    return drift, logabs
