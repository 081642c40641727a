"""Real Airy function Ai, its derivative, and the zeros of Ai on the negative axis.

Pointwise values come from the Cephes/AMOS routines in :mod:`scipy.special`.
The zeros are computed here: seeded by the large-order expansion and polished
by a safeguarded Newton iteration.  For hot loops (SDE stepping) a cubic
Hermite table, :class:`AiryInterpolant`, trades a 1e-12 interpolation error
for an order of magnitude in speed.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import CapacityError, DomainError

#: documented validity range |x| <= X_MAX
X_MAX = 200.0
#: absolute accuracy of the tabulated zeros, measured as |Ai(-omega_k)|
ZERO_TOL = 1e-11
#: omega_600 ~ 199.9 is the last zero inside the validity range
MAX_ZEROS = 600

AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)


def _check(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("Airy argument must be finite")
    if np.any(np.abs(arr) > X_MAX):
        raise DomainError(f"Airy argument outside validity range |x| <= {X_MAX}")
    return arr


def _scalar_or_array(arr, out):
    return float(out) if np.ndim(arr) == 0 else out


def airy_pair(z):
    """Return ``(Ai(z), Ai'(z))`` without range checks.

    Arguments above ``X_MAX`` return exact zeros (the true values underflow
    double precision there anyway).
    """
    z = np.asarray(z, dtype=float)
    a, ap, _, _ = special.airy(np.minimum(z, X_MAX))
    big = z > X_MAX
    if np.any(big):
        a = np.where(big, 0.0, a)
        ap = np.where(big, 0.0, ap)
    return a, ap


def ai(x):
    """Airy function Ai(x) for real ``x`` with ``|x| <= 200``."""
    arr = _check(x)
    return _scalar_or_array(arr, airy_pair(arr)[0])


def ai_prime(x):
    """Derivative Ai'(x) for real ``x`` with ``|x| <= 200``."""
    arr = _check(x)
    return _scalar_or_array(arr, airy_pair(arr)[1])


def log_derivative(z):
    """Ai'(z)/Ai(z), stable for large positive ``z`` via the scaled functions."""
    z = np.asarray(z, dtype=float)
    # the scaled routines are only defined for z >= 0
    a, ap, _, _ = special.airy(np.minimum(z, 0.0))
    eai, eaip, _, _ = special.airye(np.maximum(z, 0.0))
    return np.where(z > 0, eaip / eai, ap / a)


# --- zeros ------------------------------------------------------------------


def _f_two_term(z):
    return z ** (2.0 / 3.0) * (1.0 + 5.0 / (48.0 * z * z))


def _f1_two_term(z):
    return z ** (1.0 / 6.0) / math.sqrt(math.pi) * (1.0 + 5.0 / (48.0 * z * z))


def _f_seed(z):
    # higher-order terms of the same expansion; only used to seed Newton
    t = z ** -2
    return z ** (2.0 / 3.0) * (
        1.0
        + 5.0 / 48.0 * t
        - 5.0 / 36.0 * t**2
        + 77125.0 / 82944.0 * t**3
        - 108056875.0 / 6967296.0 * t**4
    )


def _z_of(k):
    return 1.5 * math.pi * (k - 0.25)


def asymptotic_zero(k: int) -> tuple[float, float]:
    """Two-term large-order approximation of ``(omega_k, Ai'(-omega_k))``.

    The derivative carries the exact sign ``(-1)**(k-1)``.
    """
    if k < 1:
        raise DomainError("zero index must be >= 1")
    z = _z_of(k)
    sign = 1.0 if k % 2 == 1 else -1.0
    return _f_two_term(z), sign * _f1_two_term(z)


def _polish_zero(k: int) -> float:
    seed = _f_seed(_z_of(k))
    half = 0.3 * math.pi / math.sqrt(seed)
    lo, hi = seed - half, seed + half
    flo, fhi = ai(-lo), ai(-hi)
    while flo * fhi > 0:
        half *= 1.5
        lo, hi = seed - half, seed + half
        flo, fhi = ai(-lo), ai(-hi)
    w = seed
    for _ in range(100):
        a, ap = airy_pair(-w)
        a, ap = float(a), float(ap)
        if a == 0.0:
            break
        if (a > 0) == (flo > 0):
            lo, flo = w, a
        else:
            hi = w
        step = a / ap if ap != 0.0 else math.inf
        w_new = w + step
        if not lo < w_new < hi:
            w_new = 0.5 * (lo + hi)
        if abs(w_new - w) <= 4e-16 * w:
            w = w_new
            break
        w = w_new
    return w


@dataclass(frozen=True)
class AiryZeroTable:
    """Magnitudes ``omega_k`` of the first zeros of Ai and ``Ai'(-omega_k)``."""

    max_index: int
    zeros: np.ndarray
    deriv_at_zero: np.ndarray
    tol: float = ZERO_TOL

    def __post_init__(self):
        self.zeros.setflags(write=False)
        self.deriv_at_zero.setflags(write=False)


_table: AiryZeroTable | None = None
_table_lock = threading.Lock()


def zero_table(max_index: int) -> AiryZeroTable:
    """Return a table holding at least ``max_index`` zeros (built lazily, cached)."""
    global _table
    if max_index < 1:
        raise DomainError("max_index must be >= 1")
    if max_index > MAX_ZEROS:
        raise CapacityError(
            f"requested {max_index} Airy zeros; table capacity is {MAX_ZEROS}"
        )
    table = _table
    if table is not None and table.max_index >= max_index:
        return table
    with _table_lock:
        table = _table
        if table is not None and table.max_index >= max_index:
            return table
        # grow geometrically so repeated small extensions stay cheap
        n = min(MAX_ZEROS, max(max_index, 64, 2 * (table.max_index if table else 0)))
        start = table.max_index if table else 0
        new = np.array([_polish_zero(k) for k in range(start + 1, n + 1)])
        zeros = np.concatenate([table.zeros, new]) if table else new
        deriv = airy_pair(-zeros)[1]
        table = AiryZeroTable(n, zeros, np.asarray(deriv, dtype=float))
        _table = table
        return table


def airy_zero(k: int) -> tuple[float, float]:
    """Return ``(omega_k, Ai'(-omega_k))`` for the k-th zero ``-omega_k`` of Ai."""
    if k < 1:
        raise DomainError("zero index must be >= 1")
    t = zero_table(k)
    return float(t.zeros[k - 1]), float(t.deriv_at_zero[k - 1])


def zeros_and_derivs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """First ``n`` zeros and derivatives as arrays (views into the cached table)."""
    t = zero_table(n)
    return t.zeros[:n], t.deriv_at_zero[:n]


# --- fast tabulated evaluation ----------------------------------------------


class AiryInterpolant:
    """Cubic Hermite table of Ai and Ai' on ``[lo, hi]``.

    Ai'' = z Ai and Ai''' = Ai + z Ai' are exact, so both functions are
    interpolated from exact values and exact slopes.  The error is
    O(h^4 z^2); the default spacing gives about 1e-12 on |z| <= 10.
    Outside the table the exact routines are used.
    """

    def __init__(self, lo: float, hi: float, h: float = 2e-3):
        if not lo < hi:
            raise DomainError("empty interpolation range")
        n = int(math.ceil((hi - lo) / h))
        self.lo = float(lo)
        self.h = (hi - lo) / n
        self.hi = self.lo + n * self.h
        z = self.lo + self.h * np.arange(n + 1)
        a, ap = airy_pair(z)
        self._a = a
        self._ap = ap
        self._app = z * a

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        u = (z - self.lo) / self.h
        inside = (u >= 0) & (u <= len(self._a) - 1)
        i = np.clip(np.floor(u).astype(np.intp), 0, len(self._a) - 2)
        s = np.clip(u - i, 0.0, 1.0)
        s2 = s * s
        s3 = s2 * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        h = self.h
        a = h00 * self._a[i] + h10 * h * self._ap[i] + h01 * self._a[i + 1] + h11 * h * self._ap[i + 1]
        ap = (
            h00 * self._ap[i]
            + h10 * h * self._app[i]
            + h01 * self._ap[i + 1]
            + h11 * h * self._app[i + 1]
        )
        if not np.all(inside):
            ea, eap = airy_pair(z[~inside])
            a = np.array(a)
            ap = np.array(ap)
            a[~inside] = ea
            ap[~inside] = eap
        return a, ap
