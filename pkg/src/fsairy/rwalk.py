"""Area-tilted random walks above a hard wall.

A walk ``X_{-N}, ..., X_N`` on the positive integers with step law ``p``
and endpoints ``u, v`` gets weight ``exp(-lam * sum_j X_j) prod_j p(X_{j+1} - X_j)``.
All quantities are computed exactly with the symmetric transfer matrix
``T(x, y) = p(y - x) exp(-lam (x + y) / 2)`` on heights ``1..h_max``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import phi_matrix
from .errors import CapacityError, DomainError
from .quadrature import composite_rule

LAZY_STEP_LAW = {-1: 0.25, 0: 0.5, 1: 0.25}
SIMPLE_STEP_LAW = {-1: 0.5, 1: 0.5}
#: largest ordered-state tensor (h_max ** M) handled by the dense M-walk transfer
MAX_DENSE_STATES = 2_000_000
MAX_WALKS = 4


def auto_h_max(lam: float) -> int:
    return int(math.ceil(25.0 * lam ** (-1.0 / 3.0)))


@dataclass(frozen=True)
class WalkModel:
    """Step law, tilt ``lam``, half-length ``n_half`` and height cap."""

    step_law: dict = field(default_factory=lambda: dict(LAZY_STEP_LAW))
    lam: float = 1.0
    n_half: int = 1
    h_max: int | None = None
    u: int = 1
    v: int = 1

    def __post_init__(self):
        law = {int(k): float(p) for k, p in self.step_law.items() if p != 0}
        if not law or any(p < 0 for p in law.values()):
            raise DomainError("step law needs nonnegative probabilities")
        if abs(sum(law.values()) - 1.0) > 1e-12:
            raise DomainError("step probabilities must sum to 1")
        if abs(sum(k * p for k, p in law.items())) > 1e-12:
            raise DomainError("step law must have mean zero")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise DomainError("tilt must be positive and finite")
        if self.n_half < 0:
            raise DomainError("n_half must be nonnegative")
        object.__setattr__(self, "step_law", law)
        if self.h_max is None:
            object.__setattr__(self, "h_max", auto_h_max(self.lam))
        if self.h_max < 1:
            raise DomainError("h_max must be >= 1")
        if not (1 <= self.u <= self.h_max and 1 <= self.v <= self.h_max):
            raise DomainError(f"endpoints must lie in 1..h_max={self.h_max}")

    @property
    def sigma2(self) -> float:
        return sum(k * k * p for k, p in self.step_law.items())

    @property
    def heights(self) -> np.ndarray:
        return np.arange(1, self.h_max + 1)

    def transfer_matrix(self) -> np.ndarray:
        h = self.heights
        p = np.zeros((self.h_max, self.h_max))
        for d, w in self.step_law.items():
            if abs(d) < self.h_max:
                p += w * np.eye(self.h_max, k=d)
        half = np.exp(-0.5 * self.lam * h)
        return half[:, None] * p * half[None, :]

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """``vec @ T`` along the last axis (``T`` is symmetric)."""
        half = np.exp(-0.5 * self.lam * self.heights)
        w = vec * half
        out = np.zeros_like(w)
        n = self.h_max
        for d, p in self.step_law.items():
            # out[y] += p * w[y - d]
            if d >= 0 and d < n:
                out[..., d:] += p * w[..., : n - d]
            elif d < 0 and -d < n:
                out[..., : n + d] += p * w[..., -d:]
        return out * half

    def endpoint_vector(self, h: int) -> np.ndarray:
        e = np.zeros(self.h_max)
        e[h - 1] = math.exp(-0.5 * self.lam * h)
        return e


@dataclass(frozen=True)
class Marginal:
    """Exact law of ``X_k`` and ``log Z`` of the tilted walk."""

    heights: np.ndarray
    probs: np.ndarray
    log_z: float

    def cdf(self, h) -> np.ndarray:
        c = np.concatenate([[0.0], np.cumsum(self.probs)])
        idx = np.clip(np.floor(np.asarray(h, dtype=float)).astype(int), 0, len(self.probs))
        return np.minimum(c[idx], 1.0)


def _propagate(model: WalkModel, vec: np.ndarray, steps: int):
    log_scale = 0.0
    for _ in range(steps):
        vec = model.apply(vec)
        m = vec.max()
        if m == 0:
            return vec, -math.inf
        vec = vec / m
        log_scale += math.log(m)
    return vec, log_scale


def transfer_marginal(model: WalkModel, k: int) -> Marginal:
    """Marginal of ``X_k`` (``-N <= k <= N``) by forward/backward transfer products."""
    n = model.n_half
    if not -n <= k <= n:
        raise DomainError(f"time index must satisfy -N <= k <= N with N={n}")
    if n == 0 and model.u != model.v:
        raise DomainError("a walk without steps needs u == v")
    fwd, lf = _propagate(model, model.endpoint_vector(model.u), k + n)
    bwd, lb = _propagate(model, model.endpoint_vector(model.v), n - k)
    if n == 0:
        # a single site carries the full tilt once, not twice
        fwd = np.zeros(model.h_max)
        fwd[model.u - 1] = 1.0
        bwd = np.zeros(model.h_max)
        bwd[model.v - 1] = math.exp(-model.lam * model.v)
    prod = fwd * bwd
    total = prod.sum()
    if total == 0 or not math.isfinite(lf + lb):
        raise DomainError(f"no admissible path joins u={model.u} to v={model.v} below h_max={model.h_max}")
    return Marginal(model.heights, prod / total, math.log(total) + lf + lb)


def partition_function(model: WalkModel) -> float:
    return math.exp(transfer_marginal(model, 0).log_z)


def scaling_constants(sigma2: float) -> tuple[float, float]:
    """``(alpha, beta)`` with ``alpha lam^(1/3) X_[beta t lam^(-2/3)]`` tending to the FS diffusion.

    Matching ``-(sigma^2 / 2) d^2 + lam x`` to ``(-d^2 + y) / 2`` gives
    ``y = (2 lam / sigma^2)^(1/3) x`` and a time unit of
    ``(4 lam^2 sigma^2)^(-1/3)`` steps.
    """
    s23 = sigma2 ** (1.0 / 3.0)
    return 2.0 ** (1.0 / 3.0) / s23, 1.0 / (s23 * 2.0 ** (2.0 / 3.0))


def scaled_cdf(n: int, t: float, s, step_law=None, alpha: float | None = None) -> np.ndarray:
    """``P(alpha N^(-1/3) X_[beta t N^(2/3)] <= s)`` for the walk with ``lam = 1/N``, ``u = v = 1``."""
    law = dict(step_law or LAZY_STEP_LAW)
    model = WalkModel(law, lam=1.0 / n, n_half=n, u=1, v=1)
    a, b = scaling_constants(model.sigma2)
    if alpha is not None:
        a = alpha
    k = int(math.floor(b * t * n ** (2.0 / 3.0)))
    if abs(k) > n:
        raise DomainError(f"t={t} maps outside the time window for N={n}")
    marg = transfer_marginal(model, k)
    s = np.asarray(s, dtype=float)
    out = marg.cdf(s * n ** (1.0 / 3.0) / a)
    return float(out) if out.ndim == 0 else out


def fs_stationary_cdf(s) -> np.ndarray:
    """``int_0^s phi_1^2`` for the one-particle Ferrari-Spohn diffusion."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty_like(s)
    for i, si in enumerate(s):
        if si <= 0:
            out[i] = 0.0
            continue
        hi = min(si, 40.0)
        rule = composite_rule(np.linspace(0.0, hi, 41), 20)
        out[i] = min(1.0, float(np.dot(rule.weights, phi_matrix(1, rule.nodes)[0] ** 2)))
    return out


def _lgv_exact(model: WalkModel, us, vs) -> bool:
    # vertex-disjoint families are ordered iff walks cannot swap without meeting
    if set(model.step_law) != {-1, 1}:
        return False
    parities = {h % 2 for h in list(us) + list(vs)}
    return len(parities) == 1


def _single_z_matrix(model: WalkModel, us, vs) -> np.ndarray:
    z = np.empty((len(us), len(vs)))
    for i, u in enumerate(us):
        if model.n_half == 0:
            for j, v in enumerate(vs):
                z[i, j] = math.exp(-model.lam * u) if u == v else 0.0
            continue
        vec, ls = _propagate(model, model.endpoint_vector(u), 2 * model.n_half)
        for j, v in enumerate(vs):
            z[i, j] = vec[v - 1] * math.exp(-0.5 * model.lam * v + ls)
    return z


def _dense_ordered(model: WalkModel, us, vs) -> float:
    m = len(us)
    h = model.h_max
    if h**m > MAX_DENSE_STATES:
        raise CapacityError(f"h_max**M = {h**m} exceeds {MAX_DENSE_STATES}")
    grids = np.meshgrid(*([np.arange(h)] * m), indexing="ij")
    ordered = np.ones((h,) * m, dtype=bool)
    for a, b in zip(grids, grids[1:]):
        ordered &= a < b
    state = np.zeros((h,) * m)
    idx = tuple(u - 1 for u in us)
    state[idx] = math.exp(-model.lam * sum(us))
    log_scale = 0.0
    full = np.exp(-model.lam * np.arange(1, h + 1))
    for _ in range(2 * model.n_half):
        for axis in range(m):
            moved = np.moveaxis(state, axis, -1)
            # unsplit step: p then the tilt of the new site
            half = np.exp(-0.5 * model.lam * np.arange(1, h + 1))
            moved = model.apply(moved / half) / half * full
            state = np.moveaxis(moved, -1, axis)
        state = np.where(ordered, state, 0.0)
        mx = state.max()
        if mx == 0:
            return 0.0
        state /= mx
        log_scale += math.log(mx)
    return float(state[tuple(v - 1 for v in vs)] * math.exp(log_scale))


def nonintersecting_weight(model: WalkModel, us, vs, method: str = "auto") -> float:
    """Total weight of ``M`` tilted walks with ``X^1 < ... < X^M`` at all times.

    ``method="lgv"`` evaluates ``det[Z^{u_i v_j}]``, which counts exactly the
    ordered families when walks cannot cross without sharing a site
    (``+-1`` steps, equal-parity endpoints).  ``"dense"`` propagates the
    ordered M-particle state directly; ``"auto"`` picks LGV when it is exact.
    """
    us = [int(u) for u in us]
    vs = [int(v) for v in vs]
    m = len(us)
    if m != len(vs) or m == 0:
        raise DomainError("need matching nonempty endpoint vectors")
    if m > MAX_WALKS:
        raise CapacityError(f"at most {MAX_WALKS} walks supported, got {m}")
    for e in (us, vs):
        if any(b < a for a, b in zip(e, e[1:])):
            raise DomainError("endpoint vectors must be ordered")
        if e[0] < 1 or e[-1] > model.h_max:
            raise DomainError(f"endpoints must lie in 1..h_max={model.h_max}")
    if len(set(us)) < m or len(set(vs)) < m:
        return 0.0
    if method == "auto":
        method = "lgv" if _lgv_exact(model, us, vs) else "dense"
    if method == "lgv":
        if model.h_max > 4096:
            raise CapacityError("h_max too large for dense single-walk kernels")
        return float(np.linalg.det(_single_z_matrix(model, us, vs)))
    if method == "dense":
        return _dense_ordered(model, us, vs)
    raise DomainError(f"unknown method {method!r}")


def enumerate_paths(model: WalkModel, u: int | None = None, v: int | None = None):
    """All admissible height sequences with their weights (brute force, tiny cases only)."""
    u = model.u if u is None else u
    v = model.v if v is None else v
    steps = 2 * model.n_half
    moves = sorted(model.step_law)
    for inc in itertools.product(moves, repeat=steps):
        path = np.concatenate([[u], u + np.cumsum(inc)]).astype(int)
        if path[-1] != v or path.min() < 1 or path.max() > model.h_max:
            continue
        w = math.exp(-model.lam * path.sum())
        for d in inc:
            w *= model.step_law[d]
        yield path, w


def scaled_cdf_sup_error(n: int, t: float = 0.0, step_law=None, alpha: float | None = None) -> float:
    """``sup_s |scaled_cdf(n, t, s) - int_0^s phi_1^2|`` over all real ``s``.

    The scaled CDF is a step function, so the supremum is attained at its
    jump points and is evaluated there from both sides.
    """
    law = dict(step_law or LAZY_STEP_LAW)
    model = WalkModel(law, lam=1.0 / n, n_half=n, u=1, v=1)
    a, b = scaling_constants(model.sigma2)
    if alpha is not None:
        a = alpha
    k = int(math.floor(b * t * n ** (2.0 / 3.0)))
    if abs(k) > n:
        raise DomainError(f"t={t} maps outside the time window for N={n}")
    marg = transfer_marginal(model, k)
    x = a * n ** (-1.0 / 3.0) * marg.heights
    keep = x <= 40.0
    cont = fs_stationary_cdf(x[keep])
    right = np.cumsum(marg.probs)[keep]
    left = right - marg.probs[keep]
    tail = 1.0 - np.sum(marg.probs[keep])
    return float(max(np.max(np.abs(right - cont)), np.max(np.abs(left - cont)), tail))
