"""Gauss-Legendre rules and the composite rules built from them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError

MAX_NODES = 2048


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights on ``[lower, upper]``.

    ``upper`` may be ``math.inf`` for a truncated semi-infinite rule; the nodes
    then cover ``(lower, lower + length]`` and ``truncation_bound`` records
    the neglected mass for integrands dominated by ``exp(-x / decay_scale)``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    lower: float
    upper: float
    truncation_bound: float = 0.0
    length: float = field(default=math.nan)

    def __post_init__(self):
        if math.isnan(self.length):
            object.__setattr__(self, "length", self.upper - self.lower)

    def __len__(self):
        return len(self.nodes)

    def integrate(self, f):
        return float(np.dot(self.weights, f(self.nodes)))


@lru_cache(maxsize=64)
def _legendre_nodes(n: int):
    k = np.arange(1, n + 1)
    # Tricomi's initial guess, accurate to O(n^-4)
    x = (1 - (n - 1) / (8.0 * n**3)) * np.cos(np.pi * (4 * k - 1) / (4 * n + 2))
    for _ in range(100):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for j in range(2, n + 1):
            p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
        # p1 = P_n(x), p0 = P_{n-1}(x)
        dp = n * (x * p1 - p0) / (x * x - 1)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    p0 = np.ones_like(x)
    p1 = x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    dp = n * (x * p1 - p0) / (x * x - 1)
    w = 2.0 / ((1 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule on [-1, 1] (Newton on the three-term recurrence)."""
    if not 1 <= n <= MAX_NODES:
        raise DomainError(f"number of nodes must be in [1, {MAX_NODES}]")
    if n == 1:
        return QuadratureRule(np.array([0.0]), np.array([2.0]), -1.0, 1.0)
    x, w = _legendre_nodes(n)
    return QuadratureRule(x, w, -1.0, 1.0)


def map_to_interval(rule: QuadratureRule, a: float, b: float) -> QuadratureRule:
    """Affine image of a rule on [-1, 1] onto [a, b]."""
    if not a < b:
        raise DomainError("interval must satisfy a < b")
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    scale = half / (0.5 * (rule.upper - rule.lower))
    centre = 0.5 * (rule.upper + rule.lower)
    return QuadratureRule(mid + scale * (rule.nodes - centre), scale * rule.weights, a, b)


def composite_rule(edges, n_per_panel: int) -> QuadratureRule:
    """Gauss-Legendre with ``n_per_panel`` nodes on each ``[edges[i], edges[i+1]]``."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise DomainError("panel edges must be strictly increasing")
    base = gauss_legendre(n_per_panel)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    nodes = (mid + half * base.nodes[None, :]).ravel()
    weights = (half * base.weights[None, :]).ravel()
    return QuadratureRule(nodes, weights, float(edges[0]), float(edges[-1]))


def uniform_rule(a: float, b: float, n_panels: int, n_per_panel: int) -> QuadratureRule:
    return composite_rule(np.linspace(a, b, n_panels + 1), n_per_panel)


def geometric_edges(s: float, length: float, n_panels: int, growth: float = 1.5):
    """Panel edges on ``[s, s + length]`` with widths growing by ``growth``."""
    widths = growth ** np.arange(n_panels)
    widths *= length / widths.sum()
    return s + np.concatenate([[0.0], np.cumsum(widths)])


def semiinfinite_rule(
    s: float,
    decay_scale: float = 1.0,
    n_panels: int = 8,
    n_per_panel: int = 40,
    length: float | None = None,
    growth: float = 1.5,
) -> QuadratureRule:
    """Composite rule for integrals over ``(s, inf)`` truncated at ``s + length``.

    The default length is ``46 * decay_scale``, so the recorded truncation
    bound ``exp(-length / decay_scale)`` is about 1e-20.
    """
    if decay_scale <= 0:
        raise DomainError("decay_scale must be positive")
    if length is None:
        length = 46.0 * decay_scale
    rule = composite_rule(geometric_edges(s, length, n_panels, growth), n_per_panel)
    return QuadratureRule(
        rule.nodes,
        rule.weights,
        float(s),
        math.inf,
        truncation_bound=math.exp(-length / decay_scale),
        length=float(length),
    )
