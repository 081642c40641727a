"""Samplers for the stationary M-point ensemble and the (Dyson) Ferrari-Spohn
diffusion.

Randomness: every trajectory ``i`` owns its own generator seeded by
``SeedSequence(seed, spawn_key=(i,))``, so results do not depend on how
trajectories are batched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .airy import AiryInterpolant, zeros_and_derivs
from .basis import BOUNDARY_THRESHOLD, OrderedConfiguration, drift_dyson_batch, phi_matrix
from .errors import DomainError, SamplerError, StatisticsError
from .kernels import edge_shift

DPP_GRID_CELLS = 4096
DPP_MAX_M = 64
#: proposal rounds per point before the DPP sampler reports a stall
MAX_DPP_PROPOSALS = 10_000
MAX_RETRIES = 100
#: step halvings allowed when the drift move alone would leave the chamber
MAX_HALVINGS = 12
DEFAULT_BURN_IN = 50.0


def _generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def path_generator(seed: int, index: int) -> np.random.Generator:
    """Independent stream for trajectory ``index`` under master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


# --- determinantal sampling ---------------------------------------------------


def _inverse_linear_cell(a, b, u):
    """Position in [0, 1] with CDF u under the density a + (b - a) s (normalized)."""
    target = u * 0.5 * (a + b)
    disc = np.sqrt(np.maximum(a * a + 2.0 * (b - a) * target, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(a + disc > 0, 2.0 * target / (a + disc), u)
    return np.clip(s, 0.0, 1.0)


def sample_stationary_dpp_batch(m: int, n: int, rng=None, cells: int = DPP_GRID_CELLS,
                                chunk: int = 4096) -> np.ndarray:
    """``n`` independent draws of the stationary M-point configuration.

    The law ``Omega_M(x)^2 / Z_M`` is the projection DPP with kernel
    ``K_M``; points are drawn one at a time from the residual density
    ``|P_perp v(x)|^2`` with ``v(x) = (phi_1(x) .. phi_M(x))`` and ``P_perp``
    the projector orthogonal to the vectors of the points already drawn.
    Each draw proposes from ``|v(x)|^2 = M K_M(x, x)``, tabulated on ``cells``
    cells over ``[0, c1 M^(2/3) + 12]`` and inverted piecewise linearly, and
    accepts with probability ``|P_perp v(x)|^2 / |v(x)|^2``.  Returns a sorted
    array of shape ``(n, m)``.
    """
    if not 1 <= m <= DPP_MAX_M:
        raise DomainError(f"DPP sampler supports 1 <= M <= {DPP_MAX_M}")
    gen = _generator(rng)
    edges = np.linspace(0.0, edge_shift(m) + 12.0, cells + 1)
    h = edges[1] - edges[0]
    dens = np.sum(phi_matrix(m, edges) ** 2, axis=0)
    mass = 0.5 * (dens[:-1] + dens[1:])
    cdf = np.cumsum(mass)

    def propose(k):
        u = gen.random(k) * cdf[-1]
        cell = np.minimum(np.searchsorted(cdf, u, side="right"), cells - 1)
        below = np.where(cell > 0, cdf[cell - 1], 0.0)
        frac = _inverse_linear_cell(dens[cell], dens[cell + 1], (u - below) / mass[cell])
        return edges[cell] + h * frac

    out = np.empty((n, m))
    for start in range(0, n, chunk):
        c = min(chunk, n - start)
        basis = np.zeros((c, m, m))
        pts = np.empty((c, m))
        for i in range(m):
            pending = np.arange(c)
            for _ in range(MAX_DPP_PROPOSALS):
                x = propose(pending.size)
                v = phi_matrix(m, x).T  # (k, m)
                res = v
                if i:
                    b = basis[pending, :i]
                    res = v - np.einsum("kim,ki->km", b, np.einsum("kim,km->ki", b, v))
                r2 = np.sum(res**2, axis=1)
                ok = gen.random(pending.size) * np.sum(v**2, axis=1) < r2
                rows = pending[ok]
                pts[rows, i] = x[ok]
                basis[rows, i] = res[ok] / np.sqrt(r2[ok])[:, None]
                pending = pending[~ok]
                if not pending.size:
                    break
            else:
                raise SamplerError(
                    f"rejection stall: {pending.size} draw(s) of point {i + 1} of {m} unaccepted "
                    f"after {MAX_DPP_PROPOSALS} proposals"
                )
        out[start : start + c] = np.sort(pts, axis=1)
    return out


def sample_stationary_dpp(m: int, rng=None) -> OrderedConfiguration:
    """One exact (up to grid resolution) draw of the stationary configuration."""
    return OrderedConfiguration(sample_stationary_dpp_batch(m, 1, rng)[0])


# --- diffusions ---------------------------------------------------------------


@dataclass(frozen=True)
class PathEnsemble:
    """Recorded trajectories; ``states[p, n, k]`` is particle k of path p at ``times[n]``."""

    m_count: int
    dt: float
    time_step: float
    times: np.ndarray
    states: np.ndarray
    rng_seed: int
    burn_in: float = 0.0
    stationary_start: bool = False
    rejections: int = 0

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    @property
    def burned_in(self) -> bool:
        return self.burn_in > 0 or self.stationary_start

    def ordering_certificate(self) -> bool:
        s = self.states
        return bool(np.all(s[..., 0] > 0) and np.all(np.diff(s, axis=-1) > 0))

    def top(self) -> np.ndarray:
        return self.states[..., -1]


class _GaussianStreams:
    """Buffered standard normals, one independent stream per path."""

    def __init__(self, seed, n_paths, dim, block=4096):
        self.gens = [path_generator(seed, i) for i in range(n_paths)]
        self.block = block
        self.dim = dim
        self.buf = np.stack([g.standard_normal((block, dim)) for g in self.gens])
        self.ptr = np.zeros(n_paths, dtype=np.intp)

    def draw(self, rows):
        rows = np.asarray(rows, dtype=np.intp)
        empty = rows[self.ptr[rows] >= self.block]
        for r in empty:
            self.buf[r] = self.gens[r].standard_normal((self.block, self.dim))
            self.ptr[r] = 0
        z = self.buf[rows, self.ptr[rows]]
        self.ptr[rows] += 1
        return z


def _ordered(x):
    return np.all(x > 0, axis=1) & np.all(np.diff(x, axis=1) > 0, axis=1)


def _chamber_ok(x, logabs, threshold):
    return _ordered(x) & (logabs >= math.log(threshold))


def _simulate(x0, t_end, dt, seed, record_every, burn_in, stationary_start, threshold):
    x = np.array(x0, dtype=float)
    r, m = x.shape
    if not t_end > 0:
        raise DomainError("t_end must be positive")
    if not 0 < dt <= 1e-3:
        raise DomainError("dt must lie in (0, 1e-3]")
    if record_every < 1:
        raise DomainError("record_every must be >= 1")
    n_steps = int(round(t_end / dt))
    omega = zeros_and_derivs(m)[0]
    interp = AiryInterpolant(-omega[-1] - 1.0, max(30.0, 3.0 * edge_shift(m)))
    drift, logabs = drift_dyson_batch(x, interp)
    if not np.all(_chamber_ok(x, logabs, threshold)):
        raise DomainError("initial configuration must lie strictly inside the chamber")
    streams = _GaussianStreams(seed, r, m)
    n_rec = n_steps // record_every + 1
    states = np.empty((r, n_rec, m))
    states[:, 0] = x
    rejections = 0

    def redraw_until_valid(rows, base, h, t):
        nonlocal rejections
        prop = base + math.sqrt(h) * streams.draw(rows)
        d_prop, l_prop = drift_dyson_batch(prop, interp)
        bad = np.nonzero(~_chamber_ok(prop, l_prop, threshold))[0]
        tries = 0
        while bad.size:
            tries += 1
            rejections += bad.size
            if tries > MAX_RETRIES:
                raise SamplerError(
                    f"{bad.size} path(s) still outside the chamber after {MAX_RETRIES} redraws "
                    f"at t={t:.4g}; reduce dt"
                )
            prop[bad] = base[bad] + math.sqrt(h) * streams.draw(rows[bad])
            d_prop[bad], l_prop[bad] = drift_dyson_batch(prop[bad], interp)
            bad = bad[~_chamber_ok(prop[bad], l_prop[bad], threshold)]
        return prop, d_prop

    def halved_step(row, xr, dr, h, t, depth=0):
        # the drift move alone leaves the chamber: split the step
        base = xr + dr * h
        if not _ordered(base[None])[0] and depth < MAX_HALVINGS:
            x1, d1 = halved_step(row, xr, dr, 0.5 * h, t, depth + 1)
            return halved_step(row, x1, d1, 0.5 * h, t, depth + 1)
        prop, d_prop = redraw_until_valid(np.array([row]), base[None], h, t)
        return prop[0], d_prop[0]

    for step in range(1, n_steps + 1):
        base = x + drift * dt
        direct = _ordered(base)
        rows = np.nonzero(direct)[0]
        if rows.size == r:
            x, drift = redraw_until_valid(rows, base, dt, step * dt)
        else:
            x = x.copy()
            drift = drift.copy()
            if rows.size:
                x[rows], drift[rows] = redraw_until_valid(rows, base[rows], dt, step * dt)
            for row in np.nonzero(~direct)[0]:
                x[row], drift[row] = halved_step(row, x[row], drift[row], dt, step * dt)
        if step % record_every == 0:
            states[:, step // record_every] = x
    times = dt * record_every * np.arange(n_rec)
    return PathEnsemble(m, dt, dt * record_every, times, states, seed, burn_in, stationary_start, rejections)


def simulate_dyson_fs(m: int, x0, t_end: float, dt: float, seed: int, *, n_paths: int = 1,
                      record_every: int = 1, burn_in: float = DEFAULT_BURN_IN,
                      threshold: float = BOUNDARY_THRESHOLD) -> PathEnsemble:
    """Euler-Maruyama for M non-intersecting Ferrari-Spohn diffusions.

    Steps ``x + a_M(x) dt + sqrt(dt) N(0, I)``; a proposal leaving the open
    chamber ``0 < x_1 < ... < x_M`` is discarded and its Gaussian vector
    redrawn.  ``x0`` is an ordered configuration (shared by all paths), an
    ``(n_paths, M)`` array, or ``None`` for independent stationary draws.
    """
    stationary = x0 is None
    if stationary:
        x0 = sample_stationary_dpp_batch(m, n_paths, path_generator(seed, n_paths))
    else:
        if isinstance(x0, OrderedConfiguration):
            x0 = x0.as_array()
        x0 = np.asarray(x0, dtype=float)
        if x0.ndim == 1:
            x0 = np.broadcast_to(OrderedConfiguration(x0).as_array(), (n_paths, len(x0)))
        if x0.shape != (n_paths, m):
            raise DomainError(f"x0 must have shape ({n_paths}, {m})")
    return _simulate(x0, t_end, dt, seed, record_every, burn_in, stationary, threshold)


def simulate_fs(x0, t_end: float, dt: float, seed: int, **kwargs) -> PathEnsemble:
    """Single Ferrari-Spohn diffusion, ``dX = a(X) dt + dB`` on ``(0, inf)``."""
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if np.any(x0 <= 0):
            raise DomainError("x0 must be positive")
        x0 = x0.reshape(-1, 1)
        kwargs.setdefault("n_paths", x0.shape[0])
    return simulate_dyson_fs(1, x0, t_end, dt, seed, **kwargs)


# --- statistics -----------------------------------------------------------------


@dataclass(frozen=True)
class TopPathStats:
    s_grid: np.ndarray
    cdf: np.ndarray
    cdf_se: np.ndarray
    #: lag -> (P(top(t) <= s, top(t + lag) <= s) on s_grid, standard errors)
    joint: dict = field(default_factory=dict)
    n_samples: int = 0


def top_path_statistics(ensemble: PathEnsemble, lag_set, s_grid, n_batches: int = 20) -> TopPathStats:
    """Empirical one- and two-time CDFs of the top coordinate after burn-in.

    Standard errors are batch means over contiguous time blocks of every path.
    """
    if not ensemble.burned_in:
        raise StatisticsError("ensemble has neither a burn-in nor a stationary start")
    s_grid = np.asarray(s_grid, dtype=float)
    start = int(math.ceil(ensemble.burn_in / ensemble.time_step - 1e-9))
    top = ensemble.top()[:, start:]
    n_t = top.shape[1]
    lags = {}
    for lag in lag_set:
        k = int(round(lag / ensemble.time_step))
        if abs(k * ensemble.time_step - lag) > 1e-9 * max(1.0, lag):
            raise StatisticsError(f"lag {lag} is not a multiple of the recording step")
        lags[lag] = k
    max_lag = max(lags.values(), default=0)
    usable = n_t - max_lag
    per_batch = usable // n_batches
    if per_batch < max(2, max_lag):
        raise StatisticsError(f"only {usable} usable time points for {n_batches} batches at lag {max_lag}")
    n_use = per_batch * n_batches

    def batch_stats(indicator):
        # indicator: (paths, n_use, ...) -> means and standard errors over all batches
        shape = indicator.shape
        b = indicator.reshape(shape[0] * n_batches, per_batch, *shape[2:]).mean(axis=1)
        return b.mean(axis=0), b.std(axis=0, ddof=1) / math.sqrt(b.shape[0])

    below = top[:, :, None] <= s_grid[None, None, :]
    cdf, se = batch_stats(below[:, :n_use])
    joint = {}
    for lag, k in lags.items():
        joint[lag] = batch_stats(below[:, :n_use] & below[:, k : k + n_use])
    return TopPathStats(s_grid, cdf, se, joint, top.shape[0] * n_use)
