"""Exact Gaussian sampling of X on a time grid and the path functionals.

Between grid points the strong solution gives

    X_{t+} = a X_t + eps,   a = exp(alpha (L(t+) - L(t)) / 2),   eps ~ N(0, v)

with ``L = log B``.  The transition variance ``v`` is the variance of the same
process restarted at ``t`` from zero, which in closed form is
``d(t+) * l * (e^x - 1) / x`` with ``l = L(t+) - L(t)`` and ``x = (alpha - K) l``.
It is positive by construction, so no difference of two variances is formed.

Every path owns a Philox stream keyed by (seed, stream id); batches of paths
are bit-identical to the corresponding single-path draws.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .closedform import _expm1_over_x
from .model import Model, ModelError

__all__ = [
    "TimeGrid",
    "PathSample",
    "PathBatch",
    "WienerFunctionals",
    "path_rng",
    "time_at_tail",
    "transition_coefficients",
    "q_weight",
    "sample_path",
    "sample_paths",
    "accumulate_Q",
    "ito_integral",
    "stochastic_integral_identity",
    "sample_wiener_functionals",
    "sample_wiener_batch",
    "default_workers",
]

_WIENER_DOMAIN = 0x5DEECE66D1F3A7B9
_CHUNK = 4096


def path_rng(seed: int, stream: int) -> np.random.Generator:
    """Generator for substream ``stream`` of ``seed`` (both in [0, 2^64))."""
    seed, stream = int(seed), int(stream)
    if not (0 <= seed < 2**64 and 0 <= stream < 2**64):
        raise ModelError("seed and stream must lie in [0, 2^64)")
    return np.random.Generator(np.random.Philox(key=seed + (stream << 64)))


def default_workers() -> int:
    raw = os.environ.get("SDELAPLACE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ModelError(f"SDELAPLACE_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def time_at_tail(model: Model, tail):
    """The time t with int_t^T sigma^2 = tail (finite S(T) only)."""
    tail = np.asarray(tail, dtype=float)
    if not math.isfinite(model.S_T):
        raise ModelError("time_at_tail needs a finite S(T)")
    if np.any(tail <= 0) or np.any(tail > model.S_T):
        raise ModelError("tail must lie in (0, S(T)]")
    if model.vol.kind == "constant" and math.isfinite(model.T):
        t = model.T - tail / model.vol.level**2
    else:
        t = model.vol.inverse_cumulative(model.S_T - tail)
    return np.clip(t, 0.0, None)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing observation times starting at 0."""

    points: np.ndarray
    refinement: str = "uniform"
    ratio: float | None = None

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ModelError("a grid needs at least two points")
        if p[0] != 0.0:
            raise ModelError("grid must start at 0")
        if np.any(np.diff(p) <= 0) or not np.all(np.isfinite(p)):
            raise ModelError("grid points must be finite and strictly increasing")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @property
    def t_end(self) -> float:
        return float(self.points[-1])

    @property
    def steps(self) -> int:
        return self.points.size - 1

    def check(self, model: Model) -> "TimeGrid":
        if self.t_end >= model.T:
            raise ModelError(f"grid ends at {self.t_end} >= T={model.T}")
        return self

    @classmethod
    def uniform(cls, t_end: float, steps: int) -> "TimeGrid":
        if steps < 1 or not t_end > 0:
            raise ModelError("need steps >= 1 and t_end > 0")
        return cls(np.linspace(0.0, t_end, steps + 1), "uniform")

    @classmethod
    def geometric(cls, model: Model, t_end: float, steps: int) -> "TimeGrid":
        """Points whose remaining variance int_t^T sigma^2 shrinks geometrically."""
        if not model.is_terminal:
            raise ModelError("geometric grids are for terminal-form models")
        if steps < 1 or not 0 < t_end < model.T:
            raise ModelError("need steps >= 1 and 0 < t_end < T")
        end_tail = float(model.tail(t_end))
        ratio = (end_tail / model.S_T) ** (1.0 / steps)
        tails = model.S_T * ratio ** np.arange(steps + 1)
        pts = time_at_tail(model, tails)
        pts[0], pts[-1] = 0.0, t_end
        keep = np.concatenate([[True], np.diff(pts) > 0])
        return cls(pts[keep], "geometric", ratio)

    @classmethod
    def toward_T(cls, model: Model, delta: float, steps: int) -> "TimeGrid":
        """Geometric grid ending where int_t^T sigma^2 = delta * S(T)."""
        if not 0 < delta < 1:
            raise ModelError("delta must lie in (0, 1)")
        return cls.geometric(model, float(time_at_tail(model, delta * model.S_T)), steps)

    @classmethod
    def for_model(cls, model: Model, t_end: float, steps: int) -> "TimeGrid":
        if model.is_terminal:
            return cls.geometric(model, t_end, steps)
        return cls.uniform(t_end, steps)

    def including(self, times) -> "TimeGrid":
        """This grid with ``times`` added as exact points."""
        extra = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(extra < 0) or np.any(extra > self.t_end):
            raise ModelError("included times must lie in [0, t_end]")
        pts = np.union1d(self.points, extra)
        # drop grid points that sit on top of a requested time
        scale = max(self.t_end, 1.0) * 1e-13
        near = np.min(np.abs(pts[:, None] - extra[None, :]), axis=1) < scale
        is_extra = np.isin(pts, extra)
        pts = pts[~near | is_extra]
        return TimeGrid(pts, self.refinement, self.ratio)

    def index_of(self, times) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        idx = np.searchsorted(self.points, times)
        idx = np.clip(idx, 0, self.points.size - 1)
        if not np.array_equal(self.points[idx], times):
            raise ModelError(f"times {times} are not grid points")
        return idx


def transition_coefficients(model: Model, grid: TimeGrid):
    """Per-step AR coefficient ``a_i`` and noise standard deviation ``sqrt(v_i)``."""
    grid.check(model)
    L = np.asarray(model.log_B(grid.points), dtype=float)
    d = np.asarray(model.affine(grid.points), dtype=float)
    ell = np.diff(L)
    a = np.exp(0.5 * model.alpha * ell)
    v = d[1:] * ell * _expm1_over_x((model.alpha - model.K) * ell)
    if np.any(~np.isfinite(v)) or np.any(v < 0):
        raise ModelError("transition variance is not a finite nonnegative number")
    return a, np.sqrt(v)


def q_weight(model: Model, t):
    """b(t)^2 / sigma(t)^2 = sigma^2 / (4 d^2)."""
    d = model.affine(t)
    return model.sigma2(t) / (4.0 * d * d)


@dataclass(frozen=True, eq=False)
class PathSample:
    grid: TimeGrid
    values: np.ndarray
    Q: np.ndarray
    seed: int
    stream: int

    @property
    def t(self) -> float:
        return self.grid.t_end


@dataclass(frozen=True, eq=False)
class PathBatch:
    """X_t and Q_t of many paths recorded at selected grid times.

    Row ``j`` belongs to stream ``first_stream + j``.
    """

    times: np.ndarray
    X: np.ndarray
    Q: np.ndarray
    seed: int
    first_stream: int

    @property
    def n_paths(self) -> int:
        return self.X.shape[0]

    def at(self, t: float):
        hit = np.flatnonzero(self.times == t)
        if hit.size == 0:
            raise ModelError(f"time {t} was not recorded")
        return self.X[:, hit[0]], self.Q[:, hit[0]]


def _normals(seed: int, streams: range, steps: int) -> np.ndarray:
    z = np.empty((len(streams), steps))
    for row, s in enumerate(streams):
        z[row] = path_rng(seed, s).standard_normal(steps)
    return z


def _run_chunk(a, sd, h, w, record, seed, streams):
    z = _normals(seed, streams, a.size)
    n = len(streams)
    x = np.zeros(n)
    q = np.zeros(n)
    fx = w[0] * (x * x)
    out_x = np.empty((n, record.size))
    out_q = np.empty((n, record.size))
    slot = {int(i): k for k, i in enumerate(record)}
    if 0 in slot:
        out_x[:, slot[0]] = 0.0
        out_q[:, slot[0]] = 0.0
    for i in range(a.size):
        x = a[i] * x + sd[i] * z[:, i]
        fx_new = w[i + 1] * (x * x)
        q = q + 0.5 * h[i] * (fx + fx_new)
        fx = fx_new
        k = slot.get(i + 1)
        if k is not None:
            out_x[:, k] = x
            out_q[:, k] = q
    return out_x, out_q


def sample_paths(
    model: Model,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    at=None,
    first_stream: int = 0,
    workers: int | None = None,
) -> PathBatch:
    """Simulate ``n_paths`` independent paths and record (X, Q) at ``at``.

    ``at`` defaults to the last grid point and must consist of grid points.
    Chunks may run on several threads; the output does not depend on that.
    """
    if n_paths < 1:
        raise ModelError("n_paths must be positive")
    times = np.array([grid.t_end]) if at is None else np.atleast_1d(np.asarray(at, dtype=float))
    record = grid.index_of(times)
    a, sd = transition_coefficients(model, grid)
    h = np.diff(grid.points)
    w = np.asarray(q_weight(model, grid.points), dtype=float)
    bounds = [(s, min(s + _CHUNK, n_paths)) for s in range(0, n_paths, _CHUNK)]

    def job(b):
        lo, hi = b
        return _run_chunk(a, sd, h, w, record, seed, range(first_stream + lo, first_stream + hi))

    workers = default_workers() if workers is None else max(1, int(workers))
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, bounds))
    else:
        parts = [job(b) for b in bounds]
    X = np.concatenate([p[0] for p in parts])
    Q = np.concatenate([p[1] for p in parts])
    return PathBatch(times, X, Q, int(seed), int(first_stream))


def sample_path(model: Model, grid: TimeGrid, rng_stream: int, seed: int = 0) -> PathSample:
    """One path on the whole grid, with the running trapezoid of (b^2/sigma^2) X^2."""
    a, sd = transition_coefficients(model, grid)
    z = path_rng(seed, rng_stream).standard_normal(a.size)
    x = np.zeros(grid.points.size)
    for i in range(a.size):
        x[i + 1] = a[i] * x[i] + sd[i] * z[i]
    return PathSample(grid, x, _running_q(model, grid, x), int(seed), int(rng_stream))


def _running_q(model: Model, grid: TimeGrid, values) -> np.ndarray:
    w = np.asarray(q_weight(model, grid.points), dtype=float)
    x = np.asarray(values, dtype=float)
    f = w * (x * x)
    q = np.zeros(f.size)
    h = np.diff(grid.points)
    acc = 0.0
    for i in range(h.size):
        acc = acc + 0.5 * h[i] * (f[i] + f[i + 1])
        q[i + 1] = acc
    return q


def accumulate_Q(model: Model, path: PathSample) -> float:
    """Trapezoid of (b^2/sigma^2) X^2 over the path's grid, at its last point."""
    return float(_running_q(model, path.grid, path.values)[-1])


def ito_integral(model: Model, t: float, X, Q):
    """int_0^t (b/sigma^2) X dX = (1/2)((b/sigma^2)(t) X_t^2 + 2K Q_t - int_0^t b).

    The identity follows from Ito's formula for (b/sigma^2) X^2 together with
    d/dt(b/sigma^2) = -2K b^2/sigma^2, so no stochastic sum is formed.
    """
    X = np.asarray(X, dtype=float)
    Q = np.asarray(Q, dtype=float)
    b_over_s2 = 1.0 / (2.0 * float(model.affine(t)))
    int_b = 0.5 * float(model.log_B(t))
    out = 0.5 * (b_over_s2 * X * X + 2.0 * model.K * Q - int_b)
    return float(out) if out.ndim == 0 else out


def stochastic_integral_identity(model: Model, path: PathSample) -> float:
    return ito_integral(model, path.t, path.values[-1], path.Q[-1])


@dataclass(frozen=True)
class WienerFunctionals:
    W1: float
    intW2: float
    intWdW: float


def _wiener_seed(seed: int) -> int:
    return int(seed) ^ _WIENER_DOMAIN


def _wiener_from_normals(z: np.ndarray):
    steps = z.shape[-1]
    w = np.cumsum(z / math.sqrt(steps), axis=-1)
    w1 = w[..., -1]
    inner = np.sum(w[..., :-1] ** 2, axis=-1)
    int_w2 = (inner + 0.5 * w1 * w1) / steps
    return w1, int_w2, 0.5 * (w1 * w1 - 1.0)


def sample_wiener_functionals(steps: int, rng_stream: int, seed: int = 0) -> WienerFunctionals:
    """W_1, int_0^1 W^2 (trapezoid over ``steps`` uniform increments) and int W dW."""
    if steps < 2:
        raise ModelError("steps must be >= 2")
    z = path_rng(_wiener_seed(seed), rng_stream).standard_normal(steps)
    w1, i2, iwdw = _wiener_from_normals(z[None, :])
    return WienerFunctionals(float(w1[0]), float(i2[0]), float(iwdw[0]))


def sample_wiener_batch(n: int, steps: int, seed: int, first_stream: int = 0):
    """Arrays (W1, intW2, intWdW) for streams first_stream .. first_stream + n - 1.

    The streams live in a separate seed domain from the path streams, so the
    reference sample is independent of paths drawn with the same seed.
    """
    if steps < 2 or n < 1:
        raise ModelError("need steps >= 2 and n >= 1")
    w1, i2, iwdw = [], [], []
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        z = _normals(_wiener_seed(seed), range(first_stream + lo, first_stream + hi), steps)
        a, b, c = _wiener_from_normals(z)
        w1.append(a)
        i2.append(b)
        iwdw.append(c)
    return np.concatenate(w1), np.concatenate(i2), np.concatenate(iwdw)
