"""Direct sampling indicator, total-focusing baseline, noise model and peak extraction."""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .forward.traces import TraceSet
from .scene import ReceiverArray, SamplingGrid, SourceSpec

_MIN_RECEIVER_DISTANCE = 1e-9

# prefer OpenMP: it is thread-safe and avoids the version probe of an old TBB
numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]


@dataclass(frozen=True)
class IndicatorGrid:
    """Indicator values on a sampling grid, flat in x-fastest order.

    ``method`` is ``"dsm"`` (quadratic in the data) or ``"tfm"`` (linear).
    """

    grid: SamplingGrid
    values: np.ndarray = field(repr=False)
    sigma: float = 0.0
    T: float = 0.0
    method: str = "dsm"
    provenance: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {vals.size}")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("indicator values must be finite and non-negative")
        object.__setattr__(self, "values", vals)

    @property
    def array(self) -> np.ndarray:
        """Values reshaped to ``grid.shape`` (axis 0 is x)."""
        return self.values.reshape(self.grid.shape, order="F")

    @property
    def homogeneity(self) -> str:
        return "linear" if self.method == "tfm" else "quadratic"


def trace_id(traces: TraceSet) -> str:
    h = hashlib.sha256(np.ascontiguousarray(traces.values).tobytes())
    h.update(repr(traces.dt).encode())
    return h.hexdigest()[:16]


def sample_trace_delayed(traces: TraceSet, m: int, t) -> np.ndarray:
    """Linearly interpolated trace of receiver ``m`` at time(s) ``t``.

    Zero for t < 0 and after the last recorded sample.  Returns shape
    ``np.shape(t) + (n_components,)``.
    """
    t = np.asarray(t, dtype=float)
    vals = traces.values[m]
    n_last = traces.n_samples - 1
    s = t / traces.dt
    i0 = np.floor(s).astype(np.int64)
    frac = (s - i0)[..., None]
    inside = (s >= 0) & (s <= n_last)
    i0c = np.clip(i0, 0, n_last)
    i1c = np.clip(i0 + 1, 0, n_last)
    out = (1.0 - frac) * vals[i0c] + frac * vals[i1c]
    return np.where(inside[..., None], out, 0.0)


@numba.njit(cache=True, inline="always")
def _interp(vals, m, j, frac, c, n_rec):
    if j < 0 or j > n_rec - 1:
        return 0.0
    if j == n_rec - 1:
        return vals[m, j, c] if frac == 0.0 else 0.0
    return (1.0 - frac) * vals[m, j, c] + frac * vals[m, j + 1, c]


@numba.njit(parallel=True, cache=True)
def _dsm_kernel(vals, dt, n_t, pos, z, weights, sigma, c0, out):
    n_rec_m, n_rec, n_c = vals.shape
    dim = pos.shape[1]
    damp = sigma != 0.0
    for k in numba.prange(z.shape[0]):
        acc = np.zeros((n_t, n_c))
        for m in range(n_rec_m):
            r2 = 0.0
            for d in range(dim):
                r2 += (pos[m, d] - z[k, d]) ** 2
            r = math.sqrt(r2)
            delay = r / c0
            coef = weights[m] / (4.0 * math.pi * r)
            s = delay / dt
            shift = int(math.floor(s))
            frac = s - shift
            # only n with 0 <= n + shift <= n_rec - 1 can be non-zero
            n_hi = min(n_t, n_rec - shift)
            for n in range(max(0, -shift), n_hi):
                j = n + shift
                f = coef
                if damp:
                    f *= math.exp(-sigma * (n * dt + delay))
                for c in range(n_c):
                    acc[n, c] += f * _interp(vals, m, j, frac, c, n_rec)
        total = 0.0
        for n in range(n_t):
            for c in range(n_c):
                total += acc[n, c] * acc[n, c]
        out[k] = dt * total


@numba.njit(parallel=True, cache=True)
def _tfm_kernel(vals, dt, t0, pos, src, z, weights, c0, out):
    n_rec_m, n_rec, n_c = vals.shape
    dim = pos.shape[1]
    for k in numba.prange(z.shape[0]):
        rs2 = 0.0
        for d in range(dim):
            rs2 += (src[d] - z[k, d]) ** 2
        acc = np.zeros(n_c)
        for m in range(n_rec_m):
            r2 = 0.0
            for d in range(dim):
                r2 += (pos[m, d] - z[k, d]) ** 2
            s = (t0 + (math.sqrt(r2) + math.sqrt(rs2)) / c0) / dt
            j = int(math.floor(s))
            frac = s - j
            for c in range(n_c):
                acc[c] += weights[m] * _interp(vals, m, j, frac, c, n_rec)
        total = 0.0
        for c in range(n_c):
            total += acc[c] * acc[c]
        out[k] = math.sqrt(total)


def _check_inputs(traces: TraceSet, receivers: ReceiverArray, grid: SamplingGrid, z: np.ndarray):
    if grid.dim != receivers.dim:
        raise ValueError("grid dimension does not match the receiver layout")
    if traces.n_receivers != receivers.count or not np.allclose(traces.positions, receivers.positions, rtol=0, atol=1e-12):
        raise ValueError("traces were not recorded at these receivers")
    for m, x in enumerate(receivers.positions):
        d = np.linalg.norm(z - x, axis=1)
        if d.min() < _MIN_RECEIVER_DISTANCE:
            raise ValueError(f"sampling point {z[d.argmin()]} lies on receiver {m}")


def _as_c(a):
    return np.ascontiguousarray(a, dtype=float)


def time_indicator(
    traces: TraceSet,
    receivers: ReceiverArray,
    grid: SamplingGrid,
    sigma: float = 0.0,
    c0: float = 299792458.0,
    T: float | None = None,
    points: np.ndarray | None = None,
) -> IndicatorGrid | np.ndarray:
    """Time-domain direct sampling indicator on ``grid``.

    Sums ``dt * sum_n |sum_m w_m E(x_m, t_n + r/c0) e^{-sigma (t_n + r/c0)} / (4 pi r)|^2``
    over the samples ``t_n`` in [0, T].  With ``points`` given, the indicator
    is evaluated there instead and a plain array is returned.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    T = traces.duration if T is None else T
    if T > traces.duration * (1 + 1e-9):
        raise ValueError(f"T = {T} exceeds the recorded duration {traces.duration}")
    n_t = int(math.floor(T / traces.dt + 1e-9)) + 1
    z = grid.points if points is None else np.atleast_2d(np.asarray(points, dtype=float))
    _check_inputs(traces, receivers, grid, z)
    out = np.empty(z.shape[0])
    _dsm_kernel(_as_c(traces.values), float(traces.dt), n_t, _as_c(receivers.positions), _as_c(z), _as_c(receivers.weights), float(sigma), float(c0), out)
    if points is not None:
        return out
    return IndicatorGrid(grid, out, sigma=sigma, T=(n_t - 1) * traces.dt, method="dsm", provenance=trace_id(traces))


def tfm_indicator(
    traces: TraceSet,
    receivers: ReceiverArray,
    source: SourceSpec,
    t0: float,
    grid: SamplingGrid,
    c0: float = 299792458.0,
) -> IndicatorGrid:
    """Delay-and-sum image ``|sum_m w_m E(x_m, t0 + |x_m - z|/c0 + |y - z|/c0)|``."""
    z = grid.points
    _check_inputs(traces, receivers, grid, z)
    out = np.empty(z.shape[0])
    _tfm_kernel(_as_c(traces.values), float(traces.dt), float(t0), _as_c(receivers.positions), _as_c(source.location), _as_c(z), _as_c(receivers.weights), float(c0), out)
    return IndicatorGrid(grid, out, T=traces.duration, method="tfm", provenance=trace_id(traces))


def noise_draws(seed: int, receiver: int, n: int) -> np.ndarray:
    """Standard normal draws R_{m, 0..n-1}, keyed by (seed, receiver) so each receiver is reproducible alone."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, receiver], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).standard_normal(n)


def add_noise(traces: TraceSet, delta: float, seed: int) -> TraceSet:
    """Multiplicative-direction Gaussian noise ``v + delta R max|v| v/|v|`` (zero where v = 0)."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta == 0:
        return replace(traces, values=traces.values.copy())
    vals = traces.values
    norms = np.linalg.norm(vals, axis=2)
    vmax = norms.max()
    unit = np.divide(vals, norms[..., None], out=np.zeros_like(vals), where=norms[..., None] > 0)
    R = np.stack([noise_draws(seed, m, traces.n_samples) for m in range(traces.n_receivers)])
    return replace(traces, values=vals + delta * vmax * R[..., None] * unit)


def normalize(grid: IndicatorGrid) -> IndicatorGrid:
    vmax = grid.values.max()
    if not vmax > 0:
        raise ValueError("cannot normalise an all-zero indicator")
    return replace(grid, values=grid.values / vmax)


def _neighbours(idx, shape):
    for ax in range(len(shape)):
        for step in (-1, 1):
            j = idx[ax] + step
            if 0 <= j < shape[ax]:
                yield idx[:ax] + (j,) + idx[ax + 1 :]


def locate_peaks(grid: IndicatorGrid, rel_threshold: float = 0.3) -> list[tuple[np.ndarray, float]]:
    """Strict local maxima over face neighbours with value >= rel_threshold * max.

    A plateau of equal values counts once, represented by its lexicographically
    smallest index, and only if every cell bordering it is strictly lower.
    Returns ``(point, value)`` pairs sorted by decreasing value.
    """
    if not 0 < rel_threshold <= 1:
        raise ValueError("rel_threshold must lie in (0, 1]")
    a = grid.array
    vmax = a.max()
    if not vmax > 0:
        return []
    shape = a.shape
    # cells not exceeded by any face neighbour
    cand = np.ones(shape, dtype=bool)
    for ax in range(a.ndim):
        lo = [slice(None)] * a.ndim
        hi = [slice(None)] * a.ndim
        lo[ax], hi[ax] = slice(0, -1), slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        cand[lo] &= a[lo] >= a[hi]
        cand[hi] &= a[hi] >= a[lo]
    cand &= a >= rel_threshold * vmax
    seen = np.zeros(shape, dtype=bool)
    axes = [grid.grid.axis(i) for i in range(a.ndim)]
    peaks = []
    for idx in map(tuple, np.argwhere(cand)):
        if seen[idx]:
            continue
        v = a[idx]
        plateau, queue = [idx], deque([idx])
        seen[idx] = True
        strict, has_lower = True, False
        while queue:
            cur = queue.popleft()
            for nb in _neighbours(cur, shape):
                if a[nb] == v:
                    if not seen[nb]:
                        seen[nb] = True
                        plateau.append(nb)
                        queue.append(nb)
                elif a[nb] > v:
                    strict = False
                else:
                    has_lower = True
        if strict and has_lower:
            rep = min(plateau)
            peaks.append((np.array([axes[i][rep[i]] for i in range(a.ndim)]), float(v)))
    peaks.sort(key=lambda p: -p[1])
    return peaks


def localization_errors(peaks, centers) -> np.ndarray:
    """Distance from each true centre to its nearest reported peak (inf when there are none)."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if not peaks:
        return np.full(centers.shape[0], np.inf)
    pts = np.stack([p for p, _ in peaks])
    return np.array([np.linalg.norm(pts - c, axis=1).min() for c in centers])


def aperture_mask(receivers: ReceiverArray, theta_min: float, theta_max: float) -> np.ndarray:
    """Receivers whose polar angle lies in the closed arc [theta_min, theta_max] (mod 2 pi)."""
    if theta_max < theta_min:
        raise ValueError("theta_max must be >= theta_min")
    span = theta_max - theta_min
    if span >= 2.0 * math.pi - 1e-12:
        return np.ones(receivers.count, dtype=bool)
    rel = np.mod(receivers.angles() - theta_min, 2.0 * math.pi)
    # an angle just below theta_min wraps to ~2 pi; fold it back to 0
    rel = np.where(rel > 2.0 * math.pi - 1e-12, 0.0, rel)
    return rel <= span + 1e-12
