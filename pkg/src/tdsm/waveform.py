"""Causal temporal modulations that drive the incident dipole fields.

Two pulse families are supported:

* ``gaussian_sine`` -- a Gaussian-modulated sinusoid, hard-zeroed for t < 0;
* ``smooth_sawtooth`` -- a sawtooth wave mollified by a Gaussian kernel,
  evaluated by adaptive Simpson quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .xform import Spectrum

# exp(-S**2) = 1e-12: the mollifier is dropped beyond this many 1/sqrt(c)
_GAUSS_CUTOFF = math.sqrt(math.log(1e12))
_SIMPSON_TOL = 1e-10
_SIMPSON_MAX_DEPTH = 40


class PulseKind(str, Enum):
    GAUSSIAN_SINE = "gaussian_sine"
    SMOOTH_SAWTOOTH = "smooth_sawtooth"


@dataclass(frozen=True)
class PulseSpec:
    """Parameters of a modulation function chi(t).

    ``t0`` defaults to ``4 * a`` for the Gaussian pulse.  ``smoothing`` is the
    Gaussian mollifier exponent ``c`` (units 1/s**2) of the sawtooth.
    """

    kind: PulseKind
    f0: float
    t0: float | None = None
    smoothing: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PulseKind(self.kind))
        if not (math.isfinite(self.f0) and self.f0 > 0):
            raise ValueError(f"f0 must be positive and finite, got {self.f0!r}")
        if self.kind is PulseKind.GAUSSIAN_SINE:
            if self.t0 is None:
                object.__setattr__(self, "t0", 4.0 * self.a)
            if not (math.isfinite(self.t0) and self.t0 >= 0):
                raise ValueError(f"t0 must be >= 0, got {self.t0!r}")
        else:
            if self.smoothing is None or not (self.smoothing > 0 and math.isfinite(self.smoothing)):
                raise ValueError("smooth_sawtooth needs a positive smoothing parameter")

    @property
    def a(self) -> float:
        return 1.0 / (2.0 * self.f0)

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.f0

    @property
    def b(self) -> float:
        return math.pi * self.f0

    def __call__(self, t):
        return evaluate(t, self)

    def derivative(self, t):
        return evaluate_derivative(t, self)


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled real signal; ``values[n]`` is the value at ``n * dt``."""

    dt: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if values.ndim != 1 or values.size < 2:
            raise ValueError("a sampled signal needs at least 2 samples")
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.values.size)

    def __len__(self):
        return self.values.size


def eval_gaussian_pulse(t, spec: PulseSpec):
    """exp(-(t-t0)^2/a^2) sin(omega (t-t0)) for t >= 0, else 0."""
    if spec.kind is not PulseKind.GAUSSIAN_SINE:
        raise ValueError("spec is not a gaussian_sine pulse")
    t = np.asarray(t, dtype=float)
    u = t - spec.t0
    out = np.exp(-(u / spec.a) ** 2) * np.sin(spec.omega * u)
    out = np.where(t >= 0, out, 0.0)
    return out if out.ndim else float(out)


def _gaussian_derivative(t, spec: PulseSpec):
    t = np.asarray(t, dtype=float)
    u = t - spec.t0
    env = np.exp(-(u / spec.a) ** 2)
    out = env * (spec.omega * np.cos(spec.omega * u) - 2.0 * u / spec.a**2 * np.sin(spec.omega * u))
    out = np.where(t >= 0, out, 0.0)
    return out if out.ndim else float(out)


def _saw_breaks(spec: PulseSpec, lo: float, hi: float) -> np.ndarray:
    # saw jumps where (b*tau + pi) / (2 pi) is an integer, i.e. tau = (2k - 1) / f0
    k_lo = math.ceil((lo * spec.f0 + 1.0) / 2.0)
    k_hi = math.floor((hi * spec.f0 + 1.0) / 2.0)
    return (2.0 * np.arange(k_lo, k_hi + 1) - 1.0) / spec.f0


def _simpson_batch(func, a, b, owner, n_out, tol):
    """Adaptive Simpson on a batch of intervals, accumulated per owner.

    ``func(s, idx)`` evaluates the integrand at abscissae ``s`` for intervals
    ``idx`` (indices into the original batch).  Every interval carries its own
    tolerance, halved at each split.
    """
    result = np.zeros(n_out)
    idx = np.arange(a.size)
    fa, fb = func(a, idx), func(b, idx)
    m = 0.5 * (a + b)
    fm = func(m, idx)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    tol = np.full(a.size, tol)
    for depth in range(_SIMPSON_MAX_DEPTH):
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = func(lm, idx), func(rm, idx)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = left + right - whole
        done = np.abs(err) <= 15.0 * tol
        if depth == _SIMPSON_MAX_DEPTH - 1:
            done[:] = True
        np.add.at(result, owner[done], (left + right + err / 15.0)[done])
        keep = ~done
        if not keep.any():
            break
        a, m, b = a[keep], m[keep], b[keep]
        fa, fm, fb = fa[keep], fm[keep], fb[keep]
        flm, frm = flm[keep], frm[keep]
        left, right = left[keep], right[keep]
        owner, idx, tol = owner[keep], idx[keep], tol[keep] / 2.0
        # children: [a, m] with midpoint lm, then [m, b] with midpoint rm
        a = np.concatenate([a, m])
        b = np.concatenate([m, b])
        fa, fb = np.concatenate([fa, fm]), np.concatenate([fm, fb])
        m = np.concatenate([lm[keep], rm[keep]])
        fm = np.concatenate([flm, frm])
        whole = np.concatenate([left, right])
        owner, idx, tol = np.tile(owner, 2), np.tile(idx, 2), np.tile(tol, 2)
    return result


def eval_smooth_sawtooth(t, spec: PulseSpec):
    """Gaussian-mollified sawtooth, zero for t < 0.

    The convolution integral is rewritten in the scaled variable
    ``s = sqrt(c) (tau - t)``, truncated at ``|s| = sqrt(ln 1e12)`` and split at
    the sawtooth jumps so that every Simpson panel sees a smooth integrand.
    """
    if spec.kind is not PulseKind.SMOOTH_SAWTOOTH:
        raise ValueError("spec is not a smooth_sawtooth pulse")
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    if not np.all(np.isfinite(t)):
        raise ValueError("sawtooth evaluation needs finite t")
    out = np.zeros(t.shape)
    pos = np.flatnonzero(t >= 0)
    if pos.size:
        out[pos] = _sawtooth_positive(t[pos], spec)
    return float(out[0]) if scalar else out


def _sawtooth_positive(t: np.ndarray, spec: PulseSpec) -> np.ndarray:
    rc = math.sqrt(spec.smoothing)
    half = _GAUSS_CUTOFF / rc
    a_list, b_list, owner, k_list = [], [], [], []
    for i, ti in enumerate(t):
        edges = np.concatenate([[ti - half], _saw_breaks(spec, ti - half, ti + half), [ti + half]])
        edges = np.unique(edges)
        lo, hi = edges[:-1], edges[1:]
        keep = hi > lo
        lo, hi = lo[keep], hi[keep]
        # sawtooth branch index of each smooth piece
        k = np.floor((spec.b * 0.5 * (lo + hi) + math.pi) / (2.0 * math.pi))
        a_list.append((lo - ti) * rc)
        b_list.append((hi - ti) * rc)
        k_list.append(k)
        owner.append(np.full(lo.size, i))
    s_a = np.concatenate(a_list)
    s_b = np.concatenate(b_list)
    owner = np.concatenate(owner)
    branch = np.concatenate(k_list)
    t_of = t[owner]

    def integrand(s, idx):
        tau = t_of[idx] + s / rc
        saw = (spec.b * tau + math.pi) / (2.0 * math.pi) - branch[idx] - 0.5
        return saw * np.exp(-s * s)

    return _simpson_batch(integrand, s_a, s_b, owner, t.size, _SIMPSON_TOL) / rc


def _sawtooth_derivative(t, spec: PulseSpec):
    # d/dt of saw * gaussian = (b / 2 pi) * sqrt(pi / c) - sum_k exp(-c (t - tau_k)^2)
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    c = spec.smoothing
    half = _GAUSS_CUTOFF / math.sqrt(c)
    out = np.zeros(t.shape)
    ramp = spec.b / (2.0 * math.pi) * math.sqrt(math.pi / c)
    for i, ti in enumerate(t):
        if ti < 0:
            continue
        taus = _saw_breaks(spec, ti - half, ti + half)
        out[i] = ramp - np.exp(-c * (ti - taus) ** 2).sum()
    return float(out[0]) if scalar else out


def evaluate(t, spec: PulseSpec):
    if spec.kind is PulseKind.GAUSSIAN_SINE:
        return eval_gaussian_pulse(t, spec)
    return eval_smooth_sawtooth(t, spec)


def evaluate_derivative(t, spec: PulseSpec):
    """Analytic time derivative chi'(t) (zero for t < 0)."""
    if spec.kind is PulseKind.GAUSSIAN_SINE:
        return _gaussian_derivative(t, spec)
    return _sawtooth_derivative(t, spec)


def sample_pulse(spec: PulseSpec, dt: float, n: int) -> SampledSignal:
    if not dt > 0 or n < 2:
        raise ValueError("sample_pulse needs dt > 0 and n >= 2")
    t = dt * np.arange(n)
    return SampledSignal(dt, evaluate(t, spec))


def trapezoid_weights(n: int, dt: float) -> np.ndarray:
    w = np.full(n, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def spectrum(signal: SampledSignal, f_grid) -> Spectrum:
    """Trapezoid approximation of the Fourier integral int e^{-2 pi i f t} s(t) dt.

    The returned :class:`~tdsm.xform.Spectrum` has ``sigma = 0`` and
    ``xi_grid = 2 pi f``; note the e^{-i} sign convention here, as opposed to
    the e^{+i} Fourier-Laplace convention of :mod:`tdsm.xform`.
    """
    from .xform import Spectrum

    f_grid = np.atleast_1d(np.asarray(f_grid, dtype=float))
    if f_grid.size == 0:
        raise ValueError("f_grid is empty")
    if not np.all(np.isfinite(f_grid)):
        raise ValueError("f_grid must be finite")
    t = signal.times
    w = trapezoid_weights(t.size, signal.dt) * signal.values
    kernel = np.exp(-2j * np.pi * np.outer(f_grid, t))
    return Spectrum(sigma=0.0, xi_grid=2.0 * np.pi * f_grid, values=(kernel @ w)[None, :])
