"""Discrete Fourier-Laplace transform and the frequency-domain indicator.

Convention: L[f](xi + i sigma) = int_0^inf e^{i xi t} e^{-sigma t} f(t) dt,
approximated by the trapezoid rule on the sample grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.integrate import trapezoid

from .waveform import SampledSignal, trapezoid_weights

if TYPE_CHECKING:
    from .forward.traces import TraceSet
    from .scene import ReceiverArray


@dataclass(frozen=True)
class Spectrum:
    """Complex transform values, one row per channel, on a real frequency grid."""

    sigma: float
    xi_grid: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        xi = np.atleast_1d(np.asarray(self.xi_grid, dtype=float))
        values = np.asarray(self.values, dtype=complex)
        if values.ndim == 1:
            values = values[None, :]
        if xi.size > 1 and np.any(np.diff(xi) <= 0):
            raise ValueError("xi_grid must be strictly increasing")
        if values.shape[-1] != xi.size:
            raise ValueError("values do not match xi_grid")
        if not np.all(np.isfinite(values)):
            raise ValueError("spectrum has non-finite values")
        object.__setattr__(self, "xi_grid", xi)
        object.__setattr__(self, "values", values)


def transform_matrix(n: int, dt: float, sigma: float, xi_grid: np.ndarray) -> np.ndarray:
    """Matrix K with (K @ samples)[k] = trapezoid L[f](xi_k + i sigma)."""
    t = dt * np.arange(n)
    w = trapezoid_weights(n, dt) * np.exp(-sigma * t)
    return np.exp(1j * np.outer(xi_grid, t)) * w


def fourier_laplace_samples(samples: np.ndarray, dt: float, sigma: float, xi_grid) -> np.ndarray:
    """Transform along the last axis of ``samples``; returns (..., len(xi_grid))."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    xi_grid = np.atleast_1d(np.asarray(xi_grid, dtype=float))
    samples = np.asarray(samples, dtype=float)
    K = transform_matrix(samples.shape[-1], dt, sigma, xi_grid)
    return samples @ K.T


def fourier_laplace(signal: SampledSignal, sigma: float, xi_grid) -> Spectrum:
    xi_grid = np.atleast_1d(np.asarray(xi_grid, dtype=float))
    values = fourier_laplace_samples(signal.values, signal.dt, sigma, xi_grid)
    return Spectrum(sigma=sigma, xi_grid=xi_grid, values=values[None, :])


def parseval_sides(signal: SampledSignal, sigma: float, xi_max: float, n_freq: int) -> tuple[float, float]:
    """Return (time-side energy, frequency-side energy) of the damped signal."""
    damped = np.exp(-sigma * signal.times) * signal.values
    lhs = float(np.sum(trapezoid_weights(len(signal), signal.dt) * damped**2))
    xi = np.linspace(0.0, xi_max, n_freq)
    power = np.abs(fourier_laplace_samples(signal.values, signal.dt, sigma, xi)) ** 2
    if power[-1] > 1e-6 * power.max():
        warnings.warn(
            f"spectrum tail at xi_max={xi_max:.3e} is {power[-1] / power.max():.2e} of peak; "
            "frequency side is under-resolved",
            RuntimeWarning,
            stacklevel=2,
        )
    # conjugate symmetry folds [-xi_max, 0] onto [0, xi_max]
    rhs = float(trapezoid(power, xi)) / math.pi
    return lhs, rhs


def parseval_residual(signal: SampledSignal, sigma: float, xi_max: float, n_freq: int) -> float:
    """Relative gap |LHS - RHS| / LHS between the two sides of Parseval's identity."""
    tail = np.abs(signal.values[-1])
    if tail > 1e-6 * np.abs(signal.values).max():
        warnings.warn("signal has not decayed at the end of the record", RuntimeWarning, stacklevel=2)
    lhs, rhs = parseval_sides(signal, sigma, xi_max, n_freq)
    if lhs == 0:
        raise ValueError("zero signal: Parseval residual undefined")
    return abs(lhs - rhs) / lhs


def receiver_spectra(traces: TraceSet, sigma: float, xi_grid) -> np.ndarray:
    """Transform of every trace channel: array (n_receivers, n_components, n_xi)."""
    data = np.transpose(traces.values, (0, 2, 1))  # (m, c, n)
    return fourier_laplace_samples(data, traces.dt, sigma, xi_grid)


def freq_indicator(
    traces: TraceSet,
    receivers: ReceiverArray,
    z,
    sigma: float,
    xi_grid,
    surface_weight=None,
    c0: float = 299792458.0,
    spectra: np.ndarray | None = None,
) -> np.ndarray | float:
    """Frequency-domain indicator at one point (shape (dim,)) or many (shape (K, dim)).

    ``xi_grid`` covers [0, xi_max]; the negative half is folded in through
    conjugate symmetry of real traces.  ``surface_weight`` is the per-receiver
    quadrature weight (defaults to ``receivers.weights``).  Pass precomputed
    ``spectra`` from :func:`receiver_spectra` to amortise the transforms over
    many calls.
    """
    xi = np.atleast_1d(np.asarray(xi_grid, dtype=float))
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    pos = np.asarray(receivers.positions, dtype=float)
    w = receivers.weights if surface_weight is None else np.broadcast_to(surface_weight, (pos.shape[0],))
    if spectra is None:
        spectra = receiver_spectra(traces, sigma, xi)
    out = np.empty(z.shape[0])
    for k, zk in enumerate(z):
        r = np.linalg.norm(pos - zk, axis=1)
        if np.any(r < 1e-9):
            raise ValueError(f"sampling point {zk} coincides with a receiver")
        # e^{-i xi |x - z| / c0} / (4 pi |x - z|), phase uses Re(omega) only
        phase = np.exp(-1j * np.outer(r / c0, xi)) * (w / (4.0 * math.pi * r))[:, None]
        field_sum = np.einsum("mcx,mx->cx", spectra, phase)
        power = np.sum(np.abs(field_sum) ** 2, axis=0)
        out[k] = trapezoid(power, xi) / math.pi
    return float(out[0]) if single else out
