"""Analytic incident fields of a modulated dipole.

All fields are built from the retarded kernel
G_chi(x, y; t) = chi(t - |x - y| / c0) / (4 pi |x - y|) and its gradient,
which is evaluated by the chain rule with the analytic chi'.
"""

from __future__ import annotations

import math

import numpy as np

from ..scene import SourceSpec
from ..waveform import evaluate, evaluate_derivative


def _offsets(x, y):
    x = np.asarray(x, dtype=float)
    d = x - np.asarray(y, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise ValueError("field point coincides with the source")
    return d, r


def retarded_kernel(x, t, source: SourceSpec, c0: float):
    _, r = _offsets(x, source.location)
    return evaluate(np.asarray(t, dtype=float) - r / c0, source.pulse) / (4.0 * math.pi * r)


def retarded_gradient(x, t, source: SourceSpec, c0: float) -> np.ndarray:
    """grad_x G_chi for points ``x`` (..., dim) at times ``t`` broadcasting with x[..., 0]."""
    d, r = _offsets(x, source.location)
    tau = np.asarray(t, dtype=float) - r / c0
    chi = evaluate(tau, source.pulse)
    dchi = evaluate_derivative(tau, source.pulse)
    radial = -(dchi / (c0 * r) + chi / r**2) / (4.0 * math.pi)
    return np.asarray(radial)[..., None] * d / r[..., None]


def incident_tm(x, t, source: SourceSpec, c0: float):
    """Scalar TM field p2 dG/dx1 - p1 dG/dx2."""
    p1, p2 = source.polarization
    g = retarded_gradient(x, t, source, c0)
    out = p2 * g[..., 0] - p1 * g[..., 1]
    return out if np.ndim(out) else float(out)


def incident_te(x, t, source: SourceSpec, c0: float) -> np.ndarray:
    """TE field (dG/dx2, -dG/dx1)."""
    g = retarded_gradient(x, t, source, c0)
    return np.stack([g[..., 1], -g[..., 0]], axis=-1)


def incident_3d(x, t, source: SourceSpec, c0: float) -> np.ndarray:
    """curl_x (p G_chi) = grad G_chi x p."""
    g = retarded_gradient(x, t, source, c0)
    p = np.broadcast_to(np.asarray(source.polarization, dtype=float), g.shape)
    return np.cross(g, p)
