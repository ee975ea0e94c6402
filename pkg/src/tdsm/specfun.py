"""Modified spherical Bessel functions, the sphere integral identity they
close, the frequency-domain dyadic Green's function, and a sphere quadrature
used to check the identity independently."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

I0_SERIES_MAX = 1e-2
I2_SERIES_MAX = 1e-1
DEFAULT_SPHERE_ORDER = 40


def _i0(x: np.ndarray) -> np.ndarray:
    small = x < I0_SERIES_MAX
    xs = np.where(small, 1.0, x)
    direct = np.sinh(xs) / xs
    x2 = x * x
    series = 1.0 + x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0))
    return np.where(small, series, direct)


def _i2(x: np.ndarray) -> np.ndarray:
    small = x < I2_SERIES_MAX
    xs = np.where(small, 1.0, x)
    direct = ((xs * xs + 3.0) * np.sinh(xs) - 3.0 * xs * np.cosh(xs)) / xs**3
    x2 = x * x
    # x^2/15 + x^4/210 + x^6/7560 + x^8/498960
    series = x2 / 15.0 * (1.0 + x2 / 14.0 * (1.0 + x2 / 36.0 * (1.0 + x2 / 66.0)))
    return np.where(small, series, direct)


def mod_sph_bessel_i(n: int, x):
    """Modified spherical Bessel function of the first kind, orders 0 and 2."""
    if n not in (0, 2):
        raise ValueError(f"only orders 0 and 2 are provided, got {n}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("argument must be finite and non-negative")
    out = _i0(arr) if n == 0 else _i2(arr)
    return out if out.ndim else float(out)


def sphere_projector_closed_form(z, sigma: float, c0: float) -> np.ndarray:
    """Closed form of int_{S^2} (I - x x^T) exp(sigma/c0 x.z) ds(x).

    Equals (8 pi/3) i0(k) I + (4 pi/3) (I - 3 zhat zhat^T) i2(k) with
    k = sigma |z| / c0.
    """
    if sigma < 0 or c0 <= 0:
        raise ValueError("need sigma >= 0 and c0 > 0")
    z = np.asarray(z, dtype=float)
    rz = float(np.linalg.norm(z))
    kappa = sigma * rz / c0
    eye = np.eye(3)
    out = (8.0 * math.pi / 3.0) * mod_sph_bessel_i(0, kappa) * eye
    if rz > 0:
        zh = z / rz
        out = out + (4.0 * math.pi / 3.0) * (eye - 3.0 * np.outer(zh, zh)) * mod_sph_bessel_i(2, kappa)
    return out


def sphere_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre (in cos polar) x uniform azimuth product rule on S^2.

    Returns unit vectors (N, 3) and weights (N,) with N = 2 * order**2.
    """
    if order < 8:
        raise ValueError("sphere quadrature order must be >= 8")
    mu, wmu = np.polynomial.legendre.leggauss(order)
    n_phi = 2 * order
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - mu**2)
    xhat = np.stack(
        [
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.repeat(mu, n_phi),
        ],
        axis=1,
    )
    weights = np.repeat(wmu, n_phi) * (2.0 * math.pi / n_phi)
    return xhat, weights


def sphere_quadrature_oracle(f: Callable[[np.ndarray], np.ndarray], order: int = DEFAULT_SPHERE_ORDER) -> np.ndarray:
    """Approximate int_{S^2} f(x) ds(x) for a matrix-valued ``f``.

    ``f`` receives all nodes at once as an (N, 3) array and must return an
    (N, 3, 3) array.
    """
    xhat, weights = sphere_nodes(order)
    vals = np.asarray(f(xhat))
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("integrand returned non-finite values")
    return np.tensordot(weights, vals, axes=1)


def sphere_projector_integrand(z, sigma: float, c0: float) -> Callable[[np.ndarray], np.ndarray]:
    z = np.asarray(z, dtype=float)

    def f(xhat):
        proj = np.eye(3)[None] - xhat[:, :, None] * xhat[:, None, :]
        return proj * np.exp(sigma / c0 * xhat @ z)[:, None, None]

    return f


def dyadic_green_freq(x, y, omega: complex, eps0: float, mu0: float) -> np.ndarray:
    """Dyadic fundamental solution (I + k^-2 grad grad^T) e^{ikr}/(4 pi r), k = omega sqrt(mu0 eps0).

    ``x`` may be a single point (3,) or a batch (N, 3); ``omega`` a scalar or an
    array that broadcasts against the batch.  Evaluated through the analytic
    Hessian of the scalar kernel.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    omega = np.asarray(omega, dtype=complex)
    if np.any(omega == 0):
        raise ValueError("omega = 0 is excluded")
    if np.any(omega.imag < 0):
        raise ValueError("Im(omega) must be >= 0")
    d = x - y
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise ValueError("x = y: the Green's function is singular")
    rhat = d / r[..., None]
    k = omega * math.sqrt(mu0 * eps0)
    kr = k * r
    g = np.exp(1j * kr) / (4.0 * math.pi * r)
    inv = 1.0 / kr
    a = g * (1.0 + 1j * inv - inv**2)
    b = g * (1.0 + 3j * inv - 3.0 * inv**2)
    rr = rhat[..., :, None] * rhat[..., None, :]
    eye = np.eye(3)
    return a[..., None, None] * eye - b[..., None, None] * rr
