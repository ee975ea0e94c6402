"""Born-approximation synthesis of 3D scattered traces.

Each scatterer box is split into sub-voxels that radiate as point dipoles
driven by the incident field, frequency by frequency, and the resulting
spectra are brought back to the time axis by a trapezoid inverse transform.
"""

from __future__ import annotations

import logging
import math
import warnings

import numpy as np

from ..scene import Scene
from ..specfun import dyadic_green_freq
from ..xform import fourier_laplace_samples
from .incident import incident_3d
from .traces import TraceSet

log = logging.getLogger(__name__)

_INC_SAMPLES_PER_PERIOD = 40


def _sub_voxels(scene: Scene, subdivisions: int | None, wavelength: float):
    centers, weights = [], []
    for sc in scene.scatterers:
        hw = np.asarray(sc.half_widths)
        n = subdivisions
        if n is None:
            n = max(1, math.ceil(2.0 * hw.max() / (0.25 * wavelength)))
        axes = [sc.center[k] + hw[k] * (-1.0 + (2.0 * np.arange(n) + 1.0) / n) for k in range(3)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        centers.append(pts)
        weights.append(np.full(pts.shape[0], (sc.eps_r - 1.0) * sc.volume / pts.shape[0]))
    if not centers:
        return np.zeros((0, 3)), np.zeros(0)
    return np.concatenate(centers), np.concatenate(weights)


def born_synthesize_3d(
    scene: Scene,
    T: float,
    n_steps: int,
    sigma: float = 0.0,
    xi_max: float | None = None,
    n_freq: int = 2048,
    subdivisions: int | None = 1,
) -> TraceSet:
    """Linearised scattered field at the scene receivers on t = n T / n_steps.

    Parameters
    ----------
    sigma : float
        Damping used on the frequency contour xi + i sigma.
    xi_max : float, optional
        Upper end of the frequency grid; defaults to ``4 * 2 pi f0``.
    subdivisions : int or None
        Sub-voxels per axis for every box.  ``None`` picks enough to keep
        sub-voxels below a quarter carrier wavelength.
    """
    if scene.dim != 3:
        raise ValueError("born_synthesize_3d needs a 3D scene")
    if scene.source.polarization is None or len(scene.source.polarization) != 3:
        raise ValueError("3D synthesis needs a 3-vector source polarization")
    if n_steps < 1 or not T > 0 or n_freq < 2 or sigma < 0:
        raise ValueError("invalid time or frequency discretisation")
    c = scene.constants
    c0 = c.c0
    pulse = scene.source.pulse
    if xi_max is None:
        xi_max = 4.0 * pulse.omega
    dt = T / n_steps
    positions = scene.receivers.positions.copy()
    out_t = dt * np.arange(n_steps + 1)

    for j, sc in enumerate(scene.scatterers):
        size = sc.volume ** (1.0 / 3.0)
        if size * xi_max / c0 >= 1.0 and subdivisions == 1:
            warnings.warn(
                f"scatterer {j} is not small against the shortest wavelength (size*xi_max/c0 = {size * xi_max / c0:.2f})",
                RuntimeWarning,
                stacklevel=2,
            )

    ys, contrast_vol = _sub_voxels(scene, subdivisions, c0 / pulse.f0)
    active = contrast_vol != 0
    ys, contrast_vol = ys[active], contrast_vol[active]
    if ys.shape[0] == 0:
        return TraceSet(positions, dt, np.zeros((positions.shape[0], n_steps + 1, 3)))

    xi = np.linspace(0.0, xi_max, n_freq)[1:]  # xi = 0 carries omega^2 = 0
    dxi = xi_max / (n_freq - 1)
    if 2.0 * math.pi / dxi < T:
        warnings.warn("frequency step too coarse: the inverse transform wraps within [0, T]", RuntimeWarning, stacklevel=2)
    omega = xi + 1j * sigma
    k2 = omega**2 / c0**2

    # incident field at each radiator, sampled finely enough for the transform
    dt_inc = 1.0 / (pulse.f0 * _INC_SAMPLES_PER_PERIOD)
    src = np.asarray(scene.source.location)
    r_max = float(np.linalg.norm(ys - src, axis=1).max())
    t_inc_end = max(T, r_max / c0 + pulse_duration(pulse))
    n_inc = int(math.ceil(t_inc_end / dt_inc)) + 1
    t_inc = dt_inc * np.arange(n_inc)
    e_inc = incident_3d(ys[:, None, :], t_inc[None, :], scene.source, c0)  # (J, n, 3)
    e_hat = fourier_laplace_samples(np.transpose(e_inc, (0, 2, 1)), dt_inc, sigma, xi)  # (J, 3, nxi)

    spectra = np.zeros((positions.shape[0], 3, xi.size), dtype=complex)
    for j in range(ys.shape[0]):
        phi = dyadic_green_freq(positions[:, None, :], ys[j], omega[None, :], c.eps0, c.mu0)  # (M, nxi, 3, 3)
        spectra += contrast_vol[j] * k2 * np.einsum("mfab,bf->maf", phi, e_hat[j])
    log.info("Born synthesis: %d radiators, %d receivers, %d frequencies", ys.shape[0], positions.shape[0], xi.size)

    # s(t) = e^{sigma t}/pi * Re int_0^xi_max e^{-i xi t} S(xi) dxi
    w = np.full(xi.size, dxi)
    w[-1] *= 0.5
    kernel = np.exp(-1j * np.outer(out_t, xi)) * w
    values = np.real(np.einsum("tf,maf->mta", kernel, spectra)) * (np.exp(sigma * out_t) / math.pi)[None, :, None]
    values[:, 0, :] = 0.0
    return TraceSet(positions, dt, values)


def pulse_duration(pulse) -> float:
    """Time after which the pulse is negligible (Gaussian) or one record length otherwise."""
    if pulse.kind.value == "gaussian_sine":
        return pulse.t0 + 10.0 * pulse.a
    return 20.0 / pulse.f0
