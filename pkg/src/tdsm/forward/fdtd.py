"""Explicit staggered-grid (Yee) leapfrog solver for the 2D TM and TE modes.

Scattered traces come from two identical runs, one with the scene's
permittivity and one in vacuum, differenced at the receivers.  The dipole is
injected as a magnetic current ``M = -chi(t) p phi(x - y)`` where ``phi`` is a
normalised C^2 bump, so the discrete incident field obeys the same stencil as
the total field.  The outer boundary is a split-field graded-conductivity
absorber backed by a PEC wall.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..scene import PhysicalConstants, Scene, permittivity_at
from ..waveform import evaluate
from .traces import TraceSet

log = logging.getLogger(__name__)

_SUBSAMPLES = 8  # per axis, for cell-averaged permittivity
_FINITE_CHECK_EVERY = 64


class Mode(str, Enum):
    TM = "TM"
    TE = "TE"


class SolverError(RuntimeError):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


@dataclass(frozen=True)
class SolverParams:
    """Discretisation of the 2D solver.

    ``padding`` is the vacuum margin (m) kept around the source, receivers,
    sampling extents and scatterers before the absorber starts.
    """

    h: float
    dt: float
    padding: float = 1.0
    absorber_cells: int = 20
    absorber_order: float = 2.0
    absorber_reflection: float = 1e-6
    mollifier_radius: float = 2.0

    def __post_init__(self):
        if not (self.h > 0 and self.dt > 0):
            raise ValueError("h and dt must be positive")
        if self.absorber_cells < 1 or self.mollifier_radius <= 0 or self.padding < 0:
            raise ValueError("invalid absorber / mollifier / padding settings")


@dataclass
class CFLReport:
    ok: bool
    courant: float
    points_per_wavelength: float | None
    messages: list[str] = field(default_factory=list)

    @property
    def warnings(self) -> list[str]:
        return [m for m in self.messages if m.startswith("warning")]


def check_cfl(params: SolverParams, constants: PhysicalConstants, f0: float | None = None, max_speed: float | None = None) -> CFLReport:
    """Evaluate c*dt <= h/sqrt(2) and, given a carrier f0, the cells per wavelength."""
    c = constants.c0 if max_speed is None else max_speed
    courant = c * params.dt * math.sqrt(2.0) / params.h
    msgs = []
    ok = courant <= 1.0 + 1e-12
    if not ok:
        msgs.append(f"violation: c*dt = {c * params.dt:.4g} m exceeds h/sqrt(2) = {params.h / math.sqrt(2):.4g} m")
    ppw = None
    if f0 is not None:
        ppw = constants.c0 / f0 / params.h
        if ppw < 8:
            msgs.append(f"warning: only {ppw:.2f} cells per carrier wavelength (< 8)")
        elif ppw < 10:
            msgs.append(f"note: {ppw:.2f} cells per carrier wavelength (10 recommended)")
    return CFLReport(ok, courant, ppw, msgs)


@dataclass(frozen=True)
class _Layout:
    x: np.ndarray  # node coordinates
    y: np.ndarray
    core: tuple[tuple[float, float], tuple[float, float]]

    @property
    def shape(self):
        return self.x.size, self.y.size


def _layout(scene: Scene, params: SolverParams) -> _Layout:
    pts = [np.atleast_2d(scene.source.location), scene.receivers.positions, np.array(scene.grid.extents).T]
    for sc in scene.scatterers:
        pts.append(np.stack([sc.lower, sc.upper]))
    allp = np.concatenate(pts)
    lo = allp.min(axis=0) - params.padding
    hi = allp.max(axis=0) + params.padding
    h, n_abs = params.h, params.absorber_cells
    axes, core = [], []
    for k in range(2):
        i0 = math.floor(lo[k] / h + 1e-9)
        i1 = math.ceil(hi[k] / h - 1e-9)
        core.append((i0 * h, i1 * h))
        axes.append(h * np.arange(i0 - n_abs, i1 + n_abs + 1))
    return _Layout(axes[0], axes[1], tuple(core))


def _absorber_sigma(s: np.ndarray, core: tuple[float, float], params: SolverParams, constants: PhysicalConstants) -> np.ndarray:
    thickness = params.absorber_cells * params.h
    depth = np.maximum(0.0, np.maximum(core[0] - s, s - core[1])) / thickness
    m = params.absorber_order
    sigma_max = -(m + 1.0) * math.log(params.absorber_reflection) * constants.eps0 * constants.c0 / (2.0 * thickness)
    return sigma_max * np.minimum(depth, 1.0) ** m


def _cell_average_eps(scene: Scene, cx: np.ndarray, cy: np.ndarray, h: float) -> np.ndarray:
    """Permittivity at staggered points (cx[i], cy[j]) averaged over the h x h cell around each."""
    eps0 = scene.constants.eps0
    eps = np.full((cx.size, cy.size), eps0)
    if not scene.scatterers:
        return eps
    offs = (np.arange(_SUBSAMPLES) + 0.5) / _SUBSAMPLES * h - 0.5 * h
    ox, oy = np.meshgrid(offs, offs, indexing="ij")
    ox, oy = ox.ravel(), oy.ravel()
    touched = np.zeros(eps.shape, dtype=bool)
    for sc in scene.scatterers:
        lo, hi = sc.lower, sc.upper
        ix = np.flatnonzero((cx + 0.5 * h >= lo[0]) & (cx - 0.5 * h <= hi[0]))
        iy = np.flatnonzero((cy + 0.5 * h >= lo[1]) & (cy - 0.5 * h <= hi[1]))
        touched[np.ix_(ix, iy)] = True
    ii, jj = np.nonzero(touched)
    sub = np.stack([(cx[ii][:, None] + ox).ravel(), (cy[jj][:, None] + oy).ravel()], axis=1)
    vals = permittivity_at(scene, sub).reshape(ii.size, -1)
    eps[ii, jj] = vals.mean(axis=1)
    return eps


def _bump(cx: np.ndarray, cy: np.ndarray, y0, radius: float, h: float) -> np.ndarray:
    X, Y = np.meshgrid(cx - y0[0], cy - y0[1], indexing="ij")
    q = (X**2 + Y**2) / radius**2
    phi = np.where(q < 1.0, (1.0 - q) ** 3, 0.0)
    total = phi.sum() * h * h
    if total <= 0:
        raise SolverError("source mollifier does not cover any grid point")
    return phi / total


def _bilinear(cx: np.ndarray, cy: np.ndarray, pts: np.ndarray):
    """Flat indices (N, 4) and weights (N, 4) for interpolation on a uniform grid."""
    h = cx[1] - cx[0]
    fx = (pts[:, 0] - cx[0]) / h
    fy = (pts[:, 1] - cy[0]) / h
    i = np.floor(fx).astype(int)
    j = np.floor(fy).astype(int)
    if np.any(i < 0) or np.any(j < 0) or np.any(i + 1 >= cx.size) or np.any(j + 1 >= cy.size):
        raise SolverError("receiver outside the computational box")
    ax, ay = fx - i, fy - j
    ny = cy.size
    idx = np.stack([i * ny + j, (i + 1) * ny + j, i * ny + j + 1, (i + 1) * ny + j + 1], axis=1)
    w = np.stack([(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay], axis=1)
    return idx, w


def _e_coeffs(sig, eps, dt):
    s = sig * dt / (2.0 * eps)
    return (1.0 - s) / (1.0 + s), (dt / eps) / (1.0 + s)


def _h_coeffs(sig, eps0, mu0, dt):
    s = sig * dt / (2.0 * eps0)
    return (1.0 - s) / (1.0 + s), (dt / mu0) / (1.0 + s)


class Yee2D:
    """One leapfrog run on a fixed permittivity map.

    E lives at integer steps, H at half steps.  ``step(n)`` advances
    E^n -> E^{n+1} using the source evaluated at t_n.
    """

    def __init__(self, scene: Scene, params: SolverParams, mode: Mode, layout: _Layout, chi: np.ndarray, vacuum: bool):
        self.mode = Mode(mode)
        self.params = params
        self.constants = scene.constants
        self.chi = chi
        h, dt = params.h, params.dt
        eps0, mu0 = scene.constants.eps0, scene.constants.mu0
        x, y = layout.x, layout.y
        xh, yh = 0.5 * (x[1:] + x[:-1]), 0.5 * (y[1:] + y[:-1])
        sx = lambda s: _absorber_sigma(s, layout.core[0], params, scene.constants)  # noqa: E731
        sy = lambda s: _absorber_sigma(s, layout.core[1], params, scene.constants)  # noqa: E731
        eps_scene = scene if not vacuum else scene.with_scatterers(())
        nx, ny = x.size, y.size
        radius = params.mollifier_radius * h
        y0 = scene.source.location
        self.h = h

        if self.mode is Mode.TM:
            eps = _cell_average_eps(eps_scene, x[1:-1], y[1:-1], h)
            self.ca_x, self.cb_x = _e_coeffs(sx(x[1:-1])[:, None], eps, dt)
            self.ca_y, self.cb_y = _e_coeffs(sy(y[1:-1])[None, :], eps, dt)
            self.cb_x = self.cb_x / h
            self.cb_y = self.cb_y / h
            self.da_hx, self.db_hx = _h_coeffs(np.broadcast_to(sy(yh)[None, :], (nx, ny - 1)), eps0, mu0, dt)
            self.da_hy, self.db_hy = _h_coeffs(np.broadcast_to(sx(xh)[:, None], (nx - 1, ny)), eps0, mu0, dt)
            p1, p2 = scene.source.polarization
            # H-equation source terms chi(t) * p * phi at the H locations
            self.src_hx = self.db_hx * p1 * _bump(x, yh, y0, radius, h)
            self.src_hy = self.db_hy * p2 * _bump(xh, y, y0, radius, h)
            self.db_hx = self.db_hx / h
            self.db_hy = self.db_hy / h
            self.ez = np.zeros((nx, ny))
            self.ezx = np.zeros((nx - 2, ny - 2))
            self.ezy = np.zeros((nx - 2, ny - 2))
            self.hx = np.zeros((nx, ny - 1))
            self.hy = np.zeros((nx - 1, ny))
            self.eps_e = [_cell_average_eps(eps_scene, x, y, h)]
            self.probe_grids = [(x, y)]
        else:
            eps_x = _cell_average_eps(eps_scene, xh, y[1:-1], h)
            eps_y = _cell_average_eps(eps_scene, x[1:-1], yh, h)
            self.ca_ex, self.cb_ex = _e_coeffs(np.broadcast_to(sy(y[1:-1])[None, :], eps_x.shape), eps_x, dt)
            self.ca_ey, self.cb_ey = _e_coeffs(np.broadcast_to(sx(x[1:-1])[:, None], eps_y.shape), eps_y, dt)
            self.cb_ex = self.cb_ex / h
            self.cb_ey = self.cb_ey / h
            self.da_zx, self.db_zx = _h_coeffs(np.broadcast_to(sx(xh)[:, None], (nx - 1, ny - 1)), eps0, mu0, dt)
            self.da_zy, self.db_zy = _h_coeffs(np.broadcast_to(sy(yh)[None, :], (nx - 1, ny - 1)), eps0, mu0, dt)
            self.src_hz = self.db_zx * _bump(xh, yh, y0, radius, h)
            self.db_zx = self.db_zx / h
            self.db_zy = self.db_zy / h
            self.ex = np.zeros((nx - 1, ny))
            self.ey = np.zeros((nx, ny - 1))
            self.hzx = np.zeros((nx - 1, ny - 1))
            self.hzy = np.zeros((nx - 1, ny - 1))
            self.hz = np.zeros((nx - 1, ny - 1))
            self.eps_e = [_cell_average_eps(eps_scene, xh, y, h), _cell_average_eps(eps_scene, x, yh, h)]
            self.probe_grids = [(xh, y), (x, yh)]

    def step(self, n: int) -> None:
        c = self.chi[n]
        if self.mode is Mode.TM:
            ez = self.ez
            self.hx *= self.da_hx
            self.hx -= self.db_hx * (ez[:, 1:] - ez[:, :-1])
            self.hx += c * self.src_hx
            self.hy *= self.da_hy
            self.hy += self.db_hy * (ez[1:, :] - ez[:-1, :])
            self.hy += c * self.src_hy
            self.ezx *= self.ca_x
            self.ezx += self.cb_x * (self.hy[1:, 1:-1] - self.hy[:-1, 1:-1])
            self.ezy *= self.ca_y
            self.ezy -= self.cb_y * (self.hx[1:-1, 1:] - self.hx[1:-1, :-1])
            np.add(self.ezx, self.ezy, out=ez[1:-1, 1:-1])
        else:
            ex, ey = self.ex, self.ey
            self.hzx *= self.da_zx
            self.hzx -= self.db_zx * (ey[1:, :] - ey[:-1, :])
            self.hzx += c * self.src_hz
            self.hzy *= self.da_zy
            self.hzy += self.db_zy * (ex[:, 1:] - ex[:, :-1])
            np.add(self.hzx, self.hzy, out=self.hz)
            hz = self.hz
            ex[:, 1:-1] *= self.ca_ex
            ex[:, 1:-1] += self.cb_ex * (hz[:, 1:] - hz[:, :-1])
            ey[1:-1, :] *= self.ca_ey
            ey[1:-1, :] -= self.cb_ey * (hz[1:, :] - hz[:-1, :])

    @property
    def e_components(self) -> list[np.ndarray]:
        return [self.ez] if self.mode is Mode.TM else [self.ex, self.ey]

    @property
    def h_components(self) -> list[np.ndarray]:
        return [self.hx, self.hy] if self.mode is Mode.TM else [self.hz]

    def energy(self, h_prev: list[np.ndarray] | None = None) -> float:
        """Discrete field energy 0.5 * sum(eps E^2 + mu0 H^- . H^+) h^2."""
        we = sum(float(np.sum(eps * e * e)) for eps, e in zip(self.eps_e, self.e_components))
        hs = self.h_components
        hp = hs if h_prev is None else h_prev
        wh = sum(float(np.sum(a * b)) for a, b in zip(hs, hp))
        return 0.5 * (we + self.constants.mu0 * wh) * self.h**2

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.e_components)


def _max_speed(scene: Scene) -> float:
    eps_r_min = min([1.0] + [sc.eps_r for sc in scene.scatterers])
    return scene.constants.c0 / math.sqrt(eps_r_min)


def _prepare(scene: Scene, params: SolverParams, mode: Mode, T: float):
    if scene.dim != 2:
        raise ValueError("run_forward_2d needs a 2D scene")
    mode = Mode(mode)
    if mode is Mode.TM and scene.source.polarization is None:
        raise ValueError("TM mode needs a source polarization")
    report = check_cfl(params, scene.constants, scene.source.pulse.f0, _max_speed(scene))
    if not report.ok:
        raise SolverError("CFL condition violated: " + "; ".join(report.messages))
    for msg in report.warnings:
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
    n_steps = int(round(T / params.dt))
    if n_steps < 1 or abs(n_steps * params.dt - T) > 1e-6 * params.dt * max(n_steps, 1):
        raise ValueError(f"T = {T} is not a whole number of steps of dt = {params.dt}")
    layout = _layout(scene, params)
    (cx0, cx1), (cy0, cy1) = layout.core
    pos = scene.receivers.positions
    if np.any(pos[:, 0] < cx0) or np.any(pos[:, 0] > cx1) or np.any(pos[:, 1] < cy0) or np.any(pos[:, 1] > cy1):
        raise SolverError("receiver lies inside the absorber")
    chi = np.asarray(evaluate(params.dt * np.arange(n_steps + 1), scene.source.pulse), dtype=float)
    return mode, n_steps, layout, chi


def _record(solver: Yee2D, probes) -> np.ndarray:
    return np.stack([(comp.ravel()[idx] * w).sum(axis=1) for comp, (idx, w) in zip(solver.e_components, probes)], axis=1)


def _run(scene, params, mode, layout, chi, n_steps, vacuum, energy=False):
    solver = Yee2D(scene, params, mode, layout, chi, vacuum)
    probes = [_bilinear(gx, gy, scene.receivers.positions) for gx, gy in solver.probe_grids]
    out = np.zeros((scene.receivers.count, n_steps + 1, len(probes)))
    energies = np.zeros(n_steps + 1) if energy else None
    for n in range(n_steps):
        h_prev = [a.copy() for a in solver.h_components] if energy else None
        solver.step(n)
        out[:, n + 1, :] = _record(solver, probes)
        if energy:
            energies[n + 1] = solver.energy(h_prev)
        if not np.isfinite(out[:, n + 1, :]).all() or ((n + 1) % _FINITE_CHECK_EVERY == 0 and not solver.all_finite()):
            raise SolverError("non-finite field, the run is unstable", step=n + 1)
    return out, energies


def run_forward_2d(scene: Scene, params: SolverParams, mode: Mode | str, T: float) -> TraceSet:
    """Scattered-field traces (total minus vacuum background) at the scene receivers.

    Returns one component for TM and two (E1, E2) for TE, sampled every solver
    step on [0, T].
    """
    mode, n_steps, layout, chi = _prepare(scene, params, mode, T)
    log.info("2D %s run: grid %dx%d, %d steps", mode.value, *layout.shape, n_steps)
    total, _ = _run(scene, params, mode, layout, chi, n_steps, vacuum=False)
    background, _ = _run(scene, params, mode, layout, chi, n_steps, vacuum=True)
    return TraceSet(scene.receivers.positions.copy(), params.dt, total - background)


def background_energy(scene: Scene, params: SolverParams, mode: Mode | str, T: float) -> np.ndarray:
    """Discrete field energy of the vacuum run after every step."""
    mode, n_steps, layout, chi = _prepare(scene, params, mode, T)
    _, energies = _run(scene, params, mode, layout, chi, n_steps, vacuum=True, energy=True)
    return energies
