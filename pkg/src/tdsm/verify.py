"""Property suites behind ``tdsm verify``: sphere identity, Parseval,
time/frequency indicator equivalence and noise stability."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .forward.fdtd import run_forward_2d
from .forward.traces import TraceSet
from .imaging import add_noise, localization_errors, locate_peaks, time_indicator
from .presets import TERMINAL_TIME_2D, TM_CENTERS_2D, scene_2d, solver_params_2d
from .specfun import sphere_projector_closed_form, sphere_projector_integrand, sphere_quadrature_oracle
from .waveform import PulseSpec, sample_pulse
from .xform import freq_indicator, parseval_residual, receiver_spectra

SPHERE_TOL = 1e-8
PARSEVAL_TOL = 1e-3
EQUIVALENCE_TOL = 1e-2
NOISE_LEVELS = (0.1, 0.2, 0.4)
NOISE_SEEDS = 5
NOISE_FACTOR = 2.0


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        return f"CHECK {self.name} {self.measured:.6g} {self.tolerance:.6g} {'PASS' if self.passed else 'FAIL'}"


def _upper(name, measured, tol) -> Check:
    return Check(name, float(measured), float(tol), bool(measured <= tol))


def sphere_identity_errors(n: int = 50, seed: int = 0, order: int = 40) -> np.ndarray:
    """Relative Frobenius gap between the closed form and quadrature for random (z, sigma/c0)."""
    rng = np.random.default_rng(seed)
    c0 = 1.0
    errs = np.empty(n)
    for i in range(n):
        direction = rng.normal(size=3)
        z = direction / np.linalg.norm(direction) * rng.uniform(0.1, 3.0)
        kappa = 0.0 if i == 0 else rng.uniform(0.0, 5.0)
        sigma = kappa * c0 / np.linalg.norm(z)
        ref = sphere_quadrature_oracle(sphere_projector_integrand(z, sigma, c0), order)
        errs[i] = np.linalg.norm(sphere_projector_closed_form(z, sigma, c0) - ref) / np.linalg.norm(ref)
    return errs


def suite_bessel() -> list[Check]:
    return [_upper("sphere_identity_max_rel_err", sphere_identity_errors().max(), SPHERE_TOL)]


def reference_pulse_signal(wavelength: float = 1.0) -> tuple[PulseSpec, object]:
    c0 = 299792458.0
    spec = PulseSpec("gaussian_sine", f0=c0 / wavelength)
    dt = 1.0 / (40.0 * spec.f0)
    n = int(math.ceil((spec.t0 + 8.0 * spec.a) / dt)) + 1
    return spec, sample_pulse(spec, dt, n)


def suite_parseval() -> list[Check]:
    spec, sig = reference_pulse_signal()
    out = []
    for sigma in (0.0, 2e7):
        r = parseval_residual(sig, sigma, 6.0 * spec.omega, 4001)
        out.append(_upper(f"parseval_residual_sigma={sigma:g}", r, PARSEVAL_TOL))
    return out


@functools.lru_cache(maxsize=2)
def reference_tm_traces(wavelength: float = 1.0) -> TraceSet:
    """Scattered traces of the three-box TM experiment (cached per process)."""
    return run_forward_2d(scene_2d(wavelength=wavelength), solver_params_2d(wavelength), "TM", TERMINAL_TIME_2D)


def equivalence_gap(sigma: float = 0.0, n_points: int = 25, seed: int = 0, n_freq: int = 3001) -> float:
    """max |I_time - I_freq| over random points, scaled by the grid maximum of I_time."""
    scene = scene_2d()
    traces = reference_tm_traces()
    c0 = scene.constants.c0
    grid_max = time_indicator(traces, scene.receivers, scene.grid, sigma, c0, TERMINAL_TIME_2D).values.max()
    (x0, x1), (y0, y1) = scene.grid.extents
    rng = np.random.default_rng(seed)
    z = np.column_stack([rng.uniform(x0, x1, n_points), rng.uniform(y0, y1, n_points)])
    it = time_indicator(traces, scene.receivers, scene.grid, sigma, c0, TERMINAL_TIME_2D, points=z)
    xi = np.linspace(0.0, 6.0 * scene.source.pulse.omega, n_freq)
    spectra = receiver_spectra(traces, sigma, xi)
    fi = freq_indicator(traces, scene.receivers, z, sigma, xi, c0=c0, spectra=spectra)
    return float(np.abs(it - fi).max() / grid_max)


def suite_equivalence() -> list[Check]:
    return [_upper(f"time_freq_equivalence_sigma={s:g}", equivalence_gap(s), EQUIVALENCE_TOL) for s in (0.0, 2e7)]


def noise_perturbations(levels=NOISE_LEVELS, seeds: int = NOISE_SEEDS):
    """Mean (over seeds) max-norm indicator change per noise level, and the noisy peak errors at the last level."""
    scene = scene_2d()
    traces = reference_tm_traces()
    c0 = scene.constants.c0
    clean = time_indicator(traces, scene.receivers, scene.grid, 0.0, c0, TERMINAL_TIME_2D)
    pert, errors = {}, []
    for delta in levels:
        diffs = []
        for s in range(seeds):
            noisy = time_indicator(add_noise(traces, delta, s), scene.receivers, scene.grid, 0.0, c0, TERMINAL_TIME_2D)
            diffs.append(np.abs(noisy.values - clean.values).max())
            if delta == levels[-1]:
                errors.append(localization_errors(locate_peaks(noisy, 0.3), TM_CENTERS_2D).max())
        pert[delta] = float(np.mean(diffs))
    return pert, errors, clean


def suite_noise_stability() -> list[Check]:
    pert, errors, clean = noise_perturbations()
    lo = NOISE_LEVELS[0]
    slope = pert[lo] / lo
    out = []
    for delta in NOISE_LEVELS[1:]:
        out.append(_upper(f"noise_growth_ratio_delta={delta:g}", pert[delta] / (slope * delta), NOISE_FACTOR))
    cell = float(clean.grid.spacing.max())
    out.append(_upper(f"noisy_worst_peak_error_delta={NOISE_LEVELS[-1]:g}", max(errors), 3.0 * cell))
    return out


SUITES: dict[str, Callable[[], list[Check]]] = {
    "bessel": suite_bessel,
    "parseval": suite_parseval,
    "equivalence": suite_equivalence,
    "noise-stability": suite_noise_stability,
}


def run_suite(name: str) -> list[Check]:
    if name == "all":
        return [c for fn in SUITES.values() for c in fn()]
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name]()
