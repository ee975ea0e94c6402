"""Reference experiment geometries used by the verification suites and tests."""

from __future__ import annotations

from .forward.fdtd import SolverParams
from .scene import PhysicalConstants, Scene, build_scene
from .waveform import PulseSpec

TM_CENTERS_2D = ((0.0, 1.5), (0.0, -1.5), (1.5, 0.0))
TE_CENTERS_2D = ((0.0, 1.5), (0.0, -1.5))
TERMINAL_TIME_2D = 2e-7
TWO_CUBE_CENTERS = ((-1.0, 0.0, 0.0), (1.0, 0.0, 0.0))


def _gaussian(wavelength: float, constants: PhysicalConstants) -> PulseSpec:
    return PulseSpec("gaussian_sine", f0=constants.c0 / wavelength)


def scene_2d(centers=TM_CENTERS_2D, wavelength: float = 1.0, eps_r: float = 2.0, side: float = 0.2, sigma: float = 0.0) -> Scene:
    """Circle of 48 receivers (R = 6), source at (-8, 0) with p = (0, 1), 60x60 grid on [-2.5, 2.5]^2."""
    constants = PhysicalConstants(sigma=sigma)
    return build_scene(
        {
            "constants": constants,
            "scatterers": [{"center": c, "half_widths": (side / 2, side / 2), "eps_r": eps_r} for c in centers],
            "source": {"location": (-8.0, 0.0), "pulse": _gaussian(wavelength, constants), "polarization": (0.0, 1.0)},
            "receivers": {"layout": "circle2d", "center": (0.0, 0.0), "radius": 6.0, "count": 48},
            "grid": {"extents": ((-2.5, 2.5), (-2.5, 2.5)), "n_per_axis": (60, 60)},
        }
    )


def solver_params_2d(wavelength: float = 1.0) -> SolverParams:
    """Ten cells per wavelength; the time step is 2e-10 s at wavelength 1 and halves with h."""
    h = 0.1 * wavelength
    return SolverParams(h=h, dt=2e-10 * wavelength)


def scene_3d(centers=((0.0, 0.0, 0.0),), side: float = 1.0, wavelength: float = 1.0, eps_r: float = 2.0) -> Scene:
    """Cube of receivers (half-width 3, 7x7 per face), source (0, -8, 0), p = (1, 0, 0), 30^3 grid on [-2, 2]^3."""
    constants = PhysicalConstants()
    return build_scene(
        {
            "constants": constants,
            "scatterers": [{"center": c, "half_widths": (side / 2,) * 3, "eps_r": eps_r} for c in centers],
            "source": {"location": (0.0, -8.0, 0.0), "pulse": _gaussian(wavelength, constants), "polarization": (1.0, 0.0, 0.0)},
            "receivers": {"layout": "cube3d", "half_width": 3.0, "per_face_count": 49},
            "grid": {"extents": ((-2.0, 2.0),) * 3, "n_per_axis": (30, 30, 30)},
        }
    )
