"""Synthetic scattered-field data: 2D full-wave solver, 3D Born synthesis, analytic incident fields."""

from .born import born_synthesize_3d
from .fdtd import CFLReport, Mode, SolverError, SolverParams, background_energy, check_cfl, run_forward_2d
from .incident import incident_3d, incident_te, incident_tm, retarded_gradient
from .traces import TraceSet

__all__ = [
    "CFLReport",
    "Mode",
    "SolverError",
    "SolverParams",
    "TraceSet",
    "background_energy",
    "born_synthesize_3d",
    "check_cfl",
    "incident_3d",
    "incident_te",
    "incident_tm",
    "retarded_gradient",
    "run_forward_2d",
]
