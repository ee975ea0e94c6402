"""Experiment configuration: a flat ``dotted.key = value`` text format.

Example::

    # reference TM experiment
    scene.receivers.layout = circle2d
    scene.receivers.radius = 6
    scene.receivers.count = 48
    scene.scatterers.0.center = [0, 1.5]
    pulse.kind = gaussian_sine
    pulse.wavelength = 1.0

Values are Python literals (numbers, lists, quoted strings, True/False);
anything that is not a literal is taken as a bare string.  Integer path
components build lists.  The nested result is validated by pydantic models
that reject unknown keys.
"""

from __future__ import annotations

import ast
import re
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .forward.fdtd import SolverParams
from .scene import PhysicalConstants, Scene, SceneError, build_scene
from .waveform import PulseSpec

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.([A-Za-z_][A-Za-z0-9_]*|\d+))*$")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _insert(root: dict, parts: list[str], value, key: str):
    node = root
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{key}: conflicts with a scalar set earlier")
    if parts[-1] in node:
        raise ConfigError(f"{key}: set twice")
    node[parts[-1]] = value


def _listify(node):
    if not isinstance(node, dict):
        return node
    out = {k: _listify(v) for k, v in node.items()}
    if out and all(k.isdigit() for k in out):
        idx = sorted(int(k) for k in out)
        if idx != list(range(len(idx))):
            raise ConfigError(f"list indices must run 0..n-1 without gaps, got {idx}")
        return [out[str(i)] for i in idx]
    if any(k.isdigit() for k in out):
        raise ConfigError("mixing list indices and named keys in one section")
    return out


def parse_flat(text: str) -> dict:
    """Turn ``a.b.0.c = value`` lines into nested dicts and lists."""
    root: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"line {lineno}: invalid key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: {key} has no value")
        _insert(root, key.split("."), _literal(value), key)
    return _listify(root)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)


class ConstantsConfig(_Strict):
    eps0: float = PhysicalConstants.eps0
    mu0: float = PhysicalConstants.mu0
    sigma: float = Field(0.0, ge=0)


class ScattererConfig(_Strict):
    center: list[float]
    half_widths: list[float] | None = None
    side: float | None = Field(None, gt=0)
    eps_r: float

    @model_validator(mode="after")
    def _one_size(self):
        if (self.half_widths is None) == (self.side is None):
            raise ValueError("give exactly one of half_widths or side")
        return self

    def widths(self) -> list[float]:
        return self.half_widths if self.half_widths is not None else [self.side / 2] * len(self.center)


class SourceConfig(_Strict):
    location: list[float]
    polarization: list[float] | None = None


class ReceiversConfig(_Strict):
    layout: Literal["circle2d", "cube3d"]
    center: list[float] = [0.0, 0.0]
    radius: float | None = Field(None, gt=0)
    count: int | None = Field(None, ge=1)
    half_width: float | None = Field(None, gt=0)
    per_face_count: int | None = Field(None, ge=1)

    @model_validator(mode="after")
    def _fields_for_layout(self):
        need = ("radius", "count") if self.layout == "circle2d" else ("half_width", "per_face_count")
        missing = [n for n in need if getattr(self, n) is None]
        if missing:
            raise ValueError(f"layout {self.layout} needs {', '.join(missing)}")
        return self


class GridConfig(_Strict):
    extents: list[list[float]]
    n_per_axis: list[int] | int

    @field_validator("extents")
    @classmethod
    def _pairs(cls, v):
        if any(len(p) != 2 for p in v):
            raise ValueError("each extent is a [min, max] pair")
        return v


class SceneConfig(_Strict):
    constants: ConstantsConfig = ConstantsConfig()
    scatterers: list[ScattererConfig] = []
    source: SourceConfig
    receivers: ReceiversConfig
    grid: GridConfig


class PulseConfig(_Strict):
    kind: Literal["gaussian_sine", "smooth_sawtooth"]
    f0: float | None = Field(None, gt=0)
    wavelength: float | None = Field(None, gt=0)
    t0: float | None = Field(None, ge=0)
    smoothing: float | None = Field(None, gt=0)

    @model_validator(mode="after")
    def _one_frequency(self):
        if (self.f0 is None) == (self.wavelength is None):
            raise ValueError("give exactly one of f0 or wavelength")
        return self


class SolverConfig(_Strict):
    mode: Literal["TM", "TE"] = "TM"
    h: float = Field(gt=0)
    dt: float = Field(gt=0)
    padding: float = Field(1.0, ge=0)
    absorber_cells: int = Field(20, ge=1)
    absorber_order: float = Field(2.0, gt=0)
    absorber_reflection: float = Field(1e-6, gt=0, lt=1)
    mollifier_radius: float = Field(2.0, gt=0)


class BornConfig(_Strict):
    n_steps: int = Field(gt=0)
    n_freq: int = Field(2048, ge=2)
    xi_max: float | None = Field(None, gt=0)
    sigma: float = Field(0.0, ge=0)
    subdivisions: int = Field(1, ge=1)


class TimeConfig(_Strict):
    T: float = Field(gt=0)


class ImagingConfig(_Strict):
    T: float | None = Field(None, gt=0)
    rel_threshold: float = Field(0.3, gt=0, le=1)
    method: Literal["dsm", "tfm"] = "dsm"


class NoiseConfig(_Strict):
    delta: float = Field(0.0, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)


class ApertureConfig(_Strict):
    theta_min: float
    theta_max: float


class OutputConfig(_Strict):
    traces: str | None = None
    grid: str | None = None
    pgm: str | None = None
    csv: str | None = None


class ExperimentConfig(_Strict):
    scene: SceneConfig
    pulse: PulseConfig
    time: TimeConfig
    solver: SolverConfig | None = None
    born: BornConfig | None = None
    imaging: ImagingConfig = ImagingConfig()
    noise: NoiseConfig = NoiseConfig()
    aperture: ApertureConfig | None = None
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def _solver_matches_dimension(self):
        dim = len(self.scene.grid.extents)
        if dim == 2 and self.solver is None:
            raise ValueError("a 2D scene needs solver.* settings")
        if dim == 3 and self.born is None:
            raise ValueError("a 3D scene needs born.* settings")
        return self

    def pulse_spec(self, c0: float) -> PulseSpec:
        p = self.pulse
        f0 = p.f0 if p.f0 is not None else c0 / p.wavelength
        return PulseSpec(p.kind, f0=f0, t0=p.t0, smoothing=p.smoothing)

    def build(self) -> Scene:
        s = self.scene
        constants = PhysicalConstants(**s.constants.model_dump())
        desc: dict[str, Any] = {
            "constants": constants,
            "scatterers": [{"center": sc.center, "half_widths": sc.widths(), "eps_r": sc.eps_r} for sc in s.scatterers],
            "source": {
                "location": s.source.location,
                "pulse": self.pulse_spec(constants.c0),
                "polarization": s.source.polarization,
            },
            "receivers": s.receivers.model_dump(exclude_none=True),
            "grid": {"extents": s.grid.extents, "n_per_axis": s.grid.n_per_axis if isinstance(s.grid.n_per_axis, list) else [s.grid.n_per_axis]},
        }
        try:
            return build_scene(desc)
        except (SceneError, ValueError) as exc:
            raise ConfigError(f"scene: {exc}") from exc

    def solver_params(self) -> SolverParams:
        d = self.solver.model_dump()
        d.pop("mode")
        return SolverParams(**d)


def _describe(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def validate_config(raw: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from exc


def parse_config(text: str) -> ExperimentConfig:
    return validate_config(parse_flat(text))


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text)
