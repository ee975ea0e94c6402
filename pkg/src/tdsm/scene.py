"""Physical experiment description: constants, scatterers, source, receivers
and the sampling grid, plus the geometric sanity checks that tie them
together."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import constants as _sc

from .waveform import PulseSpec

EPS0 = _sc.epsilon_0
MU0 = _sc.mu_0
EPS_R_MIN = 1e-3


class SceneError(ValueError):
    """A scene description violates one of the geometric or physical invariants."""


@dataclass(frozen=True)
class PhysicalConstants:
    eps0: float = EPS0
    mu0: float = MU0
    sigma: float = 0.0

    def __post_init__(self):
        if not (self.eps0 > 0 and self.mu0 > 0):
            raise SceneError("eps0 and mu0 must be positive")
        if not self.sigma >= 0:
            raise SceneError("sigma must be >= 0")

    @property
    def c0(self) -> float:
        return 1.0 / math.sqrt(self.mu0 * self.eps0)


@dataclass(frozen=True)
class Scatterer:
    """Axis-aligned box ``center +- half_widths`` with relative permittivity ``eps_r``."""

    center: tuple[float, ...]
    half_widths: tuple[float, ...]
    eps_r: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "half_widths", tuple(float(h) for h in self.half_widths))
        if len(self.center) != len(self.half_widths):
            raise SceneError("center and half_widths differ in dimension")
        if any(not h > 0 for h in self.half_widths):
            raise SceneError("half_widths must be positive")
        if not self.eps_r >= EPS_R_MIN:
            raise SceneError(f"eps_r must be >= {EPS_R_MIN}")

    @property
    def lower(self) -> np.ndarray:
        return np.subtract(self.center, self.half_widths)

    @property
    def upper(self) -> np.ndarray:
        return np.add(self.center, self.half_widths)

    @property
    def volume(self) -> float:
        return float(np.prod(2.0 * np.asarray(self.half_widths)))

    def contains(self, x) -> np.ndarray:
        """Closed-box membership for one point or an (N, dim) batch."""
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lower) & (x <= self.upper), axis=-1)


def box_distance(a: Scatterer, b: Scatterer) -> float:
    gap = np.maximum(0.0, np.abs(np.subtract(a.center, b.center)) - np.add(a.half_widths, b.half_widths))
    return float(np.linalg.norm(gap))


@dataclass(frozen=True)
class ReceiverArray:
    """Receiver positions plus the surface quadrature weight of the layout.

    ``total_weight`` is the full surface measure used by the indicator
    (``2 pi R`` on a circle, ``4 pi R^2`` for the cube layout); each active
    receiver carries ``total_weight / count``.
    """

    layout: str
    positions: np.ndarray = field(repr=False)
    total_weight: float
    center: tuple[float, ...]
    radius: float

    @classmethod
    def circle2d(cls, center, radius: float, count: int) -> ReceiverArray:
        if count < 1 or not radius > 0:
            raise SceneError("circle2d needs radius > 0 and count >= 1")
        theta = 2.0 * math.pi * np.arange(count) / count
        c = np.asarray(center, dtype=float)
        pos = c + radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return cls("circle2d", pos, 2.0 * math.pi * radius, tuple(c), float(radius))

    @classmethod
    def cube3d(cls, half_width: float, per_face_count: int) -> ReceiverArray:
        n = math.isqrt(per_face_count)
        if n * n != per_face_count or n < 1 or not half_width > 0:
            raise SceneError("cube3d needs half_width > 0 and a square per_face_count")
        # interior lattice: cell centres of an n x n partition of each face
        u = half_width * (-1.0 + (2.0 * np.arange(n) + 1.0) / n)
        uu, vv = np.meshgrid(u, u, indexing="ij")
        uu, vv = uu.ravel(), vv.ravel()
        faces = []
        for axis in range(3):
            others = [ax for ax in range(3) if ax != axis]
            for sign in (-1.0, 1.0):
                pts = np.empty((uu.size, 3))
                pts[:, axis] = sign * half_width
                pts[:, others[0]] = uu
                pts[:, others[1]] = vv
                faces.append(pts)
        pos = np.concatenate(faces)
        return cls("cube3d", pos, 4.0 * math.pi * half_width**2, (0.0, 0.0, 0.0), float(half_width))

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.count, self.total_weight / self.count)

    def angles(self) -> np.ndarray:
        """Polar angle in [0, 2 pi) of each receiver about the layout centre (2D only)."""
        d = self.positions - np.asarray(self.center)
        return np.mod(np.arctan2(d[:, 1], d[:, 0]), 2.0 * math.pi)

    def subset(self, mask) -> ReceiverArray:
        """Keep the selected receivers; the surface weight w is left unchanged."""
        return replace(self, positions=self.positions[np.asarray(mask)])


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform cell-centred sampling mesh; points are ordered with x fastest."""

    extents: tuple[tuple[float, float], ...]
    n_per_axis: tuple[int, ...]

    def __post_init__(self):
        ext = tuple((float(lo), float(hi)) for lo, hi in self.extents)
        n = tuple(int(k) for k in self.n_per_axis)
        if len(n) == 1:
            n = n * len(ext)
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "n_per_axis", n)
        if len(ext) not in (2, 3) or len(n) != len(ext):
            raise SceneError("sampling grid must be 2D or 3D with one count per axis")
        if any(hi <= lo for lo, hi in ext):
            raise SceneError("grid extents must satisfy min < max")
        if any(k < 2 for k in n):
            raise SceneError("grid needs at least 2 cells per axis")

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_per_axis

    @property
    def size(self) -> int:
        return int(np.prod(self.n_per_axis))

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / k for (lo, hi), k in zip(self.extents, self.n_per_axis)])

    def axis(self, i: int) -> np.ndarray:
        lo, _ = self.extents[i]
        return lo + (np.arange(self.n_per_axis[i]) + 0.5) * self.spacing[i]

    @property
    def points(self) -> np.ndarray:
        axes = [self.axis(i) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel(order="F") for m in mesh], axis=1)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return all(lo <= xi <= hi for xi, (lo, hi) in zip(x, self.extents))


@dataclass(frozen=True)
class SourceSpec:
    location: tuple[float, ...]
    pulse: PulseSpec
    polarization: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "location", tuple(float(v) for v in self.location))
        if self.polarization is not None:
            object.__setattr__(self, "polarization", tuple(float(v) for v in self.polarization))
            if not np.linalg.norm(self.polarization) > 0:
                raise SceneError("source polarization must be non-zero")


@dataclass(frozen=True)
class Scene:
    constants: PhysicalConstants
    scatterers: tuple[Scatterer, ...]
    source: SourceSpec
    receivers: ReceiverArray
    grid: SamplingGrid
    min_separation: float

    @property
    def dim(self) -> int:
        return self.grid.dim

    def with_scatterers(self, scatterers: Sequence[Scatterer]) -> Scene:
        return replace(self, scatterers=tuple(scatterers), min_separation=_min_separation(scatterers))


def _min_separation(scatterers: Sequence[Scatterer]) -> float:
    dists = [box_distance(a, b) for a, b in itertools.combinations(scatterers, 2)]
    return min(dists) if dists else math.inf


def _receivers_from(desc: Mapping[str, Any]) -> ReceiverArray:
    layout = desc.get("layout")
    if layout == "circle2d":
        return ReceiverArray.circle2d(desc.get("center", (0.0, 0.0)), desc["radius"], desc["count"])
    if layout == "cube3d":
        return ReceiverArray.cube3d(desc["half_width"], desc["per_face_count"])
    raise SceneError(f"unknown receiver layout {layout!r}")


def build_scene(desc: Mapping[str, Any]) -> Scene:
    """Assemble and validate a :class:`Scene` from a plain description.

    ``desc`` holds ``constants`` (mapping), ``scatterers`` (list of mappings),
    ``source`` (mapping with ``location``, ``pulse`` and optional
    ``polarization``), ``receivers`` and ``grid`` (``extents``,
    ``n_per_axis``).  Ready-made objects are accepted in place of mappings.
    """

    def obj(value, cls, **kw):
        return value if isinstance(value, cls) else cls(**{**value, **kw})

    constants = obj(desc.get("constants", {}), PhysicalConstants)
    grid = obj(desc["grid"], SamplingGrid)
    dim = grid.dim
    scatterers = []
    for j, s in enumerate(desc.get("scatterers", ())):
        try:
            sc = obj(s, Scatterer)
        except (SceneError, TypeError, KeyError) as exc:
            raise SceneError(f"scatterer {j}: {exc}") from exc
        if len(sc.center) != dim:
            raise SceneError(f"scatterer {j}: dimension {len(sc.center)} does not match grid dimension {dim}")
        if not grid.contains(sc.center):
            raise SceneError(f"scatterer {j}: centre {sc.center} lies outside the sampling extents")
        scatterers.append(sc)

    src = desc["source"]
    if not isinstance(src, SourceSpec):
        pulse = src["pulse"] if isinstance(src["pulse"], PulseSpec) else PulseSpec(**src["pulse"])
        src = SourceSpec(location=src["location"], pulse=pulse, polarization=src.get("polarization"))
    if len(src.location) != dim:
        raise SceneError("source location dimension does not match the grid")
    if src.polarization is not None and len(src.polarization) not in (2, 3):
        raise SceneError("source polarization must be a 2- or 3-vector")

    receivers = desc["receivers"]
    if not isinstance(receivers, ReceiverArray):
        receivers = _receivers_from(receivers)
    if receivers.dim != dim:
        raise SceneError("receiver layout dimension does not match the grid")

    for m, x in enumerate(receivers.positions):
        for j, sc in enumerate(scatterers):
            if sc.contains(x):
                raise SceneError(f"receiver {m} lies inside scatterer {j}")
    if grid.contains(src.location):
        raise SceneError("source lies inside the sampling extents")
    for j, sc in enumerate(scatterers):
        if sc.contains(src.location):
            raise SceneError(f"source lies inside scatterer {j}")

    return Scene(constants, tuple(scatterers), src, receivers, grid, _min_separation(scatterers))


def permittivity_at(scene: Scene, x) -> np.ndarray | float:
    """eps(x): eps_r * eps0 inside a (closed) scatterer box, eps0 outside.

    Where boxes overlap the largest eps_r wins.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    eps_r = np.full(pts.shape[0], -np.inf)
    for sc in scene.scatterers:
        inside = sc.contains(pts)
        eps_r[inside] = np.maximum(eps_r[inside], sc.eps_r)
    eps_r[np.isneginf(eps_r)] = 1.0
    out = eps_r * scene.constants.eps0
    return float(out[0]) if single else out
