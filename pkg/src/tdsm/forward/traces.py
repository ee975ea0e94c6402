from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class TraceSet:
    """Scattered field at every receiver and time step.

    ``values`` has shape (n_receivers, n_samples, n_components); sample ``n``
    is taken at ``t = n * dt``.
    """

    positions: np.ndarray = field(repr=False)
    dt: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 2:
            vals = vals[:, :, None]
        if vals.ndim != 3 or vals.shape[0] != pos.shape[0]:
            raise ValueError("values must be (n_receivers, n_samples, n_components)")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not np.all(np.isfinite(vals)):
            raise ValueError("trace values must be finite")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "values", vals)

    @property
    def n_receivers(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]

    @property
    def n_components(self) -> int:
        return self.values.shape[2]

    @property
    def duration(self) -> float:
        return (self.n_samples - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_samples)

    def scaled(self, alpha: float) -> TraceSet:
        return replace(self, values=alpha * self.values)

    def truncated(self, T: float) -> TraceSet:
        """Keep samples with t <= T (the record now ends at the terminal time)."""
        n = int(np.floor(T / self.dt + 1e-9)) + 1
        return replace(self, values=self.values[:, :n, :].copy())

    def select(self, mask) -> TraceSet:
        mask = np.asarray(mask)
        return replace(self, positions=self.positions[mask], values=self.values[mask])
