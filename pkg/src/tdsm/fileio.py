"""ASCII trace and indicator-grid files, PGM previews and CSV dumps.

Every writer goes through a temporary file in the target directory followed
by an atomic rename, so readers never observe a half-written file.
"""

from __future__ import annotations

import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .forward.traces import TraceSet
from .imaging import IndicatorGrid
from .scene import SamplingGrid

TRACES_MAGIC = "TDSM-TRACES"
GRID_MAGIC = "TDSM-GRID"
VERSION = "v1"
_FMT = "%.17g"


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def atomic_write(path, data: str | bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rows(arr: np.ndarray) -> str:
    buf = io.StringIO()
    np.savetxt(buf, arr, fmt=_FMT)
    return buf.getvalue()


def format_traces(traces: TraceSet) -> str:
    ns, nt, nc = traces.values.shape
    head = f"{TRACES_MAGIC} {VERSION} {ns} {nt} {nc} {traces.dt:.17g}\n"
    return head + _rows(traces.positions) + _rows(traces.values.reshape(ns * nt, nc))


def write_traces(path, traces: TraceSet) -> None:
    atomic_write(path, format_traces(traces))


def read_trace_header(path) -> tuple[int, int, int, float]:
    with open(path) as fh:
        parts = fh.readline().split()
    if len(parts) != 6 or parts[0] != TRACES_MAGIC or parts[1] != VERSION:
        raise FormatError(f"{path}: not a {TRACES_MAGIC} {VERSION} file")
    try:
        return int(parts[2]), int(parts[3]), int(parts[4]), float(parts[5])
    except ValueError as exc:
        raise FormatError(f"{path}: malformed header") from exc


def read_traces(path) -> TraceSet:
    ns, nt, nc, dt = read_trace_header(path)
    with open(path) as fh:
        fh.readline()
        pos_lines = [fh.readline() for _ in range(ns)]
        body = np.loadtxt(fh, ndmin=2)
    try:
        pos = np.array([[float(v) for v in ln.split()] for ln in pos_lines])
    except ValueError as exc:
        raise FormatError(f"{path}: ragged or malformed receiver block") from exc
    if pos.ndim != 2 or pos.shape[0] != ns or pos.shape[1] not in (2, 3):
        raise FormatError(f"{path}: receiver block must hold {ns} points of dimension 2 or 3")
    if body.shape != (ns * nt, nc):
        raise FormatError(f"{path}: expected {ns * nt} lines of {nc} values, found {body.shape}")
    return TraceSet(pos, dt, body.reshape(ns, nt, nc))


def format_grid(grid: IndicatorGrid) -> str:
    g = grid.grid
    fields = [GRID_MAGIC, VERSION, str(g.dim)]
    fields += [str(n) for n in g.n_per_axis]
    fields += [f"{v:.17g}" for lo_hi in g.extents for v in lo_hi]
    fields += [f"{grid.sigma:.17g}", f"{grid.T:.17g}"]
    meta = f"# method={grid.method} homogeneity={grid.homogeneity}"
    if grid.provenance:
        meta += f" traces={grid.provenance}"
    return " ".join(fields) + "\n" + meta + "\n" + _rows(grid.values[:, None])


def write_grid(path, grid: IndicatorGrid) -> None:
    atomic_write(path, format_grid(grid))


def read_grid(path) -> IndicatorGrid:
    with open(path) as fh:
        head = fh.readline().split()
        second = fh.readline()
    if len(head) < 3 or head[0] != GRID_MAGIC or head[1] != VERSION:
        raise FormatError(f"{path}: not a {GRID_MAGIC} {VERSION} file")
    dim = int(head[2])
    if len(head) != 3 + dim + 2 * dim + 2:
        raise FormatError(f"{path}: header has {len(head)} fields")
    n = [int(v) for v in head[3 : 3 + dim]]
    ext = [float(v) for v in head[3 + dim : 3 + 3 * dim]]
    sigma, T = float(head[-2]), float(head[-1])
    meta = {}
    if second.startswith("#"):
        meta = dict(kv.split("=", 1) for kv in second[1:].split() if "=" in kv)
    values = np.loadtxt(path, skiprows=1, comments="#", ndmin=1)
    sg = SamplingGrid(tuple(zip(ext[0::2], ext[1::2])), tuple(n))
    return IndicatorGrid(sg, values, sigma=sigma, T=T, method=meta.get("method", "dsm"), provenance=meta.get("traces", ""))


def format_pgm(grid: IndicatorGrid) -> bytes:
    """Binary 8-bit PGM of a normalised 2D grid; first row is the largest y."""
    if grid.grid.dim != 2:
        raise ValueError("PGM output needs a 2D grid")
    a = grid.array
    vmax = a.max()
    scaled = np.zeros_like(a) if vmax == 0 else a / vmax
    img = np.round(255.0 * scaled).astype(np.uint8).T[::-1]  # rows: y descending, columns: x ascending
    ny, nx = img.shape
    head = f"P5\n# normalized indicator, rows top-to-bottom = y descending, columns = x ascending\n{nx} {ny}\n255\n"
    return head.encode("ascii") + img.tobytes()


def write_pgm(path, grid: IndicatorGrid) -> None:
    atomic_write(path, format_pgm(grid))


def write_csv(path, grid: IndicatorGrid) -> None:
    names = ["x", "y", "z"][: grid.grid.dim] + ["value"]
    data = np.column_stack([grid.grid.points, grid.values])
    buf = io.StringIO()
    np.savetxt(buf, data, fmt=_FMT, delimiter=",", header=",".join(names), comments="")
    atomic_write(path, buf.getvalue())
