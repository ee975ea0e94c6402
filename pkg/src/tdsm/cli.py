"""Command-line entry point: ``tdsm simulate|image|tfm-image|aperture|verify|spectrum``.

Exit codes: 0 success, 1 configuration / usage error, 2 solver failure,
3 trace file inconsistent with the configured receivers.  ``verify`` exits 1
when any check fails.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .fileio import FormatError, atomic_write, read_trace_header, read_traces, write_csv, write_grid, write_pgm, write_traces
from .forward import SolverError, born_synthesize_3d, run_forward_2d
from .imaging import add_noise, aperture_mask, locate_peaks, tfm_indicator, time_indicator
from .scene import Scene
from .waveform import sample_pulse, spectrum

log = logging.getLogger("tdsm")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_MISMATCH = 0, 1, 2, 3


class CommandError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _apply_thread_cap() -> None:
    cap = os.environ.get("TDSM_THREADS")
    if not cap:
        return
    import numba

    try:
        n = int(cap)
    except ValueError:
        raise CommandError(f"TDSM_THREADS must be a positive integer, got {cap!r}", EXIT_CONFIG) from None
    if n < 1:
        raise CommandError("TDSM_THREADS must be >= 1", EXIT_CONFIG)
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _load(args) -> tuple[ExperimentConfig, Scene]:
    if not args.config:
        raise CommandError("--config is required", EXIT_CONFIG)
    try:
        cfg = load_config(args.config)
        return cfg, cfg.build()
    except ConfigError as exc:
        raise CommandError(f"config error: {exc}", EXIT_CONFIG) from exc


def _need(path, what: str):
    if not path:
        raise CommandError(f"no {what} path: pass it on the command line or set output.{what} in the config", EXIT_CONFIG)
    return path


def simulate(cfg: ExperimentConfig, scene: Scene):
    T = cfg.time.T
    if scene.dim == 2:
        try:
            return run_forward_2d(scene, cfg.solver_params(), cfg.solver.mode, T)
        except SolverError as exc:
            raise CommandError(f"solver error: {exc}", EXIT_SOLVER) from exc
    b = cfg.born
    return born_synthesize_3d(scene, T, b.n_steps, sigma=b.sigma, xi_max=b.xi_max, n_freq=b.n_freq, subdivisions=b.subdivisions)


def cmd_simulate(args) -> int:
    cfg, scene = _load(args)
    out = _need(args.out or cfg.output.traces, "traces")
    traces = simulate(cfg, scene)
    write_traces(out, traces)
    print(f"wrote {out}: {traces.n_receivers} receivers x {traces.n_samples} samples x {traces.n_components} components")
    return EXIT_OK


def expected_components(cfg: ExperimentConfig, scene: Scene) -> int:
    if scene.dim == 3:
        return 3
    return 1 if cfg.solver.mode == "TM" else 2


def _read_matching_traces(path, cfg: ExperimentConfig, scene: Scene):
    try:
        ns, _, nc, _ = read_trace_header(path)
        if ns != scene.receivers.count:
            raise CommandError(f"trace file has {ns} receivers, config has {scene.receivers.count}", EXIT_MISMATCH)
        if nc != expected_components(cfg, scene):
            raise CommandError(f"trace file has {nc} components, config expects {expected_components(cfg, scene)}", EXIT_MISMATCH)
        traces = read_traces(path)
    except (FormatError, OSError) as exc:
        raise CommandError(f"cannot read traces: {exc}", EXIT_MISMATCH) from exc
    if traces.positions.shape != scene.receivers.positions.shape or not np.allclose(traces.positions, scene.receivers.positions, rtol=0, atol=1e-9):
        raise CommandError("trace receiver coordinates differ from the configured receivers", EXIT_MISMATCH)
    # keep the exact configured coordinates so downstream checks compare bitwise
    return type(traces)(scene.receivers.positions.copy(), traces.dt, traces.values)


def _image(args, method: str, mask=None) -> int:
    cfg, scene = _load(args)
    traces_path = _need(args.traces or cfg.output.traces, "traces")
    out = _need(args.out or cfg.output.grid, "grid")
    traces = _read_matching_traces(traces_path, cfg, scene)
    delta = cfg.noise.delta if args.delta is None else args.delta
    seed = cfg.noise.seed if args.seed is None else args.seed
    if delta < 0:
        raise CommandError("--delta must be >= 0", EXIT_CONFIG)
    if delta > 0:
        traces = add_noise(traces, delta, seed)
    receivers = scene.receivers
    if mask is not None:
        if not mask.any():
            raise CommandError("the angular range selects no receivers", EXIT_CONFIG)
        receivers = receivers.subset(mask)
        traces = traces.select(mask)
    c0 = scene.constants.c0
    T = cfg.imaging.T if cfg.imaging.T is not None else min(cfg.time.T, traces.duration)
    try:
        if method == "tfm":
            grid = tfm_indicator(traces, receivers, scene.source, scene.source.pulse.t0 or 0.0, scene.grid, c0)
        else:
            grid = time_indicator(traces, receivers, scene.grid, scene.constants.sigma, c0, T)
    except ValueError as exc:
        raise CommandError(f"imaging error: {exc}", EXIT_CONFIG) from exc
    write_grid(out, grid)
    if cfg.output.pgm and scene.dim == 2:
        write_pgm(cfg.output.pgm, grid)
    if cfg.output.csv:
        write_csv(cfg.output.csv, grid)
    for point, value in locate_peaks(grid, cfg.imaging.rel_threshold):
        print(" ".join(f"{v:.6g}" for v in point), f"{value:.6g}")
    return EXIT_OK


def cmd_image(args) -> int:
    return _image(args, args.method or "dsm")


def cmd_tfm_image(args) -> int:
    return _image(args, "tfm")


def cmd_aperture(args) -> int:
    cfg, scene = _load(args)
    if scene.receivers.layout != "circle2d":
        raise CommandError("aperture needs a circle2d receiver layout", EXIT_CONFIG)
    lo = args.theta_min if args.theta_min is not None else (cfg.aperture.theta_min if cfg.aperture else None)
    hi = args.theta_max if args.theta_max is not None else (cfg.aperture.theta_max if cfg.aperture else None)
    if lo is None or hi is None:
        raise CommandError("aperture needs --theta-min and --theta-max", EXIT_CONFIG)
    try:
        mask = aperture_mask(scene.receivers, lo, hi)
    except ValueError as exc:
        raise CommandError(str(exc), EXIT_CONFIG) from exc
    return _image(args, "dsm", mask)


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suite

    name = args.suite
    if name != "all" and name not in SUITES:
        raise CommandError(f"unknown suite {name!r}; choose from {', '.join([*SUITES, 'all'])}", EXIT_CONFIG)
    checks = run_suite(name)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else 1


def cmd_spectrum(args) -> int:
    cfg, scene = _load(args)
    pulse = scene.source.pulse
    dt = 1.0 / (40.0 * pulse.f0)
    n = max(2, int(math.ceil(cfg.time.T / dt)) + 1)
    sig = sample_pulse(pulse, dt, n)
    f = np.linspace(0.0, 3.0 * pulse.f0, 601)
    spec = spectrum(sig, f)
    vals = spec.values[0]
    lines = ["f_hz,re,im,abs"] + [f"{fi:.17g},{v.real:.17g},{v.imag:.17g},{abs(v):.17g}" for fi, v in zip(f, vals)]
    text = "\n".join(lines) + "\n"
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    print(f"peak frequency {f[np.abs(vals).argmax()]:.6g} Hz (f0 = {pulse.f0:.6g} Hz)", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "image": cmd_image,
    "tfm-image": cmd_tfm_image,
    "aperture": cmd_aperture,
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tdsm", description="Time-domain direct sampling: simulate, image and verify.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path)
        sp.add_argument("--traces", type=Path)
        sp.add_argument("--out", type=Path)
        sp.add_argument("--delta", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--method", choices=("dsm", "tfm"))
        sp.add_argument("--theta-min", type=float)
        sp.add_argument("--theta-max", type=float)
        if name == "verify":
            sp.add_argument("suite", nargs="?", default="all")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_thread_cap()
        return COMMANDS[args.command](args)
    except CommandError as exc:
        print(f"tdsm: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
