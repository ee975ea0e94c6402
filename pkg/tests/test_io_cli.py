import math
from pathlib import Path

import numpy as np
import pytest

from tdsm import cli
from tdsm.config import ConfigError, load_config, parse_config, parse_flat
from tdsm.fileio import FormatError, format_pgm, read_grid, read_trace_header, read_traces, write_csv, write_grid, write_traces
from tdsm.forward.traces import TraceSet
from tdsm.imaging import IndicatorGrid
from tdsm.scene import SamplingGrid

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def config_text(name, tmp_path, **overrides):
    """Shipped config with outputs redirected to ``tmp_path`` and keys replaced or added."""
    lines = []
    for line in (CONFIGS / name).read_text().splitlines():
        key = line.split("=", 1)[0].strip()
        if key in overrides:
            continue
        lines.append(line.replace("out/", f"{tmp_path}/"))
    lines += [f"{k} = {v}" for k, v in overrides.items() if v is not None]
    return "\n".join(lines) + "\n"


def write_config(tmp_path, name, **overrides):
    path = tmp_path / name
    path.write_text(config_text(name, tmp_path, **overrides))
    return path


# --- files ----------------------------------------------------------------------------


def test_trace_round_trip_is_exact(tmp_path, rng):
    tr = TraceSet(rng.normal(size=(5, 3)), 1.234567890123e-10, rng.normal(size=(5, 17, 3)) * 1e-7)
    write_traces(tmp_path / "t.txt", tr)
    back = read_traces(tmp_path / "t.txt")
    assert np.array_equal(back.values, tr.values)
    assert np.array_equal(back.positions, tr.positions)
    assert back.dt == tr.dt
    assert read_trace_header(tmp_path / "t.txt") == (5, 17, 3, tr.dt)


def test_trace_reader_rejects_damage(tmp_path, rng):
    tr = TraceSet(rng.normal(size=(2, 2)), 1e-10, rng.normal(size=(2, 4, 1)))
    write_traces(tmp_path / "t.txt", tr)
    lines = (tmp_path / "t.txt").read_text().splitlines()
    (tmp_path / "short.txt").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(FormatError):
        read_traces(tmp_path / "short.txt")
    (tmp_path / "bad.txt").write_text("TDSM-TRACES v9 2 4 1 1e-10\n")
    with pytest.raises(FormatError):
        read_traces(tmp_path / "bad.txt")


def test_grid_round_trip_is_exact(tmp_path, rng):
    for shape in ((4, 3), (3, 2, 5)):
        g = SamplingGrid(tuple((-1.0 - i, 2.0 + i) for i in range(len(shape))), shape)
        ig = IndicatorGrid(g, rng.random(g.size) * 1e-3, sigma=2e7, T=1e-7, method="tfm", provenance="abc")
        write_grid(tmp_path / "g.txt", ig)
        back = read_grid(tmp_path / "g.txt")
        assert np.array_equal(back.values, ig.values)
        assert back.grid == g and back.sigma == ig.sigma and back.T == ig.T
        assert back.method == "tfm" and back.homogeneity == "linear" and back.provenance == "abc"


def test_pgm_layout():
    g = SamplingGrid(((0, 3), (0, 2)), (3, 2))
    vals = np.array([0, 1, 2, 3, 4, 6.0])  # x fastest
    data = format_pgm(IndicatorGrid(g, vals))
    assert data.startswith(b"P5\n")
    body = data[-6:]
    # first row holds the largest y
    assert list(body) == [round(255 * v / 6) for v in (3, 4, 6, 0, 1, 2)]


def test_csv_columns(tmp_path):
    g = SamplingGrid(((0, 1), (0, 1)), (2, 2))
    write_csv(tmp_path / "g.csv", IndicatorGrid(g, [1.0, 2.0, 3.0, 4.0]))
    rows = (tmp_path / "g.csv").read_text().splitlines()
    assert rows[0] == "x,y,value"
    assert len(rows) == 5


# --- config ---------------------------------------------------------------------------


def test_parse_flat_builds_lists():
    raw = parse_flat("a.b = 1\na.c.0 = [1, 2]\na.c.1 = 'x'\nd = TM  # comment\n")
    assert raw == {"a": {"b": 1, "c": [[1, 2], "x"]}, "d": "TM"}


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("a = 1\na = 2\n", "set twice"),
        ("a.0 = 1\na.2 = 1\n", "without gaps"),
        ("a b = 1\n", "invalid key"),
        ("just words\n", "expected"),
        ("a =\n", "no value"),
    ],
)
def test_parse_flat_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_flat(text)


def test_shipped_configs_validate():
    for name in ("tm_three_boxes.cfg", "te_two_boxes.cfg", "born3d_cube.cfg"):
        cfg = load_config(CONFIGS / name)
        scene = cfg.build()
        assert scene.receivers.count in (48, 294)


@pytest.mark.parametrize(
    "overrides, fragment",
    [
        ({"solver.h": "-0.1"}, "solver.h"),
        ({"solver.dt": "'fast'"}, "solver.dt"),
        ({"solver.flavour": "1"}, "solver.flavour"),
        ({"pulse.kind": "square"}, "pulse.kind"),
        ({"pulse.f0": "3e8"}, "exactly one of f0 or wavelength"),
        ({"scene.receivers.count": "0"}, "scene.receivers.count"),
        ({"solver.mode": None, "solver.h": None, "solver.dt": None}, "solver"),
    ],
)
def test_config_rejections_name_the_field(tmp_path, overrides, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(config_text("tm_three_boxes.cfg", tmp_path, **overrides))


def test_scene_errors_surface_on_build(tmp_path):
    cfg = parse_config(config_text("tm_three_boxes.cfg", tmp_path, **{"scene.scatterers.1.center": "[9.0, 9.0]"}))
    with pytest.raises(ConfigError, match="scatterer 1"):
        cfg.build()


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


# --- command line ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def tm_run(tmp_path_factory):
    """Short TM simulation through the CLI, reused by the imaging commands."""
    tmp = tmp_path_factory.mktemp("cli")
    cfg = write_config(tmp, "tm_three_boxes.cfg", **{"time.T": "6e-8"})
    assert cli.main(["simulate", "--config", str(cfg)]) == 0
    return tmp, cfg


def test_simulate_writes_traces(tm_run):
    tmp, _ = tm_run
    assert read_trace_header(tmp / "tm_traces.txt")[:3] == (48, 301, 1)


def test_simulate_contrast_free_scene(tmp_path):
    cfg = write_config(tmp_path, "tm_three_boxes.cfg", **{"time.T": "1e-8", **{f"scene.scatterers.{j}.eps_r": "1.0" for j in range(3)}})
    assert cli.main(["simulate", "--config", str(cfg)]) == 0
    assert np.all(read_traces(tmp_path / "tm_traces.txt").values == 0)


def test_simulate_solver_error_exit_code(tmp_path):
    cfg = write_config(tmp_path, "tm_three_boxes.cfg", **{"solver.dt": "1e-9", "time.T": "1e-8"})
    assert cli.main(["simulate", "--config", str(cfg)]) == 2


def test_image_dsm_and_tfm(tm_run, capsys):
    tmp, cfg = tm_run
    assert cli.main(["image", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out and all(len(line.split()) == 3 for line in out)
    g = read_grid(tmp / "tm_grid.txt")
    assert g.grid.shape == (60, 60) and g.homogeneity == "quadratic"
    assert (tmp / "tm_grid.pgm").read_bytes().startswith(b"P5")
    assert cli.main(["tfm-image", "--config", str(cfg), "--out", str(tmp / "tfm.txt")]) == 0
    assert "homogeneity=linear" in (tmp / "tfm.txt").read_text().splitlines()[1]


def test_noisy_image_is_reproducible(tm_run):
    tmp, cfg = tm_run
    for name in ("n1.txt", "n2.txt"):
        assert cli.main(["image", "--config", str(cfg), "--delta", "0.2", "--seed", "4", "--out", str(tmp / name)]) == 0
    assert (tmp / "n1.txt").read_bytes() == (tmp / "n2.txt").read_bytes()


def test_full_aperture_equals_image(tm_run):
    tmp, cfg = tm_run
    assert cli.main(["image", "--config", str(cfg), "--out", str(tmp / "a.txt")]) == 0
    assert cli.main(["aperture", "--config", str(cfg), "--theta-min", "0", "--theta-max", str(2 * math.pi), "--out", str(tmp / "b.txt")]) == 0
    assert (tmp / "a.txt").read_bytes() == (tmp / "b.txt").read_bytes()


def test_empty_aperture_exit_code(tm_run):
    _, cfg = tm_run
    assert cli.main(["aperture", "--config", str(cfg), "--theta-min", "0.01", "--theta-max", "0.02"]) == 1


def test_trace_mismatch_exit_codes(tm_run, tmp_path):
    tmp, cfg = tm_run
    assert cli.main(["image", "--config", str(cfg), "--traces", str(tmp_path / "missing.txt")]) == 3
    te_cfg = write_config(tmp_path, "te_two_boxes.cfg")
    assert cli.main(["image", "--config", str(te_cfg), "--traces", str(tmp / "tm_traces.txt")]) == 3
    small = write_config(tmp_path, "tm_three_boxes.cfg", **{"scene.receivers.count": "40"})
    assert cli.main(["image", "--config", str(small), "--traces", str(tmp / "tm_traces.txt")]) == 3


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(config_text("tm_three_boxes.cfg", tmp_path, **{"solver.colour": "'red'"}))
    assert cli.main(["simulate", "--config", str(bad)]) == 1
    assert "solver.colour" in capsys.readouterr().err
    assert cli.main(["simulate"]) == 1
    assert cli.main(["frobnicate"]) == 1


def test_verify_commands(capsys):
    assert cli.main(["verify", "bessel"]) == 0
    line = capsys.readouterr().out.strip()
    name, measured, tol, verdict = line.split()[1:]
    assert line.startswith("CHECK ") and verdict == "PASS" and float(measured) <= float(tol)
    assert cli.main(["verify", "parseval"]) == 0
    assert cli.main(["verify", "bogus"]) == 1


def test_spectrum_command(tmp_path, capsys):
    cfg = write_config(tmp_path, "tm_three_boxes.cfg")
    assert cli.main(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "s.csv")]) == 0
    data = np.loadtxt(tmp_path / "s.csv", delimiter=",", skiprows=1)
    f0 = 299792458.0
    assert abs(data[data[:, 3].argmax(), 0] - f0) <= 0.05 * f0


def test_thread_cap_validation(monkeypatch, tm_run):
    _, cfg = tm_run
    monkeypatch.setenv("TDSM_THREADS", "zero")
    assert cli.main(["verify", "bessel"]) == 1
    monkeypatch.setenv("TDSM_THREADS", "1")
    assert cli.main(["verify", "bessel"]) == 0
