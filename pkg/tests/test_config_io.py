import json
import math
import os
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lorentz_flow import cli
from lorentz_flow.config import ConfigError, OutputSpec, example_config, parse_config
from lorentz_flow.envelope import SINGULAR, SMOOTH, EnvelopeSample, ParameterGrid
from lorentz_flow.run import run
from lorentz_flow.serialize import emit_level_obj, read_csv, write_table

BASE = """
version: 1
name: demo
surfaces:
  M1: {kind: paraboloid, height: 2.0, coefficient: 0.2}
  M3: {kind: paraboloid, height: 4.0, coefficient: 0.5}
flow: {source: M1, target: M3, correspondence: vertical}
grid: {u: [[-1, 1, 5], [-1, 1, 5]], t: 5}
"""


def config(extra=""):
    return parse_config(BASE + extra)


# -- parsing ---------------------------------------------------------------------

def test_defaults():
    cfg = parse_config("surfaces: {S: {kind: sphere, radius: 1.0, center: [0, 0, 0]}}")
    assert cfg.version == 1 and cfg.flow is None and cfg.outputs == ()
    assert [a.size for a in cfg.grid.u_axes()] == [41, 41]
    assert np.array_equal(cfg.grid.times(), np.linspace(0, 1, 21))


def test_parsed_flow_problem():
    cfg = config()
    prob = cfg.flow_problem()
    assert prob.chi.kind == "vertical" and prob.source.name == "M1"
    pois = example_config("M2", "poincare").flow_problem()
    assert pois.chi.element.scale == 0.4


@pytest.mark.parametrize("text, where", [
    ("surfaces: {T: {kind: torus, radii: [1, 2]}}", "surfaces.T.kind"),
    ("surfaces: {S: {kind: sphere, radius: -1, center: [0, 0, 0]}}", "surfaces.S.radius"),
    ("surfaces: {S: {kind: sphere}}", "surfaces.S"),
    ("grid: {u: [[0, 1]]}", "grid.u[0]"),
    ("grid: {u: [[1, 0, 5]]}", "grid.u[0]"),
    ("grid: {u: [[0, 1, 1]]}", "grid.u[0]"),
    ("grid: {t: [0, 2, 5]}", "grid.t"),
    ("grid: {t: 1}", "grid.t"),
    ("version: 2", "version"),
    ("colour: red", "<document>"),
    ("outputs: [{what: scan, path: a.csv}, {what: level, path: a.csv}]", "outputs[1].path"),
    ("outputs: [{what: scan, format: obj, path: a.obj}]", "outputs[0].format"),
    ("outputs: [{what: mesh, path: a.csv}]", "outputs[0].what"),
    ("surfaces: {A: {kind: plane, normal: [0, 0, 1], offset: 0}}\nflow: {source: A, target: B}", "flow.target"),
    ("seed: 1.5", "seed"),
])
def test_config_errors_name_the_location(text, where):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert str(exc.value).startswith(where + ":")


def test_overrides():
    cfg = config().with_overrides(grid=7, tsamples=9, slice_mode=True, seed=3)
    assert [a.size for a in cfg.grid.u_axes()] == [7, 1] and cfg.grid.times().size == 9 and cfg.seed == 3
    with pytest.raises(ConfigError, match="--grid"):
        config().with_overrides(grid=1)


def test_config_hash_tracks_content():
    assert config().config_hash == config().config_hash
    assert config().config_hash != config("seed: 4\n").config_hash


# -- tables ----------------------------------------------------------------------

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=20))
def test_csv_round_trip_is_exact(tmp_path_factory, rows):
    path = str(tmp_path_factory.mktemp("csv") / "t.csv")
    write_table(path, ["a", "b", "c"], rows)
    header, back = read_csv(path)
    assert header == ["a", "b", "c"]
    assert [tuple(r) for r in back] == [tuple(r) for r in rows]


def test_json_carries_metadata_and_nulls(tmp_path):
    path = str(tmp_path / "t.json")
    write_table(path, ["x", "flag"], [[1.5, "ok"], [math.nan, "singular"]], "json", {"config_hash": "abc"})
    doc = json.load(open(path))
    assert doc["metadata"] == {"config_hash": "abc", "columns": ["x", "flag"]}
    assert doc["rows"] == [[1.5, "ok"], [None, "singular"]]


def test_unknown_table_format(tmp_path):
    with pytest.raises(ValueError, match="csv or json"):
        write_table(str(tmp_path / "t.obj"), ["a"], [[1.0]], "obj")


# -- OBJ -----------------------------------------------------------------------

def fake_samples(shape, bad=()):
    pts = ParameterGrid(tuple(np.linspace(0, 1, n) for n in shape)).points
    out = []
    for k, u in enumerate(pts):
        x = np.concatenate([u, [0.0]])
        out.append(EnvelopeSample(tuple(u), x, 1.0, SINGULAR if k in bad else SMOOTH))
    return out


def test_obj_quads_and_flagged_faces(tmp_path):
    full = emit_level_obj(fake_samples((4, 5)), (4, 5), str(tmp_path / "a.obj"), ["hdr"])
    assert full == {"vertices": 20, "faces": 12, "lines": 0}
    flagged = emit_level_obj(fake_samples((4, 5), bad={6}), (4, 5), str(tmp_path / "b.obj"))
    assert flagged["vertices"] == 20 and flagged["faces"] == 8
    text = open(tmp_path / "a.obj").read().splitlines()
    assert text[0] == "# hdr" and sum(line.startswith("f ") for line in text) == 12


def test_obj_polyline_in_the_plane(tmp_path):
    info = emit_level_obj(fake_samples((6,)), (6,), str(tmp_path / "c.obj"))
    assert info == {"vertices": 6, "faces": 0, "lines": 5}


def test_obj_sphere_envelope_counts(tmp_path):
    cfg = parse_config(f"""
surfaces: {{S: {{kind: sphere, radius: 2.0, center: [0, 0, 0]}}}}
envelope: S
grid: {{u: [[0.3, 2.8, 6], [0.0, 6.0, 7]]}}
outputs: [{{what: envelope, format: obj, path: s.obj}}]
""")
    rep = run(cfg, str(tmp_path))
    assert rep.ok and rep.outputs[0].rows == 42
    lines = open(tmp_path / "s.obj").read().splitlines()
    assert sum(line.startswith("v ") for line in lines) == 42
    assert sum(line.startswith("f ") for line in lines) == 30


# -- runs ----------------------------------------------------------------------

ALL_OUTPUTS = """
geodesic: {z0: {normal: [0, 0, 1], offset: 0}, z1: {normal: [1, 0, 1], offset: 2}}
frames: {twist: 0.5}
outputs:
  - {what: geodesic, path: g.csv}
  - {what: frames, path: f.json, format: json}
  - {what: level, path: l.csv, t: 0.25}
  - {what: level, path: l.obj, format: obj}
  - {what: curves, path: c.csv}
  - {what: scan, path: s.json, format: json}
  - {what: envelope, path: e.csv}
"""


def test_run_writes_every_output(tmp_path):
    rep = run(config(ALL_OUTPUTS), str(tmp_path))
    assert rep.ok, [o.message for o in rep.outputs]
    assert rep.verdicts == {"scan": "nonsingular"}
    assert rep.singular_samples == 0
    header, rows = read_csv(str(tmp_path / "l.csv"))
    assert header == ["u1", "u2", "x_1", "x_2", "x_3", "detNprime", "smooth"] and len(rows) == 25
    header, rows = read_csv(str(tmp_path / "c.csv"))
    assert header == ["u1", "u2", "t", "x_1", "x_2", "x_3"] and len(rows) == 125
    scan = json.load(open(tmp_path / "s.json"))
    assert scan["metadata"]["columns"] == ["u1", "u2", "t", "detNprime", "flag"]
    assert scan["metadata"]["config_hash"] == config(ALL_OUTPUTS).config_hash


def test_slice_mode_columns(tmp_path):
    cfg = config("outputs: [{what: level, path: l.csv}, {what: curves, path: c.csv}]\n")
    rep = run(cfg.with_overrides(slice_mode=True), str(tmp_path))
    assert rep.ok
    assert read_csv(str(tmp_path / "l.csv"))[0] == ["u1", "r", "z", "t", "detNprime", "smooth"]
    header, rows = read_csv(str(tmp_path / "c.csv"))
    assert header == ["u1", "r", "z", "t"] and len(rows) == 25


def test_scan_reports_singular_flow(tmp_path):
    cfg = replace(example_config("M2").with_overrides(grid=11, tsamples=11),
                  outputs=(OutputSpec("scan", "csv", "s.csv"),))
    rep = run(cfg, str(tmp_path))
    assert rep.ok and rep.verdicts["scan"] == "singular"


def test_empty_outputs_are_a_no_op(tmp_path):
    rep = run(config(), str(tmp_path / "out"))
    assert rep.ok and rep.outputs == [] and not os.path.exists(tmp_path / "out")


def test_failing_output_does_not_stop_the_run(tmp_path):
    cfg = parse_config("""
surfaces: {A: {kind: plane, normal: [0, 0, 1], offset: 0}, B: {kind: plane, normal: [0, 0, -1], offset: 1}}
flow: {source: A, target: B}
grid: {u: [[-1, 1, 3], [-1, 1, 3]], t: 3}
geodesic: {z0: {normal: [0, 1], offset: 0}, z1: {normal: [1, 0], offset: 1}}
outputs: [{what: level, path: l.csv}, {what: geodesic, path: g.csv}]
""")
    rep = run(cfg, str(tmp_path))
    assert [o.status for o in rep.outputs] == ["error", "ok"] and rep.exit_code == 1
    assert "not relatively oriented" in rep.outputs[0].message


def test_runs_are_byte_identical(tmp_path):
    cfg = config(ALL_OUTPUTS)
    run(cfg, str(tmp_path / "a"))
    run(cfg, str(tmp_path / "b"))
    for name in ("g.csv", "f.json", "l.csv", "l.obj", "c.csv", "s.json", "e.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# -- CLI -----------------------------------------------------------------------

def test_cli_subcommands(tmp_path, capsys):
    for sub in ("geodesic", "frames", "flow", "scan", "envelope"):
        assert cli.main([sub, "--out", str(tmp_path), "--grid", "5", "--tsamples", "3", "--seed", "2"]) == 0
        assert json.loads(capsys.readouterr().out)["ok"] is True
    for name in ("geodesic.csv", "frames.csv", "level.csv", "curves.csv", "scan.csv", "envelope.csv"):
        assert (tmp_path / name).exists()


def test_cli_with_config_file(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(BASE + "outputs: [{what: scan, path: scan.json, format: json}]\n")
    assert cli.main(["scan", "--config", str(path), "--out", str(tmp_path), "--slice"]) == 0
    assert json.load(open(tmp_path / "scan.json"))["metadata"]["what"] == "scan"


def test_cli_error_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("surfaces: {T: {kind: torus}}\n")
    assert cli.main(["scan", "--config", str(bad)]) == 2
    assert "surfaces.T.kind" in capsys.readouterr().err
    assert cli.main(["scan", "--config", str(tmp_path / "missing.yaml")]) == 2
    with pytest.raises(SystemExit):
        cli.main(["scan", "--grid", "many"])
