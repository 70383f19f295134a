"""Table and mesh writers.

Floats are written with ``repr`` (shortest round-trip decimal), so parsing a
CSV cell with ``float`` gives back the exact value.  JSON files carry the
same rows under a metadata header; NaN becomes ``null``.

Column schemas (m parameters, d coordinates):

* geodesic: ``t, n_1..n_d, c``
* level: ``u1..um, x_1..x_d, detNprime, smooth``
* envelope: ``u1..um, x_1..x_d, detN, smooth`` (a single family, no flow)
* curves: ``u1..um, t, x_1..x_d``
* scan: ``u1..um, t, detNprime, flag``
* frames: ``t, e1_1..e1_d, beta1, ..., e{d-1}_1.., beta{d-1}``

In slice mode, level and curves use ``u1, r, z, t`` in place of the
parameter and coordinate columns.
"""
from __future__ import annotations

import csv
import json
import math
import os
from typing import Iterable, Sequence

import numpy as np

from .envelope import SMOOTH


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if value is None:
        return "nan"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _jsonable(value):
    if isinstance(value, str) or value is None:
        return value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    v = float(value)
    return None if math.isnan(v) or math.isinf(v) else v


def _ensure_dir(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def write_table(path, columns: Sequence[str], rows: Iterable[Sequence], fmt_kind: str = "csv",
                metadata: dict | None = None) -> int:
    """Write rows as CSV or JSON; returns the row count."""
    _ensure_dir(path)
    rows = list(rows)
    if fmt_kind == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([fmt(v) for v in r])
    elif fmt_kind == "json":
        doc = {"metadata": dict(metadata or {}, columns=list(columns)),
               "rows": [[_jsonable(v) for v in r] for r in rows]}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True, allow_nan=False)
            fh.write("\n")
    else:
        raise ValueError(f"tables can be written as csv or json, not {fmt_kind!r}")
    return len(rows)


def read_csv(path):
    """Header and rows with numeric cells converted back to float."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for r in reader:
            out = []
            for cell in r:
                try:
                    out.append(float(cell))
                except ValueError:
                    out.append(cell)
            rows.append(out)
    return header, rows


def param_columns(m: int):
    return [f"u{i + 1}" for i in range(m)]


def coord_columns(prefix: str, d: int):
    return [f"{prefix}_{i + 1}" for i in range(d)]


# -- row builders ------------------------------------------------------------

def geodesic_rows(times, normals, offsets):
    d = normals.shape[-1]
    cols = ["t"] + coord_columns("n", d) + ["c"]
    return cols, [[t, *n, c] for t, n, c in zip(times, normals, offsets)]


def level_rows(samples, d: int, slice_mode: bool = False, t: float | None = None):
    m = len(samples[0].u) if samples else d - 1
    if t is None:
        cols = param_columns(m) + coord_columns("x", d) + ["detN", "smooth"]
        rows = []
        for s in samples:
            x = s.point if s.present else np.full(d, np.nan)
            rows.append([*s.u, *x, s.det_N, s.smooth])
        return cols, rows
    if slice_mode:
        cols = ["u1", "r", "z", "t", "detNprime", "smooth"]
        rows = []
        for s in samples:
            x = s.point if s.present else np.full(d, np.nan)
            rows.append([s.u[0], x[0], x[-1], t, s.det_nprime, s.smooth])
        return cols, rows
    cols = param_columns(m) + coord_columns("x", d) + ["detNprime", "smooth"]
    rows = []
    for s in samples:
        x = s.point if s.present else np.full(d, np.nan)
        rows.append([*s.u, *x, s.det_nprime, s.smooth])
    return cols, rows


def curve_rows(u_points, times, points, slice_mode: bool = False):
    """``points`` has shape (T, N, d); rows are grouped by u, then t."""
    m = u_points.shape[1]
    d = points.shape[-1]
    if slice_mode:
        cols = ["u1", "r", "z", "t"]
        rows = [[u[0], points[k, j, 0], points[k, j, -1], t]
                for j, u in enumerate(u_points) for k, t in enumerate(times)]
        return cols, rows
    cols = param_columns(m) + ["t"] + coord_columns("x", d)
    rows = [[*u, t, *points[k, j]] for j, u in enumerate(u_points) for k, t in enumerate(times)]
    return cols, rows


def scan_rows(report):
    m = report.u_points.shape[1]
    cols = param_columns(m) + ["t", "detNprime", "flag"]
    rows = [[*u, t, report.det_field[k, j], report.flags[k, j]]
            for j, u in enumerate(report.u_points) for k, t in enumerate(report.times)]
    return cols, rows


def frame_rows(family):
    k, d = family.frames.shape[1:]
    cols = ["t"]
    for i in range(k):
        cols += coord_columns(f"e{i + 1}", d) + [f"beta{i + 1}"]
    rows = []
    for j, t in enumerate(family.times):
        r = [t]
        for i in range(k):
            r += [*family.frames[j, i], family.offsets[j, i]]
        rows.append(r)
    return cols, rows


# -- OBJ -----------------------------------------------------------------------

def emit_level_obj(samples, shape, path, header: Sequence[str] = ()) -> dict:
    """OBJ mesh of a level surface sampled on a rectangular grid.

    Vertices are the present points in grid order.  In R^3 a quad face is
    written where all four corners are present and smooth; in R^2 (one
    parameter) consecutive smooth points are joined by line records.
    """
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != len(samples):
        raise ValueError(f"grid shape {shape} does not match {len(samples)} samples")
    _ensure_dir(path)
    index = np.zeros(len(samples), dtype=int)
    good = np.zeros(len(samples), dtype=bool)
    lines = [f"# {h}" for h in header]
    nv = 0
    for k, s in enumerate(samples):
        if s.present:
            nv += 1
            index[k] = nv
            good[k] = s.smooth == SMOOTH
            lines.append("v " + " ".join(fmt(v) for v in s.point))
    faces = 0
    segments = 0
    if len(shape) == 1:
        for k in range(len(samples) - 1):
            if good[k] and good[k + 1]:
                lines.append(f"l {index[k]} {index[k + 1]}")
                segments += 1
    elif len(shape) == 2:
        rows, cols = shape
        idx = np.arange(len(samples)).reshape(shape)
        for i in range(rows - 1):
            for j in range(cols - 1):
                quad = [idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]]
                if all(good[q] for q in quad):
                    lines.append("f " + " ".join(str(index[q]) for q in quad))
                    faces += 1
    else:
        raise ValueError("OBJ output supports one- or two-parameter grids")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return {"vertices": nv, "faces": faces, "lines": segments}
