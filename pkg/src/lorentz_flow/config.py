"""Experiment configuration: a versioned YAML document parsed into dataclasses.

Example::

    version: 1
    surfaces:
      M1: {kind: paraboloid, height: 2.0, coefficient: 0.2}
      M3: {kind: paraboloid, height: 4.0, coefficient: 0.5}
    flow:
      source: M1
      target: M3
      correspondence: {kind: vertical}
    grid:
      u: [[-2, 2, 41], [-2, 2, 41]]
      t: 21
    outputs:
      - {what: scan, format: csv, path: scan.csv}
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np
import yaml

from .flow import KINDS as CORRESPONDENCE_KINDS
from .flow import POINCARE, REPARAMETRIZATION, Correspondence, FlowProblem
from .geodesics import PoincareElement
from .lorentz import HyperplanePoint
from . import surfaces as _surfaces

SCHEMA_VERSION = 1
DEFAULT_GRID = 41
DEFAULT_TSAMPLES = 21

SURFACE_KINDS = {
    "paraboloid": ("height", "coefficient"),
    "sphere": ("radius", "center"),
    "plane": ("normal", "offset"),
    "graph": ("coefficients",),
}
OUTPUT_KINDS = ("geodesic", "level", "curves", "scan", "frames", "envelope")
FORMATS = ("csv", "json", "obj")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending location."""


def _err(where, msg):
    return ConfigError(f"{where}: {msg}")


@dataclass(frozen=True)
class SurfaceSpec:
    name: str
    kind: str
    params: dict

    def build(self):
        p = self.params
        if self.kind == "paraboloid":
            return _surfaces.paraboloid(p["height"], p["coefficient"], dim=int(p.get("dim", 3)), name=self.name)
        if self.kind == "sphere":
            return _surfaces.sphere(p["radius"], p["center"], name=self.name)
        if self.kind == "plane":
            return _surfaces.plane(p["normal"], p["offset"], name=self.name)
        return _surfaces.graph(p["coefficients"], name=self.name)


@dataclass(frozen=True)
class CorrespondenceSpec:
    kind: str = "shared_parameter"
    params: dict = field(default_factory=dict)

    def build(self) -> Correspondence:
        p = self.params
        if self.kind == REPARAMETRIZATION:
            mat = np.atleast_2d(np.asarray(p.get("matrix", [[1.0]]), dtype=float))
            shift = np.asarray(p.get("shift", np.zeros(mat.shape[0])), dtype=float)
            return Correspondence.reparametrization(lambda u: u @ mat.T + shift,
                                                    lambda u: np.broadcast_to(mat.T, u.shape[:-1] + mat.T.shape))
        if self.kind == POINCARE:
            p_vec = np.asarray(p["translation"], dtype=float)
            rot = np.asarray(p.get("rotation", np.eye(p_vec.size)), dtype=float)
            return Correspondence.poincare(PoincareElement(rot, float(p.get("scale", 1.0)), p_vec))
        return Correspondence(self.kind)


@dataclass(frozen=True)
class FlowSpec:
    source: str
    target: Optional[str]
    correspondence: CorrespondenceSpec
    derivative_mode: str = "fd"


@dataclass(frozen=True)
class GridSpec:
    u: tuple = ((-2.0, 2.0, DEFAULT_GRID), (-2.0, 2.0, DEFAULT_GRID))
    t: tuple = (0.0, 1.0, DEFAULT_TSAMPLES)
    slice: bool = False

    def u_axes(self):
        axes = [np.linspace(lo, hi, int(n)) for lo, hi, n in self.u]
        if self.slice and len(axes) > 1:
            axes = [axes[0]] + [np.zeros(1)] * (len(axes) - 1)
        return axes

    def times(self):
        lo, hi, n = self.t
        return np.linspace(lo, hi, int(n))


@dataclass(frozen=True)
class OutputSpec:
    what: str
    format: str
    path: str
    t: float = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    version: int
    name: str
    surfaces: dict
    flow: Optional[FlowSpec]
    grid: GridSpec
    outputs: tuple
    geodesic: Optional[tuple] = None
    frames: dict = field(default_factory=dict)
    envelope: Optional[str] = None
    seed: int = 0
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canon.encode()).hexdigest()

    def surface(self, name: str):
        return self.surfaces[name].build()

    def flow_problem(self) -> FlowProblem:
        if self.flow is None:
            raise ConfigError("flow: section missing")
        f = self.flow
        target = self.surface(f.target) if f.target else None
        return FlowProblem(self.surface(f.source), target, f.correspondence.build(), f.derivative_mode)

    def with_overrides(self, grid: Optional[int] = None, tsamples: Optional[int] = None,
                       slice_mode: Optional[bool] = None, seed: Optional[int] = None) -> "ExperimentConfig":
        g = self.grid
        if grid is not None:
            if grid < 2:
                raise ConfigError(f"--grid: need at least 2 samples per axis, got {grid}")
            g = replace(g, u=tuple((lo, hi, grid) for lo, hi, _ in g.u))
        if tsamples is not None:
            if tsamples < 2:
                raise ConfigError(f"--tsamples: need at least 2 samples, got {tsamples}")
            g = replace(g, t=(g.t[0], g.t[1], tsamples))
        if slice_mode:
            g = replace(g, slice=True)
        return replace(self, grid=g, seed=self.seed if seed is None else seed)


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _err(where, f"expected a number, got {value!r}")
    return float(value)


def _vector(value, where, length=None):
    if not isinstance(value, (list, tuple)) or not value:
        raise _err(where, f"expected a list of numbers, got {value!r}")
    vec = [_number(v, f"{where}[{i}]") for i, v in enumerate(value)]
    if length is not None and len(vec) != length:
        raise _err(where, f"expected {length} entries, got {len(vec)}")
    return vec


def _parse_surface(name, body):
    where = f"surfaces.{name}"
    if not isinstance(body, dict) or "kind" not in body:
        raise _err(where, "surface definition needs a 'kind'")
    kind = body["kind"]
    if kind not in SURFACE_KINDS:
        raise _err(f"{where}.kind", f"unknown surface kind {kind!r} (built in: {', '.join(SURFACE_KINDS)})")
    params = {k: v for k, v in body.items() if k != "kind"}
    for key in SURFACE_KINDS[kind]:
        if key not in params:
            raise _err(where, f"{kind} needs parameter {key!r}")
    extra = set(params) - set(SURFACE_KINDS[kind]) - {"dim"}
    if extra:
        raise _err(where, f"unexpected parameter(s) {sorted(extra)} for {kind}")
    if kind == "paraboloid":
        params = {"height": _number(params["height"], f"{where}.height"),
                  "coefficient": _number(params["coefficient"], f"{where}.coefficient"),
                  "dim": int(params.get("dim", 3))}
    elif kind == "sphere":
        params = {"radius": _number(params["radius"], f"{where}.radius"),
                  "center": _vector(params["center"], f"{where}.center")}
        if params["radius"] <= 0:
            raise _err(f"{where}.radius", "must be positive")
    elif kind == "plane":
        params = {"normal": _vector(params["normal"], f"{where}.normal"),
                  "offset": _number(params["offset"], f"{where}.offset")}
    else:
        coeffs = params["coefficients"]
        if not isinstance(coeffs, list) or not all(isinstance(r, list) for r in coeffs):
            raise _err(f"{where}.coefficients", "expected a nested list a[i][j] of x^i y^j coefficients")
        params = {"coefficients": [_vector(r, f"{where}.coefficients[{i}]") for i, r in enumerate(coeffs)]}
    return SurfaceSpec(name, kind, params)


def _parse_grid(body):
    if body is None:
        return GridSpec()
    if not isinstance(body, dict):
        raise _err("grid", f"expected a mapping, got {body!r}")
    u = GridSpec.u
    if "u" in body:
        rows = body["u"]
        if not isinstance(rows, list) or not rows:
            raise _err("grid.u", "expected a list of [lo, hi, count] ranges")
        parsed = []
        for i, r in enumerate(rows):
            where = f"grid.u[{i}]"
            if not isinstance(r, list) or len(r) != 3:
                raise _err(where, f"expected [lo, hi, count], got {r!r}")
            lo, hi = _number(r[0], where), _number(r[1], where)
            if isinstance(r[2], bool) or not isinstance(r[2], int) or r[2] < 2:
                raise _err(where, f"count must be an integer >= 2, got {r[2]!r}")
            if not hi > lo:
                raise _err(where, f"empty range [{lo}, {hi}]")
            parsed.append((lo, hi, r[2]))
        u = tuple(parsed)
    t = GridSpec.t
    if "t" in body:
        tv = body["t"]
        if isinstance(tv, int) and not isinstance(tv, bool):
            if tv < 2:
                raise _err("grid.t", f"need at least 2 t samples, got {tv}")
            t = (0.0, 1.0, tv)
        elif isinstance(tv, list) and len(tv) == 3:
            lo, hi = _number(tv[0], "grid.t"), _number(tv[1], "grid.t")
            if not (0.0 <= lo < hi <= 1.0):
                raise _err("grid.t", f"t range must lie in [0, 1], got [{lo}, {hi}]")
            if isinstance(tv[2], bool) or not isinstance(tv[2], int) or tv[2] < 2:
                raise _err("grid.t", f"count must be an integer >= 2, got {tv[2]!r}")
            t = (lo, hi, tv[2])
        else:
            raise _err("grid.t", f"expected a count or [lo, hi, count], got {tv!r}")
    return GridSpec(u, t, bool(body.get("slice", False)))


def _parse_plane(body, where):
    if not isinstance(body, dict) or "normal" not in body or "offset" not in body:
        raise _err(where, "expected {normal: [...], offset: c}")
    try:
        return HyperplanePoint.from_unnormalized(_vector(body["normal"], f"{where}.normal"),
                                                 _number(body["offset"], f"{where}.offset"))
    except ValueError as exc:
        raise _err(where, str(exc)) from None


def _parse_outputs(body):
    if body is None:
        return ()
    if not isinstance(body, list):
        raise _err("outputs", "expected a list")
    out, seen = [], {}
    for i, o in enumerate(body):
        where = f"outputs[{i}]"
        if not isinstance(o, dict):
            raise _err(where, f"expected a mapping, got {o!r}")
        what, fmt, path = o.get("what"), o.get("format", "csv"), o.get("path")
        if what not in OUTPUT_KINDS:
            raise _err(f"{where}.what", f"unknown output {what!r} (expected one of {', '.join(OUTPUT_KINDS)})")
        if fmt not in FORMATS:
            raise _err(f"{where}.format", f"unknown format {fmt!r}")
        if fmt == "obj" and what not in ("level", "envelope"):
            raise _err(f"{where}.format", "obj output is only available for level and envelope")
        if not isinstance(path, str) or not path:
            raise _err(f"{where}.path", "missing output path")
        if path in seen:
            raise _err(f"{where}.path", f"{path!r} collides with outputs[{seen[path]}]")
        seen[path] = i
        t = _number(o.get("t", 0.5), f"{where}.t")
        if not 0.0 <= t <= 1.0:
            raise _err(f"{where}.t", f"t must lie in [0, 1], got {t}")
        out.append(OutputSpec(what, fmt, path, t))
    return tuple(out)


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"<document>: not valid YAML ({exc})") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise _err("<document>", "top level must be a mapping")
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    version = raw.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise _err("version", f"unsupported schema version {version!r} (this build reads {SCHEMA_VERSION})")
    known = {"version", "name", "surfaces", "flow", "grid", "outputs", "geodesic", "frames", "envelope", "seed"}
    unknown = set(raw) - known
    if unknown:
        raise _err("<document>", f"unknown top-level key(s) {sorted(unknown)}")
    surf_body = raw.get("surfaces") or {}
    if not isinstance(surf_body, dict):
        raise _err("surfaces", "expected a mapping of name -> definition")
    surfaces = {name: _parse_surface(name, body) for name, body in surf_body.items()}

    def resolve(name, where):
        if name not in surfaces:
            raise _err(where, f"unknown surface {name!r} (defined: {', '.join(surfaces) or 'none'})")
        return name

    flow = None
    if raw.get("flow") is not None:
        fb = raw["flow"]
        if not isinstance(fb, dict) or "source" not in fb:
            raise _err("flow", "needs at least a 'source' surface")
        cb = fb.get("correspondence", {"kind": "shared_parameter"})
        if isinstance(cb, str):
            cb = {"kind": cb}
        ckind = cb.get("kind")
        if ckind not in CORRESPONDENCE_KINDS:
            raise _err("flow.correspondence.kind",
                       f"unknown correspondence {ckind!r} (expected one of {', '.join(CORRESPONDENCE_KINDS)})")
        cparams = {k: v for k, v in cb.items() if k != "kind"}
        if ckind == POINCARE and "translation" not in cparams:
            raise _err("flow.correspondence", "poincare needs 'translation' (and optionally scale, rotation)")
        target = fb.get("target")
        if target is None and ckind != POINCARE:
            raise _err("flow", "needs a 'target' surface")
        mode = fb.get("derivative_mode", "fd")
        if mode not in ("fd", "analytic"):
            raise _err("flow.derivative_mode", f"expected 'fd' or 'analytic', got {mode!r}")
        flow = FlowSpec(resolve(fb["source"], "flow.source"),
                        resolve(target, "flow.target") if target is not None else None,
                        CorrespondenceSpec(ckind, cparams), mode)

    geodesic = None
    if raw.get("geodesic") is not None:
        gb = raw["geodesic"]
        if not isinstance(gb, dict):
            raise _err("geodesic", "expected {z0: ..., z1: ...}")
        geodesic = (_parse_plane(gb.get("z0"), "geodesic.z0"), _parse_plane(gb.get("z1"), "geodesic.z1"))

    frames = raw.get("frames") or {}
    if not isinstance(frames, dict):
        raise _err("frames", "expected a mapping")
    envelope = raw.get("envelope")
    if envelope is not None:
        envelope = resolve(envelope.get("surface") if isinstance(envelope, dict) else envelope, "envelope.surface")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise _err("seed", f"expected an integer, got {seed!r}")

    return ExperimentConfig(SCHEMA_VERSION, str(raw.get("name", "experiment")), surfaces, flow,
                            _parse_grid(raw.get("grid")), _parse_outputs(raw.get("outputs")),
                            geodesic, frames, envelope, seed, raw)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def example_config(source: str = "M1", correspondence: str = "vertical") -> ExperimentConfig:
    """Nested paraboloids M1, M2, M3 with the given source flowing to M3."""
    raw: dict[str, Any] = {
        "version": SCHEMA_VERSION,
        "name": f"paraboloids-{source}-M3-{correspondence}",
        "surfaces": {
            "M1": {"kind": "paraboloid", "height": 2.0, "coefficient": 0.2},
            "M2": {"kind": "paraboloid", "height": 0.5, "coefficient": 0.05},
            "M3": {"kind": "paraboloid", "height": 4.0, "coefficient": 0.5},
        },
        "flow": {"source": source, "target": "M3", "correspondence": {"kind": correspondence}},
        "grid": {"u": [[-2.0, 2.0, DEFAULT_GRID], [-2.0, 2.0, DEFAULT_GRID]], "t": DEFAULT_TSAMPLES},
    }
    if correspondence == POINCARE:
        raw["flow"]["correspondence"] = {"kind": POINCARE, "scale": 0.4, "translation": [0.0, 0.0, 3.2]}
    return config_from_dict(raw)
