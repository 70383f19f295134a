"""Execute the outputs requested by an ExperimentConfig."""
from __future__ import annotations

import os
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from . import serialize as ser
from .config import ExperimentConfig
from .envelope import SINGULAR, UNDETERMINED, ParameterGrid, envelope_grid
from .flow import flow_curves, level_surface, singularity_scan
from .frames import distinguished_frame, frame_interpolate, parallel_transport_frame
from .geodesics import GeodesicSegment
from .lorentz import HyperplanePoint


@dataclass
class OutputStatus:
    what: str
    format: str
    path: str
    status: str = "ok"
    rows: int = 0
    message: str = ""


@dataclass
class RunReport:
    name: str
    version: str
    config_hash: str
    outputs: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    singular_samples: int = 0
    undetermined_samples: int = 0
    verdicts: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(o.status == "ok" for o in self.outputs)

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


def random_segment(seed: int, dim: int = 3) -> GeodesicSegment:
    """Reproducible non-antipodal pair of hyperplanes for demos."""
    rng = np.random.default_rng(seed)
    while True:
        a, b = rng.normal(size=(2, dim))
        z0 = HyperplanePoint.from_unnormalized(a, rng.normal())
        z1 = HyperplanePoint.from_unnormalized(b, rng.normal())
        if z0.normal @ z1.normal > -0.9:
            return GeodesicSegment(z0, z1)


def _rotate_in_plane(frame, angle):
    """Rotate the first two frame vectors by ``angle``."""
    out = np.array(frame, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    e1, e2 = out[0].copy(), out[1].copy()
    out[0], out[1] = c * e1 + s * e2, -s * e1 + c * e2
    return out


class _Runner:
    def __init__(self, config: ExperimentConfig, out_dir: str):
        self.cfg = config
        self.out_dir = out_dir
        self._cache = {}
        self.meta = {"config_hash": config.config_hash, "version": __version__, "name": config.name}

    def cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def grid(self) -> ParameterGrid:
        return ParameterGrid(tuple(self.cfg.grid.u_axes()))

    @property
    def times(self):
        return self.cfg.grid.times()

    def problem(self):
        return self.cached("problem", self.cfg.flow_problem)

    def segment(self) -> GeodesicSegment:
        if self.cfg.geodesic is not None:
            return GeodesicSegment(*self.cfg.geodesic)
        return random_segment(self.cfg.seed)

    # -- individual outputs ---------------------------------------------
    def geodesic(self, o):
        seg = self.segment()
        n, c = seg.evaluate(self.times)
        return ser.geodesic_rows(self.times, n, c)

    def frames(self, o):
        seg = self.segment()
        fcfg = self.cfg.frames
        initial = fcfg.get("initial")
        if initial is None:
            initial = distinguished_frame(seg, [0.0])[0][0]
        fam = parallel_transport_frame(seg, np.asarray(initial, dtype=float), self.times)
        if fcfg.get("target") is not None:
            fam = frame_interpolate(fam, np.asarray(fcfg["target"], dtype=float))
        elif fcfg.get("twist") is not None and seg.dim >= 3:
            fam = frame_interpolate(fam, _rotate_in_plane(fam.frames[-1], float(fcfg["twist"])))
        return ser.frame_rows(fam)

    def level_samples(self, t):
        return self.cached(("level", t), lambda: level_surface(self.problem(), t, self.grid))

    def level(self, o, path):
        samples = self.level_samples(o.t)
        self._count(samples)
        if o.format == "obj":
            info = ser.emit_level_obj(samples, self.grid.shape, path,
                                      header=self._header(f"level surface t = {o.t!r}"))
            return None, info["vertices"]
        return ser.level_rows(samples, self.problem().dim, self.cfg.grid.slice, o.t)

    def envelope(self, o, path):
        name = self.cfg.envelope or (self.cfg.flow.source if self.cfg.flow else None)
        if name is None:
            raise ValueError("envelope output needs 'envelope: {surface: NAME}' or a flow source")
        surf = self.cfg.surface(name)
        samples = self.cached(("envelope", name), lambda: envelope_grid(surf.hyperplane_family(), self.grid))
        self._count(samples)
        if o.format == "obj":
            info = ser.emit_level_obj(samples, self.grid.shape, path,
                                      header=self._header(f"envelope of the tangent planes of {name}"))
            return None, info["vertices"]
        return ser.level_rows(samples, surf.dim)

    def curves(self, o):
        pts = self.cached("curves", lambda: flow_curves(self.problem(), self.grid, self.times))
        return ser.curve_rows(self.grid.points, self.times, pts, self.cfg.grid.slice)

    def scan(self, o):
        rep = self.cached("scan", lambda: singularity_scan(self.problem(), self.grid, self.times))
        self.report.verdicts["scan"] = rep.verdict
        return ser.scan_rows(rep)

    def _count(self, samples):
        key = id(samples)
        if key in self._cache.setdefault("_counted", set()):
            return
        self._cache["_counted"].add(key)
        self.report.singular_samples += sum(s.smooth == SINGULAR for s in samples)
        self.report.undetermined_samples += sum(s.smooth == UNDETERMINED for s in samples)

    def _header(self, what):
        return [f"lorentz_flow {__version__}", f"config {self.cfg.name} sha256 {self.cfg.config_hash}", what]

    def run(self, outputs) -> RunReport:
        self.report = RunReport(self.cfg.name, __version__, self.cfg.config_hash)
        start = time.perf_counter()
        for o in outputs:
            path = os.path.join(self.out_dir, o.path)
            status = OutputStatus(o.what, o.format, path)
            t0 = time.perf_counter()
            try:
                if o.what in ("level", "envelope"):
                    cols, rows = getattr(self, o.what)(o, path)
                else:
                    cols, rows = getattr(self, o.what)(o)
                if cols is None:
                    status.rows = rows
                else:
                    status.rows = ser.write_table(path, cols, rows, o.format, dict(self.meta, what=o.what))
            except Exception as exc:  # reported per output; the run continues
                status.status = "error"
                status.message = f"{type(exc).__name__}: {exc}"
            self.report.timing[o.path] = round(time.perf_counter() - t0, 6)
            self.report.outputs.append(status)
        self.report.timing["total"] = round(time.perf_counter() - start, 6)
        return self.report


def run(config: ExperimentConfig, out_dir: str = ".", only: Optional[tuple] = None) -> RunReport:
    """Compute and write every configured output (restricted to kinds in ``only``)."""
    outputs = [o for o in config.outputs if only is None or o.what in only]
    return _Runner(config, out_dir).run(outputs)
