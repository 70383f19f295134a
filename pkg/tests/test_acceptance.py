"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test logs a ``PASS n`` / ``FAIL n`` line (shown after the pytest
summary) listing each measured quantity next to its bound.
"""
import glob
import os
import time
import warnings

import numpy as np
import pytest

from lorentz_flow.config import load_config
from lorentz_flow.envelope import HyperplaneFamilyPatch, ParameterGrid, envelope_grid, smoothness_test
from lorentz_flow.flow import Correspondence, FlowProblem, flow_curves, level_surface, singularity_scan
from lorentz_flow.frames import frenet_normal_plane_check, parallel_check, parallel_transport_frame
from lorentz_flow.frames import distinguished_frame
from lorentz_flow.geodesics import (GeodesicSegment, PoincareElement, dlambda_dtheta, geodesic_point,
                                    lambda_fn, mu_fn, planar_rotation, poincare_apply,
                                    projective_flow_offset, pseudo_rotation_angle, pseudo_rotation_flow,
                                    sigma_fn, translation_homothety_flow)
from lorentz_flow.lorentz import HyperplanePoint
from lorentz_flow.run import run
from lorentz_flow.surfaces import ellipsoid, nested_paraboloids, sphere

from conftest import ACCEPTANCE_LOG

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "scripts", "configs")


class Checks:
    """Collects (label, value, bound, ok) rows for one criterion."""

    def __init__(self, number, title):
        self.number, self.title, self.rows = number, title, []

    def le(self, label, value, bound):
        self.rows.append((label, f"{value:.3g} <= {bound:g}", bool(value <= bound)))

    def ge(self, label, value, bound):
        self.rows.append((label, f"{value:.3g} >= {bound:g}", bool(value >= bound)))

    def within(self, label, value, target, tol):
        self.rows.append((label, f"{value:.6g} in {target:g} +/- {tol:g}", bool(abs(value - target) <= tol)))

    def true(self, label, value):
        self.rows.append((label, str(bool(value)), bool(value)))

    def finish(self):
        ok = all(r[2] for r in self.rows)
        parts = "; ".join(f"{'' if r[2] else '!! '}{r[0]}: {r[1]}" for r in self.rows)
        ACCEPTANCE_LOG.append(f"{'PASS' if ok else 'FAIL'} {self.number} {self.title} | {parts}")
        failed = [f"{r[0]}: {r[1]}" for r in self.rows if not r[2]]
        assert ok, "; ".join(failed)


def random_segment(rng, d, lo=0.01, hi=np.pi - 0.1):
    theta = rng.uniform(lo, hi)
    n0 = rng.normal(size=d)
    n0 /= np.linalg.norm(n0)
    w = rng.normal(size=d)
    w -= (w @ n0) * n0
    w /= np.linalg.norm(w)
    n1 = np.cos(theta) * n0 + np.sin(theta) * w
    c0, c1 = rng.normal(scale=2.0, size=2)
    return GeodesicSegment(HyperplanePoint(n0, c0), HyperplanePoint(n1, c1)), theta


def test_criterion_1_geodesics():
    chk = Checks(1, "geodesic correctness")
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    end_err = norm_err = ode_err = speed_err = 0.0
    ts = np.linspace(0, 1, 11)
    ti = np.linspace(0.1, 0.9, 9)
    h = 1e-2
    for k in range(1000):
        seg, theta = random_segment(rng, 2 + k % 3)
        n, c = seg.evaluate(np.array([0.0, 1.0]))
        end_err = max(end_err, np.max(np.abs(n - [seg.z0.normal, seg.z1.normal])),
                      np.max(np.abs(c - [seg.z0.offset, seg.z1.offset])))
        norm_err = max(norm_err, np.max(np.abs(np.linalg.norm(seg.evaluate(ts)[0], axis=-1) - 1.0)))
        g = [seg.embedded(ti + j * h) for j in (-2, -1, 0, 1, 2)]
        acc = (-g[0] + 16 * g[1] - 30 * g[2] + 16 * g[3] - g[4]) / (12 * h * h)
        ode_err = max(ode_err, np.max(np.abs(acc + seg.theta ** 2 * g[2])))
        dn, dc = seg.velocity(ti)
        speed = np.sqrt(np.abs(np.sum(dn * dn, -1) + dc * dc - dc * dc))
        speed_err = max(speed_err, np.max(np.abs(speed - abs(theta))))
    elapsed = time.perf_counter() - start
    chk.le("endpoint error", end_err, 1e-12)
    chk.le("| |n_t| - 1 |", norm_err, 1e-10)
    chk.le("FD gamma'' + theta^2 gamma", ode_err, 1e-5)
    chk.le("Lorentzian speed - theta", speed_err, 1e-6)
    chk.le("runtime [s]", elapsed, 2.0)
    chk.finish()


def test_criterion_2_identities():
    chk = Checks(2, "auxiliary-function identities")
    x = np.linspace(0, 1, 101)[:, None]
    th = np.linspace(0.01, np.pi - 0.1, 101)[None, :]
    lhs = lambda_fn(x, th) + lambda_fn(1 - x, th)
    chk.le("lam(x) + lam(1-x) - mu(1-2x, theta/2)", np.max(np.abs(lhs - mu_fn(1 - 2 * x, th / 2))), 1e-12)
    literal = dlambda_dtheta(x, th) - x / np.tan(th) * lambda_fn(x, th)
    chk.le("sigma - (dlam/dtheta - x cot(theta) lam)", np.max(np.abs(sigma_fn(x, th) - literal)), 1e-9)
    th_all = np.linspace(-np.pi + 0.01, np.pi - 0.01, 1001)
    chk.le("|sigma(1/2, theta)|", np.max(np.abs(sigma_fn(0.5, th_all))), 1e-12)
    chk.le("|sigma(1, theta)|", np.max(np.abs(sigma_fn(1.0, th_all))), 1e-12)
    chk.finish()


def random_element(rng, d, b_range=(0.2, 5.0)):
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    q = q * np.sign(np.diag(r))
    return PoincareElement(q, rng.uniform(*b_range), rng.uniform(-5, 5, size=d))


def test_criterion_3_equivariance():
    chk = Checks(3, "Poincare equivariance")
    rng = np.random.default_rng(3)
    worst = 0.0
    for k in range(500):
        seg, _ = random_segment(rng, 2 + k % 3, lo=0.0)
        g = random_element(rng, seg.dim)
        t = rng.uniform()
        lhs = poincare_apply(g, seg.point(t))
        rhs = GeodesicSegment(poincare_apply(g, seg.z0), poincare_apply(g, seg.z1)).point(t)
        scale = max(1.0, abs(lhs.offset))
        worst = max(worst, np.max(np.abs(lhs.normal - rhs.normal)), abs(lhs.offset - rhs.offset) / scale)
    chk.le("geodesic level, 500 cases", worst, 1e-9)

    g = PoincareElement(planar_rotation(3, 0, 1, 0.7) @ planar_rotation(3, 1, 2, -0.3), 1.7,
                        np.array([0.4, -1.0, 2.0]))
    m1, _, m3 = nested_paraboloids()
    cases = {
        "sphere": (sphere(1.0), sphere(2.0, (0.3, 0.1, -0.2)),
                   ParameterGrid((np.linspace(0.5, 2.6, 9), np.linspace(0.0, 6.0, 9)))),
        "paraboloid": (m1, m3, ParameterGrid((np.linspace(-2, 2, 9), np.linspace(-2, 2, 9)))),
    }
    for name, (src, dst, grid) in cases.items():
        base = FlowProblem(src, dst)
        moved = FlowProblem(src.transformed(g), dst.transformed(g))
        err = 0.0
        for t in (0.0, 0.25, 0.5, 0.75, 1.0):
            a = np.array([s.point for s in level_surface(base, t, grid)])
            b = np.array([s.point for s in level_surface(moved, t, grid)])
            err = max(err, np.max(np.abs(g.apply_point(a) - b)))
        chk.le(f"pipeline level, {name}", err, 1e-6)
    chk.finish()


def test_criterion_4_special_cases():
    chk = Checks(4, "special flows")
    rng = np.random.default_rng(4)
    err_th = 0.0
    for _ in range(200):
        d = rng.integers(2, 5)
        n = rng.normal(size=d)
        z0 = HyperplanePoint(n / np.linalg.norm(n), rng.normal(scale=2))
        b, p = rng.uniform(0.1, 4.0), rng.normal(size=d)
        z1 = poincare_apply(PoincareElement(np.eye(d), b, p), z0)
        for t in np.linspace(0, 1, 11):
            geo = geodesic_point(GeodesicSegment(z0, z1), t)
            th = translation_homothety_flow(z0, b, p, t)
            err_th = max(err_th, abs(geo.offset - th.offset) / max(1.0, abs(geo.offset)),
                         np.max(np.abs(geo.normal - th.normal)))
    chk.le("translation-homothety offset vs geodesic (theta = 0)", err_th, 1e-12)

    bulge_err = peak_err = decomp_err = 0.0
    ts = np.linspace(0, 1, 201)
    for _ in range(50):
        n = rng.normal(size=3)
        z0 = HyperplanePoint(n / np.linalg.norm(n), abs(rng.normal(scale=2)) + 0.1)
        omega = rng.uniform(0.05, 2.5) * rng.choice([-1, 1])
        a = planar_rotation(3, 0, 1, omega)
        theta = pseudo_rotation_angle(float(z0.normal[:2] @ z0.normal[:2]), omega)
        seg = GeodesicSegment(z0, HyperplanePoint._trusted(a @ z0.normal, z0.offset))
        offs = seg.evaluate(ts)[1]
        bulge_err = max(bulge_err, abs(offs.max() - z0.offset / np.cos(theta / 2)))
        peak_err = max(peak_err, abs(ts[np.argmax(offs)] - 0.5))
        for t in ts[::20]:
            geo, pr = geodesic_point(seg, t), pseudo_rotation_flow(z0, a, t)
            decomp_err = max(decomp_err, np.max(np.abs(geo.normal - pr.normal)), abs(geo.offset - pr.offset))
    chk.le("max offset - sec(theta/2) c0", bulge_err, 1e-9)
    chk.le("|argmax t - 1/2|", peak_err, 0.0)
    chk.le("rotation-plane decomposition vs geodesic", decomp_err, 1e-12)
    chk.finish()


def circle_family(r):
    def ev(u):
        a = u[..., 0]
        return np.stack([np.cos(a), np.sin(a)], -1), np.full(a.shape, float(r))
    return HyperplaneFamilyPatch(ev)


def test_criterion_5_envelope_round_trip():
    chk = Checks(5, "envelope round trip")
    sph_grid = ParameterGrid.from_ranges([(0.3, 2.8, 11), (-3.0, 3.0, 13)])
    par_grid = ParameterGrid.from_ranges([(-2, 2, 11), (-2, 2, 11)])
    surfaces = [(f"sphere r={r}", sphere(r), sph_grid) for r in (0.5, 1.0, 5.0)]
    surfaces += [("ellipsoid", ellipsoid([1.0, 1.5, 0.7]), sph_grid),
                 ("paraboloid", nested_paraboloids()[0], par_grid)]
    for name, surf, grid in surfaces:
        for mode, fam, tol in (("analytic", surf.hyperplane_family(), 1e-9),
                               ("fd", HyperplaneFamilyPatch(surf.tangent_planes), 1e-6)):
            pts = np.array([s.point for s in envelope_grid(fam, grid)])
            chk.le(f"{name} {mode}", np.max(np.abs(pts - surf.point(grid.points))), tol)
    herr = 0.0
    for r in (0.5, 1.7, 4.0):
        for a in np.linspace(0, 2 * np.pi, 7):
            herr = max(herr, abs(smoothness_test(circle_family(r), [a]).hessian_matrix[0, 0] + r))
    chk.le("circle Hessian + r", herr, 1e-8)
    chk.finish()


def test_criterion_6_nested_paraboloids():
    chk = Checks(6, "nested paraboloid flows")
    start = time.perf_counter()
    m1, m2, m3 = nested_paraboloids()
    grid = ParameterGrid.from_ranges([(-2, 2, 41), (-2, 2, 41)])
    times = np.linspace(0, 1, 41)

    rep = singularity_scan(FlowProblem(m1, m3, Correspondence.vertical()), grid, times)
    chk.true("M1->M3 vertical verdict nonsingular", rep.verdict == "nonsingular")
    chk.ge("M1->M3 min |det N'|", rep.min_abs_det, 1e-4)

    rep = singularity_scan(FlowProblem(m2, m3, Correspondence.vertical()), grid, times)
    interior = [c for c in rep.sign_changes if 0.0 < c[1] and c[2] < 1.0]
    chk.true(f"M2->M3 vertical verdict singular ({len(rep.smoothness_changes)} smoothness sign changes)",
             rep.verdict == "singular")
    chk.ge("M2->M3 det N' sign changes in (0, 1)", len(interior), 1)

    g = PoincareElement(np.eye(3), 0.4, np.array([0.0, 0.0, 3.2]))
    prob = FlowProblem(m2, m3, Correspondence.poincare(g))
    curves = flow_curves(prob, grid, times)
    chord = curves[-1] - curves[0]
    chord /= np.linalg.norm(chord, axis=-1, keepdims=True)
    rel = curves - curves[0]
    off = rel - np.einsum("tnk,nk->tn", rel, chord)[..., None] * chord
    chk.le("M2 Poincare flow-curve collinearity", np.max(np.linalg.norm(off, axis=-1)), 1e-6)
    x = m2.point(grid.points)
    expected = (1 - 3 * times[:, None, None] / 5) * x + 3.2 * times[:, None, None] * np.array([0, 0, 1.0])
    chk.le("M2 Poincare level points vs closed form", np.max(np.abs(curves - expected)), 1e-6)
    chk.le("runtime [s]", time.perf_counter() - start, 60.0)
    chk.finish()


def test_criterion_7_frames():
    chk = Checks(7, "frames")
    rng = np.random.default_rng(7)
    orth = plane = resid = e1err = 0.0
    ts = np.linspace(0, 1, 1001)
    for k in range(40):
        d = 3 + k % 2
        seg, theta = random_segment(rng, d, lo=0.05)
        f0 = distinguished_frame(seg, [0.0])[0][0]
        q, _ = np.linalg.qr(rng.normal(size=(d - 1, d - 1)))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        fam = parallel_transport_frame(seg, q @ f0, ts)
        gram = np.einsum("tik,tjk->tij", fam.frames, fam.frames)
        orth = max(orth, np.max(np.abs(gram - np.eye(d - 1))))
        plane = max(plane, np.max(np.abs(np.einsum("tik,tk->ti", fam.frames, fam.normals))))
        for i in range(d - 1):
            resid = max(resid, parallel_check(seg, fam.section(i)).residual)
        t = np.linspace(0.05, 0.95, 19)
        h = 1e-3
        n = lambda s: seg.evaluate(s)[0]
        dn = (-n(t + 2 * h) + 8 * n(t + h) - 8 * n(t - h) + n(t - 2 * h)) / (12 * h)
        e1err = max(e1err, np.max(np.abs(distinguished_frame(seg, t)[0][:, 0] - dn / theta)))
    chk.le("orthonormality", orth, 1e-10)
    chk.le("in-plane", plane, 1e-8)
    chk.le("parallel_check residual", resid, 1e-5)
    chk.le("e_1 - (1/theta) dn/dt", e1err, 1e-6)

    s = np.linspace(0, 5, 81)
    circ = frenet_normal_plane_check(lambda v: 2.0 * np.stack([np.cos(v / 2), np.sin(v / 2), 0 * v], -1), s)
    chk.true("circle: geodesic family and Frenet-parallel", circ.is_geodesic_family and circ.frenet_parallel)
    k = np.hypot(1.0, 0.5)
    hel = frenet_normal_plane_check(lambda v: np.stack([np.cos(v / k), np.sin(v / k), 0.5 * v / k], -1), s)
    chk.true("helix: not a geodesic family", not hel.is_geodesic_family)
    chk.finish()


def test_criterion_8_translation_defect():
    chk = Checks(8, "dual-projective counterexample")
    c0, c1, d = 0.0, 1.0, 1.0
    defect = projective_flow_offset(c0 + d, c1 + d, 0.5) - (projective_flow_offset(c0, c1, 0.5) + d)
    n = np.array([0.0, 0.0, 1.0])
    base = GeodesicSegment(HyperplanePoint(n, c0), HyperplanePoint(n, c1)).point(0.5).offset
    moved = GeodesicSegment(HyperplanePoint(n, c0 + d), HyperplanePoint(n, c1 + d)).point(0.5).offset
    chk.within("|projective defect| at t = 1/2", abs(defect), 0.0261, 0.0005)
    chk.le("Lorentzian defect", abs(moved - (base + d)), 1e-12)
    chk.finish()


def test_criterion_9_determinism(tmp_path):
    chk = Checks(9, "determinism")
    paths = sorted(glob.glob(os.path.join(CONFIG_DIR, "*.yaml")))
    chk.ge("configs", len(paths), 1)
    for path in paths:
        cfg = load_config(path).with_overrides(grid=15, tsamples=11)
        name = os.path.basename(path)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            reports = [run(cfg, str(tmp_path / name / k)) for k in "ab"]
        chk.true(f"{name} ran", all(r.ok for r in reports))
        same = True
        for o in cfg.outputs:
            a = (tmp_path / name / "a" / o.path).read_bytes()
            b = (tmp_path / name / "b" / o.path).read_bytes()
            same &= a == b
        chk.true(f"{name} byte-identical", same)
    chk.finish()
