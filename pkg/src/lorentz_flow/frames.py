"""Lorentzian-parallel sections and orthonormal frames along hyperplane families.

A section ``e_t`` of the direction spaces of ``n_t . x = c_t`` together with
offsets ``beta(t)`` is Lorentzian parallel when ``de/dt = phi(t) n_t`` and
``beta' = phi c``.  Along a geodesic the distinguished parallel frame is
known in closed form, so transport is exact; finite differences only appear
in :func:`parallel_check`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import expm, logm

from .geodesics import TAU_SMALL, GeodesicSegment

IN_PLANE_TOL = 1e-8
ORTHONORMAL_TOL = 1e-10
ORIENTATION_TOL = 1e-8
# rotation angles this close to pi have no principal logarithm we trust
PI_MARGIN = 1e-6


def _times(times):
    t = np.asarray(times, dtype=float).ravel()
    if t.size == 0:
        raise ValueError("empty time grid")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return t


def _check_orthonormal(frame, normal, what):
    frame = np.asarray(frame, dtype=float)
    d = normal.size
    if frame.shape != (d - 1, d):
        raise ValueError(f"{what} must be {d - 1} vectors of length {d}, got shape {frame.shape}")
    if not np.allclose(frame @ frame.T, np.eye(d - 1), rtol=0, atol=ORTHONORMAL_TOL):
        raise ValueError(f"{what} is not orthonormal")
    if np.max(np.abs(frame @ normal)) > IN_PLANE_TOL:
        raise ValueError(f"{what} does not lie in the hyperplane directions")
    return frame


@dataclass
class SectionSample:
    times: np.ndarray
    vectors: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        self.times = _times(self.times)
        self.vectors = np.asarray(self.vectors, dtype=float)
        self.offsets = np.asarray(self.offsets, dtype=float).ravel()
        if self.vectors.shape[0] != self.times.size or self.offsets.size != self.times.size:
            raise ValueError("section needs one vector and one offset per time sample")


@dataclass
class FrameFamily:
    """Frames (T, d-1, d), offsets (T, d-1) and the carrier planes (T, d), (T,)."""

    times: np.ndarray
    frames: np.ndarray
    offsets: np.ndarray
    normals: np.ndarray
    plane_offsets: np.ndarray

    def section(self, i: int) -> SectionSample:
        return SectionSample(self.times, self.frames[:, i, :], self.offsets[:, i])

    def family(self):
        """Sampled hyperplane family usable by :func:`parallel_check`."""
        return self.normals, self.plane_offsets

    def orientation(self) -> np.ndarray:
        mats = np.concatenate([self.normals[:, None, :], self.frames], axis=1)
        return np.linalg.det(mats)


@dataclass(frozen=True)
class SkewGenerator:
    matrix: np.ndarray
    ramp: Callable = field(default=lambda t: t)

    def __post_init__(self):
        e = np.asarray(self.matrix, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("generator must be square")
        if np.max(np.abs(e + e.T), initial=0.0) > 1e-12:
            raise ValueError("generator is not skew-symmetric")
        object.__setattr__(self, "matrix", e)

    def rotation(self, t):
        return expm(float(self.ramp(t)) * self.matrix)

    @property
    def total(self) -> np.ndarray:
        """B = exp(E)."""
        return expm(self.matrix)


@dataclass
class ParallelReport:
    is_parallel: bool
    phi: np.ndarray
    beta_expected: np.ndarray
    residual: float
    beta_error: float
    tol: float


def _sample_family(family, times):
    if isinstance(family, GeodesicSegment):
        n, c = family.evaluate(times)
    elif isinstance(family, FrameFamily):
        n, c = family.normals, family.plane_offsets
    elif callable(family):
        n, c = family(times)
    else:
        n, c = family
    n = np.asarray(n, dtype=float)
    c = np.asarray(c, dtype=float).ravel()
    if n.shape[0] != times.size or c.size != times.size:
        raise ValueError("family samples do not match the time grid")
    return n, c


def parallel_check(family, section: SectionSample, tol: Optional[float] = None) -> ParallelReport:
    """Test the Lorentzian parallel conditions on a sampled section.

    ``family`` is a GeodesicSegment, a callable ``t -> (normals, offsets)`` or a
    pre-sampled ``(normals, offsets)`` pair.  The orthogonal residual is taken
    at interior samples where the derivative estimate is a central difference;
    the default tolerance is ``1e-5 * max(1, |c|, |beta|)``.
    """
    t = section.times
    if t.size < 5:
        raise ValueError("parallel_check needs at least 5 time samples")
    n, c = _sample_family(family, t)
    e, beta = section.vectors, section.offsets
    drift = np.max(np.abs(np.einsum("tk,tk->t", e, n)))
    if drift > IN_PLANE_TOL:
        raise ValueError(f"section leaves the hyperplane directions (|e . n| = {drift:.3e})")
    de = np.gradient(e, t, axis=0, edge_order=2)
    phi = np.einsum("tk,tk->t", de, n)
    orth = de - phi[:, None] * n
    residual = float(np.max(np.linalg.norm(orth[1:-1], axis=-1)))
    beta_expected = beta[0] + cumulative_trapezoid(phi * c, t, initial=0.0)
    beta_error = float(np.max(np.abs(beta - beta_expected)))
    if tol is None:
        tol = 1e-5 * max(1.0, float(np.max(np.abs(c))), float(np.max(np.abs(beta))))
    ok = residual < tol and beta_error < tol
    return ParallelReport(bool(ok), phi, beta_expected, residual, beta_error, float(tol))


def _complement_basis(n0, w):
    """Orthonormal basis of span{n0, w}^perp, Gram-Schmidt in largest-residual order."""
    d = n0.size
    basis = [n0, w] if w is not None else [n0]
    out = []
    candidates = list(np.eye(d))
    while len(basis) < d:
        q = np.array(basis)
        resid = [v - q.T @ (q @ v) for v in candidates]
        norms = [np.linalg.norm(r) for r in resid]
        k = int(np.argmax(norms))
        vec = resid[k] / norms[k]
        basis.append(vec)
        out.append(vec)
        candidates.pop(k)
    return np.array(out).reshape(len(out), d)


def distinguished_frame(seg: GeodesicSegment, times):
    """Closed-form parallel frame along ``seg``: rows (e_1, e_2, ...), offsets, sign.

    ``e_{1,t} = s (-sin(t th) n0 + cos(t th) w)`` with ``w`` the unit direction
    of ``n1`` off ``n0``; the W-part is constant.  ``s = +1`` except in d = 2,
    where orientation alone fixes e_1.
    """
    t = _times(times)
    n0, n1 = seg.z0.normal, seg.z1.normal
    d = n0.size
    th = seg.theta
    normals, c = seg.evaluate(t)
    if seg.is_parallel:
        rest = _complement_basis(n0, None)
        if np.linalg.det(np.vstack([n0, rest])) < 0:
            rest[-1] = -rest[-1]
        frames = np.broadcast_to(rest, (t.size, d - 1, d)).copy()
        return frames, np.zeros((t.size, d - 1)), normals, np.asarray(c)
    w = n1 - (n1 @ n0) * n0
    w = w / np.linalg.norm(w)
    rest = _complement_basis(n0, w)
    s = 1.0
    if d == 2:
        s = float(np.sign(np.linalg.det(np.vstack([n0, w]))))
    elif np.linalg.det(np.vstack([n0, w, rest])) < 0:
        rest[-1] = -rest[-1]
    e1 = s * (-np.sin(t * th)[:, None] * n0 + np.cos(t * th)[:, None] * w)
    frames = np.concatenate([e1[:, None, :], np.broadcast_to(rest, (t.size, d - 2, d))], axis=1)
    # beta_1' = phi c with phi = -s th; c'' = -th^2 c integrates in closed form
    c0, c1 = seg.z0.offset, seg.z1.offset
    dc = th * (np.cos(t * th) * c1 - np.cos((1.0 - t) * th) * c0) / np.sin(th)
    dc0 = th * (c1 - np.cos(th) * c0) / np.sin(th)
    offsets = np.zeros((t.size, d - 1))
    offsets[:, 0] = s * (dc - dc0) / th
    return frames, offsets, normals, np.asarray(c)


def parallel_transport_frame(seg: GeodesicSegment, initial_frame, times) -> FrameFamily:
    """Transport an orthonormal frame of the direction space of z0 along ``seg``."""
    f0 = _check_orthonormal(initial_frame, seg.z0.normal, "initial frame")
    frames, offsets, normals, c = distinguished_frame(seg, times)
    # constant change of basis from the distinguished frame to the given one
    a = f0 @ frames[0].T
    return FrameFamily(_times(times), np.einsum("ij,tjk->tik", a, frames),
                       np.einsum("ij,tj->ti", a, offsets), normals, c)


def frame_interpolate(parallel: FrameFamily, target_frame, ramp: Callable = lambda t: t) -> FrameFamily:
    """Twist a parallel family so that it ends on ``target_frame``.

    With ``B`` the matrix of the map e_{i,1} -> f_i (columns are coordinates of
    f_i in the e_{.,1} basis) and ``E = log B`` principal, the output frame at
    t is the parallel frame rotated by ``exp(ramp(t) E)``.
    """
    e1 = parallel.frames[-1]
    f1 = _check_orthonormal(target_frame, parallel.normals[-1], "target frame")
    b = e1 @ f1.T
    det = np.linalg.det(b)
    if abs(det - 1.0) > ORIENTATION_TOL:
        raise ValueError(f"target frame has the opposite orientation (det = {det:+.6f})")
    eig = np.linalg.eigvals(b)
    if np.any(np.abs(np.angle(eig)) > np.pi - PI_MARGIN):
        raise ValueError("ambiguous twist direction: end frames differ by a rotation by pi")
    gen = np.real(logm(b))
    gen = 0.5 * (gen - gen.T)
    skew = SkewGenerator(gen, ramp)
    rots = np.array([skew.rotation(t) for t in parallel.times])
    frames = np.einsum("tji,tjk->tik", rots, parallel.frames)
    offsets = np.einsum("tji,tj->ti", rots, parallel.offsets)
    return FrameFamily(parallel.times, frames, offsets, parallel.normals, parallel.plane_offsets)


def _diff5(f, t, h):
    """Five-point central derivative of a vectorized map."""
    return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12.0 * h)


@dataclass
class FrenetReport:
    is_geodesic_family: bool
    frenet_parallel: bool
    curvature: np.ndarray
    geodesic_residual: float
    normal_report: ParallelReport
    binormal_report: ParallelReport


def frenet_normal_plane_check(curve: Callable, times, h: float = 1e-2, tol: float = 1e-6) -> FrenetReport:
    """Normal-plane family (T, alpha . T) of a unit-speed space curve.

    The family is a geodesic when its second derivative in R^{5,1} is a
    multiple of itself.  N and B are then checked for Lorentzian parallelism
    after their offsets are set from beta' = phi c.
    """
    t = _times(times)

    def alpha(s):
        return np.asarray(curve(np.asarray(s, dtype=float)), dtype=float)

    def tangent(s):
        return _diff5(alpha, s, h * 0.1)

    speed = np.linalg.norm(tangent(t), axis=-1)
    if np.max(np.abs(speed - 1.0)) > 1e-6:
        raise ValueError(f"curve is not unit speed (max | |alpha'| - 1 | = {np.max(np.abs(speed - 1)):.2e})")

    def lifted(s):
        tt = tangent(s)
        tt = tt / np.linalg.norm(tt, axis=-1, keepdims=True)
        c = np.einsum("...k,...k->...", alpha(s), tt)[..., None]
        return np.concatenate([tt, c, c], axis=-1)

    gam = lifted(t)
    dtan = _diff5(lambda s: lifted(s)[..., :3], t, h)
    kappa = np.linalg.norm(dtan, axis=-1)
    if np.min(kappa) < 1e-8:
        raise ValueError("Frenet frame undefined: curvature vanishes")
    acc = (-lifted(t + 2 * h) + 16 * lifted(t + h) - 30 * gam + 16 * lifted(t - h) - lifted(t - 2 * h)) / (12 * h * h)
    lam = np.einsum("tk,tk->t", acc[:, :-1], gam[:, :-1]) - acc[:, -1] * gam[:, -1]
    resid = acc - lam[:, None] * gam
    geo_res = float(np.max(np.linalg.norm(resid, axis=-1)))
    is_geo = geo_res < tol * max(1.0, float(np.max(kappa)) ** 2)

    tang = gam[:, :3]
    normal = dtan / kappa[:, None]
    binormal = np.cross(tang, normal)
    fam = (tang, gam[:, 3])
    reports = []
    for vec in (normal, binormal):
        first = parallel_check(fam, SectionSample(t, vec, np.zeros(t.size)))
        # offsets prescribed by beta' = phi c, then the full test
        reports.append(parallel_check(fam, SectionSample(t, vec, first.beta_expected)))
    return FrenetReport(bool(is_geo), bool(reports[0].is_parallel and reports[1].is_parallel),
                        kappa, geo_res, reports[0], reports[1])
