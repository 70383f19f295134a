"""Envelopes of hyperplane families u -> (n(u), c(u)).

The envelope point at ``u`` solves ``n . x = c`` together with the
u-derivatives ``n_{u_i} . x = c_{u_i}``.  It exists (uniquely) when the rows
``n, n_{u_1}, ..., n_{u_{d-1}}`` are independent; the envelope is smooth
there when the matrix ``[n~_{u_i u_j} . h~]`` is nonsingular, with
``n~ = (n, -c)`` and ``h~`` the generalized cross product of ``n~`` and its
first derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _numdiff

TAU_SING = 1e-8

SMOOTH = "smooth"
SINGULAR = "singular"
UNDETERMINED = "undetermined"


def cross_product_general(vectors) -> np.ndarray:
    """Generalized cross product of k vectors in R^{k+1}.

    Coordinate i is (-1)^i (0-based) times the minor with column i removed, so
    ``v . result == det([v, v_1, ..., v_k])`` for every v.
    """
    mat = np.asarray(vectors, dtype=float)
    if mat.ndim != 2 or mat.shape[1] != mat.shape[0] + 1:
        raise ValueError(f"need k vectors of length k + 1, got array of shape {mat.shape}")
    return _cross_batch(mat)


def _cross_batch(mat):
    """Batched generalized cross product; ``mat`` has shape (..., k, k + 1)."""
    k1 = mat.shape[-1]
    out = np.empty(mat.shape[:-2] + (k1,))
    for i in range(k1):
        minor = np.delete(mat, i, axis=-1)
        out[..., i] = (-1.0) ** i * np.linalg.det(minor)
    return out


@dataclass(frozen=True)
class ParameterGrid:
    """Rectangular product grid; points are enumerated in row-major order."""

    axes: tuple

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float).ravel() for a in self.axes)
        if not axes or any(a.size == 0 for a in axes):
            raise ValueError("parameter grid must be nonempty")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def from_ranges(cls, ranges: Sequence[tuple]) -> "ParameterGrid":
        return cls(tuple(np.linspace(lo, hi, int(n)) for lo, hi, n in ranges))

    @property
    def shape(self) -> tuple:
        return tuple(a.size for a in self.axes)

    @property
    def param_dim(self) -> int:
        return len(self.axes)

    @property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, len(self.axes))

    def __len__(self):
        return int(np.prod(self.shape))


def as_points(grid) -> np.ndarray:
    """Accept a ParameterGrid or an array-like of parameter points."""
    if isinstance(grid, ParameterGrid):
        return grid.points
    pts = np.asarray(grid, dtype=float)
    if pts.size == 0:
        raise ValueError("parameter grid must be nonempty")
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError(f"parameter points must be an (N, m) array, got shape {pts.shape}")
    return pts


@dataclass(frozen=True)
class HyperplaneFamilyPatch:
    """A family of oriented hyperplanes over a (d-1)-dimensional parameter.

    ``evaluator`` maps parameters of shape (..., m) to ``(normals, offsets)``
    of shapes (..., d) and (...).  Optional analytic callbacks return
    ``(dn, dc)`` with shapes (..., m, d), (..., m) and ``(ddn, ddc)`` with
    shapes (..., m, m, d), (..., m, m).  Without them, central differences with
    steps ``h1`` (first) and ``h2`` (second) are used.
    """

    evaluator: Callable
    jacobian: Optional[Callable] = None
    hessian: Optional[Callable] = None
    h1: float = _numdiff.H_FIRST
    h2: float = _numdiff.H_SECOND

    @property
    def derivative_mode(self) -> str:
        return "analytic" if self.jacobian is not None else "finite-difference"

    def tilde(self, u):
        """n~ = (n, -c) after rescaling so that |n| = 1."""
        n, c = self.evaluator(np.asarray(u, dtype=float))
        n = np.asarray(n, dtype=float)
        c = np.asarray(c, dtype=float)
        s = np.linalg.norm(n, axis=-1)
        if np.any(s == 0.0):
            raise ValueError("family has a zero normal")
        return np.concatenate([n / s[..., None], (-c / s)[..., None]], axis=-1)

    def first(self, u):
        """n~ and its first derivatives (..., m, d + 1)."""
        u = np.asarray(u, dtype=float)
        if self.jacobian is not None:
            nt = self.tilde(u)
            dn, dc = self.jacobian(u)
            return nt, np.concatenate([np.asarray(dn, float), -np.asarray(dc, float)[..., None]], axis=-1)
        return _numdiff.jacobian(self.tilde, u, self.h1)

    def second(self, u):
        """n~, first derivatives and second derivatives (..., m, m, d + 1)."""
        u = np.asarray(u, dtype=float)
        nt, dnt = self.first(u)
        if self.hessian is not None:
            ddn, ddc = self.hessian(u)
            ddnt = np.concatenate([np.asarray(ddn, float), -np.asarray(ddc, float)[..., None]], axis=-1)
        elif self.jacobian is not None:
            def flat_first(v):
                _, d1 = self.first(v)
                return d1.reshape(d1.shape[:-2] + (-1,))
            _, dd = _numdiff.jacobian(flat_first, u, self.h1)
            m = u.shape[-1]
            ddnt = dd.reshape(dd.shape[:-1] + (m, -1))
        else:
            _, _, ddnt = _numdiff.second_derivatives(self.tilde, u, self.h2)
        return nt, dnt, ddnt


@dataclass
class EnvelopeSample:
    u: tuple
    point: Optional[np.ndarray]
    det_N: float
    smooth: str = UNDETERMINED
    hessian_det: Optional[float] = None
    det_nprime: Optional[float] = None
    error: Optional[str] = None

    @property
    def present(self) -> bool:
        return self.point is not None


@dataclass
class SmoothnessResult:
    hessian_matrix: np.ndarray
    nonsingular: bool
    det_normalized: float
    h_tilde: np.ndarray = field(repr=False, default=None)


def _envelope_system(nt, dnt):
    """Matrix rows (n, n_u...) and right side (c, c_u...) of the envelope system."""
    d = nt.shape[-1] - 1
    rows = np.concatenate([nt[..., None, :d], dnt[..., :d]], axis=-2)
    rhs = -np.concatenate([nt[..., None, d], dnt[..., d]], axis=-1)
    return rows, rhs


def normalized_det(mat, axis=-1):
    """det divided by the product of row (axis=-1) or column (axis=-2) norms."""
    norms = np.linalg.norm(mat, axis=axis)
    scale = np.prod(norms, axis=-1)
    det = np.linalg.det(mat)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(scale > 0.0, det / np.where(scale > 0.0, scale, 1.0), 0.0)
    return out


def solve_envelope(nt, dnt, tau=TAU_SING):
    """Batched envelope points; rows with |normalized det| < tau come back NaN."""
    rows, rhs = _envelope_system(nt, dnt)
    det_n = normalized_det(rows)
    ok = np.abs(det_n) >= tau
    safe = np.where(ok[..., None, None], rows, np.eye(rows.shape[-1]))
    # LAPACK gesv: LU with partial pivoting
    x = np.linalg.solve(safe, rhs[..., None])[..., 0]
    x[~ok] = np.nan
    return x, det_n


def hessian_test(nt, dnt, ddnt):
    """Batched ``[n~_{u_i u_j} . h~]``, its normalized determinant and h~."""
    mat = np.concatenate([nt[..., None, :], dnt], axis=-2)
    h = _cross_batch(mat)
    hmat = np.einsum("...ijk,...k->...ij", ddnt, h)
    m = hmat.shape[-1]
    scale = np.linalg.norm(h, axis=-1) ** m * np.prod(np.sum(dnt * dnt, axis=-1), axis=-1)
    det = np.linalg.det(hmat)
    with np.errstate(invalid="ignore", divide="ignore"):
        det_norm = np.where(scale > 0.0, det / np.where(scale > 0.0, scale, 1.0), 0.0)
    return hmat, det_norm, h


def envelope_point(patch: HyperplaneFamilyPatch, u, tau=TAU_SING) -> EnvelopeSample:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    nt, dnt = patch.first(u)
    x, det_n = solve_envelope(nt, dnt, tau)
    point = None if np.isnan(x).any() else x
    return EnvelopeSample(tuple(u.tolist()), point, float(det_n))


def smoothness_test(patch: HyperplaneFamilyPatch, u, tau=TAU_SING) -> SmoothnessResult:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    sample = envelope_point(patch, u, tau)
    if not sample.present:
        raise ValueError(f"no unique envelope point at u = {sample.u} (det_N = {sample.det_N:.3e})")
    nt, dnt, ddnt = patch.second(u)
    hmat, det_norm, h = hessian_test(nt, dnt, ddnt)
    return SmoothnessResult(hmat, bool(abs(det_norm) >= tau), float(det_norm), h)


def _classify(point_ok, hdet, tau):
    if not point_ok:
        return UNDETERMINED
    return SMOOTH if abs(hdet) >= tau else SINGULAR


def envelope_grid(patch: HyperplaneFamilyPatch, grid, tau=TAU_SING) -> list:
    """Envelope points and smoothness verdicts over a grid, in grid order.

    Failures at individual samples are recorded on the sample, never raised.
    """
    pts = as_points(grid)
    try:
        nt, dnt, ddnt = patch.second(pts)
        x, det_n = solve_envelope(nt, dnt, tau)
        _, hdet, _ = hessian_test(nt, dnt, ddnt)
    except Exception:  # fall back to per-sample evaluation to localize failures
        return [_grid_sample(patch, u, tau) for u in pts]
    out = []
    for k, u in enumerate(pts):
        ok = not np.isnan(x[k]).any()
        out.append(EnvelopeSample(
            tuple(u.tolist()), x[k].copy() if ok else None, float(det_n[k]),
            _classify(ok, hdet[k], tau), float(hdet[k]) if ok else None))
    return out


def _grid_sample(patch, u, tau):
    try:
        nt, dnt, ddnt = patch.second(u)
        x, det_n = solve_envelope(nt, dnt, tau)
        ok = not np.isnan(x).any()
        _, hdet, _ = hessian_test(nt, dnt, ddnt)
        return EnvelopeSample(tuple(u.tolist()), x if ok else None, float(det_n),
                              _classify(ok, hdet, tau), float(hdet) if ok else None)
    except Exception as exc:
        return EnvelopeSample(tuple(u.tolist()), None, float("nan"), UNDETERMINED, None,
                              error=f"{type(exc).__name__}: {exc}")
