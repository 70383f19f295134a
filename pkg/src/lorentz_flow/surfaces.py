"""Parametrized oriented hypersurfaces and the built-in catalog.

Evaluators are vectorized: they take parameters of shape (..., m) with
m = d - 1 and return points of shape (..., d).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import _numdiff
from .envelope import HyperplaneFamilyPatch, _cross_batch
from .geodesics import PoincareElement

IMMERSION_TOL = 1e-12


@dataclass(frozen=True)
class SurfacePatch:
    """Local parametrization u -> X(u) of an oriented hypersurface in R^d.

    Without a ``normal`` callback the unit normal is the normalized
    generalized cross product of the partials ``X_{u_1}, ..., X_{u_m}``
    (the usual ``X_u x X_v`` in R^3), i.e. ``det[n, X_u...] > 0``.  Built-ins
    with an explicit normal (graphs point up, planes along the given normal)
    may differ from that orientation.
    """

    evaluator: Callable
    normal: Optional[Callable] = None
    tangents: Optional[Callable] = None
    normal_jacobian: Optional[Callable] = None
    h1: float = _numdiff.H_FIRST
    name: str = ""
    kind: str = "custom"
    param_dim: int = 2

    @property
    def derivative_mode(self) -> str:
        return "analytic" if self.normal_jacobian is not None else "finite-difference"

    def point(self, u):
        return np.asarray(self.evaluator(np.asarray(u, dtype=float)), dtype=float)

    def partials(self, u):
        u = np.asarray(u, dtype=float)
        if self.tangents is not None:
            return np.asarray(self.tangents(u), dtype=float)
        return _numdiff.jacobian(self.point, u, self.h1)[1]

    def unit_normal(self, u):
        u = np.asarray(u, dtype=float)
        if self.normal is not None:
            n = np.asarray(self.normal(u), dtype=float)
            return n / np.linalg.norm(n, axis=-1, keepdims=True)
        tang = self.partials(u)
        gram = np.einsum("...ik,...jk->...ij", tang, tang)
        if np.any(np.linalg.det(gram) <= IMMERSION_TOL):
            bad = np.argwhere(np.atleast_1d(np.linalg.det(gram) <= IMMERSION_TOL))
            raise ValueError(f"parametrization is not an immersion at sample(s) {bad.ravel().tolist()}")
        n = _cross_batch(tang)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def normal_derivatives(self, u):
        """Unit normal (..., d) and its u-derivatives (..., m, d)."""
        u = np.asarray(u, dtype=float)
        if self.normal_jacobian is not None:
            return self.unit_normal(u), np.asarray(self.normal_jacobian(u), dtype=float)
        return _numdiff.jacobian(self.unit_normal, u, self.h1)

    def tangent_planes(self, u):
        """Normals and offsets c = n . X of the tangent hyperplanes."""
        x = self.point(u)
        n = self.unit_normal(u)
        return n, np.einsum("...k,...k->...", n, x)

    def hyperplane_family(self) -> HyperplaneFamilyPatch:
        """Tangent-plane family; analytic first derivatives when available."""
        if self.normal_jacobian is None:
            return HyperplaneFamilyPatch(self.tangent_planes)

        def jac(u):
            x = self.point(u)
            _, dn = self.normal_derivatives(u)
            # c_u = n_u . X because n . X_u = 0
            return dn, np.einsum("...ik,...k->...i", dn, x)

        return HyperplaneFamilyPatch(self.tangent_planes, jacobian=jac)

    def transformed(self, g: PoincareElement) -> "SurfacePatch":
        """Image under x -> b A x + p, with normals carried by A."""
        src = self

        def ev(u):
            return g.apply_point(src.point(u))

        def nrm(u):
            return g.apply_normal(src.unit_normal(u))

        tangents = None
        if src.tangents is not None:
            def tangents(u):
                return g.scale * src.partials(u) @ g.rotation.T
        normal_jacobian = None
        if src.normal_jacobian is not None:
            def normal_jacobian(u):
                return src.normal_derivatives(u)[1] @ g.rotation.T
        return replace(self, evaluator=ev, normal=nrm, tangents=tangents,
                       normal_jacobian=normal_jacobian, name=f"g({self.name})", kind="transformed")

    @property
    def dim(self) -> int:
        """Ambient dimension d (a hypersurface has m = d - 1 parameters)."""
        return self.param_dim + 1


def _graph_normal_derivs(grad, hess):
    """Unit upward normal of z = f(x) and its derivatives from grad f and Hessian f."""
    w = np.concatenate([-grad, np.ones(grad.shape[:-1] + (1,))], axis=-1)
    s = np.linalg.norm(w, axis=-1)
    n = w / s[..., None]
    m = grad.shape[-1]
    dw = np.concatenate([-hess, np.zeros(hess.shape[:-1] + (1,))], axis=-1)  # (..., m, d)
    proj = np.einsum("...k,...ik->...i", n, dw)
    dn = dw / s[..., None, None] - n[..., None, :] * (proj / s[..., None])[..., None]
    assert dn.shape[-2] == m
    return n, dn


def paraboloid(height: float, coefficient: float, dim: int = 3, name: str = "") -> SurfacePatch:
    """Graph z = height - coefficient * |x|^2 over R^{dim-1}, upward normal."""
    h, k = float(height), float(coefficient)

    def ev(u):
        u = np.asarray(u, dtype=float)
        z = h - k * np.sum(u * u, axis=-1)
        return np.concatenate([u, z[..., None]], axis=-1)

    def grads(u):
        u = np.asarray(u, dtype=float)
        m = u.shape[-1]
        hess = np.broadcast_to(-2.0 * k * np.eye(m), u.shape[:-1] + (m, m))
        return -2.0 * k * u, hess

    def tang(u):
        g, _ = grads(u)
        m = g.shape[-1]
        eye = np.broadcast_to(np.eye(m), g.shape[:-1] + (m, m))
        return np.concatenate([eye, g[..., :, None]], axis=-1)

    def nrm(u):
        return _graph_normal_derivs(*grads(u))[0]

    def njac(u):
        return _graph_normal_derivs(*grads(u))[1]

    return SurfacePatch(ev, nrm, tang, njac, name=name, kind="paraboloid", param_dim=dim - 1)


def graph(coefficients, name: str = "") -> SurfacePatch:
    """Graph z = sum_{i,j} a[i][j] x^i y^j in R^3, upward normal."""
    from numpy.polynomial import polynomial as P

    a = np.atleast_2d(np.asarray(coefficients, dtype=float))
    ax = P.polyder(a, axis=0)
    ay = P.polyder(a, axis=1)
    axx, axy, ayy = P.polyder(ax, axis=0), P.polyder(ax, axis=1), P.polyder(ay, axis=1)

    def f(c, u):
        return P.polyval2d(u[..., 0], u[..., 1], c) if c.size else np.zeros(u.shape[:-1])

    def ev(u):
        u = np.asarray(u, dtype=float)
        return np.concatenate([u, f(a, u)[..., None]], axis=-1)

    def grads(u):
        u = np.asarray(u, dtype=float)
        g = np.stack([f(ax, u), f(ay, u)], axis=-1)
        fxy = f(axy, u)
        hess = np.stack([np.stack([f(axx, u), fxy], -1), np.stack([fxy, f(ayy, u)], -1)], -2)
        return g, hess

    def tang(u):
        g, _ = grads(u)
        eye = np.broadcast_to(np.eye(2), g.shape[:-1] + (2, 2))
        return np.concatenate([eye, g[..., :, None]], axis=-1)

    return SurfacePatch(ev, lambda u: _graph_normal_derivs(*grads(u))[0], tang,
                        lambda u: _graph_normal_derivs(*grads(u))[1], name=name, kind="graph")


def sphere(radius: float, center=(0.0, 0.0, 0.0), name: str = "") -> SurfacePatch:
    """Round sphere with outward normal.

    d = 2: u = angle.  d = 3: u = (polar, azimuth); avoid the poles.
    """
    r = float(radius)
    c = np.asarray(center, dtype=float)
    if r <= 0:
        raise ValueError("sphere radius must be positive")
    d = c.size

    if d == 2:
        def unit(u):
            a = np.asarray(u, dtype=float)[..., 0]
            return np.stack([np.cos(a), np.sin(a)], axis=-1)

        def dunit(u):
            a = np.asarray(u, dtype=float)[..., 0]
            return np.stack([-np.sin(a), np.cos(a)], axis=-1)[..., None, :]
    elif d == 3:
        def unit(u):
            u = np.asarray(u, dtype=float)
            p, q = u[..., 0], u[..., 1]
            return np.stack([np.sin(p) * np.cos(q), np.sin(p) * np.sin(q), np.cos(p)], axis=-1)

        def dunit(u):
            u = np.asarray(u, dtype=float)
            p, q = u[..., 0], u[..., 1]
            dp = np.stack([np.cos(p) * np.cos(q), np.cos(p) * np.sin(q), -np.sin(p)], axis=-1)
            dq = np.stack([-np.sin(p) * np.sin(q), np.sin(p) * np.cos(q), np.zeros_like(p)], axis=-1)
            return np.stack([dp, dq], axis=-2)
    else:
        raise ValueError(f"built-in sphere supports d = 2 or 3, got center of length {d}")

    return SurfacePatch(lambda u: c + r * unit(u), unit, lambda u: r * dunit(u), dunit,
                        name=name, kind="sphere", param_dim=d - 1)


def ellipsoid(semi_axes, name: str = "") -> SurfacePatch:
    """Axis-aligned ellipsoid in R^3, u = (polar, azimuth), outward normal."""
    ax = np.asarray(semi_axes, dtype=float)
    if ax.shape != (3,) or np.any(ax <= 0):
        raise ValueError("ellipsoid needs three positive semi-axes")

    def ev(u):
        u = np.asarray(u, dtype=float)
        p, q = u[..., 0], u[..., 1]
        return ax * np.stack([np.sin(p) * np.cos(q), np.sin(p) * np.sin(q), np.cos(p)], axis=-1)

    def tang(u):
        u = np.asarray(u, dtype=float)
        p, q = u[..., 0], u[..., 1]
        dp = np.stack([np.cos(p) * np.cos(q), np.cos(p) * np.sin(q), -np.sin(p)], axis=-1)
        dq = np.stack([-np.sin(p) * np.sin(q), np.sin(p) * np.cos(q), np.zeros_like(p)], axis=-1)
        return ax * np.stack([dp, dq], axis=-2)

    inv = 1.0 / ax ** 2

    def grads(u):
        # outward normal is the gradient of sum (x_i / a_i)^2, i.e. X / a^2
        w = ev(u) * inv
        s = np.linalg.norm(w, axis=-1)
        n = w / s[..., None]
        dw = tang(u) * inv
        proj = np.einsum("...k,...ik->...i", n, dw)
        return n, (dw - n[..., None, :] * proj[..., None]) / s[..., None, None]

    return SurfacePatch(ev, lambda u: grads(u)[0], tang, lambda u: grads(u)[1],
                        name=name, kind="ellipsoid")


def plane(normal, offset: float, name: str = "") -> SurfacePatch:
    """Affine hyperplane n . x = offset parametrized over an orthonormal basis."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    d = n.size
    # rows 1.. of an orthonormal basis whose first row is n
    q, _ = np.linalg.qr(np.column_stack([n, np.eye(d)]))
    basis = q[:, 1:d].T
    base = float(offset) * n

    def ev(u):
        return base + np.asarray(u, dtype=float) @ basis

    def nrm(u):
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(n, u.shape[:-1] + (d,)).copy()

    def njac(u):
        u = np.asarray(u, dtype=float)
        return np.zeros(u.shape[:-1] + (d - 1, d))

    def tang(u):
        return np.broadcast_to(basis, np.shape(u)[:-1] + basis.shape)

    return SurfacePatch(ev, nrm, tang, njac, name=name, kind="plane", param_dim=d - 1)


def nested_paraboloids():
    """The three paraboloids z = 2 - .2 r^2, z = .5 - .05 r^2, z = 4 - .5 r^2."""
    return (paraboloid(2.0, 0.2, name="M1"),
            paraboloid(0.5, 0.05, name="M2"),
            paraboloid(4.0, 0.5, name="M3"))
