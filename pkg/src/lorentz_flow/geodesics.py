"""Closed-form Lorentzian geodesics between oriented hyperplanes.

The geodesic between ``z0 = (n0, c0)`` and ``z1 = (n1, c1)`` is

    gamma(t) = lam(t, theta) * z1 + lam(1 - t, theta) * z0,   cos(theta) = n0 . n1,

with ``lam(x, theta) = sin(x theta) / sin(theta)``.  The helpers ``mu_fn``,
``sigma_fn`` and ``dlambda_dtheta`` are the companion functions used for the
pseudo-rotation decomposition and for the nonsingularity test of induced
flows.  All scalar helpers broadcast over numpy arrays.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .lorentz import HyperplanePoint, MinkowskiVector

TAU_SMALL = 1e-6
# Below this angle the derivative-type helpers switch to their Taylor series;
# the closed forms lose ~eps/theta^2 relative accuracy to cancellation, while
# the truncated series is good to ~theta^6 relative.
TAU_SERIES = 1e-2
ANTIPODAL_TOL = 1e-9


class ExtrapolationWarning(UserWarning):
    """A geodesic or flow was evaluated at t outside [0, 1]."""


def _scalar_or_array(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def _check_theta(theta, bound, name):
    theta = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(theta)) or np.any(np.abs(theta) >= bound):
        raise ValueError(f"{name} requires |theta| < {bound!r}, got {theta!r}")
    return theta


def lambda_fn(x, theta):
    """sin(x theta) / sin(theta), extended by continuity to lam(x, 0) = x."""
    x = np.asarray(x, dtype=float)
    theta = _check_theta(theta, np.pi, "lambda_fn")
    x, theta = np.broadcast_arrays(x, theta)
    small = np.abs(theta) < TAU_SMALL
    safe = np.where(small, 1.0, theta)
    closed = np.sin(x * safe) / np.sin(safe)
    x2, t2 = x * x, theta * theta
    series = x * (1.0 + (1.0 - x2) * t2 / 6.0 + (3.0 * x2 * x2 - 10.0 * x2 + 7.0) * t2 * t2 / 360.0)
    return _scalar_or_array(np.where(small, series, closed))


def dlambda_dx(x, theta):
    """Partial derivative of lam in x: theta cos(x theta) / sin(theta)."""
    x = np.asarray(x, dtype=float)
    theta = _check_theta(theta, np.pi, "dlambda_dx")
    x, theta = np.broadcast_arrays(x, theta)
    small = np.abs(theta) < TAU_SMALL
    safe = np.where(small, 1.0, theta)
    closed = safe * np.cos(x * safe) / np.sin(safe)
    t2 = theta * theta
    series = 1.0 + (1.0 - 3.0 * x * x) * t2 / 6.0
    return _scalar_or_array(np.where(small, series, closed))


def mu_fn(x, theta):
    """cos(x theta) / cos(theta), defined for |theta| < pi/2."""
    x = np.asarray(x, dtype=float)
    theta = _check_theta(theta, np.pi / 2, "mu_fn")
    return _scalar_or_array(np.cos(x * theta) / np.cos(theta))


def dlambda_dtheta(x, theta):
    """Partial derivative of lam in theta; zero at theta = 0."""
    x = np.asarray(x, dtype=float)
    theta = _check_theta(theta, np.pi, "dlambda_dtheta")
    x, theta = np.broadcast_arrays(x, theta)
    small = np.abs(theta) < TAU_SERIES
    safe = np.where(small, 1.0, theta)
    s, c = np.sin(safe), np.cos(safe)
    closed = (x * s * np.cos(x * safe) - np.sin(x * safe) * c) / (s * s)
    x2 = x * x
    q = x * (x2 - 1.0)
    t = theta
    series = (-q * t / 3.0
              + q * (3.0 * x2 - 7.0) * t ** 3 / 90.0
              - q * (3.0 * x2 * x2 - 18.0 * x2 + 31.0) * t ** 5 / 2520.0)
    return _scalar_or_array(np.where(small, series, closed))


def sigma_fn(x, theta):
    """cos((1 - x) theta) / sin(theta) - x / sin(x theta); sigma(x, 0) = 0.

    This is the coefficient left on the ``n0`` column once the theta-derivative
    terms of d(n_t)/du are reduced modulo ``n_t``.  It vanishes identically at
    x = 1/2 and x = 1.
    """
    x = np.asarray(x, dtype=float)
    theta = _check_theta(theta, np.pi, "sigma_fn")
    x, theta = np.broadcast_arrays(x, theta)
    small = np.abs(theta) < TAU_SERIES
    safe = np.where(small, 1.0, theta)
    # x / sin(x theta) written through sinc so that x -> 0 gives 1 / theta
    closed = np.cos((1.0 - x) * safe) / np.sin(safe) - 1.0 / (safe * np.sinc(x * safe / np.pi))
    x2 = x * x
    r = (x - 1.0) * (2.0 * x - 1.0)
    t = theta
    series = (-r * t / 3.0
              + r * (x2 - 6.0 * x - 2.0) * t ** 3 / 90.0
              - r * (x2 - 2.0 * x + 4.0) * (13.0 * x2 + 14.0 * x + 4.0) * t ** 5 / 7560.0)
    return _scalar_or_array(np.where(small, series, closed))


def angle_between(n0, n1):
    """Angle between unit vectors, accurate near 0 and pi (unlike arccos of the dot product)."""
    n0 = np.asarray(n0, dtype=float)
    n1 = np.asarray(n1, dtype=float)
    diff = np.linalg.norm(n1 - n0, axis=-1)
    summ = np.linalg.norm(n1 + n0, axis=-1)
    return _scalar_or_array(2.0 * np.arctan2(diff, summ))


@dataclass(frozen=True)
class GeodesicSegment:
    """Geodesic of T^d between two non-antipodal oriented hyperplanes."""

    z0: HyperplanePoint
    z1: HyperplanePoint
    theta: float = field(init=False)

    def __post_init__(self):
        if self.z0.dim != self.z1.dim:
            raise ValueError(f"endpoint dimensions differ: {self.z0.dim} vs {self.z1.dim}")
        cos_theta = float(self.z0.normal @ self.z1.normal)
        if cos_theta <= -1.0 + ANTIPODAL_TOL:
            raise ValueError("antipodal normals: no geodesic joins n and -n")
        object.__setattr__(self, "theta", angle_between(self.z0.normal, self.z1.normal))

    @property
    def dim(self) -> int:
        return self.z0.dim

    @property
    def is_parallel(self) -> bool:
        return self.theta < TAU_SMALL

    def coefficients(self, t):
        """(lam(t, theta), lam(1 - t, theta)) for scalar or array t."""
        t = np.asarray(t, dtype=float)
        if np.any((t < 0.0) | (t > 1.0)):
            warnings.warn(f"geodesic evaluated outside [0, 1]: t = {t!r}", ExtrapolationWarning,
                          stacklevel=3)
        return lambda_fn(t, self.theta), lambda_fn(1.0 - t, self.theta)

    def evaluate(self, t):
        """Normals ``(..., d)`` and offsets ``(...)`` along the geodesic."""
        a, b = self.coefficients(t)
        a, b = np.asarray(a), np.asarray(b)
        normals = a[..., None] * self.z1.normal + b[..., None] * self.z0.normal
        offsets = a * self.z1.offset + b * self.z0.offset
        return normals, offsets

    def point(self, t: float) -> HyperplanePoint:
        normals, offsets = self.evaluate(float(t))
        return HyperplanePoint._trusted(normals, offsets)

    def velocity(self, t):
        """d/dt of the embedded curve as ``(dn/dt, dc/dt)`` arrays."""
        t = np.asarray(t, dtype=float)
        a = np.asarray(dlambda_dx(t, self.theta))
        b = -np.asarray(dlambda_dx(1.0 - t, self.theta))
        return (a[..., None] * self.z1.normal + b[..., None] * self.z0.normal,
                a * self.z1.offset + b * self.z0.offset)

    def embedded(self, t):
        """The curve in R^{d+2,1} coordinates, shape ``(..., d + 2)``."""
        normals, offsets = self.evaluate(t)
        offsets = np.asarray(offsets)[..., None]
        return np.concatenate([normals, offsets, offsets], axis=-1)


def geodesic_point(seg: GeodesicSegment, t: float) -> HyperplanePoint:
    return seg.point(t)


def geodesic_velocity0(seg: GeodesicSegment) -> MinkowskiVector:
    """Initial velocity; its Lorentzian length is theta (zero for parallel planes)."""
    n0, n1 = seg.z0.normal, seg.z1.normal
    theta = seg.theta
    # theta / sin(theta) via sinc; n1 - cos(theta) n0 written without cancellation
    scale = 1.0 / np.sinc(theta / np.pi)
    diff = n1 - n0
    proj = diff + 2.0 * np.sin(0.5 * theta) ** 2 * n0
    dc = seg.z1.offset - np.cos(theta) * seg.z0.offset
    return MinkowskiVector(scale * np.concatenate([proj, [dc, dc]]))


def lorentzian_distance(z0: HyperplanePoint, z1: HyperplanePoint) -> float:
    return GeodesicSegment(z0, z1).theta


@dataclass(frozen=True, eq=False)
class PoincareElement:
    """x -> scale * rotation @ x + translation (rigid motion after a homothety)."""

    rotation: np.ndarray
    scale: float
    translation: np.ndarray

    def __post_init__(self):
        a = np.array(self.rotation, dtype=float)
        p = np.array(self.translation, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"rotation must be square, got shape {a.shape}")
        if p.shape != (a.shape[0],):
            raise ValueError(f"translation must have shape ({a.shape[0]},), got {p.shape}")
        if not np.allclose(a.T @ a, np.eye(a.shape[0]), rtol=0, atol=1e-10):
            raise ValueError("rotation is not orthogonal")
        if self.scale == 0:
            raise ValueError("scale must be nonzero")
        a.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "rotation", a)
        object.__setattr__(self, "translation", p)
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def identity(cls, dim: int) -> "PoincareElement":
        return cls(np.eye(dim), 1.0, np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.rotation.shape[0]

    def apply_point(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * x @ self.rotation.T + self.translation

    def apply_normal(self, n):
        return np.asarray(n, dtype=float) @ self.rotation.T

    def apply_offset(self, n, c):
        """New offsets for normals ``n`` (..., d) and offsets ``c`` (...)."""
        an = self.apply_normal(n)
        return self.scale * np.asarray(c, dtype=float) + an @ self.translation


def poincare_apply(g: PoincareElement, z: HyperplanePoint) -> HyperplanePoint:
    """Image of the hyperplane under g: (A n, b c + (A n) . p)."""
    if g.dim != z.dim:
        raise ValueError(f"dimension mismatch: element {g.dim}, hyperplane {z.dim}")
    return HyperplanePoint._trusted(g.apply_normal(z.normal), g.apply_offset(z.normal, z.offset))


def translation_homothety_flow(z0: HyperplanePoint, b: float, p, t: float) -> HyperplanePoint:
    """Parallel family from z0 to its image under x -> b x + p."""
    if b == 0:
        raise ValueError("homothety factor must be nonzero")
    p = np.asarray(p, dtype=float)
    c_t = (1.0 + (b - 1.0) * t) * z0.offset + t * float(z0.normal @ p)
    return HyperplanePoint._trusted(z0.normal, c_t)


def pseudo_rotation_angle(v_norm_sq: float, omega: float) -> float:
    """Angle between n0 and A n0 when A rotates by omega and n0 has in-plane part v."""
    if not -1e-12 <= v_norm_sq <= 1.0 + 1e-12:
        raise ValueError(f"|v|^2 must lie in [0, 1], got {v_norm_sq!r}")
    arg = 1.0 + v_norm_sq * (np.cos(omega) - 1.0)
    if not -1.0 - 1e-12 <= arg <= 1.0 + 1e-12:
        raise ValueError(f"cos(theta) = {arg!r} outside [-1, 1]")
    return float(np.arccos(np.clip(arg, -1.0, 1.0)))


def planar_rotation(dim: int, i: int, j: int, omega: float) -> np.ndarray:
    """Rotation by omega in the (x_i, x_j) coordinate plane."""
    a = np.eye(dim)
    c, s = np.cos(omega), np.sin(omega)
    a[i, i], a[i, j], a[j, i], a[j, j] = c, -s, s, c
    return a


def _rotation_plane_split(rotation):
    """Projector onto the fixed subspace of a planar rotation and its angle."""
    a = np.asarray(rotation, dtype=float)
    d = a.shape[0]
    if not np.allclose(a.T @ a, np.eye(d), rtol=0, atol=1e-10) or np.linalg.det(a) < 0:
        raise ValueError("expected a proper rotation matrix")
    _, s, vt = np.linalg.svd(a - np.eye(d))
    moving = s > 1e-9
    if moving.sum() not in (0, 2):
        raise ValueError("rotation must act in a single plane and fix its complement")
    fixed = vt[~moving]
    cos_omega = np.clip((np.trace(a) - (d - 2)) / 2.0, -1.0, 1.0)
    return fixed.T @ fixed, float(np.arccos(cos_omega))


def pseudo_rotation_flow(z0: HyperplanePoint, rotation, t: float) -> HyperplanePoint:
    """Geodesic from z0 to (A n0, c0) written as rotation-plane part plus fixed part.

    n_t = lam(t, th) A v + lam(1 - t, th) v + mu(1 - 2t, th/2) p,
    c_t = mu(1 - 2t, th/2) c0,
    where n0 = v + p with p fixed by A.
    """
    a = np.asarray(rotation, dtype=float)
    if a.shape != (z0.dim, z0.dim):
        raise ValueError(f"rotation must be {z0.dim}x{z0.dim}")
    proj_fixed, omega = _rotation_plane_split(a)
    p = proj_fixed @ z0.normal
    v = z0.normal - p
    if float(z0.normal @ (a @ z0.normal)) <= -1.0 + ANTIPODAL_TOL:
        raise ValueError("rotation sends the normal to its antipode")
    theta = pseudo_rotation_angle(float(v @ v), omega)
    half = mu_fn(1.0 - 2.0 * t, theta / 2.0)
    n_t = lambda_fn(t, theta) * (a @ v) + lambda_fn(1.0 - t, theta) * v + half * p
    return HyperplanePoint._trusted(n_t, half * z0.offset)


def projective_flow_offset(c0: float, c1: float, t: float) -> float:
    """Offset of the dual-projective (round-sphere) flow between parallel planes."""
    angle = t * np.arctan(c1) + (1.0 - t) * np.arctan(c0)
    if abs(angle) >= np.pi / 2 - 1e-12:
        raise ValueError("plane through infinity")
    return float(np.tan(angle))
