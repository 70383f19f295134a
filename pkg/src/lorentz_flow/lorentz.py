"""Minkowski algebra, the hyperplane quadric and the duality map.

An oriented affine hyperplane ``n . x = c`` of R^d (with ``|n| = 1``) is a
point of the quadric T^d inside de Sitter space, embedded in R^{d+2,1} as
``(n, c, c)``.  Only ``(n, c)`` is stored; the Minkowski form is built on
demand so that its Lorentzian norm is exactly 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-12
INFINITY_TOL = 1e-12


def _as_vector(values, name="vector"):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class MinkowskiVector:
    """A vector of R^{d+2,1}; the last coordinate is the time-like one."""

    coords: np.ndarray

    def __post_init__(self):
        coords = _as_vector(self.coords, "coords")
        if coords.size < 4:
            raise ValueError(f"Minkowski vector needs d + 2 >= 4 coordinates, got {coords.size}")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        """Ambient hyperplane dimension d."""
        return self.coords.size - 2

    def __array__(self, dtype=None, copy=None):
        return np.array(self.coords, dtype=dtype)

    def __len__(self):
        return self.coords.size

    def norm_sq(self) -> float:
        return lorentz_inner(self, self)

    def norm(self) -> float:
        """sqrt(|<v, v>_L|); signed magnitude is left to the caller."""
        return float(np.sqrt(abs(self.norm_sq())))


def lorentz_inner(v, w) -> float:
    """<v, w>_L = sum_{i <= d+1} v_i w_i - v_{d+2} w_{d+2}."""
    a = np.asarray(v, dtype=float)
    b = np.asarray(w, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(a[:-1] @ b[:-1] - a[-1] * b[-1])


@dataclass(frozen=True, eq=False)
class HyperplanePoint:
    """Oriented hyperplane ``normal . x = offset``, i.e. a point of T^d."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = _as_vector(self.normal, "normal").copy()
        if n.size < 2:
            raise ValueError("hyperplanes need ambient dimension d >= 2")
        if abs(np.linalg.norm(n) - 1.0) > UNIT_TOL:
            raise ValueError(f"normal must be a unit vector, |n| = {np.linalg.norm(n)!r}")
        n.setflags(write=False)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def _trusted(cls, normal, offset) -> "HyperplanePoint":
        # Closed-form constructions (geodesics, group actions) keep |n| = 1 only
        # to rounding; near theta -> pi that can exceed UNIT_TOL.
        n = np.array(normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-8:
            raise ValueError(f"normal drifted off the unit sphere, |n| = {np.linalg.norm(n)!r}")
        n.setflags(write=False)
        obj = object.__new__(cls)
        object.__setattr__(obj, "normal", n)
        object.__setattr__(obj, "offset", float(offset))
        return obj

    @classmethod
    def from_unnormalized(cls, normal, offset) -> "HyperplanePoint":
        """Rescale ``(normal, offset)`` so the normal has unit length."""
        n = _as_vector(normal, "normal")
        s = np.linalg.norm(n)
        if s == 0.0:
            raise ValueError("zero normal")
        return cls(n / s, float(offset) / s)

    @property
    def dim(self) -> int:
        return self.normal.size

    def embed(self) -> MinkowskiVector:
        """The Minkowski form ``(n, c, c)``."""
        return MinkowskiVector(np.concatenate([self.normal, [self.offset, self.offset]]))

    def signed_distance(self, x) -> float:
        return float(self.normal @ np.asarray(x, dtype=float) - self.offset)

    def allclose(self, other: "HyperplanePoint", atol=1e-12) -> bool:
        return (self.dim == other.dim
                and np.allclose(self.normal, other.normal, rtol=0, atol=atol)
                and abs(self.offset - other.offset) <= atol)

    def __repr__(self):
        return f"HyperplanePoint(normal={self.normal.tolist()}, offset={self.offset!r})"


@dataclass(frozen=True, eq=False)
class DualProjectivePoint:
    """Point <y_1, ..., y_{d+1}> of the dual projective space, minus infinity."""

    homogeneous: np.ndarray

    def __post_init__(self):
        y = _as_vector(self.homogeneous, "homogeneous").copy()
        if y.size < 3:
            raise ValueError("need d + 1 >= 3 homogeneous coordinates")
        if np.linalg.norm(y[:-1]) < INFINITY_TOL:
            raise ValueError("point at infinity")
        y.setflags(write=False)
        object.__setattr__(self, "homogeneous", y)

    @property
    def dim(self) -> int:
        return self.homogeneous.size - 1

    def same_point(self, other: "DualProjectivePoint", atol=1e-12) -> bool:
        """Equality up to a nonzero scale factor."""
        a = self.homogeneous / np.linalg.norm(self.homogeneous)
        b = other.homogeneous / np.linalg.norm(other.homogeneous)
        return a.size == b.size and (np.allclose(a, b, atol=atol) or np.allclose(a, -b, atol=atol))


def lorentz_map(point, unit_normal) -> HyperplanePoint:
    """Tangent hyperplane at ``point`` with normal ``unit_normal`` as a point of T^d.

    The normal is renormalized, so any positive multiple gives the same result.
    """
    x = _as_vector(point, "point")
    n = _as_vector(unit_normal, "unit_normal")
    if x.shape != n.shape:
        raise ValueError(f"point and normal dimensions differ: {x.size} vs {n.size}")
    s = np.linalg.norm(n)
    if s == 0.0:
        raise ValueError("zero normal")
    n = n / s
    return HyperplanePoint(n, float(n @ x))


def nu_map(p: DualProjectivePoint) -> HyperplanePoint:
    """Duality map to T^d, chosen so that nu(<a, -c>) = (a, c) for unit a."""
    y = p.homogeneous
    scale = np.linalg.norm(y[:-1])
    if scale < INFINITY_TOL:
        raise ValueError("point at infinity")
    y = y / scale
    return HyperplanePoint(y[:-1], -y[-1])


def nu_inverse(z: HyperplanePoint) -> DualProjectivePoint:
    return DualProjectivePoint(np.concatenate([z.normal, [-z.offset]]))
