"""Induced Lorentzian geodesic flow between two corresponded hypersurfaces.

Each parameter u carries the tangent hyperplanes z0(u) of the source and
z1(u) of the target at the corresponding point; ``psi_t(u)`` is the geodesic
of T^d between them.  The level hypersurface M_t is the envelope of
``u -> psi_t(u)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from . import _numdiff
from .envelope import (TAU_SING, EnvelopeSample, HyperplaneFamilyPatch, as_points,
                       envelope_grid, hessian_test, solve_envelope)
from .geodesics import (TAU_SMALL, PoincareElement, angle_between, dlambda_dtheta, lambda_fn,
                        sigma_fn)
from .lorentz import HyperplanePoint
from .surfaces import SurfacePatch

THETA_MARGIN = 1e-6

SHARED = "shared_parameter"
REPARAMETRIZATION = "reparametrization"
VERTICAL = "vertical"
POINCARE = "poincare"
KINDS = (SHARED, REPARAMETRIZATION, VERTICAL, POINCARE)

GRAPH_KINDS = ("paraboloid", "graph")


@dataclass(frozen=True)
class Correspondence:
    """The diffeomorphism chi from source to target, in parameter terms.

    ``chart`` maps source parameters to target parameters; ``chart_jacobian``
    returns ``J[..., i, k] = d chart_k / d u_i``.  A Poincare correspondence
    sends each source point x to g(x).
    """

    kind: str = SHARED
    chart: Optional[Callable] = None
    chart_jacobian: Optional[Callable] = None
    element: Optional[PoincareElement] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown correspondence kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == REPARAMETRIZATION and self.chart is None:
            raise ValueError("reparametrization correspondence needs a chart u -> u~")
        if self.kind == POINCARE and self.element is None:
            raise ValueError("poincare correspondence needs a PoincareElement")

    @classmethod
    def shared(cls):
        return cls(SHARED)

    @classmethod
    def vertical(cls):
        return cls(VERTICAL)

    @classmethod
    def reparametrization(cls, chart, jacobian=None):
        return cls(REPARAMETRIZATION, chart=chart, chart_jacobian=jacobian)

    @classmethod
    def poincare(cls, element: PoincareElement):
        return cls(POINCARE, element=element)


def check_injective(mapped, source_points) -> None:
    """Collision test at grid resolution for a reparametrized grid."""
    mapped = np.asarray(mapped, dtype=float)
    src = np.asarray(source_points, dtype=float)
    if len(src) < 2:
        return
    spacing, _ = cKDTree(src).query(src, k=2)
    tol = 1e-6 * float(np.min(spacing[:, 1]))
    pairs = cKDTree(mapped).query_pairs(max(tol, 1e-12))
    if pairs:
        i, j = sorted(pairs)[0]
        raise ValueError(f"correspondence is not injective on the grid: u = {src[i].tolist()} "
                         f"and u = {src[j].tolist()} map to the same target parameter")


@dataclass
class NormalData:
    """Endpoint data over a batch of parameters."""

    n0: np.ndarray
    dn0: np.ndarray
    x0: np.ndarray
    n1: np.ndarray
    dn1: np.ndarray
    x1: np.ndarray
    theta: np.ndarray
    dtheta: np.ndarray

    @property
    def c0(self):
        return np.einsum("...k,...k->...", self.n0, self.x0)

    @property
    def c1(self):
        return np.einsum("...k,...k->...", self.n1, self.x1)


@dataclass(frozen=True)
class FlowProblem:
    """Source, target and correspondence; ``derivative_mode`` is "fd" or "analytic".

    In "fd" mode the flowed family is differentiated numerically through
    :meth:`flow_arrays`; "analytic" uses the chain rule on the endpoint data.
    With a Poincare correspondence the target is g(source) and ``target`` is
    only used by :meth:`target_mismatch`.
    """

    source: SurfacePatch
    target: Optional[SurfacePatch] = None
    chi: Correspondence = field(default_factory=Correspondence)
    derivative_mode: str = "fd"

    def __post_init__(self):
        if self.derivative_mode not in ("fd", "analytic"):
            raise ValueError(f"derivative_mode must be 'fd' or 'analytic', got {self.derivative_mode!r}")
        if self.chi.kind != POINCARE and self.target is None:
            raise ValueError("a target surface is required unless the correspondence is a Poincare element")
        if self.chi.kind == VERTICAL:
            for s in (self.source, self.target):
                if s.kind not in GRAPH_KINDS:
                    raise ValueError(f"vertical correspondence needs graph surfaces, got kind {s.kind!r}")

    # -- correspondence -------------------------------------------------
    @property
    def dim(self) -> int:
        return self.source.dim

    def target_params(self, u):
        u = np.asarray(u, dtype=float)
        if self.chi.kind == SHARED:
            return u
        if self.chi.kind == VERTICAL:
            return self.source.point(u)[..., :-1]
        if self.chi.kind == REPARAMETRIZATION:
            return np.asarray(self.chi.chart(u), dtype=float)
        raise ValueError("poincare correspondences act on points, not parameters")

    def _chart_jacobian(self, u):
        if self.chi.kind == SHARED:
            return None
        if self.chi.kind == VERTICAL:
            return self.source.partials(u)[..., :-1]
        if self.chi.chart_jacobian is not None:
            return np.asarray(self.chi.chart_jacobian(u), dtype=float)
        return _numdiff.jacobian(self.target_params, u)[1]

    def validate_grid(self, points) -> None:
        pts = as_points(points)
        if self.chi.kind == REPARAMETRIZATION:
            check_injective(self.target_params(pts), pts)
        self.theta(pts)

    def target_mismatch(self, u) -> Optional[np.ndarray]:
        """Vertical gap between g(source) and a graph target (Poincare case only)."""
        if self.chi.kind != POINCARE or self.target is None or self.target.kind not in GRAPH_KINDS:
            return None
        img = self.chi.element.apply_point(self.source.point(u))
        return img[..., -1] - self.target.point(img[..., :-1])[..., -1]

    # -- endpoint data --------------------------------------------------
    def _endpoints(self, u):
        u = np.asarray(u, dtype=float)
        n0, dn0 = self.source.normal_derivatives(u)
        x0 = self.source.point(u)
        if self.chi.kind == POINCARE:
            g = self.chi.element
            return n0, dn0, x0, g.apply_normal(n0), dn0 @ g.rotation.T, g.apply_point(x0)
        v = self.target_params(u)
        n1, dn1v = self.target.normal_derivatives(v)
        x1 = self.target.point(v)
        jac = self._chart_jacobian(u)
        dn1 = dn1v if jac is None else np.einsum("...ik,...kj->...ij", jac, dn1v)
        return n0, dn0, x0, n1, dn1, x1

    def _theta_of(self, n0, n1, u):
        theta = np.asarray(angle_between(n0, n1))
        bad = theta >= np.pi - THETA_MARGIN
        if np.any(bad):
            where = np.asarray(u)[bad] if np.ndim(bad) else np.asarray(u)
            raise ValueError(f"surfaces are not relatively oriented: antipodal normals at u = "
                             f"{np.atleast_2d(where)[0].tolist()}")
        return theta

    def theta(self, u):
        n0, _, _, n1, _, _ = self._endpoints(u)
        return self._theta_of(n0, n1, u)

    def normal_data(self, u) -> NormalData:
        n0, dn0, x0, n1, dn1, x1 = self._endpoints(u)
        theta = self._theta_of(n0, n1, u)
        s = np.sin(theta)
        num = np.einsum("...ik,...k->...i", dn0, n1) + np.einsum("...k,...ik->...i", n0, dn1)
        small = theta < TAU_SMALL
        dtheta = np.where(small[..., None], 0.0, -num / np.where(small, 1.0, s)[..., None])
        return NormalData(n0, dn0, x0, n1, dn1, x1, theta, dtheta)

    # -- the flow -------------------------------------------------------
    def flow_arrays(self, u, t: float):
        """Normals (..., d) and offsets (...) of psi_t(u)."""
        n0, _, x0, n1, _, x1 = self._endpoints(u)
        theta = self._theta_of(n0, n1, u)
        a, b = np.asarray(lambda_fn(t, theta)), np.asarray(lambda_fn(1.0 - t, theta))
        c0 = np.einsum("...k,...k->...", n0, x0)
        c1 = np.einsum("...k,...k->...", n1, x1)
        return a[..., None] * n1 + b[..., None] * n0, a * c1 + b * c0

    def _flow_jacobian(self, u, t):
        nd = self.normal_data(u)
        a, b = np.asarray(lambda_fn(t, nd.theta)), np.asarray(lambda_fn(1.0 - t, nd.theta))
        at, bt = np.asarray(dlambda_dtheta(t, nd.theta)), np.asarray(dlambda_dtheta(1.0 - t, nd.theta))
        dc0 = np.einsum("...ik,...k->...i", nd.dn0, nd.x0)
        dc1 = np.einsum("...ik,...k->...i", nd.dn1, nd.x1)
        dn = (a[..., None, None] * nd.dn1 + b[..., None, None] * nd.dn0
              + nd.dtheta[..., None] * (at[..., None] * nd.n1 + bt[..., None] * nd.n0)[..., None, :])
        dc = (a[..., None] * dc1 + b[..., None] * dc0
              + nd.dtheta * (at * nd.c1 + bt * nd.c0)[..., None])
        return dn, dc

    def flow_family(self, t: float, mode: Optional[str] = None) -> HyperplaneFamilyPatch:
        mode = mode or self.derivative_mode
        t = float(t)
        if mode == "analytic":
            return HyperplaneFamilyPatch(lambda u: self.flow_arrays(u, t),
                                         jacobian=lambda u: self._flow_jacobian(u, t))
        return HyperplaneFamilyPatch(lambda u: self.flow_arrays(u, t))


def flow_map(problem: FlowProblem, u, t: float) -> HyperplanePoint:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    n, c = problem.flow_arrays(u, t)
    return HyperplanePoint._trusted(n, float(c))


@dataclass
class NonsingularityResult:
    N_prime: np.ndarray
    det_normalized: np.ndarray
    N_tilde: np.ndarray


def _column_matrix(n, dn):
    """Columns (n, n_{u_1}, ...) as a (..., d, d) array."""
    return np.concatenate([n[..., None, :], dn], axis=-2).swapaxes(-1, -2)


def nprime_from_data(nd: NormalData, t: float):
    a, b = np.asarray(lambda_fn(t, nd.theta)), np.asarray(lambda_fn(1.0 - t, nd.theta))
    n_tilde = (a[..., None, None] * _column_matrix(nd.n1, nd.dn1)
               + b[..., None, None] * _column_matrix(nd.n0, nd.dn0))
    sig = np.asarray(sigma_fn(t, nd.theta))
    extra = np.concatenate([np.zeros(nd.dtheta.shape[:-1] + (1,)), nd.dtheta], axis=-1)
    n_prime = n_tilde + sig[..., None, None] * nd.n0[..., :, None] * extra[..., None, :]
    scale = np.prod(np.linalg.norm(n_tilde, axis=-2), axis=-1)
    det = np.linalg.det(n_prime)
    with np.errstate(invalid="ignore", divide="ignore"):
        det_norm = np.where(scale > 0.0, det / np.where(scale > 0.0, scale, 1.0), 0.0)
    return n_prime, det_norm, n_tilde


def nonsingularity_matrix(problem: FlowProblem, u, t: float) -> NonsingularityResult:
    """N'_t = lam(t) N1 + lam(1-t) N0 + sigma(t, theta) [0 | theta_u n0]; batched over u."""
    nd = problem.normal_data(np.asarray(u, dtype=float))
    return NonsingularityResult(*nprime_from_data(nd, t))


def direct_matrix(problem: FlowProblem, u, t: float):
    """Columns (n_t, d n_t / du) by differentiating the flow numerically.

    The determinant is normalized by the same column norms as N'_t, so the
    two normalized values are directly comparable.
    """
    u = np.asarray(u, dtype=float)
    n, dn = _numdiff.jacobian(lambda v: problem.flow_arrays(v, t)[0], u)
    mat = _column_matrix(n, dn)
    n_tilde = nprime_from_data(problem.normal_data(u), t)[2]
    scale = np.prod(np.linalg.norm(n_tilde, axis=-2), axis=-1)
    return mat, np.linalg.det(mat) / scale


def level_surface(problem: FlowProblem, t: float, grid, mode: Optional[str] = None,
                  tau: float = TAU_SING) -> list:
    """Envelope samples of psi_t over the grid, each with det N'_t recorded."""
    pts = as_points(grid)
    problem.validate_grid(pts)
    samples = envelope_grid(problem.flow_family(t, mode), pts, tau)
    try:
        _, det_np, _ = nprime_from_data(problem.normal_data(pts), t)
    except Exception:
        det_np = np.full(len(pts), np.nan)
    for s, v in zip(samples, det_np):
        s.det_nprime = float(v)
    return samples


def flow_curves(problem: FlowProblem, grid, times, mode: Optional[str] = None, tau: float = TAU_SING):
    """Envelope points (T, N, d) over times x grid; NaN where the point is absent."""
    pts = as_points(grid)
    problem.validate_grid(pts)
    times = np.asarray(times, dtype=float).ravel()
    out = np.full((times.size, len(pts), problem.dim), np.nan)
    for k, t in enumerate(times):
        nt, dnt = problem.flow_family(t, mode).first(pts)
        out[k] = solve_envelope(nt, dnt, tau)[0]
    return out


def flow_curve(problem: FlowProblem, u, times, mode: Optional[str] = None) -> list:
    """Envelope point of the flowed family at fixed u, tracked over t (None = gap)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    pts = flow_curves(problem, u[None, :], times, mode)[:, 0, :]
    return [None if np.isnan(p).any() else p for p in pts]


OK = "ok"
FLAG_SINGULAR = "singular"
FLAG_SIGN_CHANGE = "sign_change"
FLAG_NONSMOOTH = "nonsmooth"
FLAG_UNDETERMINED = "undetermined"


@dataclass
class SingularityReport:
    """det N'_t and the envelope smoothness determinant over u-grid x t-grid.

    ``det_field`` and ``hessian_field`` have shape (T, N).  ``sign_changes``
    lists (u, t_lo, t_hi) cells where det N'_t crosses zero between adjacent t;
    ``smoothness_changes`` does the same for the smoothness determinant.
    """

    u_points: np.ndarray
    times: np.ndarray
    det_field: np.ndarray
    hessian_field: np.ndarray
    flags: np.ndarray
    sign_changes: list
    smoothness_changes: list
    near_zero: list
    undetermined: list
    verdict: str
    tau: float = TAU_SING

    @property
    def min_abs_det(self) -> float:
        return float(np.nanmin(np.abs(self.det_field)))


def _crossings(field_, pts, times):
    sgn = np.sign(field_)
    hit = (sgn[:-1] * sgn[1:]) < 0
    return [(tuple(pts[j].tolist()), float(times[k]), float(times[k + 1]))
            for k, j in zip(*np.nonzero(hit))], hit


def singularity_scan(problem: FlowProblem, u_grid, t_grid, mode: Optional[str] = None,
                     tau: float = TAU_SING) -> SingularityReport:
    """Scan det N'_t (existence) and the smoothness determinant of M_t.

    The verdict is singular when either field changes sign between adjacent
    t samples or falls below ``tau`` in magnitude.
    """
    pts = as_points(u_grid)
    times = np.asarray(t_grid, dtype=float).ravel()
    if times.size == 0:
        raise ValueError("t grid must be nonempty")
    if np.any((times < 0.0) | (times > 1.0)):
        raise ValueError("t grid must lie in [0, 1]")
    problem.validate_grid(pts)
    nd = problem.normal_data(pts)
    det = np.empty((times.size, len(pts)))
    hess = np.empty_like(det)
    for k, t in enumerate(times):
        det[k] = nprime_from_data(nd, t)[1]
        nt, dnt, ddnt = problem.flow_family(t, mode).second(pts)
        hess[k] = hessian_test(nt, dnt, ddnt)[1]
    hess = np.where(np.abs(det) >= tau, hess, np.nan)

    sign_changes, det_hit = _crossings(det, pts, times)
    smooth_changes, hess_hit = _crossings(np.nan_to_num(hess), pts, times)
    flags = np.full(det.shape, OK, dtype=object)
    flags[np.abs(det) < 10.0 * tau] = FLAG_UNDETERMINED
    nonsmooth = np.zeros(det.shape, bool)
    nonsmooth[:-1] |= hess_hit
    nonsmooth |= np.abs(np.nan_to_num(hess, nan=np.inf)) < tau
    flags[nonsmooth] = FLAG_NONSMOOTH
    crossing = np.zeros(det.shape, bool)
    crossing[:-1] |= det_hit
    flags[crossing] = FLAG_SIGN_CHANGE
    tiny = np.abs(det) < tau
    flags[tiny] = FLAG_SINGULAR
    near_zero = [(tuple(pts[j].tolist()), float(times[k])) for k, j in zip(*np.nonzero(tiny))]
    undetermined = [(tuple(pts[j].tolist()), float(times[k]))
                    for k, j in zip(*np.nonzero(flags == FLAG_UNDETERMINED))]
    singular = bool(sign_changes or smooth_changes or near_zero or nonsmooth.any())
    return SingularityReport(pts, times, det, hess, flags, sign_changes, smooth_changes,
                             near_zero, undetermined, "singular" if singular else "nonsingular", tau)
