"""Central finite differences for vectorized maps R^m -> R^k."""
from __future__ import annotations

import numpy as np

H_FIRST = 1e-5
H_SECOND = 1e-3


def _steps(u, base):
    return base * np.maximum(1.0, np.abs(u))


def jacobian(f, u, h=H_FIRST):
    """Value ``(..., k)`` and Jacobian ``(..., m, k)`` of ``f`` at ``u`` (..., m).

    ``f`` must accept a stacked batch with extra leading axes.
    """
    u = np.asarray(u, dtype=float)
    m = u.shape[-1]
    hs = _steps(u, h)
    eye = np.eye(m)
    # stencil axis first: centre, +e_i, -e_i
    shifts = np.concatenate([np.zeros((1, m)), eye, -eye])
    pts = u[None, ...] + shifts.reshape((2 * m + 1,) + (1,) * (u.ndim - 1) + (m,)) * hs[None, ...]
    vals = np.asarray(f(pts))
    centre = vals[0]
    plus, minus = vals[1:m + 1], vals[m + 1:]
    hcol = np.moveaxis(hs, -1, 0)[..., None]
    jac = (plus - minus) / (2.0 * hcol)
    return centre, np.moveaxis(jac, 0, -2)


def second_derivatives(f, u, h=H_SECOND):
    """Value, Jacobian and Hessian ``(..., m, m, k)`` from fourth-order stencils.

    Steps of ``h`` and ``2h`` are combined; mixed partials use Richardson
    extrapolation of the four-point cross stencil.
    """
    u = np.asarray(u, dtype=float)
    m = u.shape[-1]
    hs = _steps(u, h)
    eye = np.eye(m)
    shifts = [np.zeros(m)]
    for i in range(m):
        shifts += [eye[i], -eye[i], 2 * eye[i], -2 * eye[i]]
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    for i, j in pairs:
        for r in (1, 2):
            shifts += [r * (eye[i] + eye[j]), r * (eye[i] - eye[j]), r * (-eye[i] + eye[j]),
                       -r * (eye[i] + eye[j])]
    shifts = np.array(shifts)
    pts = u[None, ...] + shifts.reshape((len(shifts),) + (1,) * (u.ndim - 1) + (m,)) * hs[None, ...]
    vals = np.asarray(f(pts))
    f0 = vals[0]
    k_shape = f0.shape
    jac = np.empty(k_shape[:-1] + (m,) + k_shape[-1:])
    hess = np.empty(k_shape[:-1] + (m, m) + k_shape[-1:])
    hsv = [hs[..., i][..., None] for i in range(m)]
    for i in range(m):
        fp, fm, fpp, fmm = vals[1 + 4 * i: 5 + 4 * i]
        jac[..., i, :] = (8.0 * (fp - fm) - (fpp - fmm)) / (12.0 * hsv[i])
        hess[..., i, i, :] = (16.0 * (fp + fm) - (fpp + fmm) - 30.0 * f0) / (12.0 * hsv[i] * hsv[i])
    base = 1 + 4 * m
    for k, (i, j) in enumerate(pairs):
        block = vals[base + 8 * k: base + 8 * k + 8]
        near = (block[0] - block[1] - block[2] + block[3]) / (4.0 * hsv[i] * hsv[j])
        far = (block[4] - block[5] - block[6] + block[7]) / (16.0 * hsv[i] * hsv[j])
        mixed = (4.0 * near - far) / 3.0
        hess[..., i, j, :] = mixed
        hess[..., j, i, :] = mixed
    return f0, jac, hess
