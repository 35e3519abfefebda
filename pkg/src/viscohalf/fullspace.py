"""Closed-form full-space fundamental solution and its spectral traction.

Array conventions: displacement ``u[j, m]`` is the j-th component due to a
unit load in direction m; stress ``s[i, j, m]`` is sigma_ij for load m, so
the traction on a plane with normal n is ``T[j, m] = s[i, j, m] n_i``.
All evaluators broadcast over leading axes of the position arrays.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import CoincidentPoints, SurfaceSource
from .material import FrequencyContext, Material, vertical_wavenumber

R_MIN = 1e-12

#: Weyl plane-wave constant: exp(ikr)/r = WEYL_CONSTANT * int exp(-beta|z|)/beta e^{i eta.x} d eta
WEYL_CONSTANT = 1.0 / (2.0 * math.pi)


def _radial(r_vec, r_min):
    r_vec = np.asarray(r_vec, dtype=float)
    r = np.linalg.norm(r_vec, axis=-1)
    if np.any(r < r_min):
        raise CoincidentPoints(f"|x - xi| below r_min={r_min}")
    return r_vec, r


def phi_derivs(r_vec, k, r_min: float = R_MIN):
    """exp(ikr)/r with gradient, Hessian and third derivatives.

    Returns ``(value, grad, hess, third)`` with shapes ``(...)``,
    ``(..., 3)``, ``(..., 3, 3)`` and ``(..., 3, 3, 3)``.
    """
    r_vec, r = _radial(r_vec, r_min)
    k = complex(k)
    e = np.exp(1j * k * r)
    ik = 1j * k
    f = e / r
    f1 = e * (ik / r - 1 / r**2)
    f2 = e * (-k * k / r - 2 * ik / r**2 + 2 / r**3)
    f3 = e * (-1j * k**3 / r + 3 * k * k / r**2 + 6 * ik / r**3 - 6 / r**4)
    n = r_vec / r[..., None]
    eye = np.eye(3)

    grad = f1[..., None] * n
    a = f2 - f1 / r
    b = f1 / r
    nn = n[..., :, None] * n[..., None, :]
    hess = a[..., None, None] * nn + b[..., None, None] * eye

    # d/dr of a, using b' = a / r
    da = f3 - f2 / r + f1 / r**2
    nnn = nn[..., :, :, None] * n[..., None, None, :]
    sym = (eye[:, :, None] * n[..., None, None, :]
           + eye[:, None, :] * n[..., None, :, None]
           + eye[None, :, :] * n[..., :, None, None])
    third = (da - 2 * a / r)[..., None, None, None] * nnn + (a / r)[..., None, None, None] * sym
    return f, grad, hess, third


def _check_pair(x, xi):
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return x - xi


def fullspace_gradient(x, xi, ctx: FrequencyContext, material: Material, r_min: float = R_MIN):
    """Displacement u*[j, m] and its gradient du*[j, m, l] = d u*_jm / d x_l."""
    d = _check_pair(x, xi)
    k1, k2 = ctx.k1, ctx.k2
    f1, _, h1, t1 = phi_derivs(d, k1, r_min)
    f2, g2, h2, t2 = phi_derivs(d, k2, r_min)
    pref = 1.0 / (4 * math.pi * material.mu)
    eye = np.eye(3)
    u = pref * ((h2 - h1) / k2**2 + f2[..., None, None] * eye)
    du = pref * ((t2 - t1) / k2**2 + eye[:, :, None] * g2[..., None, None, :])
    return u, du


def fullspace_displacement(x, xi, ctx: FrequencyContext, material: Material, r_min: float = R_MIN):
    """Full-space Green tensor u*[j, m] for a unit point load at ``xi``."""
    return fullspace_gradient(x, xi, ctx, material, r_min)[0]


def stress_from_gradient(du, material: Material):
    """sigma[i, j, m] from du[j, m, l] = d u_jm / d x_l (isotropic Hooke law)."""
    div = np.einsum("...kmk->...m", du)
    g = np.swapaxes(du, -1, -2)  # g[a, l, m] = d u_am / d x_l
    s = material.mu * (g + np.swapaxes(g, -3, -2))
    return s + material.lam * np.eye(3)[:, :, None] * div[..., None, None, :]


def fullspace_stress(x, xi, ctx: FrequencyContext, material: Material, r_min: float = R_MIN):
    """Full-space stress sigma*[i, j, m]."""
    return stress_from_gradient(fullspace_gradient(x, xi, ctx, material, r_min)[1], material)


def traction(stress, normal):
    """T[j, m] = sigma[i, j, m] n_i."""
    return np.einsum("...ijm,i->...jm", stress, np.asarray(normal, dtype=float))


# --- wavenumber-domain representation ---------------------------------------

def spectral_D_matrices(eta1, eta2, ctx: FrequencyContext, sign: int = 1):
    """Second-derivative matrices of the plane-wave decomposition.

    For the decaying factor exp(-beta_j |x3 - xi3|) the derivatives map to
    ``(i eta1, i eta2, -sign * beta_j)`` with ``sign = sgn(x3 - xi3)``;
    ``D1 = d1 d1^T`` and ``D2 = d2 d2^T + k2^2 I`` with delta terms dropped.
    Broadcasts over ``eta1, eta2`` and returns arrays ``(..., 3, 3)``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    eta1 = np.asarray(eta1, dtype=float)
    eta2 = np.asarray(eta2, dtype=float)
    b1 = vertical_wavenumber(eta1, eta2, ctx.k1)
    b2 = vertical_wavenumber(eta1, eta2, ctx.k2)
    d1 = np.stack(np.broadcast_arrays(1j * eta1, 1j * eta2, -sign * b1), axis=-1)
    d2 = np.stack(np.broadcast_arrays(1j * eta1, 1j * eta2, -sign * b2), axis=-1)
    D1 = d1[..., :, None] * d1[..., None, :]
    D2 = d2[..., :, None] * d2[..., None, :] + ctx.k2**2 * np.eye(3)
    return D1, D2


def spectral_fullspace_traction(eta1, eta2, xi3: float, ctx: FrequencyContext, material: Material):
    """Spectral density Q[j, k] of the full-space surface traction.

    ``T_jk(x1, x2, 0) = int Q_jk(eta) exp(i eta . (x - xi)) d eta`` for a
    source at depth ``xi3 < 0``. Rows 1, 2 are shear tractions, row 3 normal.
    """
    if not xi3 < 0:
        raise SurfaceSource(f"source depth xi3 must be < 0, got {xi3}")
    eta1 = np.asarray(eta1, dtype=float)
    eta2 = np.asarray(eta2, dtype=float)
    lam, mu = material.lam, material.mu
    k2sq = ctx.k2**2
    b1 = vertical_wavenumber(eta1, eta2, ctx.k1)
    b2 = vertical_wavenumber(eta1, eta2, ctx.k2)
    D1, D2 = spectral_D_matrices(eta1, eta2, ctx, sign=1)
    E1 = np.exp(b1 * xi3) / b1
    E2 = np.exp(b2 * xi3) / b2
    ie1, ie2 = 1j * eta1, 1j * eta2

    def rows(D, b, E):
        r1 = D[..., 0, :] * b[..., None] - D[..., 2, :] * ie1[..., None]
        r2 = D[..., 1, :] * b[..., None] - D[..., 2, :] * ie2[..., None]
        r3 = ((lam + 2 * mu) * D[..., 2, :] * b[..., None]
              - lam * (D[..., 0, :] * ie1[..., None] + D[..., 1, :] * ie2[..., None])) / mu
        return np.stack([r1, r2, r3], axis=-2) * E[..., None, None]

    return WEYL_CONSTANT / (4 * math.pi * k2sq) * (rows(D1, b1, E1) - rows(D2, b2, E2))
