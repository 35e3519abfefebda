"""Reflected (correction) field w and its stresses by wavenumber quadrature."""
from __future__ import annotations

import numpy as np

from .errors import NearSurfaceLimit, SurfaceSource
from .material import FrequencyContext, Material
from .quadrature import BatchResult, IntegralResult, QuadratureConfig, integrate_batch
from .spectral import reflected_amplitudes

H_MIN_FACTOR = 1e-3


def h_min(ctx: FrequencyContext, factor: float = H_MIN_FACTOR) -> float:
    """Smallest admissible |x3 + xi3|, in units of 1 / |k2|."""
    return factor / abs(ctx.k2)


def _check_geometry(receivers, source, ctx, h_factor):
    if not source[2] < 0:
        raise SurfaceSource(f"source must lie below the surface, got xi3={source[2]}")
    if np.any(receivers[:, 2] >= 0):
        raise NearSurfaceLimit("receivers must satisfy x3 < 0")
    hm = h_min(ctx, h_factor)
    sums = receivers[:, 2] + source[2]
    if np.any(sums >= -hm):
        raise NearSurfaceLimit(f"x3 + xi3 must be < -{hm:.3e}")
    return float(-sums.max())


def _integrand(material, ctx, xi3, depths, stress):
    """Integrand over nodes, one slot per distinct receiver depth: (n, D, C)."""
    lam, mu = material.lam, material.mu
    depths = np.asarray(depths, dtype=float)

    def f(e1, e2):
        amp, betas, C = reflected_amplitudes(e1, e2, xi3, material, ctx)
        ez = np.exp(betas[:, None, :] * depths[None, :, None])          # (n, D, m)
        # per-mode contributions T_m[n, D, j, k] = amp[j, m] ez[m] C[m, k]
        T = [(amp[:, None, :, m] * ez[:, :, m, None])[..., None] * C[:, None, None, m, :]
             for m in range(3)]
        w = T[0] + T[1] + T[2]
        n, D = w.shape[:2]
        parts = [w.reshape(n, D, 9)]
        if stress:
            grad = np.empty((n, D, 3, 3, 3), dtype=complex)              # [.., j, k, l]
            grad[..., 0] = 1j * e1[:, None, None, None] * w
            grad[..., 1] = 1j * e2[:, None, None, None] * w
            grad[..., 2] = sum(betas[:, None, None, None, m] * T[m] for m in range(3))
            div = grad[..., 0, :, 0] + grad[..., 1, :, 1] + grad[..., 2, :, 2]   # (n, D, k)
            g = np.swapaxes(grad, -1, -2)                                  # [.., a, l, k]
            s = mu * (g + np.swapaxes(g, -3, -2))
            for i in range(3):
                s[..., i, i, :] += lam * div
            parts.append(s.reshape(n, D, 27))
        return np.concatenate(parts, axis=-1)
    return f


def correction_field(receivers, source, material: Material, ctx: FrequencyContext,
                     config: QuadratureConfig = QuadratureConfig(), *, stress: bool = True,
                     h_factor: float = H_MIN_FACTOR) -> BatchResult:
    """Correction displacement (and stress) at many receivers for one source.

    All receivers share one adaptive node set. ``values[p, :9]`` is
    ``w[j, k]`` flattened; with ``stress`` the next 27 entries are
    ``sigma_w[i, j, k]``.
    """
    receivers = np.atleast_2d(np.asarray(receivers, dtype=float))
    source = np.asarray(source, dtype=float)
    depth = _check_geometry(receivers, source, ctx, h_factor)
    offsets = receivers[:, :2] - source[None, :2]
    depths, index = np.unique(receivers[:, 2], return_inverse=True)
    f = _integrand(material, ctx, float(source[2]), depths, stress)
    return integrate_batch(f, offsets, config, k_ref=ctx.k_max_re, depth=depth,
                           point_index=index)


def correction_displacement(x, xi, material: Material, ctx: FrequencyContext,
                            config: QuadratureConfig = QuadratureConfig()) -> IntegralResult:
    res = correction_field([x], xi, material, ctx, config, stress=False)
    return IntegralResult(res.values[0, :9].reshape(3, 3), float(res.errors[0]),
                          res.evaluations, res.truncation_radius_used, res.converged)


def correction_stress(x, xi, material: Material, ctx: FrequencyContext,
                      config: QuadratureConfig = QuadratureConfig()) -> IntegralResult:
    res = correction_field([x], xi, material, ctx, config, stress=True)
    return IntegralResult(res.values[0, 9:].reshape(3, 3, 3), float(res.errors[0]),
                          res.evaluations, res.truncation_radius_used, res.converged)
