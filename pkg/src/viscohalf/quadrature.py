"""Adaptive polar quadrature for 2D inverse Fourier integrals.

Computes ``I_p = int_{R^2} F_p(eta) exp(i eta . dx_p) d eta`` for a batch of
lateral offsets ``dx_p`` that share one node set. Sharing nodes keeps the
quadrature error a smooth function of the evaluation point, which is what
makes finite differences of the results meaningful.

Radial direction: Gauss-Legendre panels, error from comparing ``n/2`` and
``n`` point rules, adaptive bisection. Angular direction: a multiple of
four panels so that each spans at most ``pi`` of lateral phase, with
panel edges on multiples of ``pi/2`` so no node lies on ``eta1 = 0``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import DecayViolation, NoConvergence
from .fullspace import WEYL_CONSTANT

_CHUNK = 1 << 20  # complex entries per integrand call


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-6
    truncation_radius: float = 0.0  # 0 selects the decay-based radius
    radial_panels: int = 32
    angular_order: int = 16
    max_refine_depth: int = 12

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.truncation_radius < 0:
            raise ValueError("truncation_radius must be >= 0")
        if self.radial_panels < 1 or self.angular_order < 1 or self.max_refine_depth < 0:
            raise ValueError("panel counts and orders must be positive")


@dataclass
class IntegralResult:
    value: np.ndarray
    abs_error_estimate: float
    evaluations: int
    truncation_radius_used: float
    converged: bool = True


@dataclass
class BatchResult:
    values: np.ndarray          # (P, C)
    errors: np.ndarray          # (P,)
    evaluations: int
    truncation_radius_used: float
    converged: bool


@lru_cache(maxsize=None)
def _gauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def auto_truncation_radius(k_ref: float, depth: float, rel_tol: float) -> float:
    """Smallest R with exp(-(R - k_ref) h) (1 + (R h)^2) <= rel_tol / 100."""
    if not depth > 0:
        raise DecayViolation(f"decay depth must be > 0 for automatic truncation, got {depth}")
    target = math.log(rel_tol / 100.0)

    def g(t):  # t = R h
        return -(t - k_ref * depth) + math.log1p(t * t) - target

    lo = k_ref * depth
    hi = lo + 10.0
    while g(hi) > 0:
        hi *= 2
    return brentq(g, lo, hi, xtol=1e-12) / depth


def _angular_rule(rho_max: float, lmax: float, order: int):
    # each panel spans at most pi of lateral phase
    n_pan = max(1, math.ceil(2.0 * lmax * rho_max / 4.0)) * 4
    x, w = _gauss(order)
    width = 2 * math.pi / n_pan
    starts = width * np.arange(n_pan)
    theta = (starts[:, None] + 0.5 * width * (x[None, :] + 1)).ravel()
    weights = np.tile(0.5 * width * w, n_pan)
    return theta, weights


class _Engine:
    def __init__(self, integrand, offsets, order, point_index=None):
        self.integrand = integrand
        self.offsets = np.atleast_2d(np.asarray(offsets, dtype=float))
        P = self.offsets.shape[0]
        self.index = (np.zeros(P, dtype=int) if point_index is None
                      else np.asarray(point_index, dtype=int).reshape(P))
        self.n_slots = int(self.index.max()) + 1
        self.lmax = float(np.max(np.hypot(self.offsets[:, 0], self.offsets[:, 1])))
        self.order = order
        self.evaluations = 0

    def rings(self, rho, theta, wtheta):
        """Angular integrals at each radius: returns (n_rho, P, C) and abs mass (n_rho,)."""
        n_rho, n_th = rho.size, theta.size
        ct, st = np.cos(theta), np.sin(theta)
        P = self.offsets.shape[0]
        out = None
        mass = np.zeros(n_rho)
        rows = max(1, _CHUNK // max(1, n_th * 36 * self.n_slots))
        for a in range(0, n_rho, rows):
            r = rho[a:a + rows]
            e1 = (r[:, None] * ct[None, :]).ravel()
            e2 = (r[:, None] * st[None, :]).ravel()
            F = np.asarray(self.integrand(e1, e2))
            self.evaluations += e1.size
            if F.ndim == 2:
                F = F[:, None, :]
            D, C = F.shape[1], F.shape[2]
            F = F.reshape(r.size, n_th, D, C)
            if out is None:
                out = np.empty((n_rho, P, C), dtype=complex)
            Fw = F * wtheta[None, :, None, None]
            arg = (self.offsets[:, 0, None] * ct[None, :] + self.offsets[:, 1, None] * st[None, :])
            for p in range(P):
                phase = np.exp(1j * r[:, None] * arg[p][None, :])          # (r, t)
                out[a:a + r.size, p] = np.matmul(phase[:, None, :], Fw[:, :, self.index[p], :])[:, 0, :]
            mass[a:a + r.size] = np.abs(Fw).sum(axis=(1, 2, 3))
        return out, mass

    def panel(self, a, b):
        """Gauss n/2 and n estimates on [a, b]: value, error per offset, abs mass."""
        theta, wt = _angular_rule(b, self.lmax, self.order)
        n = max(1, self.order // 2)
        xn, wn = _gauss(n)
        x2, w2 = _gauss(self.order)
        half, mid = 0.5 * (b - a), 0.5 * (b + a)
        rho = np.concatenate([mid + half * xn, mid + half * x2])
        vals, mass = self.rings(rho, theta, wt)
        wrn = (half * wn * rho[:n])
        wr2 = (half * w2 * rho[n:])
        g_n = np.einsum("r,rpc->pc", wrn, vals[:n])
        g_2n = np.einsum("r,rpc->pc", wr2, vals[n:])
        err = np.linalg.norm(g_2n - g_n, axis=-1)
        return g_2n, err, float(np.dot(wr2, mass[n:]))


def _initial_breaks(R, k_ref, n_panels, lmax):
    inner = min(R, 1.5 * k_ref) if k_ref > 0 else 0.0
    if inner <= 0 or inner >= R:
        breaks = np.linspace(0.0, R, n_panels + 1)
    else:
        n_in = max(1, n_panels // 2)
        breaks = np.concatenate([np.linspace(0.0, inner, n_in + 1),
                                 np.linspace(inner, R, n_panels - n_in + 1)[1:]])
    if lmax > 0:
        # at most four lateral wavelengths per initial panel
        max_w = 8 * math.pi / lmax
        refined = [breaks[0]]
        for a, b in zip(breaks[:-1], breaks[1:]):
            m = max(1, math.ceil((b - a) / max_w))
            refined.extend(np.linspace(a, b, m + 1)[1:])
        breaks = np.asarray(refined)
    return breaks


def integrate_batch(integrand, offsets, config: QuadratureConfig = QuadratureConfig(), *,
                    k_ref: float, depth: float, point_index=None) -> BatchResult:
    """Adaptive polar quadrature for a batch of lateral offsets.

    Parameters
    ----------
    integrand : callable
        ``integrand(eta1, eta2)`` on flat arrays of nodes returning either
        ``(n, C)`` (shared by all offsets) or ``(n, D, C)`` complex values,
        where offset ``p`` uses slot ``point_index[p]`` (default: slot 0).
    offsets : array_like, shape (P, 2)
        Lateral offsets ``x - xi``.
    point_index : array_like of int, optional
        Integrand slot used by each offset.
    k_ref : float
        Largest ``|Re k|``; beyond it the integrand is assumed to decay.
    depth : float
        Exponential decay length scale ``h`` so that the integrand behaves
        like ``exp(-|eta| h)`` for large ``|eta|``.
    """
    R = config.truncation_radius or auto_truncation_radius(k_ref, depth, config.rel_tol)
    eng = _Engine(integrand, offsets, config.angular_order, point_index)
    breaks = _initial_breaks(R, k_ref, config.radial_panels, eng.lmax)
    # panel records: [a, b, depth, value, err, mass]
    panels = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        v, e, m = eng.panel(a, b)
        panels.append([a, b, 0, v, e, m])

    converged = False
    while True:
        panels.sort(key=lambda p: p[0])
        total = np.sum(np.stack([p[3] for p in panels]), axis=0)
        errs = np.stack([p[4] for p in panels])          # (n_pan, P)
        mass = sum(p[5] for p in panels)
        floor = 1e-8 * mass
        target = config.rel_tol * np.maximum(np.linalg.norm(total, axis=-1), floor)
        err_tot = errs.sum(axis=0)
        if np.all(err_tot <= target):
            converged = True
            break
        share = np.max(errs / target[None, :], axis=1)   # per panel, worst offset
        limit = 1.0 / len(panels)
        pick = [i for i, s in enumerate(share) if s > limit and panels[i][2] < config.max_refine_depth]
        if not pick:
            break
        new = []
        for i, p in enumerate(panels):
            if i in pick:
                a, b, d = p[0], p[1], p[2]
                m = 0.5 * (a + b)
                for lo, hi in ((a, m), (m, b)):
                    v, e, ms = eng.panel(lo, hi)
                    new.append([lo, hi, d + 1, v, e, ms])
            else:
                new.append(p)
        panels = new

    # tail beyond R from the absolute ring mass at R
    _, mass_R = eng.rings(np.array([R]), *_angular_rule(R, eng.lmax, config.angular_order))
    tail = R * float(mass_R[0]) / max(depth, 1e-300) if depth > 0 else 0.0
    err_out = err_tot + tail
    if not converged:
        warnings.warn(NoConvergence(
            f"quadrature error {float(np.max(err_tot / target)):.2e} x tolerance after refinement"),
            stacklevel=2)
    return BatchResult(values=total, errors=err_out, evaluations=eng.evaluations,
                       truncation_radius_used=float(R), converged=converged)


def inverse_fourier_2d(integrand, dx1: float, dx2: float,
                       config: QuadratureConfig = QuadratureConfig(), *,
                       k_ref: float = 0.0, depth: float = 0.0) -> IntegralResult:
    """Single-offset wrapper around :func:`integrate_batch`.

    ``integrand(eta1, eta2)`` returns ``(n, ...)``; the value keeps the
    trailing shape.
    """
    probe = np.asarray(integrand(np.array([0.5]), np.array([0.5])))
    tail_shape = probe.shape[1:]

    def flat(e1, e2):
        return np.asarray(integrand(e1, e2)).reshape(e1.size, -1)

    res = integrate_batch(flat, [[dx1, dx2]], config, k_ref=k_ref, depth=depth)
    return IntegralResult(value=res.values[0].reshape(tail_shape),
                          abs_error_estimate=float(res.errors[0]),
                          evaluations=res.evaluations,
                          truncation_radius_used=res.truncation_radius_used,
                          converged=res.converged)


def weyl_integrand(k: complex, dz: float):
    adz = abs(dz)

    def f(e1, e2):
        beta = np.sqrt(e1 * e1 + e2 * e2 - complex(k) ** 2 + 0j)
        beta = np.where(beta.real < 0, -beta, beta)
        return (np.exp(-beta * adz) / beta)[:, None]
    return f


def weyl_phi(x, xi, k: complex, A: float = WEYL_CONSTANT,
             config: QuadratureConfig = QuadratureConfig()) -> IntegralResult:
    """A * int exp(-beta |x3 - xi3|) / beta * exp(i eta . (x - xi)) d eta."""
    k = complex(k)
    if not k.imag > 0:
        raise ValueError("weyl_phi needs Im(k) > 0")
    d = np.asarray(x, dtype=float) - np.asarray(xi, dtype=float)
    if d[2] == 0:
        raise ValueError("weyl_phi needs x3 != xi3")
    res = integrate_batch(weyl_integrand(k, d[2]), [d[:2]], config,
                          k_ref=abs(k.real), depth=abs(d[2]))
    return IntegralResult(value=A * res.values[0, 0], abs_error_estimate=abs(A) * float(res.errors[0]),
                          evaluations=res.evaluations,
                          truncation_radius_used=res.truncation_radius_used,
                          converged=res.converged)


def calibrate_weyl_constant(k: complex = 1 + 0.5j, depth: float = 1.0,
                            config: QuadratureConfig = QuadratureConfig(rel_tol=1e-10)) -> float:
    """Recover the plane-wave constant from the on-axis integral (unit A)."""
    unit = weyl_phi([0, 0, -depth], [0, 0, 0], k, A=1.0, config=config).value
    exact = np.exp(1j * complex(k) * depth) / depth
    return float((exact / unit).real)
