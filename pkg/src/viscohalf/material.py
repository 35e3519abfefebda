"""Fractional Zener material, damped frequency and wavenumber branches.

Sign conventions
----------------
The fractional factor uses the principal branch ``(i w)^a = w^a exp(i a pi/2)``.
The damped frequency ``w~`` is the principal square root of ``w~^2`` with its
sign flipped when needed so that ``Im k >= 0``; then ``exp(i k r)`` decays.
For a lossy material (q > p) this yields ``Re k < 0``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchDegenerate, MaterialError


@dataclass(frozen=True)
class Material:
    """Isotropic fractional-Zener solid (SI units).

    ``lam`` is the first Lame constant (``lambda`` is a Python keyword).
    """

    lam: float
    mu: float
    rho: float
    p: float = 0.0
    q: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        for name in ("lam", "mu", "rho", "p", "q", "alpha"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise MaterialError(f"{name} must be finite, got {value!r}")
        if self.mu <= 0:
            raise MaterialError(f"mu must be > 0, got {self.mu}")
        if self.lam + self.mu <= 0:
            raise MaterialError(f"lambda + mu must be > 0, got {self.lam + self.mu}")
        if self.rho <= 0:
            raise MaterialError(f"rho must be > 0, got {self.rho}")
        if self.p < 0 or self.q < 0:
            raise MaterialError(f"p and q must be >= 0, got p={self.p}, q={self.q}")
        if not 0.0 <= self.alpha <= 1.0:
            raise MaterialError(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def is_elastic(self) -> bool:
        return self.p == self.q

    def stiffness_tensor(self) -> np.ndarray:
        """C_ijkl as a (3, 3, 3, 3) array."""
        d = np.eye(3)
        return (self.lam * np.einsum("ij,kl->ijkl", d, d)
                + self.mu * (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d)))


@dataclass(frozen=True)
class FrequencyContext:
    omega: float
    zener: complex
    damped_omega_sq: complex
    k1: complex
    k2: complex
    c1: complex
    c2: complex
    damped_omega: complex = 0j
    damping: float = 0.0

    @property
    def k_max_re(self) -> float:
        return max(abs(self.k1.real), abs(self.k2.real))


def zener_factor(material: Material, omega: float) -> complex:
    """(1 + p (i w)^a) / (1 + q (i w)^a) on the principal branch."""
    if not omega > 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    a = material.alpha
    s = omega**a * cmath.exp(0.5j * math.pi * a)
    return (1 + material.p * s) / (1 + material.q * s)


def _upper(z: complex) -> complex:
    # principal root, then flip into Im >= 0
    r = cmath.sqrt(z)
    if r.imag < 0 or (r.imag == 0 and r.real < 0):
        r = -r
    return r


def frequency_context(material: Material, omega: float, damping: float = 0.0) -> FrequencyContext:
    """Damped frequency and complex wavenumbers at angular frequency ``omega``.

    ``damping`` is an artificial regularisation: the damped frequency is
    multiplied by ``1 + i*damping``. It defaults to zero and is never applied
    implicitly; pass a small positive value to move an elastic material off
    the real-axis branch points.
    """
    if damping < 0:
        raise ValueError("damping must be >= 0")
    zf = zener_factor(material, omega)
    w2 = zf * omega**2 * (1 + 1j * damping) ** 2
    wt = _upper(w2)
    k1 = wt * math.sqrt(material.rho / (material.lam + 2 * material.mu))
    k2 = wt * math.sqrt(material.rho / material.mu)
    return FrequencyContext(
        omega=float(omega), zener=zf, damped_omega_sq=w2,
        k1=k1, k2=k2, c1=omega / k1, c2=omega / k2, damped_omega=wt,
        damping=float(damping),
    )


def vertical_wavenumber(eta1, eta2, k):
    """Decaying branch of sqrt(eta1^2 + eta2^2 - k^2), Re >= 0.

    Works elementwise on arrays. Raises :class:`BranchDegenerate` when the
    real part vanishes for a real ``k`` (undamped branch point).
    """
    eta1 = np.asarray(eta1, dtype=float)
    eta2 = np.asarray(eta2, dtype=float)
    beta = np.sqrt((eta1 * eta1 + eta2 * eta2) - complex(k) ** 2 + 0j)
    beta = np.where(beta.real < 0, -beta, beta)
    if complex(k).imag == 0 and np.any(beta.real == 0):
        raise BranchDegenerate(
            "vertical wavenumber has zero real part with real k; "
            "add damping or move the grid off |eta| <= |k|"
        )
    return beta[()] if beta.ndim == 0 else beta
