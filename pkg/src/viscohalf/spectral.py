"""Fixed-wavenumber algebra: operator matrix, eigenmodes, boundary system.

The reflected field is a superposition of three modes with amplitude
vectors ``nu^m / beta_m`` and depth factor ``exp(beta_m (x3 + xi3))``; the
``1 / beta_m`` weight is the one carried by the boundary matrix ``N``.
Vectorised helpers (leading underscore) take arrays of ``eta1, eta2`` and
are what the quadrature integrands call.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateBasis, ModeDegenerate, SingularSystem, SurfaceSource
from .fullspace import spectral_fullspace_traction
from .material import FrequencyContext, Material, vertical_wavenumber

BASIS_TOL = 1e-12
BETA_MIN = 1e-14
COND_MAX = 1e12


@dataclass(frozen=True)
class SpectralPoint:
    eta1: float
    eta2: float
    beta1: complex
    beta2: complex

    @property
    def beta3(self) -> complex:
        return self.beta2

    @property
    def betas(self):
        return (self.beta1, self.beta2, self.beta2)


def spectral_point(eta1: float, eta2: float, ctx: FrequencyContext) -> SpectralPoint:
    return SpectralPoint(
        float(eta1), float(eta2),
        complex(vertical_wavenumber(eta1, eta2, ctx.k1)),
        complex(vertical_wavenumber(eta1, eta2, ctx.k2)),
    )


@dataclass(frozen=True)
class Eigenbasis:
    nu1: np.ndarray
    nu2: np.ndarray
    nu3: np.ndarray

    def as_matrix(self) -> np.ndarray:
        """Columns are the mode vectors."""
        return np.stack([self.nu1, self.nu2, self.nu3], axis=1)


@dataclass
class BoundarySystem:
    N: np.ndarray
    Q: np.ndarray
    delta: complex
    C: np.ndarray
    cond_estimate: float


def operator_matrix(eta, beta, ctx: FrequencyContext, material: Material):
    """M(eta1, eta2, beta) for the ansatz exp(beta x3 + i eta . x).

    Uses rho * w~^2 on the diagonal. Broadcasts; returns ``(..., 3, 3)``.
    """
    eta1, eta2 = (np.asarray(e, dtype=float) for e in eta)
    beta = np.asarray(beta, dtype=complex)
    lam, mu = material.lam, material.mu
    d = np.stack(np.broadcast_arrays(1j * eta1, 1j * eta2, beta), axis=-1)
    lap = (d * d).sum(axis=-1)
    diag = mu * lap + material.rho * ctx.damped_omega_sq
    return (lam + mu) * d[..., :, None] * d[..., None, :] + diag[..., None, None] * np.eye(3)


def det_operator(eta, beta, ctx: FrequencyContext, material: Material):
    return np.linalg.det(operator_matrix(eta, beta, ctx, material))


def _mode_vectors(eta1, eta2, b1, b2):
    """nu[..., j, m]: component j of eigenvector m."""
    zero = np.zeros(np.broadcast(eta1, eta2, b1, b2).shape)
    nu1 = np.stack(np.broadcast_arrays(-eta1 + 0j, -eta2 + 0j, 1j * b1), axis=-1)
    nu2 = np.stack(np.broadcast_arrays(-b2, zero + 0j, 1j * eta1 + zero), axis=-1)
    nu3 = np.stack(np.broadcast_arrays(-eta2 + 0j + zero, eta1 + 0j + zero, zero + 0j), axis=-1)
    return np.stack([nu1, nu2, nu3], axis=-1)


def eigenbasis(point: SpectralPoint) -> Eigenbasis:
    nu = _mode_vectors(point.eta1, point.eta2, point.beta1, point.beta2)
    nu1, nu2, nu3 = nu[:, 0], nu[:, 1], nu[:, 2]
    cross = np.linalg.norm(np.cross(nu2, nu3))
    if cross <= BASIS_TOL * np.linalg.norm(nu2) * np.linalg.norm(nu3):
        raise DegenerateBasis(f"nu2 parallel to nu3 at eta=({point.eta1}, {point.eta2})")
    return Eigenbasis(nu1, nu2, nu3)


def _surface_matrix(eta1, eta2, b1, b2, material: Material):
    """N without the exp(beta_m xi3) column factors."""
    lam, mu = material.lam, material.mu
    eta1 = np.asarray(eta1, dtype=float)
    eta2 = np.asarray(eta2, dtype=float)
    esq = eta1 * eta1 + eta2 * eta2
    shape = np.broadcast(eta1, eta2, b1, b2).shape
    N = np.zeros(shape + (3, 3), dtype=complex)
    N[..., 0, 0] = mu * (-2 * eta1 * b1) / b1
    N[..., 1, 0] = mu * (-2 * eta2 * b1) / b1
    N[..., 2, 0] = (lam * (-1j * esq) + 1j * (lam + 2 * mu) * b1**2) / b1
    N[..., 0, 1] = mu * (-b2**2 - eta1**2) / b2
    N[..., 1, 1] = mu * (-eta1 * eta2) / b2
    N[..., 2, 1] = (lam * (-1j * eta1 * b2) + (lam + 2 * mu) * 1j * eta1 * b2) / b2
    N[..., 0, 2] = mu * (-eta2 * b2) / b2
    N[..., 1, 2] = mu * (eta1 * b2) / b2
    return N


def assemble_N(point: SpectralPoint, basis: Eigenbasis | None, xi3: float,
               material: Material, ctx: FrequencyContext | None = None):
    """Boundary matrix N (rows: traction component, columns: mode).

    ``basis`` is accepted for interface symmetry; the entries are the closed
    forms of the surface tractions of ``nu^m / beta_m exp(beta_m xi3)``.
    """
    if not xi3 < 0:
        raise SurfaceSource(f"xi3 must be < 0, got {xi3}")
    if min(abs(b) for b in point.betas) < BETA_MIN:
        raise ModeDegenerate("vertical wavenumber vanishes")
    N = _surface_matrix(point.eta1, point.eta2, point.beta1, point.beta2, material)
    scale = np.exp(np.array(point.betas) * xi3)
    return N * scale[None, :]


def delta_closed(point: SpectralPoint, xi3: float, material: Material, ctx: FrequencyContext):
    """Closed form of det N."""
    if not xi3 < 0:
        raise SurfaceSource(f"xi3 must be < 0, got {xi3}")
    b1, b2 = point.beta1, point.beta2
    if min(abs(b1), abs(b2)) < BETA_MIN:
        raise ModeDegenerate("vertical wavenumber vanishes")
    return _delta_closed(point.eta1, point.eta2, b1, b2, xi3, material, ctx.k2)


def _delta_closed(eta1, eta2, b1, b2, xi3, material, k2):
    lam, mu = material.lam, material.mu
    esq = eta1 * eta1 + eta2 * eta2
    inner = (4 * mu * esq * b1 * b2
             + (lam * esq - (lam + 2 * mu) * b1**2) * (2 * esq - k2**2))
    return np.exp((b1 + 2 * b2) * xi3) / (b1 * b2**2) * (1j * mu**2 * eta1 * b2 * inner)


def spectral_Q(point: SpectralPoint, xi3: float, material: Material, ctx: FrequencyContext):
    return spectral_fullspace_traction(point.eta1, point.eta2, xi3, ctx, material)


def cramer_coefficients(N, Q):
    """C[m, k] = det(N with column m replaced by -Q[:, k]) / det N."""
    N = np.asarray(N, dtype=complex)
    Q = np.asarray(Q, dtype=complex)
    delta = np.linalg.det(N)
    C = np.empty((3, 3), dtype=complex)
    for m in range(3):
        for k in range(3):
            Nm = N.copy()
            Nm[:, m] = -Q[:, k]
            C[m, k] = np.linalg.det(Nm) / delta
    return C


def solve_coefficients(N, Q, cond_max: float = COND_MAX):
    """Solve N C_k = -Q_k for the three load directions (columns of Q)."""
    N = np.asarray(N, dtype=complex)
    Q = np.asarray(Q, dtype=complex)
    cond = np.linalg.cond(N)
    if not np.isfinite(cond) or cond > cond_max:
        raise SingularSystem(f"boundary matrix condition {cond:.3e} exceeds {cond_max:.0e}")
    return np.linalg.solve(N, -Q)


def boundary_system(point: SpectralPoint, xi3: float, material: Material,
                    ctx: FrequencyContext) -> BoundarySystem:
    N = assemble_N(point, None, xi3, material, ctx)
    Q = spectral_Q(point, xi3, material, ctx)
    C = solve_coefficients(N, Q)
    return BoundarySystem(N=N, Q=Q, delta=complex(np.linalg.det(N)), C=C,
                          cond_estimate=float(np.linalg.cond(N)))


def reflected_amplitudes(eta1, eta2, xi3, material: Material, ctx: FrequencyContext):
    """Batched boundary solve for quadrature nodes.

    Returns ``(amp, betas, C)`` where ``amp[..., j, m] = nu^m_j / beta_m``,
    ``betas[..., m]`` and ``C[..., m, k]`` are scaled so that the reflected
    field is ``sum_m amp[j, m] exp(beta_m x3) C[m, k]`` (the source-depth
    factors live in C).
    """
    b1 = vertical_wavenumber(eta1, eta2, ctx.k1)
    b2 = vertical_wavenumber(eta1, eta2, ctx.k2)
    N0 = _surface_matrix(eta1, eta2, b1, b2, material)
    Q = spectral_fullspace_traction(eta1, eta2, xi3, ctx, material)
    C = np.linalg.solve(N0, -Q)
    betas = np.stack([b1, b2, b2], axis=-1)
    amp = _mode_vectors(np.asarray(eta1, float), np.asarray(eta2, float), b1, b2) / betas[..., None, :]
    return amp, betas, C


# --- determinant zero scan ---------------------------------------------------

@dataclass(frozen=True)
class ScanGrid:
    """Polar grid: radii ``r_max (i + 1/2) / n_radial`` and angles
    ``theta_offset + 2 pi (j + 1/2) / n_angular``. ``r_max = 0`` means
    ``2.5 |k2|``."""

    n_radial: int = 200
    n_angular: int = 64
    r_max: float = 0.0
    theta_offset: float = 0.0


@dataclass
class ScanReport:
    grid: dict
    xi3: float
    min_abs_delta_hat: float
    min_scaled: float
    argmin_eta: list
    candidate_roots: list = field(default_factory=list)
    scale: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def normalized_delta(eta1, eta2, xi3, material: Material, ctx: FrequencyContext):
    """det N / (eta1 exp((beta1 + 2 beta2) xi3)) from the assembled matrix."""
    eta1 = np.asarray(eta1, dtype=float)
    eta2 = np.asarray(eta2, dtype=float)
    b1 = vertical_wavenumber(eta1, eta2, ctx.k1)
    b2 = vertical_wavenumber(eta1, eta2, ctx.k2)
    # det of N0 equals det N / exp((b1 + 2 b2) xi3)
    det0 = np.linalg.det(_surface_matrix(eta1, eta2, b1, b2, material))
    return det0 / eta1


def hypothesis_scan(material: Material, ctx: FrequencyContext, xi3: float,
                    grid: ScanGrid = ScanGrid(), candidate_tol: float = 1e-3) -> ScanReport:
    """Scan |Delta-hat| over a polar wavenumber grid.

    Radial local minima are polished along their ray with a bounded scalar
    minimiser; a minimum whose value relative to ``mu^3 |k2|^2`` falls below
    ``candidate_tol`` is reported as a root candidate.
    """
    if not xi3 < 0:
        raise SurfaceSource(f"xi3 must be < 0, got {xi3}")
    r_max = grid.r_max or 2.5 * abs(ctx.k2)
    radii = r_max * (np.arange(grid.n_radial) + 0.5) / grid.n_radial
    theta = grid.theta_offset + 2 * math.pi * (np.arange(grid.n_angular) + 0.5) / grid.n_angular
    if np.any(np.abs(np.cos(theta)) < 1e-12):
        raise ValueError("scan grid touches the excluded line eta1 = 0")
    R, T = np.meshgrid(radii, theta, indexing="ij")
    vals = np.abs(normalized_delta(R * np.cos(T), R * np.sin(T), xi3, material, ctx))
    scale = material.mu**3 * abs(ctx.k2) ** 2

    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    th = float(theta[j])

    def along_ray(r):
        return float(np.abs(normalized_delta(r * math.cos(th), r * math.sin(th), xi3, material, ctx)))

    candidates = []
    profile = vals[:, j]
    for n in range(1, grid.n_radial - 1):
        if profile[n] < profile[n - 1] and profile[n] <= profile[n + 1]:
            res = minimize_scalar(along_ray, bounds=(radii[n - 1], radii[n + 1]),
                                  method="bounded", options={"xatol": 1e-12 * r_max})
            rel = res.fun / scale
            if rel < candidate_tol:
                candidates.append({"radius": float(res.x), "theta": th, "scaled_value": float(rel)})

    return ScanReport(
        grid={"n_radial": grid.n_radial, "n_angular": grid.n_angular,
              "r_max": float(r_max), "theta_offset": grid.theta_offset},
        xi3=float(xi3),
        min_abs_delta_hat=float(vals[i, j]),
        min_scaled=float(vals[i, j] / scale),
        argmin_eta=[float(R[i, j] * math.cos(th)), float(R[i, j] * math.sin(th))],
        candidate_roots=candidates,
        scale=float(scale),
    )
