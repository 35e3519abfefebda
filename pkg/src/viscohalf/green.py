"""Half-space Green tensor g = u* + w and its verification battery."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .correction import H_MIN_FACTOR, correction_field, h_min
from .errors import CoincidentPoints
from .fullspace import R_MIN, fullspace_gradient, stress_from_gradient, traction
from .material import FrequencyContext, Material, frequency_context
from .quadrature import QuadratureConfig

NEAR_SURFACE = "NearSurface"
NO_CONVERGENCE = "NoConvergence"


@dataclass
class GreenResult:
    displacement: np.ndarray
    fullspace_displacement: np.ndarray
    correction_displacement: np.ndarray
    quadrature_error: float
    flags: frozenset = frozenset()
    stress: np.ndarray | None = None
    fullspace_stress: np.ndarray | None = None
    correction_stress: np.ndarray | None = None


@dataclass
class ResidualReport:
    metric_name: str
    value: float
    sample_points: list
    tolerance: float
    passed: bool = field(init=False)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.value <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "metric_name": self.metric_name,
            "value": float(self.value),
            "sample_points": [[float(c) for c in p] for p in self.sample_points],
            "tolerance": float(self.tolerance),
            "pass": self.passed,
            "details": self.details,
        }


@dataclass(frozen=True)
class VerificationConfig:
    """Tolerances and geometry factors for the residual checks.

    Lengths are in units of ``1 / |k2|``.
    """

    traction_free_tol: float = 1e-2
    epsilon_factor: float = 1e-3
    ring_radius_factor: float = 0.5
    ring_samples: int = 8
    pde_tol: float = 1e-3
    pde_step_factor: float = 1e-4
    reciprocity_tol: float = 1e-4


def _context(omega, material, damping):
    if isinstance(omega, FrequencyContext):
        return omega
    return frequency_context(material, omega, damping)


def green_field(receivers, xi, omega, material: Material,
                config: QuadratureConfig = QuadratureConfig(), *, stress: bool = False,
                damping: float = 0.0, include_correction: bool = True,
                h_factor: float = H_MIN_FACTOR) -> list[GreenResult]:
    """Green tensor at many receivers for one source, sharing quadrature nodes.

    ``omega`` may be a frequency or a prepared :class:`FrequencyContext`.
    """
    ctx = _context(omega, material, damping)
    receivers = np.atleast_2d(np.asarray(receivers, dtype=float))
    xi = np.asarray(xi, dtype=float)
    if np.any(np.linalg.norm(receivers - xi, axis=1) < R_MIN):
        raise CoincidentPoints("receiver coincides with the source")
    u, du = fullspace_gradient(receivers, xi, ctx, material)
    s = stress_from_gradient(du, material) if stress else None

    P = receivers.shape[0]
    if include_correction:
        res = correction_field(receivers, xi, material, ctx, config, stress=stress, h_factor=h_factor)
        w = res.values[:, :9].reshape(P, 3, 3)
        sw = res.values[:, 9:].reshape(P, 3, 3, 3) if stress else None
        errs = res.errors
        converged = res.converged
    else:
        w = np.zeros((P, 3, 3), dtype=complex)
        sw = np.zeros((P, 3, 3, 3), dtype=complex) if stress else None
        errs = np.zeros(P)
        converged = True

    near = -(receivers[:, 2] + xi[2]) < 10 * h_min(ctx, h_factor)
    out = []
    for p in range(P):
        flags = set()
        if near[p]:
            flags.add(NEAR_SURFACE)
        if not converged:
            flags.add(NO_CONVERGENCE)
        out.append(GreenResult(
            displacement=u[p] + w[p],
            fullspace_displacement=u[p],
            correction_displacement=w[p],
            quadrature_error=float(errs[p]),
            flags=frozenset(flags),
            stress=None if s is None else s[p] + sw[p],
            fullspace_stress=None if s is None else s[p],
            correction_stress=None if sw is None else sw[p],
        ))
    return out


def green_displacement(x, xi, omega, material: Material,
                       config: QuadratureConfig = QuadratureConfig(), **kwargs) -> GreenResult:
    """Half-space Green tensor g[j, m] at receiver ``x`` for a load at ``xi``."""
    return green_field([x], xi, omega, material, config, **kwargs)[0]


def green_traction(x, xi, omega, material: Material, normal,
                   config: QuadratureConfig = QuadratureConfig(), **kwargs) -> np.ndarray:
    """T[j, m] = sigma[i, j, m] n_i of the half-space field."""
    r = green_field([x], xi, omega, material, config, stress=True, **kwargs)[0]
    return traction(r.stress, normal)


def surface_ring(xi, ctx: FrequencyContext, verify: VerificationConfig = VerificationConfig()):
    """Lateral sample points on a ring centred above the source."""
    k2 = abs(ctx.k2)
    t = 2 * math.pi * (np.arange(verify.ring_samples) + 0.5) / verify.ring_samples
    rad = verify.ring_radius_factor / k2
    return np.stack([xi[0] + rad * np.cos(t), xi[1] + rad * np.sin(t)], axis=1)


def traction_free_residual(xi, omega, material: Material, surface_samples=None,
                           epsilon: float | None = None,
                           config: QuadratureConfig = QuadratureConfig(), *,
                           verify: VerificationConfig = VerificationConfig(),
                           damping: float = 0.0, include_correction: bool = True) -> ResidualReport:
    """max over samples of |T^g| / |T^{u*}| on the plane x3 = -epsilon."""
    ctx = _context(omega, material, damping)
    xi = np.asarray(xi, dtype=float)
    eps = epsilon if epsilon is not None else verify.epsilon_factor / abs(ctx.k2)
    samples = surface_ring(xi, ctx, verify) if surface_samples is None else np.asarray(surface_samples, float)
    pts = np.column_stack([samples[:, 0], samples[:, 1], np.full(len(samples), -eps)])
    res = green_field(pts, xi, ctx, material, config, stress=True,
                      include_correction=include_correction)
    n = np.array([0.0, 0.0, 1.0])
    ratios = [np.linalg.norm(traction(r.stress, n)) / np.linalg.norm(traction(r.fullspace_stress, n))
              for r in res]
    return ResidualReport("traction_free", float(max(ratios)), pts.tolist(),
                          verify.traction_free_tol,
                          details={"epsilon": eps, "omega": ctx.omega, "source": xi.tolist(),
                                   "per_sample": [float(v) for v in ratios]})


def pde_residual(x, xi, omega, material: Material, step: float | None = None,
                 config: QuadratureConfig = QuadratureConfig(), *,
                 verify: VerificationConfig = VerificationConfig(),
                 damping: float = 0.0, part: str = "total") -> ResidualReport:
    """Central-difference residual of div(sigma) + rho w~^2 g at ``x``.

    ``part`` selects ``"total"``, ``"fullspace"`` or ``"correction"``.
    Relative to ``|rho w~^2 g|`` of the same part.
    """
    if part not in ("total", "fullspace", "correction"):
        raise ValueError(f"unknown part {part!r}")
    ctx = _context(omega, material, damping)
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    h = step if step is not None else verify.pde_step_factor / abs(ctx.k2)
    if np.linalg.norm(x - xi) < 10 * h:
        raise ValueError("pde_residual needs |x - xi| >= 10 * step")
    pts = [x]
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        pts += [x + e, x - e]
    res = green_field(np.array(pts), xi, ctx, material, config, stress=True,
                      include_correction=(part != "fullspace"))

    def pick(r):
        if part == "total":
            return r.displacement, r.stress
        if part == "fullspace":
            return r.fullspace_displacement, r.fullspace_stress
        return r.correction_displacement, r.correction_stress

    g0, _ = pick(res[0])
    div = sum((pick(res[1 + 2 * i])[1][i] - pick(res[2 + 2 * i])[1][i]) / (2 * h) for i in range(3))
    inertia = material.rho * ctx.damped_omega_sq * g0
    value = np.linalg.norm(div + inertia) / np.linalg.norm(inertia)
    return ResidualReport(f"pde_{part}", float(value), [x.tolist()], verify.pde_tol,
                          details={"step": h, "omega": ctx.omega, "source": xi.tolist()})


def reciprocity_residual(x, xi, omega, material: Material,
                         config: QuadratureConfig = QuadratureConfig(), *,
                         verify: VerificationConfig = VerificationConfig(),
                         damping: float = 0.0) -> ResidualReport:
    """|g(x, xi) - g(xi, x)^T| / |g(x, xi)| with a quadrature-aware tolerance."""
    ctx = _context(omega, material, damping)
    a = green_displacement(x, xi, ctx, material, config)
    b = green_displacement(xi, x, ctx, material, config)
    scale = np.linalg.norm(a.displacement)
    value = np.linalg.norm(a.displacement - b.displacement.T) / scale
    tol = max(verify.reciprocity_tol, 10 * (a.quadrature_error + b.quadrature_error) / scale)
    return ResidualReport("reciprocity", float(value), [list(map(float, x)), list(map(float, xi))], tol,
                          details={"omega": ctx.omega})

