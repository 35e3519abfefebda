import math

import numpy as np
import pytest
from scipy.optimize import brentq

from viscohalf import (DegenerateBasis, Material, ModeDegenerate, SingularSystem, SurfaceSource,
                       assemble_N, boundary_system, delta_closed, eigenbasis, frequency_context,
                       hypothesis_scan, solve_coefficients, spectral_point)
from viscohalf.spectral import (ScanGrid, cramer_coefficients, det_operator, normalized_delta,
                                operator_matrix, reflected_amplitudes, spectral_Q)

from conftest import rel

# symbolic substitution of the plane-wave ansatz into the Navier operator:
# eta = (1, 1), beta = 0.5 + 0.1i, lambda = 2, mu = 1, rho = 1, w~^2 = 1
M_FIXTURE = np.array([[-3.76 + 0.1j, -3, -0.3 + 1.5j],
                      [-3, -3.76 + 0.1j, -0.3 + 1.5j],
                      [-0.3 + 1.5j, -0.3 + 1.5j, -0.04 + 0.4j]])


def random_case(rng):
    m = Material(lam=rng.uniform(0.2, 4), mu=rng.uniform(0.3, 3), rho=rng.uniform(0.5, 3),
                 p=rng.uniform(0, 0.2), q=rng.uniform(0.25, 1), alpha=rng.uniform(0.1, 1))
    ctx = frequency_context(m, rng.uniform(0.2, 5))
    r = rng.uniform(0.05, 3) * abs(ctx.k2)
    t = rng.uniform(0, 2 * math.pi)
    if abs(math.cos(t)) < 1e-3:
        t += 0.1
    return m, ctx, r * math.cos(t), r * math.sin(t)


def rayleigh_ratio(m):
    """Rayleigh speed over shear speed from the classical secular equation."""
    c1sq = (m.lam + 2 * m.mu) / m.rho
    c2sq = m.mu / m.rho

    def f(x):  # x = (c / c2)^2
        return (2 - x) ** 2 - 4 * math.sqrt(1 - x) * math.sqrt(1 - x * c2sq / c1sq)
    return math.sqrt(brentq(f, 1e-6, 1 - 1e-12, xtol=1e-15))


# --- operator matrix --------------------------------------------------------

def test_operator_at_origin(zener_material, zener_ctx):
    M = operator_matrix((0.0, 0.0), 0.0, zener_ctx, zener_material)
    assert np.allclose(M, zener_material.rho * zener_ctx.damped_omega_sq * np.eye(3), atol=1e-15)


def test_operator_fixture():
    m = Material(2, 1, 1)
    ctx = frequency_context(m, 1.0)
    M = operator_matrix((1.0, 1.0), 0.5 + 0.1j, ctx, m)
    assert np.abs(M - M_FIXTURE).max() < 1e-14
    assert np.allclose(M, M.T)


def test_det_vanishes_on_eigenvalues(zener_material, zener_ctx):
    p = spectral_point(0.7, -1.1, zener_ctx)
    eta = (p.eta1, p.eta2)
    scale = np.abs(operator_matrix(eta, p.beta1, zener_ctx, zener_material)).max() ** 3
    assert abs(det_operator(eta, p.beta1, zener_ctx, zener_material)) <= 1e-10 * scale
    assert abs(det_operator(eta, p.beta2, zener_ctx, zener_material)) <= 1e-10 * scale
    h = 1e-6
    d = (det_operator(eta, p.beta2 + h, zener_ctx, zener_material)
         - det_operator(eta, p.beta2 - h, zener_ctx, zener_material)) / (2 * h)
    assert abs(d) <= 1e-7 * scale


def test_det_factorisation_constant(zener_material, zener_ctx):
    m, c = zener_material, zener_ctx
    e1, e2 = 0.8, 0.3
    esq = e1 * e1 + e2 * e2
    betas = [0.3 + 0.2j, 1.1 - 0.4j, -0.7 + 1.3j, 2.0, 0.5j]
    ratios = [det_operator((e1, e2), b, c, m)
              / ((b * b - esq + c.k1**2) * (b * b - esq + c.k2**2) ** 2) for b in betas]
    assert np.abs(np.array(ratios) / ratios[0] - 1).max() < 1e-8
    assert ratios[0] == pytest.approx(m.mu**2 * (m.lam + 2 * m.mu), rel=1e-10)


# --- eigenbasis -------------------------------------------------------------

def test_eigenbasis_literal(zener_ctx):
    p = spectral_point(1.0, 0.0, zener_ctx)
    b = eigenbasis(p)
    assert np.allclose(b.nu1, [-1, 0, 1j * p.beta1])
    assert np.allclose(b.nu2, [-p.beta2, 0, 1j])
    assert np.allclose(b.nu3, [0, 1, 0])
    assert b.as_matrix().shape == (3, 3)


def test_eigenbasis_degenerate_line(zener_ctx):
    with pytest.raises(DegenerateBasis):
        eigenbasis(spectral_point(0.0, 1.0, zener_ctx))


def test_eigen_residuals(rng):
    worst = 0.0
    for _ in range(200):
        m, c, e1, e2 = random_case(rng)
        p = spectral_point(e1, e2, c)
        b = eigenbasis(p)
        for nu, beta in zip((b.nu1, b.nu2, b.nu3), p.betas):
            M = operator_matrix((e1, e2), beta, c, m)
            worst = max(worst, np.linalg.norm(M @ nu) / (np.linalg.norm(M, 2) * np.linalg.norm(nu)))
    assert worst < 1e-12


# --- boundary matrix --------------------------------------------------------

def traction_assembly(p, xi3, m):
    """N from C_{p3jl} applied to each mode's gradient at x3 = 0."""
    C = m.stiffness_tensor()
    b = eigenbasis(p)
    N = np.empty((3, 3), dtype=complex)
    for col, (nu, beta) in enumerate(zip((b.nu1, b.nu2, b.nu3), p.betas)):
        d = np.array([1j * p.eta1, 1j * p.eta2, beta])
        grad = np.outer(nu / beta, d) * np.exp(beta * xi3)
        N[:, col] = np.einsum("pjl,jl->p", C[:, 2, :, :], grad)
    return N


def test_N_structure(zener_material, zener_ctx):
    p = spectral_point(1.0, 0.0, zener_ctx)
    N = assemble_N(p, eigenbasis(p), -0.4, zener_material, zener_ctx)
    assert N[2, 2] == 0
    assert N[1, 2] == pytest.approx(zener_material.mu * np.exp(p.beta3 * -0.4), rel=1e-14)


def test_N_matches_traction_assembly(rng):
    for _ in range(20):
        m, c, e1, e2 = random_case(rng)
        p = spectral_point(e1, e2, c)
        xi3 = -rng.uniform(0.1, 2)
        assert rel(assemble_N(p, None, xi3, m, c), traction_assembly(p, xi3, m)) < 1e-12


def test_N_preconditions(zener_material, zener_ctx):
    p = spectral_point(0.5, 0.2, zener_ctx)
    with pytest.raises(SurfaceSource):
        assemble_N(p, None, 0.0, zener_material, zener_ctx)
    flat = p.__class__(0.5, 0.2, 0j, p.beta2)
    with pytest.raises(ModeDegenerate):
        assemble_N(flat, None, -1.0, zener_material, zener_ctx)


# --- determinant ------------------------------------------------------------

def test_delta_closed_equals_det(rng):
    ratios = []
    for _ in range(10):
        m, c, e1, e2 = random_case(rng)
        p = spectral_point(e1, e2, c)
        xi3 = -rng.uniform(0.1, 1)
        ratios.append(delta_closed(p, xi3, m, c) / np.linalg.det(assemble_N(p, None, xi3, m, c)))
    assert np.abs(np.array(ratios) - 1).max() < 1e-8


def test_delta_vanishes_on_eta1_zero(zener_material, zener_ctx):
    p = spectral_point(0.0, 0.9, zener_ctx)
    assert delta_closed(p, -1.0, zener_material, zener_ctx) == 0


def test_delta_depth_scaling(zener_material, zener_ctx):
    p = spectral_point(0.6, 0.4, zener_ctx)
    a = delta_closed(p, -0.3, zener_material, zener_ctx)
    b = delta_closed(p, -1.2, zener_material, zener_ctx)
    assert a / b == pytest.approx(np.exp((p.beta1 + 2 * p.beta2) * 0.9), rel=1e-12)


# --- solve ------------------------------------------------------------------

def test_zero_forcing(zener_material, zener_ctx):
    p = spectral_point(0.6, 0.4, zener_ctx)
    N = assemble_N(p, None, -0.5, zener_material, zener_ctx)
    assert np.all(solve_coefficients(N, np.zeros((3, 3))) == 0)


def test_solve_residual_and_cramer(rng):
    checked = 0
    while checked < 50:
        m, c, e1, e2 = random_case(rng)
        p = spectral_point(e1, e2, c)
        sys = boundary_system(p, -rng.uniform(0.1, 1), m, c)
        if sys.cond_estimate >= 1e6:
            continue
        for k in range(3):
            r = np.linalg.norm(sys.N @ sys.C[:, k] + sys.Q[:, k])
            assert r <= 1e-10 * np.linalg.norm(sys.Q[:, k])
        assert rel(cramer_coefficients(sys.N, sys.Q), sys.C) < 1e-8
        checked += 1


def test_singular_system():
    N = np.array([[1, 2, 3], [2, 4, 6], [0, 1, 1]], dtype=complex)
    with pytest.raises(SingularSystem):
        solve_coefficients(N, np.eye(3))


def test_rescaled_modes_leave_field_unchanged(rng, zener_material, zener_ctx):
    m, c = zener_material, zener_ctx
    p = spectral_point(0.9, -0.5, c)
    xi3, x3 = -0.7, -0.2
    N = assemble_N(p, None, xi3, m, c)
    Q = spectral_Q(p, xi3, m, c)
    nu = eigenbasis(p).as_matrix() / np.array(p.betas)
    depth = np.exp(np.array(p.betas) * (x3 + xi3))

    def field(s):
        C = solve_coefficients(N * s, Q)
        return (nu * s * depth) @ C

    ref = field(np.ones(3))
    for _ in range(5):
        s = rng.uniform(0.1, 10, 3) * np.exp(1j * rng.uniform(0, 6, 3))
        assert rel(field(s), ref) < 1e-10


def test_batched_amplitudes_match_pointwise(zener_material, zener_ctx):
    m, c = zener_material, zener_ctx
    e1, e2, xi3, x3 = 1.3, 0.4, -0.8, -0.3
    amp, betas, C = reflected_amplitudes(np.array([e1]), np.array([e2]), xi3, m, c)
    w_batch = (amp[0] * np.exp(betas[0] * x3)) @ C[0]
    p = spectral_point(e1, e2, c)
    sys = boundary_system(p, xi3, m, c)
    nu = eigenbasis(p).as_matrix() / np.array(p.betas)
    w_ref = (nu * np.exp(np.array(p.betas) * (x3 + xi3))) @ sys.C
    assert rel(w_batch, w_ref) < 1e-12


# --- hypothesis scan --------------------------------------------------------

def test_scan_viscoelastic_bounded_away(zener_material, zener_ctx):
    rep = hypothesis_scan(zener_material, zener_ctx, -1.0)
    assert rep.min_abs_delta_hat > 0
    assert rep.candidate_roots == []
    assert rep.min_scaled > 1e-3
    assert '"min_abs_delta_hat"' in rep.to_json()


def test_scan_elastic_finds_rayleigh_ring():
    m = Material(2, 1, 1)
    ctx = frequency_context(m, 1.0, damping=1e-6)
    rep = hypothesis_scan(m, ctx, -1.0)
    assert rep.candidate_roots
    kr = ctx.k2.real / rayleigh_ratio(m)
    radius = rep.candidate_roots[0]["radius"]
    assert abs(radius - kr) / kr < 1e-2


def test_scan_rejects_excluded_line(zener_material, zener_ctx):
    with pytest.raises(ValueError):
        hypothesis_scan(zener_material, zener_ctx, -1.0, ScanGrid(n_angular=4, theta_offset=math.pi / 4))


def test_normalized_delta_strips_depth(zener_material, zener_ctx):
    a = normalized_delta(0.4, 0.3, -0.2, zener_material, zener_ctx)
    b = normalized_delta(0.4, 0.3, -3.0, zener_material, zener_ctx)
    assert a == pytest.approx(b, rel=1e-14)
