import math

import numpy as np
import pytest
from scipy import integrate

from vortexwave import DomainError
from vortexwave.ansatz import (
    AnsatzConfig,
    WeightedNorm,
    compute_lambdas,
    frac_lap_psi0,
    isolated_config,
    kernel_Z,
    local_potential_grad,
    pair_bracket,
    pair_bracket_root,
    pair_config,
    potential_V,
    psi0,
    reduced_normalization,
    reduced_residual,
    residual_S,
    residual_scan,
    theta_field,
    wave_kappas,
    weighted_norm_star,
    weighted_norm_starstar,
)
from vortexwave.equilibria import Frame, pair_speed
from vortexwave.frac_kernel import green
from vortexwave.profile import evaluate_profile, mu_from_kappa


def three_bump(p, eps):
    kap = [1.0, 1.5, 0.8]
    mus = [mu_from_kappa(p.M_gamma, p.params, k) for k in kap]
    return AnsatzConfig(
        p.const, p.gamma, eps, [[0, 0], [2, 0.5], [-1, 1.5]], mus, [[0.5, -1.5]], [-0.7], Frame(0.02, 0.01), 0.45
    )


def test_isolated_lambda_exact(prof_half):
    cfg = isolated_config(prof_half, 10.0, 0.01)
    lam = compute_lambdas(cfg, prof_half)
    assert lam[0] == cfg.mus[0] ** (-cfg.a)


def test_pair_lambda_substitution(prof_half):
    p = prof_half
    cfg = pair_config(p, 1.0, 1.0, 1e-2)
    lam = compute_lambdas(cfg, p)
    b = cfg.centers[0]
    H = -1.0 * green(p.const, b, [-1.0, 0.0]) + cfg.frame.U * b[0]
    expect = (1 + cfg.eps ** (2 - 2 * p.s) * cfg.mus[0] ** cfg.a * H) / cfg.mus[0] ** cfg.a
    assert lam[0] == pytest.approx(expect, rel=1e-14)


def test_lambda_gap_scaling(prof_half):
    p = prof_half
    gaps = []
    for eps in (1e-1, 1e-2, 1e-3):
        cfg = three_bump(p, eps / 10)
        lam = compute_lambdas(cfg, p).values
        gaps.append(np.abs(lam - cfg.mus ** (-cfg.a)) / cfg.eps ** (2 - 2 * p.s))
    gaps = np.array(gaps)
    assert np.all(gaps.max(axis=0) / gaps.min(axis=0) < 2.0)


def test_psi0_center_and_far_field(prof_half):
    p = prof_half
    cfg = isolated_config(p, 10.0, 1e-2)
    assert psi0(cfg, p, [0.0, 0.0]) == pytest.approx(cfg.eps ** (2 * p.s - 2) * cfg.mus[0] ** (-cfg.a) * p.W0)
    x = np.array([0.0, 0.4])
    assert psi0(cfg, p, x) == pytest.approx(10.0 * green(p.const, x, [0, 0]), rel=0.05)


def test_psi0_scaling(prof_half):
    p = prof_half
    c1 = isolated_config(p, 10.0, 1e-2)
    c2 = c1.with_eps(2e-2)
    x = np.array([0.003, 0.001])
    ratio = psi0(c2, p, 2 * x) / psi0(c1, p, x)
    assert ratio == pytest.approx(2.0 ** (2 * p.s - 2), rel=1e-13)


def test_frac_lap_support_and_center(prof_quarter):
    p = prof_quarter
    cfg = isolated_config(p, 10.0, 1e-2)
    rad = cfg.eps * cfg.mus[0] * p.R1
    assert frac_lap_psi0(cfg, p, [1.01 * rad, 0.0]) == 0.0
    # substitute psi_1(0) into eps^((2-2s)gamma-2) (psi_1 - eps^(2s-2) mu^-a)^gamma
    amp = cfg.eps ** (2 * p.s - 2) * cfg.mus[0] ** (-cfg.a)
    direct = cfg.eps ** ((2 - 2 * p.s) * p.gamma - 2) * (amp * p.W0 - amp) ** p.gamma
    closed = cfg.eps**-2 * cfg.mus[0] ** (-cfg.a * p.gamma) * (p.W0 - 1) ** p.gamma
    assert direct == pytest.approx(closed, rel=1e-12)
    assert frac_lap_psi0(cfg, p, [0.0, 0.0]) == pytest.approx(closed, rel=1e-12)


def _radial_integral(fn, center, R):
    val, _ = integrate.quad(
        lambda r: 2 * math.pi * r * float(fn(np.array([center[0] + r, center[1]]))), 0, R, points=[R / 1.3], limit=400
    )
    return val


def test_frac_lap_integrates_to_kappa(prof_half):
    p = prof_half
    cfg = isolated_config(p, 10.0, 1e-2)
    R = cfg.eps * cfg.mus[0] * p.R1
    val = _radial_integral(lambda x: frac_lap_psi0(cfg, p, x), [0, 0], R)
    assert val == pytest.approx(10.0, rel=1e-6)


def test_isolated_residual_identically_zero(prof_half):
    p = prof_half
    cfg = isolated_config(p, 10.0, 1e-2)
    lam = compute_lambdas(cfg, p)
    g = np.linspace(-0.2, 0.2, 81)
    x = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    S = residual_S(cfg, p, lam, x)
    assert np.max(np.abs(S)) <= 1e-12 * np.max(frac_lap_psi0(cfg, p, x))
    F = reduced_residual(cfg, p, lam, 64, 64)
    assert np.all(np.abs(F) <= 1e-12 * reduced_normalization(cfg, p)[0])


def test_residual_support(prof_half):
    p = prof_half
    cfg = pair_config(p, 10.0, 1.0, 1e-2, U=pair_speed(p.const, 10.0, 1.25))
    lam = compute_lambdas(cfg, p)
    C = cfg.mus[0] * p.R1
    rng = np.random.default_rng(0)
    ang = rng.uniform(0, 2 * np.pi, 200)
    rad = rng.uniform(1.05 * C * cfg.eps, 0.49, 200)
    x = cfg.centers[0] + rad[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
    assert np.all(residual_S(cfg, p, lam, x) == 0.0)


def test_theta_outside_balls_and_mass(prof_half):
    p = prof_half
    cfg = pair_config(p, 1.0, 1.0, 1e-2)
    lam = compute_lambdas(cfg, p)
    assert theta_field(cfg, p, lam, [0.0, 0.0]) == 0.0
    assert theta_field(cfg, p, lam, [-1.0, 0.3]) == 0.0
    # total vorticity by 2-D quadrature on a fine grid
    R = 1.05 * cfg.eps * cfg.mus[0] * p.R1
    n = 801
    g = np.linspace(-R, R, n)
    X, Y = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([X + 1.0, Y], -1)
    th = theta_field(cfg, p, lam, pts)
    total = integrate.simpson(integrate.simpson(th, x=g), x=g)
    assert total == pytest.approx(1.0, rel=0.02)


def test_theta_continuous_at_free_boundary(prof_half):
    p = prof_half
    cfg = pair_config(p, 1.0, 1.0, 1e-2)
    lam = compute_lambdas(cfg, p)
    rad = cfg.eps * cfg.mus[0] * p.R1
    r = np.linspace(0.9 * rad, 1.1 * rad, 20001)
    th = theta_field(cfg, p, lam, np.column_stack([1.0 + r, np.zeros_like(r)]))
    jumps = np.abs(np.diff(th))
    assert jumps.max() < 1e-3 * th.max()


def test_error_law_detuned_pair(prof_half):
    p = prof_half
    cfg = pair_config(p, 10.0, 1.0, 0.1, U=pair_speed(p.const, 10.0, 1.25))
    res = residual_scan(cfg, p, [1e-1, 10**-1.5, 1e-2, 10**-2.5, 1e-3], n=121)
    assert abs(res.slope - 2.0) <= 0.2


def test_error_law_steeper_at_equilibrium(prof_half):
    # at an exact point-vortex equilibrium the leading term cancels
    p = prof_half
    cfg = pair_config(p, 10.0, 1.0, 0.1)
    res = residual_scan(cfg, p, [1e-1, 10**-1.5, 1e-2, 10**-2.5, 1e-3], n=121)
    assert abs(res.slope - 3.0) <= 0.2


def test_scan_exact_and_domain(prof_half):
    p = prof_half
    cfg = isolated_config(p, 10.0, 0.1)
    res = residual_scan(cfg, p, [1e-1, 1e-2, 1e-3, 1e-4], n=41)
    assert res.exact and math.isnan(res.slope)
    with pytest.raises(DomainError):
        residual_scan(cfg, p, [1e-3, 1e-2, 1e-1, 1.0])


def test_V_and_Z_symmetries(prof_half):
    p = prof_half
    cfg = pair_config(p, 1.0, 1.0, 1e-3)
    bp = cfg.centers[0] / (cfg.eps * cfg.mu)
    t = np.linspace(0.01, 3.0, 50)
    plus = np.column_stack([bp[0] + t, np.full_like(t, bp[1])])
    minus = np.column_stack([bp[0] - t, np.full_like(t, bp[1])])
    assert np.allclose(kernel_Z(cfg, p, 0, 0, plus), -kernel_Z(cfg, p, 0, 0, minus), atol=1e-14)
    far = bp + np.array([[1.01 * p.R1, 0.0], [0.0, 3 * p.R1]])
    assert np.all(potential_V(cfg, p, 0, far) == 0.0)
    # int V Z_1 = 0 by odd symmetry
    g = np.linspace(-2 * p.R1, 2 * p.R1, 401)
    Y = np.stack(np.meshgrid(g, g, indexing="ij"), -1) + bp
    integrand = potential_V(cfg, p, 0, Y) * kernel_Z(cfg, p, 0, 0, Y)
    assert abs(integrand.sum()) <= 1e-10 * np.abs(integrand).sum()


def test_weighted_norms():
    norm = WeightedNorm(0.5, np.array([[0.0, 0.0], [5.0, 0.0]]))
    y = np.random.default_rng(0).uniform(-5, 10, (500, 2))
    assert weighted_norm_star(np.zeros(500), y, norm, 0.5) == 0.0
    assert weighted_norm_star(norm.rho(y) ** (2 - 2 * 0.3), y, norm, 0.3) == pytest.approx(1.0)
    assert weighted_norm_starstar(norm.rho(y) ** 2.5, y, norm) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        WeightedNorm(1.0, np.zeros((1, 2)))


def test_pair_bracket_closed_form(prof_half):
    c = prof_half.const
    U = -1 / (8 * math.pi)
    assert pair_bracket_root(c, 1.0, U) == pytest.approx(1.0, rel=1e-14)
    assert abs(pair_bracket(c, 1.0, 1.0, pair_speed(c, 1.0, 1.0))) < 1e-14
    assert pair_bracket(c, 1.0, 0.9, U) > 0 > pair_bracket(c, 1.0, 1.1, U)


def test_reduced_matches_bracket(prof_half):
    p = prof_half
    U = pair_speed(p.const, 1.0, 1.0)
    for d in (0.9, 1.15):
        cfg = pair_config(p, 1.0, d, 1e-3, U=U)
        F = reduced_residual(cfg, p, compute_lambdas(cfg, p), 128, 128)
        norm = F / reduced_normalization(cfg, p)[:, None]
        assert norm[0, 0] == pytest.approx(pair_bracket(p.const, 1.0, d, U), rel=0.1)
        assert abs(norm[0, 1]) < 1e-8 * abs(norm[0, 0])


def test_reduced_matches_local_gradient(prof_half):
    p = prof_half
    cfg = three_bump(p, 1e-3)
    F = reduced_residual(cfg, p, compute_lambdas(cfg, p), 128, 128)
    norm = F / reduced_normalization(cfg, p)[:, None]
    grad = local_potential_grad(cfg, p.M_gamma)
    assert np.allclose(norm, grad, rtol=0.1, atol=0.02 * np.abs(grad).max())
    assert np.allclose(wave_kappas(cfg, p.M_gamma), [1.0, 1.5, 0.8])


def test_config_validation(prof_half):
    p = prof_half
    with pytest.raises(DomainError):
        AnsatzConfig(p.const, p.gamma, 1e-2, [[0, 0], [0.5, 0]], [1.0, 1.0], delta=0.5)
    cfg = isolated_config(p, 1.0, 0.1)  # bump larger than delta
    with pytest.raises(DomainError):
        compute_lambdas(cfg, p)
