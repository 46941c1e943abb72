import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexwave import ConvergenceError, DomainError, SingularityError
from vortexwave.equilibria import (
    Frame,
    KrConvention,
    PointVortex,
    VortexSystem,
    find_equilibrium,
    kr_grad,
    kr_hessian,
    kr_value,
    make_polygon,
    make_traveling_pair,
    nondegenerate,
    pair_speed,
    polygon_omega,
    velocity_residual,
)
from vortexwave.frac_kernel import grad_green, green, make_constants, perp

W, V = KrConvention.WEIGHTED, KrConvention.VERBATIM


def random_system(rng, p=3, s=0.5, frame=Frame(0.1, 0.05)):
    c = make_constants(s)
    pos = rng.uniform(-1.5, 1.5, (p, 2))
    kap = rng.uniform(0.5, 1.5, p) * rng.choice([-1.0, 1.0], p)
    return VortexSystem(c, pos, kap, frame)


def brute_velocity_residual(sys):
    # independent loop implementation of the rigid-frame balance
    out = []
    for i in range(sys.p):
        u = np.zeros(2)
        for j in range(sys.p):
            if i != j:
                u += sys.strengths[j] * perp(grad_green(sys.const, sys.positions[i], sys.positions[j]))
        rigid = np.array([0.0, sys.frame.U]) - sys.frame.omega * perp(sys.positions[i])
        out.append(u - rigid)
    return np.concatenate(out)


def test_point_vortex_rejects_zero():
    with pytest.raises(DomainError):
        PointVortex((0.0, 0.0), 0.0)


def test_single_vortex_trivial():
    c = make_constants(0.5)
    sys = VortexSystem(c, [[0.0, 0.0]], [1.0])
    for conv in (W, V):
        assert kr_value(sys, conv) == 0.0
        assert np.all(kr_grad(sys, conv) == 0.0)
    assert np.all(velocity_residual(sys) == 0.0)


def test_swap_invariance():
    c = make_constants(0.4)
    a = VortexSystem(c, [[0.1, 0.2], [0.9, -0.3]], [1.0, 1.0], Frame(0.2, 0.1))
    b = VortexSystem(c, [[0.9, -0.3], [0.1, 0.2]], [1.0, 1.0], Frame(0.2, 0.1))
    for conv in (W, V):
        assert kr_value(a, conv) == pytest.approx(kr_value(b, conv), rel=1e-14)


def test_pair_value_term_by_term():
    c = make_constants(0.5)
    sys = make_traveling_pair(c, 1.0, 1.0)
    U = sys.frame.U
    # sum_i kappa_i U x_i1 = 2U; 1/2 sum_{i != j} kappa_i kappa_j G = -G(2) = -c2s / 2
    assert kr_value(sys, W) == pytest.approx(2 * U - 1 / (4 * math.pi), rel=1e-14)


def test_collision_raises():
    c = make_constants(0.5)
    sys = VortexSystem(c, [[0.0, 0.0], [0.0, 0.0]], [1.0, 1.0])
    for fn in (kr_value, kr_grad, kr_hessian):
        with pytest.raises(SingularityError):
            fn(sys)
    with pytest.raises(SingularityError):
        velocity_residual(sys)


@pytest.mark.parametrize("conv", [W, V])
def test_grad_matches_differences(conv):
    rng = np.random.default_rng(1)
    sys = random_system(rng)
    g = kr_grad(sys, conv)
    h = 1e-6
    x = sys.positions.reshape(-1)
    fd = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        fd[k] = (kr_value(sys.with_positions(x + e), conv) - kr_value(sys.with_positions(x - e), conv)) / (2 * h)
    assert np.allclose(g, fd, rtol=1e-6, atol=1e-9 * np.abs(g).max())


@pytest.mark.parametrize("conv", [W, V])
def test_hessian_matches_differences(conv):
    rng = np.random.default_rng(2)
    sys = random_system(rng, p=4, s=0.3)
    H = kr_hessian(sys, conv)
    assert np.max(np.abs(H - H.T)) <= 1e-10 * np.linalg.norm(H)
    h = 1e-6
    x = sys.positions.reshape(-1)
    fd = np.empty_like(H)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        fd[:, k] = (kr_grad(sys.with_positions(x + e), conv) - kr_grad(sys.with_positions(x - e), conv)) / (2 * h)
    assert np.allclose(H, fd, rtol=1e-5, atol=1e-5 * np.abs(H).max())


def test_velocity_residual_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(5):
        sys = random_system(rng, p=5, s=rng.uniform(0.1, 0.9))
        assert np.allclose(velocity_residual(sys), brute_velocity_residual(sys), rtol=1e-13, atol=1e-14)


def test_pair_speed_values():
    c = make_constants(0.5)
    assert pair_speed(c, 1.0, 1.0) == pytest.approx(-1 / (8 * math.pi), rel=1e-14)
    for s in (0.3, 0.7):
        c = make_constants(s)
        assert pair_speed(c, 1.0, 2.0) / pair_speed(c, 1.0, 1.0) == pytest.approx(2 ** (2 * s - 3), rel=1e-14)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("d", [0.5, 1.0, 2.0])
def test_pair_is_equilibrium(s, d):
    sys = make_traveling_pair(make_constants(s), 1.0, d)
    assert np.max(np.abs(velocity_residual(sys))) <= 1e-12
    assert np.max(np.abs(kr_grad(sys, W))) <= 1e-12


def test_pair_not_critical_for_verbatim_convention():
    sys = make_traveling_pair(make_constants(0.5), 1.0, 1.0)
    # interaction terms cancel for opposite strengths, leaving the frame term
    assert np.max(np.abs(kr_grad(sys, V))) > 1e-3


def test_polygon_omega_values():
    c = make_constants(0.5)
    assert polygon_omega(c, 1.0, 1.0, 1) == pytest.approx(1 / (8 * math.pi), rel=1e-14)
    for s in (0.3, 0.7):
        c = make_constants(s)
        ratio = polygon_omega(c, 1.0, 2.0, 3) / polygon_omega(c, 1.0, 1.0, 3)
        assert ratio == pytest.approx(2 ** (2 * s - 4), rel=1e-14)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_polygon_is_equilibrium(s, k):
    sys = make_polygon(make_constants(s), 1.3, 0.8, k)
    assert np.max(np.abs(velocity_residual(sys))) <= 1e-10
    assert np.max(np.abs(kr_grad(sys, W))) <= 1e-10


@pytest.mark.parametrize("args", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
def test_pair_domain(args):
    with pytest.raises(DomainError):
        make_traveling_pair(make_constants(0.5), *args)


@pytest.mark.parametrize("args", [(1.0, 1.0, 0), (1.0, -1.0, 2), (1.0, 1.0, 1.5)])
def test_polygon_domain(args):
    with pytest.raises(DomainError):
        make_polygon(make_constants(0.5), *args)


def test_residual_and_gradient_vanish_together():
    rng = np.random.default_rng(4)
    c = make_constants(0.5)
    for _ in range(20):
        base = make_polygon(c, 1.0, 1.0, int(rng.integers(1, 5)))
        sys = base.with_positions(base.positions + 1e-3 * rng.standard_normal(base.positions.shape))
        res = find_equilibrium(sys, free=np.r_[True, False, np.ones(2 * sys.p - 2, bool)])
        r = np.max(np.abs(velocity_residual(res.system)))
        g = np.max(np.abs(kr_grad(res.system, W)))
        assert r < 1e-9 and g < 1e-9
        # and the residual is exactly grad / kappa rotated
        sys2 = res.system.with_positions(res.system.positions + 0.01)
        R = velocity_residual(sys2).reshape(-1, 2)
        G = kr_grad(sys2, W).reshape(-1, 2) / sys2.strengths[:, None]
        assert np.allclose(R, perp(G), atol=1e-14)


def test_rotation_invariance_of_value():
    rng = np.random.default_rng(5)
    sys = random_system(rng, p=4, frame=Frame(0.0, 0.3))
    v0 = kr_value(sys, W)
    for th in rng.uniform(0, 2 * np.pi, 10):
        Q = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        assert kr_value(sys.with_positions(sys.positions @ Q.T), W) == pytest.approx(v0, abs=1e-10)


@given(st.floats(0.1, 10.0))
@settings(max_examples=25, deadline=None)
def test_residual_linear_in_strengths(cfac):
    rng = np.random.default_rng(6)
    sys = random_system(rng, p=3)
    scaled = VortexSystem(sys.const, sys.positions, cfac * sys.strengths, Frame(cfac * sys.frame.U, cfac * sys.frame.omega))
    assert np.allclose(velocity_residual(scaled), cfac * velocity_residual(sys), rtol=1e-12, atol=1e-15)


def test_polygon_hessian_has_rotation_mode():
    sys = make_polygon(make_constants(0.5), 1.0, 1.0, 2)
    H = kr_hessian(sys, W)
    ev, vec = np.linalg.eigh(H)
    rot = perp(sys.positions).reshape(-1)
    rot /= np.linalg.norm(rot)
    # the generator of rotations lies in the kernel
    assert np.linalg.norm(H @ rot) < 1e-12 * np.abs(ev).max()
    assert not nondegenerate(sys, W)


def test_nondegenerate_generic():
    rng = np.random.default_rng(7)
    sys = random_system(rng, p=3)
    assert nondegenerate(sys, W)


def test_find_from_exact_polygon():
    sys = make_polygon(make_constants(0.5), 1.0, 1.0, 3)
    res = find_equilibrium(sys)
    assert res.iterations <= 1
    assert np.allclose(res.system.positions, sys.positions, atol=1e-12)


def test_find_recovers_jittered_polygon():
    rng = np.random.default_rng(8)
    ref = make_polygon(make_constants(0.5), 1.0, 1.0, 4)
    start = ref.with_positions(ref.positions * (1 + 0.01 * rng.standard_normal(ref.positions.shape)))
    start = start.with_positions(np.vstack([ref.positions[:1], start.positions[1:]]))
    free = np.ones(2 * ref.p, dtype=bool)
    free[:2] = False  # pin the first vortex: removes the rotation mode
    res = find_equilibrium(start, free=free)
    assert np.max(np.abs(res.system.positions - ref.positions)) < 1e-9


def test_find_pair_separation():
    c = make_constants(0.5)
    ref = make_traveling_pair(c, 1.0, 1.0)
    start = ref.with_positions([[1.2, 0.0], [-1.2, 0.0]])
    # only x-coordinate of the first vortex varies; the second is fixed at -1
    start = start.with_positions([[1.1, 0.0], [-1.0, 0.0]])
    free = np.array([True, False, False, False])
    res = find_equilibrium(start, free=free)
    assert res.system.positions[0, 0] == pytest.approx(1.0, abs=1e-9)


def test_find_non_convergence_reports_best():
    c = make_constants(0.5)
    # two equal vortices with no rotation: no relative equilibrium exists
    sys = VortexSystem(c, [[1.0, 0.0], [-1.0, 0.0]], [1.0, 1.0], Frame(0.0, 0.0))
    with pytest.raises((ConvergenceError, SingularityError)) as info:
        find_equilibrium(sys, max_iter=5)
    if isinstance(info.value, ConvergenceError):
        assert info.value.history
