"""Concentrated-vortex ansatz built from the radial ground state.

Each wave center ``b_j`` carries a rescaled copy of the profile,
``psi_j(x) = eps^(2s-2) mu_j^(-a) W(|x - b_j| / (eps mu_j))`` with
``a = 2s / (gamma - 1)``. The external field seen by the waves is

    H(x) = sum_ext kappa_i G_s(b_i, x) + U x_1 + omega |x|^2 / 2.

All fractional Laplacians here are exact: ``(-Delta)^s psi_j`` is known in
closed form from the profile equation, so no discrete operator is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .equilibria import Frame, pair_speed
from .errors import DomainError, SingularityError
from .frac_kernel import KernelConstants, green
from .profile import ProfileParams, RadialProfile, evaluate_profile, mu_from_kappa


@dataclass(frozen=True, eq=False)
class AnsatzConfig:
    const: KernelConstants
    gamma: float
    eps: float
    centers: np.ndarray
    mus: np.ndarray
    ext_pos: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    ext_kappa: np.ndarray = field(default_factory=lambda: np.zeros(0))
    frame: Frame = field(default_factory=Frame)
    delta: float = 0.5
    mu: float | None = None

    def __post_init__(self):
        c = np.array(self.centers, dtype=float).reshape(-1, 2)
        mus = np.array(self.mus, dtype=float).reshape(-1)
        ep = np.array(self.ext_pos, dtype=float).reshape(-1, 2)
        ek = np.array(self.ext_kappa, dtype=float).reshape(-1)
        if c.shape[0] < 1 or mus.shape[0] != c.shape[0]:
            raise DomainError("need k >= 1 wave centers with one scale each")
        if ep.shape[0] != ek.shape[0]:
            raise DomainError("external positions and strengths differ in length")
        if not (self.eps > 0 and self.delta > 0) or np.any(mus <= 0):
            raise DomainError("eps, delta and all mu_j must be positive")
        allc = np.vstack([c, ep])
        if allc.shape[0] > 1:
            d = np.linalg.norm(allc[:, None] - allc[None], axis=-1)
            d[np.diag_indices_from(d)] = np.inf
            if d.min() == 0.0:
                raise SingularityError("coincident centers")
            if d.min() <= 2.0 * self.delta:
                raise DomainError("localisation balls B_delta must be pairwise disjoint")
        for name, val in (("centers", c), ("mus", mus), ("ext_pos", ep), ("ext_kappa", ek)):
            val.flags.writeable = False
            object.__setattr__(self, name, val)
        if self.mu is None:
            object.__setattr__(self, "mu", float(mus[0]))

    @property
    def k(self):
        return self.centers.shape[0]

    @property
    def s(self):
        return self.const.s

    @property
    def a(self):
        return 2.0 * self.const.s / (self.gamma - 1.0)

    def with_eps(self, eps):
        return replace(self, eps=float(eps))

    def check(self, prof: RadialProfile):
        if abs(prof.gamma - self.gamma) > 1e-14 or abs(prof.s - self.s) > 1e-14:
            raise DomainError("profile parameters do not match the ansatz")
        if np.any(self.eps * self.mus * prof.R1 >= self.delta):
            raise DomainError("bump support eps * mu_j * R1 must lie inside B_delta")


@dataclass(frozen=True)
class LambdaSet:
    values: np.ndarray

    def __getitem__(self, j):
        return self.values[j]


@dataclass(frozen=True)
class WeightedNorm:
    sigma: float
    centers: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise DomainError("sigma must lie in (0, 1)")

    def rho(self, y):
        y = np.asarray(y, dtype=float)
        c = np.asarray(self.centers, dtype=float).reshape(-1, 2)
        return np.sum(1.0 / (1.0 + np.linalg.norm(y[..., None, :] - c, axis=-1)), axis=-1)


def wave_kappas(cfg: AnsatzConfig, M_gamma: float) -> np.ndarray:
    e = 2.0 * (1.0 - cfg.s * cfg.gamma / (cfg.gamma - 1.0))
    return M_gamma * cfg.mus**e


def pair_config(
    prof: RadialProfile, kappa: float, d: float, eps: float, U: float | None = None, delta: float | None = None
) -> AnsatzConfig:
    """Wave of strength ``kappa`` at ``(d, 0)`` with a point vortex ``-kappa`` at ``(-d, 0)``.

    ``U`` defaults to the exact traveling speed of the corresponding point pair.
    """
    const = prof.const
    mu = mu_from_kappa(prof.M_gamma, prof.params, kappa)
    U = pair_speed(const, kappa, d) if U is None else U
    delta = 0.5 * d if delta is None else delta
    return AnsatzConfig(
        const, prof.gamma, eps, [[d, 0.0]], [mu], [[-d, 0.0]], [-kappa], Frame(U=U), delta, mu
    )


def isolated_config(prof: RadialProfile, kappa: float, eps: float, delta: float = 0.5) -> AnsatzConfig:
    mu = mu_from_kappa(prof.M_gamma, prof.params, kappa)
    return AnsatzConfig(prof.const, prof.gamma, eps, [[0.0, 0.0]], [mu], delta=delta, mu=mu)


# -- building blocks ----------------------------------------------------------


def _pts(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise DomainError("points must have a trailing dimension of size 2")
    return x


def external_field(cfg: AnsatzConfig, x):
    """``H(x)``; singular at the external vortices."""
    x = _pts(x)
    out = cfg.frame.U * x[..., 0] + 0.5 * cfg.frame.omega * np.einsum("...i,...i->...", x, x)
    for b, kap in zip(cfg.ext_pos, cfg.ext_kappa):
        out = out + kap * green(cfg.const, x, b)
    return out


def _bump(cfg, prof, j, x):
    """``W(|x - b_j| / (eps mu_j))``."""
    r = np.linalg.norm(x - cfg.centers[j], axis=-1) / (cfg.eps * cfg.mus[j])
    return evaluate_profile(prof, r)


def psi0(cfg: AnsatzConfig, prof: RadialProfile, x):
    x = _pts(x)
    out = 0.0
    for j in range(cfg.k):
        out = out + cfg.mus[j] ** (-cfg.a) * _bump(cfg, prof, j, x)
    return cfg.eps ** (2.0 * cfg.s - 2.0) * out


def frac_lap_psi0(cfg: AnsatzConfig, prof: RadialProfile, x):
    """Exact ``(-Delta)^s Psi_0``: each bump contributes ``eps^-2 mu_j^(-a gamma) (W_j - 1)_+^gamma``."""
    x = _pts(x)
    out = 0.0
    for j in range(cfg.k):
        wj = _bump(cfg, prof, j, x)
        out = out + cfg.mus[j] ** (-cfg.a * cfg.gamma) * np.maximum(wj - 1.0, 0.0) ** cfg.gamma
    return cfg.eps**-2.0 * out


def compute_lambdas(cfg: AnsatzConfig, prof: RadialProfile) -> LambdaSet:
    """Thresholds making ``Psi_0 + H - eps^(2s-2) lambda_n`` vanish where ``W_n = 1`` at leading order."""
    cfg.check(prof)
    a, eps = cfg.a, cfg.eps
    lam = np.empty(cfg.k)
    for n in range(cfg.k):
        bn = cfg.centers[n]
        acc = 1.0 + eps ** (2.0 - 2.0 * cfg.s) * cfg.mus[n] ** a * float(external_field(cfg, bn))
        for j in range(cfg.k):
            if j != n:
                acc += (cfg.mus[n] / cfg.mus[j]) ** a * float(_bump(cfg, prof, j, bn))
        lam[n] = acc / cfg.mus[n] ** a
    return LambdaSet(lam)


def theta_field(cfg: AnsatzConfig, prof: RadialProfile, lambdas: LambdaSet, x):
    """Approximate vorticity ``eps^((2-2s)gamma-2) sum_j (Psi_0 + H - eps^(2s-2) lambda_j)_+^gamma chi_j``."""
    x = _pts(x)
    out = np.zeros(x.shape[:-1])
    pre = cfg.eps ** ((2.0 - 2.0 * cfg.s) * cfg.gamma - 2.0)
    for j in range(cfg.k):
        inside = np.linalg.norm(x - cfg.centers[j], axis=-1) < cfg.delta
        if not np.any(inside):
            continue
        xi = x[inside]
        arg = psi0(cfg, prof, xi) + external_field(cfg, xi) - cfg.eps ** (2.0 * cfg.s - 2.0) * lambdas[j]
        out[inside] += pre * np.maximum(arg, 0.0) ** cfg.gamma
    return out if out.ndim else float(out)


def residual_S(cfg: AnsatzConfig, prof: RadialProfile, lambdas: LambdaSet, x):
    return frac_lap_psi0(cfg, prof, x) - theta_field(cfg, prof, lambdas, x)


# -- error law ----------------------------------------------------------------


def _bump_samples(cfg, prof, n):
    """Cartesian samples covering each bump plus a margin, clipped to ``B_delta``."""
    pts = []
    g = np.linspace(-1.0, 1.0, n)
    X, Y = np.meshgrid(g, g, indexing="ij")
    unit = np.column_stack([X.ravel(), Y.ravel()])
    for j in range(cfg.k):
        rad = min(0.999 * cfg.delta, 1.25 * cfg.eps * cfg.mus[j] * prof.R1)
        p = cfg.centers[j] + rad * unit
        pts.append(p[np.linalg.norm(p - cfg.centers[j], axis=-1) < cfg.delta])
    return np.vstack(pts)


def sup_scaled_residual(cfg: AnsatzConfig, prof: RadialProfile, n: int = 201):
    """``(sup |eps^2 S|, sup |eps^2 (-Delta)^s Psi_0|)`` over samples of the bump regions."""
    lam = compute_lambdas(cfg, prof)
    x = _bump_samples(cfg, prof, n)
    S = residual_S(cfg, prof, lam, x)
    F = frac_lap_psi0(cfg, prof, x)
    return float(np.max(np.abs(S))) * cfg.eps**2, float(np.max(np.abs(F))) * cfg.eps**2


@dataclass(frozen=True)
class ScanResult:
    eps: np.ndarray
    sup_residual: np.ndarray
    slope: float
    slope_partial: np.ndarray
    exact: bool


def residual_scan(cfg: AnsatzConfig, prof: RadialProfile, eps_list, n: int = 201, exact_tol: float = 1e-12):
    """Log-log regression of ``sup |eps^2 S(Psi_0)|`` against ``eps``.

    ``slope_partial[i]`` is the slope between consecutive entries (``nan`` for
    the first). When every residual is below ``exact_tol`` relative to the
    bump amplitude the configuration is reported as exact and the slope is
    ``nan``.
    """
    eps = np.asarray(eps_list, dtype=float)
    if eps.size < 4 or np.any(np.diff(eps) >= 0):
        raise DomainError("need at least four strictly decreasing eps values")
    sup = np.empty_like(eps)
    scale = 0.0
    for i, e in enumerate(eps):
        sup[i], amp = sup_scaled_residual(cfg.with_eps(e), prof, n)
        scale = max(scale, amp)
    if np.all(sup <= exact_tol * scale):
        return ScanResult(eps, sup, math.nan, np.full(eps.size, math.nan), True)
    if np.any(sup <= 0):
        raise DomainError("cannot regress: some residuals are exactly zero")
    le, ls = np.log(eps), np.log(sup)
    slope = float(np.polyfit(le, ls, 1)[0])
    part = np.concatenate([[math.nan], np.diff(ls) / np.diff(le)])
    return ScanResult(eps, sup, slope, part, False)


# -- rescaled quantities ----------------------------------------------------------


def _rescaled(cfg, prof, j, y):
    """``z = (mu / mu_j)(y - b'_j)`` and ``|z|``."""
    bp = cfg.centers[j] / (cfg.eps * cfg.mu)
    z = (cfg.mu / cfg.mus[j]) * (np.asarray(y, dtype=float) - bp)
    return z, np.linalg.norm(z, axis=-1)


def potential_V(cfg: AnsatzConfig, prof: RadialProfile, j: int, y):
    z, rz = _rescaled(cfg, prof, j, y)
    w = (cfg.mu / cfg.mus[j]) ** cfg.a * (evaluate_profile(prof, rz) - 1.0)
    inside = rz * cfg.eps * cfg.mus[j] < cfg.delta
    return np.where(inside, cfg.gamma * np.maximum(w, 0.0) ** (cfg.gamma - 1.0), 0.0)


def kernel_Z(cfg: AnsatzConfig, prof: RadialProfile, i: int, j: int, y):
    """``d W / d z_i`` at ``z = (mu / mu_j)(y - b'_j)``; ``i`` is 0 or 1."""
    z, rz = _rescaled(cfg, prof, j, y)
    dW = evaluate_profile(prof, rz, derivative=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(rz > 0, dW * z[..., i] / np.where(rz > 0, rz, 1.0), 0.0)
    return out


def weighted_norm_star(field, y, norm: WeightedNorm, s: float) -> float:
    """Discrete ``sup rho^-(2-2s) |phi|``."""
    f = np.abs(np.asarray(field, dtype=float))
    if f.size == 0:
        return 0.0
    return float(np.max(norm.rho(y) ** (-(2.0 - 2.0 * s)) * f))


def weighted_norm_starstar(field, y, norm: WeightedNorm) -> float:
    """Discrete ``sup rho^-(2+sigma) |h|``."""
    f = np.abs(np.asarray(field, dtype=float))
    if f.size == 0:
        return 0.0
    return float(np.max(norm.rho(y) ** (-(2.0 + norm.sigma)) * f))


def rescaled_error(cfg: AnsatzConfig, prof: RadialProfile, lambdas: LambdaSet, y):
    """``E = (-Delta)^s v_0 - f(y, v_0)``, equal to ``eps^2 mu^(a gamma) S(Psi_0)``."""
    x = np.asarray(y, dtype=float) * (cfg.eps * cfg.mu)
    return (cfg.eps**2 * cfg.mu ** (cfg.a * cfg.gamma)) * residual_S(cfg, prof, lambdas, x)


def _polar_rule(cfg, prof, j, n_r, n_theta):
    """Quadrature nodes ``y`` and weights on a disk of radius ``2 R1 mu_j / mu`` around ``b'_j``."""
    R = prof.R1 * cfg.mus[j] / cfg.mu
    x, w = np.polynomial.legendre.leggauss(n_r // 2)
    r = np.concatenate([0.5 * R * (x + 1.0), R + 0.5 * R * (x + 1.0)])
    wr = np.concatenate([0.5 * R * w, 0.5 * R * w])
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    bp = cfg.centers[j] / (cfg.eps * cfg.mu)
    y = bp + r[:, None, None] * np.stack([np.cos(th), np.sin(th)], axis=-1)[None]
    wt = (wr * r)[:, None] * np.full(n_theta, 2.0 * np.pi / n_theta)[None]
    return y.reshape(-1, 2), wt.ravel()


def reduced_residual(cfg: AnsatzConfig, prof: RadialProfile, lambdas: LambdaSet, n_r: int = 256, n_theta: int = 256):
    """``F_ij = int E(y) Z_ij(y) dy`` for each center ``j`` and direction ``i``.

    Returns an array of shape ``(k, 2)``. The integrals run over disks around
    all rescaled centers (``E`` vanishes elsewhere); each product is summed
    with ``math.fsum`` so the result does not depend on evaluation order.
    """
    cfg.check(prof)
    rules = [_polar_rule(cfg, prof, m, n_r, n_theta) for m in range(cfg.k)]
    errs = [rescaled_error(cfg, prof, lambdas, y) for y, _ in rules]
    F = np.zeros((cfg.k, 2))
    for j in range(cfg.k):
        for i in range(2):
            parts = []
            for (y, w), E in zip(rules, errs):
                parts.append(w * E * kernel_Z(cfg, prof, i, j, y))
            F[j, i] = math.fsum(np.concatenate(parts))
    return F


def reduced_normalization(cfg: AnsatzConfig, prof: RadialProfile) -> np.ndarray:
    """Leading-order scale ``M eps^(3-2s) mu^(a+1) (mu / mu_j)^(2s-3)`` for each center.

    Dividing the reduced residual by it gives the gradient of the local
    potential ``H + (other waves as point vortices)`` at ``b_j``.
    """
    s = cfg.s
    return prof.M_gamma * cfg.eps ** (3.0 - 2.0 * s) * cfg.mu ** (cfg.a + 1.0) * (cfg.mu / cfg.mus) ** (2.0 * s - 3.0)


def local_potential_grad(cfg: AnsatzConfig, M_gamma: float) -> np.ndarray:
    """Gradient at each ``b_j`` of ``H`` plus the other waves taken as point vortices."""
    kap = wave_kappas(cfg, M_gamma)
    const = cfg.const
    out = np.zeros((cfg.k, 2))
    for j in range(cfg.k):
        b = cfg.centers[j]
        g = np.array([cfg.frame.U, 0.0]) + cfg.frame.omega * b
        for p, kp in zip(cfg.ext_pos, cfg.ext_kappa):
            g = g + kp * _grad_g(const, b, p)
        for m in range(cfg.k):
            if m != j:
                g = g + kap[m] * _grad_g(const, b, cfg.centers[m])
        out[j] = g
    return out


def _grad_g(const, x, y):
    d = x - y
    return const.c2s * const.expo * float(d @ d) ** (const.s - 2.0) * d


def pair_bracket(const: KernelConstants, kappa, d, U, params: ProfileParams | None = None):
    """``kappa c2s (2-2s) (2d)^(2s-3) + U``: x1-force balance on the wave of a pair."""
    if not np.all(np.asarray(d) > 0):
        raise DomainError("pair half-distance must be positive")
    s = const.s
    return kappa * const.c2s * (2.0 - 2.0 * s) * (2.0 * np.asarray(d, dtype=float)) ** (2.0 * s - 3.0) + U


def pair_bracket_root(const: KernelConstants, kappa, U):
    """Half-distance where the bracket vanishes (closed form; requires ``U < 0``)."""
    if not (U < 0 and kappa > 0):
        raise DomainError("a root exists only for U < 0 and kappa > 0")
    s = const.s
    return 0.5 * (-U / (kappa * const.c2s * (2.0 - 2.0 * s))) ** (1.0 / (2.0 * s - 3.0))
