"""Point-vortex configurations, Kirchhoff-Routh functions and relative equilibria.

A configuration moves rigidly when every vortex satisfies
``dx_i/dt = (0, U) - omega * x_i^perp``. Two Kirchhoff-Routh conventions are
offered:

``weighted`` (default)
    ``sum_i kappa_i (U x_i1 + omega |x_i|^2 / 2)
    + 1/2 sum_{i != j} kappa_i kappa_j G_s(x_i, x_j)``. Its gradient in
    ``x_i`` is ``kappa_i`` times the clockwise-perpendicular of the velocity
    residual, so critical points are exactly the relative equilibria.

``verbatim``
    ``sum_i (U x_i1 + omega |x_i|^2 / 2) - sum_{i != j} kappa_j G_s(x_i, x_j)``,
    kept as a literal transcription. Its critical points are generally *not*
    relative equilibria (for an opposite-strength pair the interaction terms
    cancel); use it only for comparison.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConvergenceError, DomainError, SingularityError
from .frac_kernel import (
    KernelConstants,
    gamma_fn,
    grad_green,
    green,
    hess_green,
    perp,
)

log = logging.getLogger(__name__)

COLLISION_RTOL = 1e-8


class KrConvention(str, enum.Enum):
    WEIGHTED = "weighted"
    VERBATIM = "verbatim"


@dataclass(frozen=True)
class PointVortex:
    pos: tuple
    kappa: float

    def __post_init__(self):
        if self.kappa == 0:
            raise DomainError("point vortex circulation must be nonzero")


@dataclass(frozen=True)
class Frame:
    U: float = 0.0
    omega: float = 0.0


@dataclass(frozen=True, eq=False)
class VortexSystem:
    """Positions ``(p, 2)``, circulations ``(p,)`` and a moving frame."""

    const: KernelConstants
    positions: np.ndarray
    strengths: np.ndarray
    frame: Frame = field(default_factory=Frame)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        kap = np.array(self.strengths, dtype=float).reshape(-1)
        if pos.shape[0] != kap.shape[0] or pos.shape[0] < 1:
            raise DomainError("need p >= 1 positions and matching strengths")
        if np.any(kap == 0):
            raise DomainError("point vortex circulations must be nonzero")
        if not np.all(np.isfinite(pos)):
            raise DomainError("positions must be finite")
        pos.flags.writeable = False
        kap.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "strengths", kap)

    @classmethod
    def from_vortices(cls, const, vortices, frame=None):
        pos = [v.pos for v in vortices]
        kap = [v.kappa for v in vortices]
        return cls(const, pos, kap, frame or Frame())

    @property
    def vortices(self):
        return [PointVortex(tuple(p), float(k)) for p, k in zip(self.positions, self.strengths)]

    @property
    def p(self):
        return self.positions.shape[0]

    def with_positions(self, positions):
        return replace(self, positions=np.asarray(positions, dtype=float).reshape(-1, 2))

    def with_frame(self, U=None, omega=None):
        f = Frame(self.frame.U if U is None else U, self.frame.omega if omega is None else omega)
        return replace(self, frame=f)


def min_separation(positions):
    pos = np.asarray(positions, dtype=float)
    if pos.shape[0] < 2:
        return math.inf
    d = pos[:, None, :] - pos[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
    r[np.diag_indices_from(r)] = np.inf
    return float(r.min())


def check_collisions(positions, rtol=COLLISION_RTOL):
    pos = np.asarray(positions, dtype=float)
    if pos.shape[0] < 2:
        return
    scale = max(float(np.ptp(pos, axis=0).max()), float(np.abs(pos).max()), 1e-300)
    if min_separation(pos) < rtol * scale:
        raise SingularityError("vortex collision: positions (numerically) coincide")


def _pairs(sys):
    check_collisions(sys.positions)
    i, j = np.nonzero(~np.eye(sys.p, dtype=bool))
    return i, j


def _conv(conv):
    conv = KrConvention(conv)
    if conv is KrConvention.VERBATIM:
        log.warning("verbatim Kirchhoff-Routh convention: critical points are not relative equilibria in general")
    return conv


def kr_value(sys: VortexSystem, conv=KrConvention.WEIGHTED) -> float:
    conv = _conv(conv)
    x, k = sys.positions, sys.strengths
    U, om = sys.frame.U, sys.frame.omega
    frame_terms = U * x[:, 0] + 0.5 * om * np.einsum("ij,ij->i", x, x)
    i, j = _pairs(sys)
    g = green(sys.const, x[i], x[j]) if i.size else np.zeros(0)
    if conv is KrConvention.WEIGHTED:
        return float(np.sum(k * frame_terms) + 0.5 * np.sum(k[i] * k[j] * g))
    return float(np.sum(frame_terms) - np.sum(k[j] * g))


def kr_grad(sys: VortexSystem, conv=KrConvention.WEIGHTED) -> np.ndarray:
    """Gradient, flattened as ``(x_11, x_12, x_21, ...)``."""
    conv = _conv(conv)
    x, k = sys.positions, sys.strengths
    U, om = sys.frame.U, sys.frame.omega
    base = np.column_stack([np.full(sys.p, U), np.zeros(sys.p)]) + om * x
    i, j = _pairs(sys)
    inter = np.zeros_like(x)
    if i.size:
        gg = grad_green(sys.const, x[i], x[j])
        w = k[j] if conv is KrConvention.WEIGHTED else -(k[i] + k[j])
        np.add.at(inter, i, w[:, None] * gg)
    out = base + inter
    if conv is KrConvention.WEIGHTED:
        out = k[:, None] * out
    return out.reshape(-1)


def kr_hessian(sys: VortexSystem, conv=KrConvention.WEIGHTED) -> np.ndarray:
    conv = _conv(conv)
    x, k = sys.positions, sys.strengths
    p = sys.p
    H = np.zeros((p, 2, p, 2))
    eye = np.eye(2)
    for a in range(p):
        H[a, :, a, :] = sys.frame.omega * eye * (k[a] if conv is KrConvention.WEIGHTED else 1.0)
    i, j = _pairs(sys)
    if i.size:
        hg = hess_green(sys.const, x[i], x[j])
        for a, b, h in zip(i, j, hg):
            if conv is KrConvention.WEIGHTED:
                c = k[a] * k[b]
            else:
                c = -(k[a] + k[b])
            H[a, :, a, :] += c * h
            H[a, :, b, :] -= c * h
    return H.reshape(2 * p, 2 * p)


def nondegenerate(sys: VortexSystem, conv=KrConvention.WEIGHTED, tol=1e-10) -> bool:
    """Invertibility proxy: ``|det H| > tol * ||H||_2 ** (2p)``."""
    H = kr_hessian(sys, conv)
    ev = np.abs(np.linalg.eigvalsh(0.5 * (H + H.T)))
    scale = ev.max()
    if scale == 0.0:
        return False
    # det / scale^(2p) computed as a product of ratios to avoid under/overflow
    return bool(np.prod(ev / scale) > tol)


def velocity_residual(sys: VortexSystem) -> np.ndarray:
    """Induced velocity minus the rigid-frame velocity, flattened ``(2p,)``."""
    x, k = sys.positions, sys.strengths
    i, j = _pairs(sys)
    vel = np.zeros_like(x)
    if i.size:
        np.add.at(vel, i, k[j][:, None] * perp(grad_green(sys.const, x[i], x[j])))
    rigid = np.column_stack([np.zeros(sys.p), np.full(sys.p, sys.frame.U)]) - sys.frame.omega * perp(x)
    return (vel - rigid).reshape(-1)


def pair_speed(const: KernelConstants, kappa, d):
    """Translation speed of an opposite pair ``+kappa`` at ``(d,0)``, ``-kappa`` at ``(-d,0)``."""
    s = const.s
    return -gamma_fn(2.0 - s) / (4.0 * math.pi * gamma_fn(s)) * kappa / d ** (3.0 - 2.0 * s)


def polygon_omega(const: KernelConstants, kappa, rho, k):
    """Angular velocity of ``k + 1`` equal vortices on a circle of radius ``rho``.

    The radius enters as ``rho**(2s - 4)`` (velocity ~ r^(2s-3), divided by the
    lever arm ``rho``).
    """
    s = const.s
    j = np.arange(1, k + 1)
    lattice = np.sum(1.0 / (1.0 - np.cos(2.0 * np.pi * j / (k + 1))) ** (1.0 - s))
    coef = gamma_fn(2.0 - s) / (2.0 ** (s + 1.0) * math.pi * gamma_fn(s))
    return kappa * coef * lattice / rho ** (4.0 - 2.0 * s)


def make_traveling_pair(const: KernelConstants, kappa: float, d: float) -> VortexSystem:
    if not (kappa > 0 and d > 0):
        raise DomainError("traveling pair needs kappa > 0 and d > 0")
    U = pair_speed(const, kappa, d)
    return VortexSystem(const, [[d, 0.0], [-d, 0.0]], [kappa, -kappa], Frame(U=U, omega=0.0))


def make_polygon(const: KernelConstants, kappa: float, rho: float, k: int) -> VortexSystem:
    if not (kappa > 0 and rho > 0) or int(k) != k or k < 1:
        raise DomainError("polygon needs kappa > 0, rho > 0 and integer k >= 1")
    k = int(k)
    ang = 2.0 * np.pi * np.arange(k + 1) / (k + 1)
    pos = rho * np.column_stack([np.cos(ang), np.sin(ang)])
    om = polygon_omega(const, kappa, rho, k)
    return VortexSystem(const, pos, np.full(k + 1, kappa), Frame(U=0.0, omega=om))


@dataclass
class NewtonResult:
    system: VortexSystem
    converged: bool
    iterations: int
    residual: float
    history: list
    cond: float


def find_equilibrium(
    sys0: VortexSystem,
    free=None,
    conv=KrConvention.WEIGHTED,
    tol=1e-11,
    max_iter=50,
) -> NewtonResult:
    """Damped Gauss-Newton on the Kirchhoff-Routh gradient.

    ``free`` is a boolean mask over the ``2p`` flattened coordinates (default:
    all free). Fixed coordinates pin symmetry modes; the step is the
    minimum-norm least-squares solution, so neutral directions (rotation,
    translation) do not destabilise the iteration.
    """
    p = sys0.p
    free = np.ones(2 * p, dtype=bool) if free is None else np.asarray(free, dtype=bool).reshape(-1)
    if free.shape != (2 * p,) or not free.any():
        raise DomainError("free mask must have 2p entries with at least one True")
    conv = KrConvention(conv)
    scale = max(float(np.abs(sys0.positions).max()), min_separation(sys0.positions) if p > 1 else 1.0)

    sys = sys0
    R = kr_grad(sys, conv)
    if not np.all(np.isfinite(R)):
        raise DomainError("residual is not finite at the initial configuration")
    res = float(np.abs(R).max())
    hist = [res]
    cond = math.nan
    it = 0
    while res > tol and it < max_iter:
        it += 1
        J = kr_hessian(sys, conv)[:, free]
        step, *_, sv = np.linalg.lstsq(J, -R, rcond=1e-13)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
        x = sys.positions.reshape(-1)
        lam = 1.0
        accepted = False
        while lam > 1e-6:
            xn = x.copy()
            xn[free] += lam * step
            try:
                trial = sys.with_positions(xn)
                check_collisions(trial.positions)
                Rn = kr_grad(trial, conv)
            except SingularityError:
                lam *= 0.5
                continue
            rn = float(np.abs(Rn).max())
            if rn < res or rn <= tol:
                sys, R, res = trial, Rn, rn
                accepted = True
                break
            lam *= 0.5
        hist.append(res)
        if not accepted:
            raise ConvergenceError(
                f"line search failed (residual {res:.3e}, Jacobian condition ~{cond:.3e})",
                best=sys,
                history=hist,
            )
        if min_separation(sys.positions) < COLLISION_RTOL * scale:
            raise SingularityError("Newton iterates collapsed two vortices")
    if res > tol:
        raise ConvergenceError(
            f"no convergence in {max_iter} iterations (residual {res:.3e}, condition ~{cond:.3e})",
            best=sys,
            history=hist,
        )
    return NewtonResult(sys, True, it, res, hist, cond)
