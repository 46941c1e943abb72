"""Radial ground state of ``(-Delta)^s W = (W - 1)_+^gamma`` in the plane.

The equation is solved in potential form ``W = G_s * (W - 1)_+^gamma``. With
the free-boundary radius ``R1`` (where ``W = 1``) as length unit,
``u(tau) = W(R1 tau)`` obeys

    u(tau) = R1^(2s) * int_0^1 K(tau, t) (u(t) - 1)^gamma t dt,

where ``K`` is the angular average of the kernel. Picard iteration on the
ratio ``v(tau) / v(1)`` keeps the free boundary pinned at ``tau = 1`` and
removes the unstable scale mode of the unscaled fixed-point map; ``R1``
follows from ``u(1) = 1``.

The unknown is represented by ``ghat = ((u - 1) / (1 - t))^gamma`` on
Chebyshev nodes in (0, 1). Integrals against the log/power singular kernel
use graded Gauss-Legendre rules around the target, the origin and the free
boundary, with the distances to those points carried exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy import integrate, interpolate, special

from .errors import ConvergenceError, DomainError
from .frac_kernel import KernelConstants, gamma_fn, make_constants

log = logging.getLogger(__name__)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class ProfileParams:
    s: float
    gamma: float

    def __post_init__(self):
        s, g = float(self.s), float(self.gamma)
        if not 0.0 < s < 1.0:
            raise DomainError(f"fractional order must lie in (0, 1), got {s}")
        upper = (2.0 + 2.0 * s) / (2.0 - 2.0 * s)
        if not 1.0 < g < upper:
            raise DomainError(f"gamma must lie in (1, {upper:.6g}) for s={s}, got {g}")
        if abs(g - 1.0 / (1.0 - s)) < 1e-12:
            raise DomainError("gamma = 1/(1-s) makes the concentration exponent vanish")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "gamma", g)

    @property
    def mass_exponent(self) -> float:
        """``e`` in ``kappa = M_gamma * mu**e``."""
        return 2.0 * (1.0 - self.s * self.gamma / (self.gamma - 1.0))

    @property
    def amp_exponent(self) -> float:
        """``2s / (gamma - 1)``: amplitude exponent of a concentrated bump."""
        return 2.0 * self.s / (self.gamma - 1.0)


@dataclass(frozen=True)
class ProfileGrid:
    """Discretisation knobs.

    ``n_cheb`` controls the solve; the remaining fields shape the output grid
    (uniform on ``[0, 4 R1]`` plus geometric refinement toward ``R1`` and a
    geometric tail out to ``r_N``).
    """

    n_cheb: int = 128
    n_uniform: int = 801
    tail_ratio: float = 1.02
    r_max_min: float = 1e3
    tail_tol: float = 5e-4
    grade_min: float = 1e-7
    grade_ratio: float = 1.05
    grade_extent: float = 0.25

    def __post_init__(self):
        if self.n_cheb < 8 or self.n_uniform < 9 or (self.n_uniform - 1) % 4:
            raise DomainError("need n_cheb >= 8 and n_uniform = 4m + 1 >= 9")
        if not (self.tail_ratio > 1.0 and self.grade_ratio > 1.0):
            raise DomainError("geometric ratios must exceed 1")


@dataclass(frozen=True, eq=False)
class RadialProfile:
    params: ProfileParams
    radii: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    M_gamma: float
    R1: float
    iterations: int = 0
    history: tuple = ()
    _nodes: np.ndarray | None = field(default=None, repr=False)
    _ghat: np.ndarray | None = field(default=None, repr=False)
    _vinv: np.ndarray | None = field(default=None, repr=False)
    _spline: object = field(default=None, repr=False)

    @property
    def s(self):
        return self.params.s

    @property
    def gamma(self):
        return self.params.gamma

    @property
    def const(self) -> KernelConstants:
        return make_constants(self.params.s)

    @property
    def r_N(self):
        return float(self.radii[-1])

    @property
    def W0(self):
        return float(self.values[0])

    @property
    def has_solver_state(self):
        return self._ghat is not None


# -- kernel ---------------------------------------------------------------


def radial_green_row(const: KernelConstants, r, rp, delta=None):
    """Angular average ``K(r, r') = c2s int_0^{2 pi} (r^2 + r'^2 - 2 r r' cos th)^(s-1) dth``.

    Closed form ``2 pi c2s (r + r')^(2s-2) 2F1(1-s, 1/2; 1; m)`` with
    ``m = 4 r r' / (r + r')^2``. Near the diagonal the hypergeometric function
    is continued to ``1 - m = ((r - r') / (r + r'))^2``; pass ``delta = r' - r``
    when it is known more accurately than the difference of the arguments.
    """
    s = const.s
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    if np.any(r < 0) or np.any(rp < 0):
        raise DomainError("radii must be nonnegative")
    if delta is None:
        delta = rp - r
    delta = np.asarray(delta, dtype=float)
    S = r + rp
    shape = np.broadcast(r, rp, delta).shape
    S = np.broadcast_to(S, shape)
    if np.any(S == 0.0):
        raise DomainError("kernel undefined for r = r' = 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.broadcast_to((delta / S) ** 2, shape)
        m = np.broadcast_to(4.0 * r * rp / (S * S), shape)
    if np.any(w == 0.0):
        raise DomainError("kernel is singular on the diagonal r = r'")
    out = np.empty(shape)
    near = w < 0.5
    far = ~near
    out[far] = special.hyp2f1(1.0 - s, 0.5, 1.0, m[far])
    wn = w[near]
    if s == 0.5:
        out[near] = (2.0 / math.pi) * special.ellipkm1(wn)
    else:
        sq = math.sqrt(math.pi)
        A = special.gamma(s - 0.5) / (gamma_fn(s) * sq)
        B = special.gamma(0.5 - s) / (gamma_fn(1.0 - s) * sq)
        out[near] = A * special.hyp2f1(1.0 - s, 0.5, 1.5 - s, wn) + B * wn ** (s - 0.5) * special.hyp2f1(
            s, 0.5, s + 0.5, wn
        )
    res = 2.0 * math.pi * const.c2s * S ** (2.0 * s - 2.0) * out
    return float(res) if res.ndim == 0 else res


# -- singular quadrature on [0, 1] -----------------------------------------


def _graded(length, mexp, sigma=0.3, levels=14):
    """Nodes ``dist = u**mexp`` on ``[0, length]`` graded toward ``dist = 0``."""
    U = length ** (1.0 / mexp)
    e = np.concatenate([[0.0], U * sigma ** np.arange(levels, -1, -1)])
    lo, hi = e[:-1], e[1:]
    u = (0.5 * (hi - lo)[:, None] * _GL_X + 0.5 * (hi + lo)[:, None]).ravel()
    wu = (0.5 * (hi - lo)[:, None] * _GL_W).ravel()
    return u**mexp, wu * mexp * u ** (mexp - 1.0)


def _fine_rule(tau, s):
    """Quadrature on ``t in [0, 1]`` for a target ``tau``.

    Returns ``t``, weights, ``1 - t`` and ``t - tau``, the last two computed
    without cancellation where they are small.
    """
    mexp = max(2.0, 1.0 / s)
    T, Wt, OM, D = [], [], [], []
    if 0.0 < tau < 1.0:
        h0, h1 = 0.5 * tau, 0.5 * (1.0 - tau)
        d, w = _graded(h0, mexp)
        T.append(tau - d), Wt.append(w), OM.append((1.0 - tau) + d), D.append(-d)
        d, w = _graded(h1, mexp)
        T.append(tau + d), Wt.append(w), OM.append((1.0 - tau) - d), D.append(d)
        d, w = _graded(h0, mexp)
        T.append(d), Wt.append(w), OM.append(1.0 - d), D.append(d - tau)
        d, w = _graded(h1, mexp)
        T.append(1.0 - d), Wt.append(w), OM.append(d), D.append((1.0 - tau) - d)
    else:
        d, w = _graded(0.5, mexp)
        T.append(d), Wt.append(w), OM.append(1.0 - d), D.append(d - tau)
        d, w = _graded(0.5, mexp)
        T.append(1.0 - d), Wt.append(w), OM.append(d), D.append((1.0 - tau) - d)
    return tuple(np.concatenate(a) for a in (T, Wt, OM, D))


def _cheb_nodes(n):
    k = np.arange(n)
    return np.sort(0.5 * (1.0 + np.cos((2 * k + 1) * np.pi / (2 * n))))


def _nystrom_rows(const, gamma, n, vinv, targets):
    """Rows mapping ``ghat`` at the nodes to ``int K(tau, t) (u - 1)_+^gamma t dt``."""
    out = np.empty((len(targets), n))
    for i, tau in enumerate(targets):
        t, w, om, dl = _fine_rule(float(tau), const.s)
        kk = radial_green_row(const, tau, t, dl) * t * om**gamma * w
        out[i] = (kk @ cheb.chebvander(2.0 * t - 1.0, n - 1)) @ vinv
    return out


# -- solver ---------------------------------------------------------------


def _output_grid(R1, M, const, grid: ProfileGrid, W0):
    uni = np.linspace(0.0, 4.0 * R1, grid.n_uniform)
    n_gr = int(math.ceil(math.log(grid.grade_extent / grid.grade_min) / math.log(grid.grade_ratio))) + 1
    off = grid.grade_min * grid.grade_ratio ** np.arange(n_gr)
    graded = R1 * np.concatenate([1.0 - off, 1.0 + off])
    # far field: stop once the tail model drops below tail_tol * W(0)
    r_tail = (grid.tail_tol * W0 / (M * const.c2s)) ** (1.0 / const.expo)
    r_max = max(grid.r_max_min, r_tail)
    n_t = int(math.ceil(math.log(r_max / (4.0 * R1)) / math.log(grid.tail_ratio)))
    tail = 4.0 * R1 * grid.tail_ratio ** np.arange(1, n_t + 1)
    r = np.unique(np.concatenate([uni, graded, tail]))
    # drop near-duplicates produced by merging the pieces
    keep = np.concatenate([[True], np.diff(r) > 1e-3 * grid.grade_min * R1])
    return r[keep]


def solve_profile(
    params: ProfileParams,
    grid: ProfileGrid | None = None,
    tol: float = 1e-12,
    theta_relax: float = 1.0,
    max_iters: int = 2000,
) -> RadialProfile:
    """Compute the ground state on a radial grid.

    ``theta_relax`` is halved whenever the update norm grows, which only
    happens for unusual parameters; the scaled iteration normally contracts
    without damping.
    """
    grid = grid or ProfileGrid()
    if not 0.0 < theta_relax <= 1.0:
        raise DomainError("theta_relax must lie in (0, 1]")
    const = make_constants(params.s)
    s, gam = params.s, params.gamma
    n = grid.n_cheb
    tn = _cheb_nodes(n)
    vinv = np.linalg.inv(cheb.chebvander(2.0 * tn - 1.0, n - 1))
    A = _nystrom_rows(const, gam, n, vinv, np.append(tn, 1.0))
    An, a1 = A[:-1], A[-1]

    u = 2.0 - tn**2
    hist = []
    theta = theta_relax
    it = 0
    for it in range(1, max_iters + 1):
        gh = (np.maximum(u - 1.0, 0.0) / (1.0 - tn)) ** gam
        v1 = a1 @ gh
        if not np.any(gh > 0) or not v1 > 0:
            raise ConvergenceError(
                "support of (W - 1)_+ collapsed; start from a larger initial bump",
                best=None,
                history=hist,
            )
        un = (An @ gh) / v1
        diff = float(np.max(np.abs(un - u)))
        if hist and diff > hist[-1] and theta > 1e-3:
            theta *= 0.5
        hist.append(diff)
        u = (1.0 - theta) * u + theta * un
        if diff <= tol:
            break
    else:
        raise ConvergenceError(
            f"profile iteration stalled at update {hist[-1]:.3e} after {max_iters} sweeps",
            best=u,
            history=hist,
        )

    gh = (np.maximum(u - 1.0, 0.0) / (1.0 - tn)) ** gam
    v1 = float(a1 @ gh)
    R1 = v1 ** (-1.0 / (2.0 * s))
    t, w, om, _ = _fine_rule(2.0, s)
    P = cheb.chebvander(2.0 * t - 1.0, n - 1) @ vinv
    M = 2.0 * math.pi * R1**2 * float(np.sum(w * t * om**gam * (P @ gh)))

    scale = R1 ** (2.0 * s)
    W0 = scale * float(_nystrom_rows(const, gam, n, vinv, [0.0])[0] @ gh)
    radii = _output_grid(R1, M, const, grid, W0)
    tau = radii / R1
    values = scale * (_nystrom_rows(const, gam, n, vinv, tau) @ gh)

    # slopes by central differences of the Nystrom evaluation, step tied to the local spacing
    sp = np.diff(radii)
    local = np.minimum(np.append(sp, sp[-1]), np.insert(sp, 0, sp[0]))
    h = np.minimum(1e-3 * local, 1e-5 * np.maximum(radii, R1))
    h[0] = 0.0
    tp = (radii[1:] + h[1:]) / R1
    tm = (radii[1:] - h[1:]) / R1
    Wp = scale * (_nystrom_rows(const, gam, n, vinv, tp) @ gh)
    Wm = scale * (_nystrom_rows(const, gam, n, vinv, tm) @ gh)
    slopes = np.zeros_like(radii)
    slopes[1:] = (Wp - Wm) / (2.0 * h[1:])

    if np.any(np.diff(values) > 1e-12 * W0):
        log.warning("computed profile is not monotone on the output grid")
    prof = RadialProfile(
        params, radii, values, slopes, M, R1, it, tuple(hist), tn, gh, vinv,
        interpolate.CubicHermiteSpline(radii, values, slopes),
    )
    return prof


def nystrom_eval(profile: RadialProfile, r):
    """Evaluate ``G_s * (W - 1)_+^gamma`` at ``r`` directly from the solver state."""
    if not profile.has_solver_state:
        raise DomainError("profile was loaded from file; direct evaluation needs the solver state")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    n = profile._nodes.size
    rows = _nystrom_rows(profile.const, profile.gamma, n, profile._vinv, r / profile.R1)
    return profile.R1 ** (2.0 * profile.s) * (rows @ profile._ghat)


# -- derived quantities -----------------------------------------------------


def evaluate_profile(profile: RadialProfile, r, derivative: bool = False):
    """``W(r)`` (or ``W'(r)``) by cubic Hermite interpolation, tail model beyond ``r_N``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("profile radius must be nonnegative")
    spl = profile._spline
    inside = r <= profile.r_N
    out = np.empty(r.shape)
    ri = r[inside]
    out[inside] = spl(ri, 1) if derivative else spl(ri)
    ro = r[~inside]
    c = profile.M_gamma * profile.const.c2s
    e = profile.const.expo
    out[~inside] = c * e * ro ** (e - 1.0) if derivative else c * ro**e
    return float(out) if out.ndim == 0 else out


def mass_M_gamma(profile: RadialProfile, panels_per_cell: int = 1) -> float:
    """``2 pi int_0^R1 (W - 1)_+^gamma r dr`` by Gauss-Legendre on each grid cell."""
    r = profile.radii[profile.radii <= profile.R1]
    if r[-1] < profile.R1:
        r = np.append(r, profile.R1)
    x, w = np.polynomial.legendre.leggauss(8)
    lo, hi = r[:-1], r[1:]
    pts = 0.5 * (hi - lo)[:, None] * x + 0.5 * (hi + lo)[:, None]
    wts = 0.5 * (hi - lo)[:, None] * w
    f = np.maximum(evaluate_profile(profile, pts) - 1.0, 0.0) ** profile.gamma * pts
    return float(2.0 * math.pi * np.sum(wts * f))


def mu_from_kappa(M_gamma: float, params: ProfileParams, kappa: float) -> float:
    """Concentration scale with ``M_gamma * mu**e = kappa``.

    Only positive circulations are supported: the profile's threshold is
    fixed at ``+1``.
    """
    if not kappa > 0:
        raise DomainError("mu_from_kappa needs kappa > 0 (negative strengths are not supported)")
    if not M_gamma > 0:
        raise DomainError("M_gamma must be positive")
    e = params.mass_exponent
    if e == 0.0:
        raise DomainError("degenerate exponent: gamma = 1/(1-s)")
    return (kappa / M_gamma) ** (1.0 / e)


def tail_ratio(profile: RadialProfile, n: int = 64):
    """Range of ``W(r) r^(2-2s) / (M_gamma c2s)`` over ``r in [r_N/4, r_N/2]``."""
    r = np.geomspace(profile.r_N / 4.0, profile.r_N / 2.0, n)
    ratio = evaluate_profile(profile, r) * r ** (-profile.const.expo) / (profile.M_gamma * profile.const.c2s)
    return float(ratio.min()), float(ratio.max())


def self_consistency_residual(profile: RadialProfile, radii=None) -> float:
    """``max |W(r) - G_s * (W - 1)_+^gamma (r)|`` with the convolution done by adaptive quadrature.

    The right-hand side uses the interpolated profile, so this is independent
    of the solver's own quadrature. By default ``radii`` are cell midpoints,
    i.e. points that are not solve or grid nodes.
    """
    const = profile.const
    R1, gam = profile.R1, profile.gamma
    if radii is None:
        r = profile.radii[profile.radii <= 6.0 * R1]
        mids = 0.5 * (r[:-1] + r[1:])
        radii = mids[:: max(1, mids.size // 40)]
    radii = np.atleast_1d(np.asarray(radii, dtype=float))

    def f(rp):
        return max(evaluate_profile(profile, rp) - 1.0, 0.0) ** gam * rp

    worst = 0.0
    for r in radii:
        if r == 0.0:
            val, _ = integrate.quad(
                lambda rp: radial_green_row(const, 0.0, rp) * f(rp), 0.0, R1, epsabs=1e-13, epsrel=1e-12, limit=200
            )
        else:
            brk = sorted({0.0, min(r, R1), R1})
            val = 0.0
            for a, b in zip(brk[:-1], brk[1:]):
                v, _ = integrate.quad(
                    lambda rp: radial_green_row(const, r, rp) * f(rp), a, b, epsabs=1e-13, epsrel=1e-12, limit=200
                )
                val += v
        worst = max(worst, abs(evaluate_profile(profile, r) - val))
    return worst


# -- serialisation ----------------------------------------------------------


def format_float(x) -> str:
    return f"{float(x):.17g}"


def save_profile(profile: RadialProfile, path) -> None:
    """Two columns ``r W`` with a one-line header of parameters."""
    lines = [
        f"# s={format_float(profile.s)} gamma={format_float(profile.gamma)} "
        f"M_gamma={format_float(profile.M_gamma)} R1={format_float(profile.R1)}",
        "# r W",
    ]
    lines += [f"{format_float(a)} {format_float(b)}" for a, b in zip(profile.radii, profile.values)]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_profile(path) -> RadialProfile:
    """Read a profile file. Slopes are rebuilt with a monotone (PCHIP) fit."""
    with open(path, encoding="ascii") as fh:
        header = fh.readline()
    if not header.startswith("#"):
        raise DomainError("profile file lacks its parameter header")
    meta = dict(item.split("=", 1) for item in header[1:].split())
    data = np.loadtxt(path, comments="#")
    params = ProfileParams(float(meta["s"]), float(meta["gamma"]))
    radii, values = data[:, 0], data[:, 1]
    pchip = interpolate.PchipInterpolator(radii, values)
    slopes = pchip(radii, 1)
    return RadialProfile(
        params, radii, values, slopes, float(meta["M_gamma"]), float(meta["R1"]),
        _spline=interpolate.CubicHermiteSpline(radii, values, slopes),
    )
