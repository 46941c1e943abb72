"""Point vortices and vortex blobs advected by the fractional Biot-Savart law.

Blobs interact through ``c2s (r^2 + c^2)^(s-1)`` with the pair core
``c^2 = (core_a^2 + core_b^2) / 2`` (point vortices have zero core), so the
particle system stays Hamiltonian and the impulses below are conserved by
the exact flow. Time stepping is classical RK4 with a fixed step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ansatz import AnsatzConfig, LambdaSet, theta_field
from .equilibria import COLLISION_RTOL, PointVortex, VortexSystem
from .errors import DomainError, SingularityError
from .frac_kernel import KernelConstants
from .profile import RadialProfile

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Blob:
    pos: tuple
    w: float
    core: float

    def __post_init__(self):
        if not self.core > 0:
            raise DomainError("blob core must be positive")


@dataclass(frozen=True, eq=False)
class SimState:
    """Arrays of point vortices (``pv_*``) and blobs (``blob_*``) at time ``t``."""

    const: KernelConstants
    pv_pos: np.ndarray
    pv_kappa: np.ndarray
    blob_pos: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    blob_w: np.ndarray = field(default_factory=lambda: np.zeros(0))
    blob_core: np.ndarray = field(default_factory=lambda: np.zeros(0))
    t: float = 0.0

    def __post_init__(self):
        pp = np.array(self.pv_pos, dtype=float).reshape(-1, 2)
        pk = np.array(self.pv_kappa, dtype=float).reshape(-1)
        bp = np.array(self.blob_pos, dtype=float).reshape(-1, 2)
        bw = np.array(self.blob_w, dtype=float).reshape(-1)
        bc = np.array(self.blob_core, dtype=float).reshape(-1)
        if pp.shape[0] != pk.shape[0] or not (bp.shape[0] == bw.shape[0] == bc.shape[0]):
            raise DomainError("position and strength arrays differ in length")
        if np.any(pk == 0):
            raise DomainError("point vortex circulations must be nonzero")
        if np.any(bc <= 0):
            raise DomainError("blob cores must be positive")
        for name, val in (("pv_pos", pp), ("pv_kappa", pk), ("blob_pos", bp), ("blob_w", bw), ("blob_core", bc)):
            val.flags.writeable = False
            object.__setattr__(self, name, val)

    @classmethod
    def from_system(cls, sys: VortexSystem, t=0.0):
        return cls(sys.const, sys.positions, sys.strengths, t=t)

    @classmethod
    def from_lists(cls, const, vortices, blobs=(), t=0.0):
        vortices, blobs = list(vortices), list(blobs)
        return cls(
            const,
            [v.pos for v in vortices] or np.zeros((0, 2)),
            [v.kappa for v in vortices],
            [b.pos for b in blobs] or np.zeros((0, 2)),
            [b.w for b in blobs],
            [b.core for b in blobs],
            t,
        )

    @property
    def vortices(self):
        return [PointVortex(tuple(p), float(k)) for p, k in zip(self.pv_pos, self.pv_kappa)]

    @property
    def blobs(self):
        return [Blob(tuple(p), float(w), float(c)) for p, w, c in zip(self.blob_pos, self.blob_w, self.blob_core)]

    @property
    def n_points(self):
        return self.pv_pos.shape[0]

    @property
    def n_blobs(self):
        return self.blob_pos.shape[0]

    def packed(self):
        """Concatenated positions, weights and squared cores (points first)."""
        pos = np.vstack([self.pv_pos, self.blob_pos])
        w = np.concatenate([self.pv_kappa, self.blob_w])
        core2 = np.concatenate([np.zeros(self.n_points), self.blob_core**2])
        return pos, w, core2

    def with_positions(self, pos, t):
        p = self.n_points
        return SimState(self.const, pos[:p], self.pv_kappa, pos[p:], self.blob_w, self.blob_core, t)

    def negated(self):
        return SimState(self.const, self.pv_pos, -self.pv_kappa, self.blob_pos, -self.blob_w, self.blob_core, self.t)


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_end: float
    scheme: str = "rk4"

    def __post_init__(self):
        if not self.dt > 0 or self.t_end < 0:
            raise DomainError("need dt > 0 and t_end >= 0")
        if self.scheme != "rk4":
            raise DomainError(f"unknown scheme {self.scheme!r}")


def _check_points(pv_pos, scale_hint=1.0):
    n = pv_pos.shape[0]
    if n < 2:
        return
    d = pv_pos[:, None, :] - pv_pos[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
    r[np.diag_indices(n)] = np.inf
    scale = max(float(np.abs(pv_pos).max()), scale_hint)
    if r.min() < COLLISION_RTOL * scale:
        raise SingularityError("point vortices collided")


def _rates(state: SimState, pos):
    _, w, core2 = state.packed()
    return kernels.self_velocity(pos, w, core2, state.const.s, state.const.c2s)


def total_velocity(state: SimState, x, exclude: int | None = None):
    """Velocity at ``x`` from all blobs and point vortices, optionally skipping one vortex."""
    x = np.asarray(x, dtype=float).reshape(2)
    pos, w, core2 = state.packed()
    keep = np.ones(pos.shape[0], dtype=bool)
    if exclude is not None:
        if not 0 <= exclude < state.n_points:
            raise DomainError("exclude must index a point vortex")
        keep[exclude] = False
    pts = state.pv_pos[keep[: state.n_points]]
    if pts.size and np.any(np.all(pts == x, axis=1)):
        raise SingularityError("velocity requested at a point vortex that is not excluded")
    if not keep.any():
        return np.zeros(2)
    return kernels.induced_velocity(x[None], pos[keep], w[keep], core2[keep], state.const.s, state.const.c2s)[0]


def step(state: SimState, cfg: IntegratorConfig) -> SimState:
    """One RK4 step of size ``cfg.dt``."""
    pos0, _, _ = state.packed()
    if pos0.shape[0] == 0:
        return SimState(state.const, state.pv_pos, state.pv_kappa, state.blob_pos, state.blob_w, state.blob_core, state.t + cfg.dt)
    h = cfg.dt
    k1 = _rates(state, pos0)
    k2 = _rates(state, pos0 + 0.5 * h * k1)
    k3 = _rates(state, pos0 + 0.5 * h * k2)
    k4 = _rates(state, pos0 + h * k3)
    pos = pos0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_points(pos[: state.n_points])
    return state.with_positions(pos, state.t + h)


@dataclass(frozen=True)
class Invariants:
    H: float
    P: np.ndarray
    I: float


def invariants(state: SimState) -> Invariants:
    pos, w, core2 = state.packed()
    if pos.shape[0] == 0:
        return Invariants(0.0, np.zeros(2), 0.0)
    H = kernels.pair_energy(pos, w, core2, state.const.s, state.const.c2s)
    P = w @ pos
    I = float(w @ np.einsum("ij,ij->i", pos, pos))
    return Invariants(H, P, I)


def invariant_scales(state: SimState):
    """Magnitudes used to normalise drifts: ``|H|``, ``sum |w||x|``, ``sum |w||x|^2``."""
    pos, w, _ = state.packed()
    r = np.linalg.norm(pos, axis=1)
    aw = np.abs(w)
    inv = invariants(state)
    return max(abs(inv.H), 1e-300), max(float(aw @ r), 1e-300), max(float(aw @ r**2), 1e-300)


def relative_drift(inv0: Invariants, inv: Invariants, scales):
    sH, sP, sI = scales
    return (
        abs(inv.H - inv0.H) / sH,
        float(np.max(np.abs(inv.P - inv0.P))) / sP,
        abs(inv.I - inv0.I) / sI,
    )


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    invariants: list
    drift: np.ndarray  # (n_samples, 3): relative drift of H, P, I

    @property
    def final(self) -> SimState:
        return self.states[-1]

    @property
    def max_drift(self):
        return self.drift.max(axis=0)


def simulate(state0: SimState, cfg: IntegratorConfig, sample_every: int = 1, callback=None) -> Trajectory:
    """Integrate to ``t_end``; the last step is shortened to land exactly on it."""
    if state0.n_points + state0.n_blobs == 0:
        raise DomainError("empty initial state")
    _check_points(state0.pv_pos)
    n_full = int(np.floor(cfg.t_end / cfg.dt + 1e-9))
    rest = cfg.t_end - n_full * cfg.dt
    inv0 = invariants(state0)
    scales = invariant_scales(state0)
    states, invs, drifts, times = [state0], [inv0], [(0.0, 0.0, 0.0)], [state0.t]
    state = state0
    total = n_full + (1 if rest > 1e-12 * cfg.dt else 0)
    for n in range(1, total + 1):
        h = cfg.dt if n <= n_full else rest
        state = step(state, IntegratorConfig(h, cfg.t_end))
        if n % sample_every == 0 or n == total:
            inv = invariants(state)
            states.append(state)
            invs.append(inv)
            drifts.append(relative_drift(inv0, inv, scales))
            times.append(state.t)
            if callback is not None:
                callback(state, inv)
    tr = Trajectory(np.array(times), states, invs, np.array(drifts))
    log.info("simulated %d steps; max drift H=%.3e P=%.3e I=%.3e", total, *tr.max_drift)
    return tr


def rigid_motion_error(traj: Trajectory, U: float, omega: float) -> float:
    """Max distance of the point vortices from ``Q_{omega t} x(0) + (0, U t)``."""
    x0 = traj.states[0].pv_pos
    t0 = traj.states[0].t
    worst = 0.0
    for st in traj.states:
        t = st.t - t0
        c, s = np.cos(omega * t), np.sin(omega * t)
        rot = x0 @ np.array([[c, s], [-s, c]])
        pred = rot + np.array([0.0, U * t])
        worst = max(worst, float(np.max(np.linalg.norm(st.pv_pos - pred, axis=1))))
    return worst


def discretize_theta(
    cfg: AnsatzConfig, prof: RadialProfile, lambdas: LambdaSet, n_per_axis: int, support_factor: float = 1.05
) -> SimState:
    """Sample the approximate vorticity on a uniform grid around each wave.

    Each center gets an ``n_per_axis`` square grid over a disk of radius
    ``support_factor * eps * mu_j * R1`` (clipped to ``B_delta``); the weight
    is the midpoint value times the cell area and the core equals the cell
    width. The external vortices of ``cfg`` become point vortices.
    """
    if n_per_axis < 8:
        raise DomainError("n_per_axis must be at least 8")
    pos, w, core = [], [], []
    for j in range(cfg.k):
        rad = min(support_factor * cfg.eps * cfg.mus[j] * prof.R1, cfg.delta)
        h = 2.0 * rad / n_per_axis
        g = -rad + h * (np.arange(n_per_axis) + 0.5)
        X, Y = np.meshgrid(g, g, indexing="ij")
        p = cfg.centers[j] + np.column_stack([X.ravel(), Y.ravel()])
        p = p[np.linalg.norm(p - cfg.centers[j], axis=1) < cfg.delta]
        th = np.atleast_1d(theta_field(cfg, prof, lambdas, p))
        keep = th != 0.0
        pos.append(p[keep])
        w.append(th[keep] * h * h)
        core.append(np.full(int(keep.sum()), h))
    pos, w, core = np.vstack(pos), np.concatenate(w), np.concatenate(core)
    if pos.shape[0] == 0:
        raise DomainError("the sampled vorticity has empty support; refine n_per_axis")
    return SimState(cfg.const, cfg.ext_pos, cfg.ext_kappa, pos, w, core)


def blob_centroid(state: SimState):
    w = state.blob_w
    return (w @ state.blob_pos) / w.sum()


def radius_of_gyration(state: SimState):
    c = blob_centroid(state)
    d = state.blob_pos - c
    w = state.blob_w
    return float(np.sqrt((w @ np.einsum("ij,ij->i", d, d)) / w.sum()))
