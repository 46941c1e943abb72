"""O(N^2) velocity and energy sums for regularised fractional vortices.

Every particle carries a circulation weight and a core radius (``0`` for a
point vortex). A pair interacts through
``G(r) = c2s * (r^2 + c^2)^(s - 1)`` with ``c^2 = (core_a^2 + core_b^2) / 2``,
which is symmetric in the pair and keeps the particle system Hamiltonian.
Pairs at zero distance with zero combined core are skipped (self terms).

Each routine has a numba and a numpy implementation; the dispatchers use
numba unless ``VORTEXWAVE_NUMBA=0``.
"""

import numpy as np

from . import _accel
from ._accel import njit


@njit(cache=True, fastmath=False)
def _all_pairs_numba(pos, w, core2, s, c2s):
    n = pos.shape[0]
    vel = np.zeros((n, 2))
    fac0 = c2s * (2.0 * s - 2.0)
    e = s - 2.0
    for i in range(n):
        xi = pos[i, 0]
        yi = pos[i, 1]
        ci = core2[i]
        wi = w[i]
        ax = 0.0
        ay = 0.0
        for j in range(i + 1, n):
            dx = xi - pos[j, 0]
            dy = yi - pos[j, 1]
            q = dx * dx + dy * dy + 0.5 * (ci + core2[j])
            if q == 0.0:
                continue
            f = fac0 * q**e
            # grad_x G = f * (dx, dy); perp(a) = (a2, -a1)
            gx = f * dy
            gy = -f * dx
            ax += w[j] * gx
            ay += w[j] * gy
            vel[j, 0] -= wi * gx
            vel[j, 1] -= wi * gy
        vel[i, 0] += ax
        vel[i, 1] += ay
    return vel


@njit(cache=True, fastmath=False)
def _targets_numba(tgt, tcore2, pos, w, core2, s, c2s):
    n = tgt.shape[0]
    m = pos.shape[0]
    vel = np.zeros((n, 2))
    fac0 = c2s * (2.0 * s - 2.0)
    e = s - 2.0
    for i in range(n):
        ax = 0.0
        ay = 0.0
        for j in range(m):
            dx = tgt[i, 0] - pos[j, 0]
            dy = tgt[i, 1] - pos[j, 1]
            q = dx * dx + dy * dy + 0.5 * (tcore2[i] + core2[j])
            if q == 0.0:
                continue
            f = w[j] * fac0 * q**e
            ax += f * dy
            ay -= f * dx
        vel[i, 0] = ax
        vel[i, 1] = ay
    return vel


@njit(cache=True, fastmath=False)
def _energy_numba(pos, w, core2, s, c2s):
    n = pos.shape[0]
    acc = 0.0
    for i in range(n):
        row = 0.0
        for j in range(i + 1, n):
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            q = dx * dx + dy * dy + 0.5 * (core2[i] + core2[j])
            if q == 0.0:
                continue
            row += w[j] * q ** (s - 1.0)
        acc += w[i] * row
    return c2s * acc


_CHUNK = 512


def _targets_numpy(tgt, tcore2, pos, w, core2, s, c2s):
    out = np.zeros((tgt.shape[0], 2))
    fac0 = c2s * (2.0 * s - 2.0)
    for a in range(0, tgt.shape[0], _CHUNK):
        d = tgt[a : a + _CHUNK, None, :] - pos[None, :, :]
        q = np.einsum("ijk,ijk->ij", d, d) + 0.5 * (tcore2[a : a + _CHUNK, None] + core2[None, :])
        with np.errstate(divide="ignore"):
            f = np.where(q > 0.0, fac0 * q ** (s - 2.0), 0.0) * w[None, :]
        out[a : a + _CHUNK, 0] = np.sum(f * d[..., 1], axis=1)
        out[a : a + _CHUNK, 1] = -np.sum(f * d[..., 0], axis=1)
    return out


def _all_pairs_numpy(pos, w, core2, s, c2s):
    return _targets_numpy(pos, core2, pos, w, core2, s, c2s)


def _energy_numpy(pos, w, core2, s, c2s):
    acc = 0.0
    n = pos.shape[0]
    for a in range(0, n, _CHUNK):
        d = pos[a : a + _CHUNK, None, :] - pos[None, :, :]
        q = np.einsum("ijk,ijk->ij", d, d) + 0.5 * (core2[a : a + _CHUNK, None] + core2[None, :])
        with np.errstate(divide="ignore"):
            g = np.where(q > 0.0, q ** (s - 1.0), 0.0)
        rows = np.arange(g.shape[0])
        g[rows, a + rows] = 0.0  # no self energy
        acc += float(w[a : a + _CHUNK] @ g @ w)
    return 0.5 * c2s * acc


def _prep(pos, w, core2):
    pos = np.ascontiguousarray(pos, dtype=float).reshape(-1, 2)
    w = np.ascontiguousarray(w, dtype=float).reshape(-1)
    core2 = np.zeros(pos.shape[0]) if core2 is None else np.ascontiguousarray(core2, dtype=float).reshape(-1)
    return pos, w, core2


def self_velocity(pos, w, core2, s, c2s, backend=None):
    """Velocity of every particle induced by all the others."""
    pos, w, core2 = _prep(pos, w, core2)
    fn = _all_pairs_numba if (backend or _accel.backend_name()) == "numba" else _all_pairs_numpy
    return fn(pos, w, core2, float(s), float(c2s))


def induced_velocity(targets, pos, w, core2, s, c2s, target_core2=None, backend=None):
    """Velocity at ``targets`` induced by the particles."""
    pos, w, core2 = _prep(pos, w, core2)
    tgt = np.ascontiguousarray(targets, dtype=float).reshape(-1, 2)
    tc = np.zeros(tgt.shape[0]) if target_core2 is None else np.ascontiguousarray(target_core2, dtype=float)
    fn = _targets_numba if (backend or _accel.backend_name()) == "numba" else _targets_numpy
    return fn(tgt, tc, pos, w, core2, float(s), float(c2s))


def pair_energy(pos, w, core2, s, c2s, backend=None):
    """``1/2 sum_{a != b} w_a w_b G(x_a, x_b)``."""
    pos, w, core2 = _prep(pos, w, core2)
    fn = _energy_numba if (backend or _accel.backend_name()) == "numba" else _energy_numpy
    return float(fn(pos, w, core2, float(s), float(c2s)))
