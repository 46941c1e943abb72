"""Gamma function and the planar Green's kernel of the fractional Laplacian.

The kernel is ``G_s(x, y) = c2s * |x - y|**(2s - 2)`` with
``c2s = Gamma(1 - s) / (pi * 4**s * Gamma(s))``. Velocities use the clockwise
perpendicular ``(a1, a2)^perp = (a2, -a1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularityError

# Lanczos approximation, g = 7, nine terms.
_LANCZOS_G = 7.0
_LANCZOS_P = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _lanczos(x):
    # valid for x >= 0.5
    z = x - 1.0
    acc = _LANCZOS_P[0]
    for k in range(1, len(_LANCZOS_P)):
        acc += _LANCZOS_P[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return _SQRT_2PI * t ** (z + 0.5) * math.exp(-t) * acc


def gamma_fn(x: float) -> float:
    """Gamma function for ``x > 0`` (Lanczos with reflection below 1/2)."""
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise DomainError(f"gamma_fn requires a finite x > 0, got {x!r}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * _lanczos(1.0 - x))
    return _lanczos(x)


@dataclass(frozen=True)
class KernelConstants:
    s: float
    c2s: float

    @property
    def expo(self) -> float:
        """Exponent ``2s - 2`` of the kernel."""
        return 2.0 * self.s - 2.0


def check_order(s) -> float:
    s = float(s)
    if not (0.0 < s < 1.0):
        raise DomainError(f"fractional order must satisfy 0 < s < 1, got {s!r}")
    return s


def make_constants(s: float) -> KernelConstants:
    s = check_order(s)
    c2s = gamma_fn(1.0 - s) / (math.pi * 4.0 ** s * gamma_fn(s))
    return KernelConstants(s=s, c2s=c2s)


def perp(a):
    """Clockwise rotation by pi/2 of the last axis: (a1, a2) -> (a2, -a1)."""
    a = np.asarray(a, dtype=float)
    return np.stack([a[..., 1], -a[..., 0]], axis=-1)


def _separation(x, y):
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if d.shape[-1] != 2:
        raise DomainError("points must have a trailing dimension of size 2")
    r2 = np.einsum("...i,...i->...", d, d)
    if np.any(r2 == 0.0):
        raise SingularityError("kernel evaluated at coincident points")
    return d, r2


def green(const: KernelConstants, x, y):
    """``G_s(x, y)``; broadcasts over leading axes."""
    _, r2 = _separation(x, y)
    out = const.c2s * r2 ** (const.s - 1.0)
    return float(out) if np.ndim(out) == 0 else out


def grad_green(const: KernelConstants, x, y):
    """Gradient of ``G_s`` with respect to ``x``."""
    d, r2 = _separation(x, y)
    fac = const.c2s * const.expo * r2 ** (const.s - 2.0)
    return fac[..., None] * d


def hess_green(const: KernelConstants, x, y):
    """Hessian of ``G_s`` with respect to ``x`` (shape ``(..., 2, 2)``)."""
    d, r2 = _separation(x, y)
    fac = const.c2s * const.expo * r2 ** (const.s - 2.0)
    outer = d[..., :, None] * d[..., None, :] / r2[..., None, None]
    eye = np.eye(2)
    return fac[..., None, None] * (eye + (2.0 * const.s - 4.0) * outer)


def velocity_kernel(const: KernelConstants, kappa, x, y):
    """Velocity at ``x`` induced by a point vortex of circulation ``kappa`` at ``y``."""
    return np.asarray(kappa, dtype=float)[..., None] * perp(grad_green(const, x, y))
