"""Fractional point vortices, concentrated vortex-wave states and blob dynamics."""

from .errors import ConvergenceError, DomainError, SingularityError, VortexWaveError
from .frac_kernel import KernelConstants, gamma_fn, green, grad_green, hess_green, make_constants, perp, velocity_kernel

__all__ = [
    "ConvergenceError",
    "DomainError",
    "SingularityError",
    "VortexWaveError",
    "KernelConstants",
    "gamma_fn",
    "green",
    "grad_green",
    "hess_green",
    "make_constants",
    "perp",
    "velocity_kernel",
]

__version__ = "0.1.0"
