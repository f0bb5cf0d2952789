"""Elliptic Calogero-Moser particles sticking in pairs, and their reduced dynamics."""
from __future__ import annotations

from ._backend import kernel as _kernel
from .bkp import ReducedState, integrate_reduced, reduced_rhs, second_order_residual
from .dynamics import CMState, Tangent, flow_rhs, hamiltonians, integrate_flow
from .elliptic import EllipticPoint, Lattice, phi, sigma, wp, zeta
from .errors import (
    AccuracyWarning,
    CMPairsError,
    ConfigInvalid,
    EpsilonTooSmall,
    InvalidOrder,
    LengthMismatch,
    NoConvergence,
    OddParticleCount,
    SingularArgument,
    StepSizeUnderflow,
)
from .integrate import Trajectory, integrate
from .lax import SpectralScan, det, lax_bkp, lax_cm, lax_eps, spectral_limit
from .pair_manifold import beta_coeffs, embed, project, stickiness_report

__version__ = "0.1.0"
BACKEND = _kernel.NAME

__all__ = [
    "AccuracyWarning", "BACKEND", "CMPairsError", "CMState", "ConfigInvalid", "EllipticPoint",
    "EpsilonTooSmall", "InvalidOrder", "Lattice", "LengthMismatch", "NoConvergence",
    "OddParticleCount", "ReducedState", "SingularArgument", "SpectralScan", "StepSizeUnderflow",
    "Tangent", "Trajectory", "beta_coeffs", "det", "embed", "flow_rhs", "hamiltonians",
    "integrate", "integrate_flow", "integrate_reduced", "lax_bkp", "lax_cm", "lax_eps", "phi",
    "project", "reduced_rhs", "second_order_residual", "sigma", "spectral_limit",
    "stickiness_report", "wp", "zeta", "__version__",
]
