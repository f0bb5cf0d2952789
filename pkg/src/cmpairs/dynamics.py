"""Phase space, Hamiltonians and commuting flows of the elliptic CM system.

Conventions::

    H1 = -sum p_i
    H2 = sum p_i^2 - sum_{i!=j} wp(x_i - x_j)
    H3 = -sum p_i^3 + 3 sum_{i!=j} p_i wp(x_i - x_j)

and the flow ``t_a`` is ``dx_i/dt_a = dH_a/dp_i``, ``dp_i/dt_a = -dH_a/dx_i``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._backend import kernel
from .elliptic import Lattice, wp_all
from .errors import LengthMismatch, SingularArgument
from .integrate import Trajectory, integrate

__all__ = [
    "CMState",
    "Tangent",
    "hamiltonians",
    "flow_rhs",
    "integrate_flow",
    "check_collisions",
]


@dataclass
class CMState:
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.complex128).ravel()
        self.p = np.asarray(self.p, dtype=np.complex128).ravel()
        if self.x.shape != self.p.shape:
            raise LengthMismatch(f"{self.x.size} coordinates but {self.p.size} momenta")

    @property
    def n_particles(self) -> int:
        return self.x.size

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.p])

    @classmethod
    def from_vector(cls, v) -> "CMState":
        v = np.asarray(v)
        n = v.size // 2
        return cls(v[:n], v[n:])

    def shifted(self, c: complex) -> "CMState":
        return CMState(self.x + c, self.p.copy())


@dataclass
class Tangent:
    dx: np.ndarray
    dp: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.dx, self.dp])


def check_collisions(lat: Lattice, x) -> float:
    """Smallest lattice distance among pairwise differences; raises on collision."""
    x = np.asarray(x, dtype=np.complex128)
    if x.size < 2:
        return np.inf
    iu, ju = np.triu_indices(x.size, 1)
    d = np.asarray(kernel.reduce_args(x[iu] - x[ju], lat.params)[3])
    mind = float(d.min())
    if mind <= lat.singular_radius:
        raise SingularArgument(f"particles collide (lattice distance {mind:.3g})")
    return mind


def hamiltonians(lat: Lattice, s: CMState) -> tuple[complex, complex, complex]:
    """``(H1, H2, H3)`` at the state ``s``."""
    x, p = s.x, s.p
    h1 = -p.sum()
    h2 = (p * p).sum()
    h3 = -(p**3).sum()
    if x.size > 1:
        iu, ju = np.triu_indices(x.size, 1)
        w = wp_all(lat, x[iu] - x[ju], 0)[0]
        h2 = h2 - 2.0 * w.sum()
        h3 = h3 + 3.0 * ((p[iu] + p[ju]) * w).sum()
    return complex(h1), complex(h2), complex(h3)


def flow_rhs(lat: Lattice, a: int, s: CMState) -> Tangent:
    """Vector field of the ``t_a`` flow, ``a`` in {1, 2, 3}."""
    if a not in (1, 2, 3):
        raise ValueError(f"flow index must be 1, 2 or 3, got {a}")
    dx, dp, mind = kernel.cm_rhs(s.x, s.p, a, lat.params)
    if mind <= lat.singular_radius:
        raise SingularArgument(f"particles collide (lattice distance {mind:.3g})")
    return Tangent(np.asarray(dx), np.asarray(dp))


def integrate_flow(
    lat: Lattice,
    a: int,
    s0: CMState,
    t_end: float,
    tol: float = 1e-10,
    t_eval: Sequence[float] | None = None,
    direction: float = 1.0,
) -> Trajectory:
    """Integrate the ``t_a`` flow; ``direction=-1`` runs the reversed field."""
    check_collisions(lat, s0.x)

    def rhs(s):
        tg = flow_rhs(lat, a, s)
        return Tangent(direction * tg.dx, direction * tg.dp)

    traj = integrate(rhs, s0, t_end, tol=tol, t_eval=t_eval,
                     pack=lambda o: o.to_vector(), unpack=CMState.from_vector)
    traj.meta.update(kind="full", flow=a, n_particles=s0.n_particles)
    return traj
