"""Reduced dynamics of stuck pairs (BKP pole dynamics).

First-order form on the pair coordinates ``(x_i, alpha_i)``::

    dx_i/dt     = -6 alpha_i + 6 sum_j wp(x_i - x_j)
    dalpha_i/dt = -12 alpha_i sum_j wp'(x_i - x_j) + sum_j wp'''(x_i - x_j)

and the equivalent second-order equations for the positions alone.
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
    "ReducedState",
    "ReducedTangent",
    "reduced_rhs",
    "reduced_accel",
    "second_order_residual",
    "integrate_reduced",
    "residual_along",
]


@dataclass
class ReducedState:
    """Pair positions ``x`` and auxiliary momenta ``alpha``."""

    x: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.complex128).ravel()
        self.alpha = np.asarray(self.alpha, dtype=np.complex128).ravel()
        if self.x.shape != self.alpha.shape:
            raise LengthMismatch(f"{self.x.size} positions but {self.alpha.size} alphas")

    @property
    def n_pairs(self) -> int:
        return self.x.size

    def to_vector(self):
        return np.concatenate([self.x, self.alpha])

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v)
        n = v.size // 2
        return cls(v[:n], v[n:])


@dataclass
class ReducedTangent:
    dx: np.ndarray
    dalpha: np.ndarray

    def to_vector(self):
        return np.concatenate([self.dx, self.dalpha])


def _raise_if_collided(lat, mind):
    if mind <= lat.singular_radius:
        raise SingularArgument(f"pair positions collide (lattice distance {mind:.3g})")


def reduced_rhs(lat: Lattice, r: ReducedState) -> ReducedTangent:
    dx, da, mind = kernel.bkp_rhs(r.x, r.alpha, lat.params)
    _raise_if_collided(lat, mind)
    return ReducedTangent(np.asarray(dx), np.asarray(da))


def _tables(lat, x, nder):
    n = x.size
    tabs = np.zeros((nder + 1, n, n), dtype=np.complex128)
    if n > 1:
        iu, ju = np.triu_indices(n, 1)
        vals = wp_all(lat, x[iu] - x[ju], nder)
        for k in range(nder + 1):
            tabs[k, iu, ju] = vals[k]
            tabs[k, ju, iu] = vals[k] if k % 2 == 0 else -vals[k]
    return tabs


def reduced_accel(lat: Lattice, r: ReducedState):
    """Exact second time derivative of the positions along the reduced flow.

    Chain rule on ``dx_i = -6 alpha_i + 6 sum_j wp(x_ij)``; returns ``(xdot, xddot)``.
    """
    tg = reduced_rhs(lat, r)
    wp1 = _tables(lat, r.x, 1)[1]
    xd = tg.dx
    xdd = -6.0 * tg.dalpha + 6.0 * (wp1 * (xd[:, None] - xd[None, :])).sum(axis=1)
    return xd, xdd


def second_order_residual(lat: Lattice, x, xdot, xddot, form: str = "distinct"):
    """Residual of the second-order pole equations.

    ``form="distinct"``::

        xdd_i + 6 sum_j (xd_i + xd_j) wp'(x_ij) - 72 sum_{j,k distinct, !=i} wp(x_ij) wp'(x_ik)

    ``form="full"`` sums over all ``j, k != i`` (``j == k`` included) and adds
    ``6 sum_j wp'''(x_ij)``; the two agree because ``wp''' = 12 wp wp'``.
    """
    x = np.asarray(x, dtype=np.complex128).ravel()
    xd = np.asarray(xdot, dtype=np.complex128).ravel()
    xdd = np.asarray(xddot, dtype=np.complex128).ravel()
    if not (x.size == xd.size == xdd.size):
        raise LengthMismatch("x, xdot and xddot must have equal length")
    if form not in ("distinct", "full"):
        raise ValueError(f"unknown residual form {form!r}")
    tabs = _tables(lat, x, 3)
    wp0, wp1, wp3 = tabs[0], tabs[1], tabs[3]
    res = xdd + 6.0 * (wp1 * (xd[:, None] + xd[None, :])).sum(axis=1)
    s0 = wp0.sum(axis=1)
    s1 = wp1.sum(axis=1)
    if form == "full":
        return res - 72.0 * s0 * s1 + 6.0 * wp3.sum(axis=1)
    return res - 72.0 * (s0 * s1 - (wp0 * wp1).sum(axis=1))


def integrate_reduced(
    lat: Lattice,
    r0: ReducedState,
    t_end: float,
    tol: float = 1e-10,
    t_eval: Sequence[float] | None = None,
) -> Trajectory:
    def rhs(r):
        return reduced_rhs(lat, r)

    traj = integrate(rhs, r0, t_end, tol=tol, t_eval=t_eval,
                     pack=lambda o: o.to_vector(), unpack=ReducedState.from_vector)
    traj.meta.update(kind="reduced", n_pairs=r0.n_pairs)
    return traj


def residual_along(lat: Lattice, traj: Trajectory, form: str = "distinct"):
    """Max-abs second-order residual at each sample of a reduced trajectory."""
    out = []
    for r in traj.states:
        xd, xdd = reduced_accel(lat, r)
        out.append(np.max(np.abs(second_order_residual(lat, r.x, xd, xdd, form)), initial=0.0))
    return np.array(out)
