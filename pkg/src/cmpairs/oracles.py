"""Slow reference evaluators kept independent of the q-series kernel.

The lattice sums are truncated to ``|m|, |n| <= M``. Square truncation leaves a
tail that decays only like ``M^-2`` (about 1e-6 relative at ``M = 300``), so by
default the sums are taken on a ladder of ``M`` values up to the requested
maximum and extrapolated to ``M -> oo`` with a polynomial in ``1/M``.
"""
from __future__ import annotations

import numpy as np

__all__ = ["lattice_sum_wp", "lattice_sum_zeta"]

_LADDER = (1 / 3, 5 / 12, 1 / 2, 2 / 3, 5 / 6, 1.0)


def _lattice(lat, M):
    m = np.arange(-M, M + 1, dtype=float)
    w = (2 * lat.omega1 * m[:, None] + 2 * lat.omega2 * m[None, :]).ravel()
    return w[w != 0]


def _extrapolate(fn, M, extrapolate):
    if not extrapolate:
        return fn(M)
    Ms = np.array(sorted({max(8, int(round(f * M))) for f in _LADDER}), dtype=float)
    vals = np.array([fn(int(Mi)) for Mi in Ms])
    A = np.column_stack([np.ones_like(Ms)] + [Ms ** (-k) for k in (2, 3, 4)])
    return complex(np.linalg.lstsq(A.astype(complex), vals, rcond=None)[0][0])


def lattice_sum_wp(lat, x, M=300, extrapolate=True):
    """``x^-2 + sum' [(x - w)^-2 - w^-2]`` over the truncated lattice."""
    x = complex(x)

    def fn(Mi):
        w = _lattice(lat, Mi)
        return 1 / x**2 + np.sum(1 / (x - w) ** 2 - 1 / w**2)

    return _extrapolate(fn, M, extrapolate)


def lattice_sum_zeta(lat, x, M=300, extrapolate=True):
    """``1/x + sum' [1/(x - w) + 1/w + x/w^2]`` over the truncated lattice."""
    x = complex(x)

    def fn(Mi):
        w = _lattice(lat, Mi)
        return 1 / x + np.sum(1 / (x - w) + 1 / w + x / w**2)

    return _extrapolate(fn, M, extrapolate)
