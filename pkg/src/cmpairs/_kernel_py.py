"""Pure numpy implementation of the hot elliptic kernels.

This is the fallback used when the compiled ``_ckernel`` extension is not
built. Both modules expose the same functions with the same signatures; the
test-suite runs every kernel test against each available backend.

All functions take a :class:`KernelParams` tuple produced by
:class:`cmpairs.elliptic.Lattice` and operate on 1-d complex128 arrays.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

NAME = "python"


class KernelParams(NamedTuple):
    w1: complex
    w2: complex
    tau_re: float
    tau_im: float
    eta1: complex
    eta2: complex
    coef: np.ndarray  # q^{2n} / (1 - q^{2n}), n = 1..K
    qpow: np.ndarray  # q^{2n}, n = 1..K
    rsing: float


def reduce_args(z, kp):
    """Split ``z`` as ``zr + 2 m w1 + 2 n w2`` with ``zr`` in the central cell.

    Returns ``(zr, m, n, dist)`` where ``dist`` is the distance from ``z`` to the
    nearest lattice point.
    """
    z = np.asarray(z, dtype=np.complex128)
    t = z / (2.0 * kp.w1)
    b = t.imag / kp.tau_im
    a = t.real - b * kp.tau_re
    m = np.rint(a)
    n = np.rint(b)
    zr = z - 2.0 * m * kp.w1 - 2.0 * n * kp.w2
    dist = np.full(z.shape, np.inf)
    for i in range(-2, 3):
        for j in range(-2, 3):
            dist = np.minimum(dist, np.abs(zr - 2.0 * i * kp.w1 - 2.0 * j * kp.w2))
    return zr, m, n, dist


def wp_family(z, kp, nder=3):
    """Return ``(vals, dist)``; ``vals[k]`` is the k-th derivative of wp at ``z``.

    Singular points (``dist <= rsing``) come back as nan.
    """
    zr, _, _, dist = reduce_args(z, kp)
    bad = dist <= kp.rsing
    zr = np.where(bad, 0.5 * kp.w1, zr)
    k = np.pi / (2.0 * kp.w1)
    v = k * zr
    s = np.sin(v)
    csc2 = 1.0 / (s * s)
    cot = np.cos(v) / s
    nn = np.arange(1, len(kp.coef) + 1, dtype=float)
    ang = 2.0 * np.outer(v, nn)
    cos_n = np.cos(ang)
    out = np.empty((nder + 1, zr.size), dtype=np.complex128)
    out[0] = -kp.eta1 / kp.w1 + k**2 * (csc2 - 8.0 * (cos_n @ (nn * kp.coef)))
    if nder >= 1:
        sin_n = np.sin(ang)
        out[1] = k**3 * (-2.0 * csc2 * cot + 16.0 * (sin_n @ (nn**2 * kp.coef)))
    if nder >= 2:
        out[2] = k**4 * (6.0 * csc2 * csc2 - 4.0 * csc2 + 32.0 * (cos_n @ (nn**3 * kp.coef)))
    if nder >= 3:
        out[3] = k**5 * (
            -24.0 * csc2 * csc2 * cot + 8.0 * csc2 * cot - 64.0 * (sin_n @ (nn**4 * kp.coef))
        )
    out[:, bad] = np.nan
    return out, dist


def zeta_vals(z, kp):
    zr, m, n, dist = reduce_args(z, kp)
    bad = dist <= kp.rsing
    zr = np.where(bad, 0.5 * kp.w1, zr)
    k = np.pi / (2.0 * kp.w1)
    v = k * zr
    nn = np.arange(1, len(kp.coef) + 1, dtype=float)
    ser = np.sin(2.0 * np.outer(v, nn)) @ kp.coef
    val = kp.eta1 * zr / kp.w1 + k * (np.cos(v) / np.sin(v) + 4.0 * ser)
    val = val + 2.0 * m * kp.eta1 + 2.0 * n * kp.eta2
    val[bad] = np.nan
    return val, dist


def sigma_parts(z, kp):
    """Return ``(sigma_red, log_factor, dist)`` with ``sigma(z) = sigma_red * exp(log_factor)``."""
    zr, m, n, dist = reduce_args(z, kp)
    k = np.pi / (2.0 * kp.w1)
    v = k * zr
    e2 = np.exp(2j * v)
    qp = kp.qpow[None, :]
    fac = (1.0 - qp * e2[:, None]) * (1.0 - qp / e2[:, None]) / (1.0 - qp) ** 2
    sig = np.exp(kp.eta1 * zr * zr / (2.0 * kp.w1)) * np.sin(v) / k * np.prod(fac, axis=1)
    logf = (2.0 * m * kp.eta1 + 2.0 * n * kp.eta2) * (zr + m * kp.w1 + n * kp.w2)
    logf = logf + 1j * np.pi * (m + n + m * n)
    return sig, logf, dist


def _pair_tables(x, kp, nder):
    """Symmetric wp and antisymmetric wp' (and wp''') tables over particle pairs."""
    nx = x.size
    iu, ju = np.triu_indices(nx, 1)
    vals, dist = wp_family(x[iu] - x[ju], kp, nder)
    mind = dist.min() if dist.size else np.inf
    tabs = []
    for k in range(nder + 1):
        t = np.zeros((nx, nx), dtype=np.complex128)
        t[iu, ju] = vals[k]
        t[ju, iu] = vals[k] if k % 2 == 0 else -vals[k]
        tabs.append(t)
    return tabs, mind


def cm_rhs(x, p, flow, kp):
    """Vector field of the CM flow ``flow`` in {1, 2, 3}; returns ``(dx, dp, mindist)``."""
    x = np.asarray(x, dtype=np.complex128)
    p = np.asarray(p, dtype=np.complex128)
    if flow == 1:
        return -np.ones_like(x), np.zeros_like(p), np.inf
    (wp0, wp1), mind = _pair_tables(x, kp, 1)
    if flow == 2:
        return 2.0 * p, 2.0 * wp1.sum(axis=1), mind
    dx = -3.0 * p * p + 3.0 * wp0.sum(axis=1)
    dp = -3.0 * (p * wp1.sum(axis=1) + wp1 @ p)
    return dx, dp, mind


def bkp_rhs(x, alpha, kp):
    """Reduced pair dynamics; returns ``(dx, dalpha, mindist)``."""
    x = np.asarray(x, dtype=np.complex128)
    alpha = np.asarray(alpha, dtype=np.complex128)
    (wp0, wp1, _, wp3), mind = _pair_tables(x, kp, 3)
    dx = -6.0 * alpha + 6.0 * wp0.sum(axis=1)
    da = -12.0 * alpha * wp1.sum(axis=1) + wp3.sum(axis=1)
    return dx, da, mind
