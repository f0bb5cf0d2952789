"""Weierstrass elliptic functions on an arbitrary complex lattice.

Everything is evaluated from theta-type q-series after reducing the argument
to the central period cell, so convergence is geometric in the nome
``q = exp(i pi omega2/omega1)``. The lattice is ``2 m omega1 + 2 n omega2``.

Arguments closer than ``Lattice.singular_radius`` to a lattice point are
refused with :class:`~cmpairs.errors.SingularArgument` rather than
approximated; callers are expected to treat that as a collision.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._backend import KernelParams, kernel
from .errors import AccuracyWarning, InvalidOrder, SingularArgument

__all__ = [
    "Lattice",
    "EllipticPoint",
    "wp",
    "wp_all",
    "wp_tower",
    "wp_regular",
    "laurent_coeffs",
    "zeta",
    "sigma",
    "phi",
    "dist_to_lattice",
]

MAX_SERIES_TERMS = 64
_SERIES_EPS = 1e-16


@dataclass(frozen=True, eq=False)
class Lattice:
    """Period lattice with cached series data.

    Parameters
    ----------
    omega1, omega2 : complex
        Half-periods, ``Im(omega2 / omega1) > 0``.
    series_terms : int, optional
        Truncation order of the q-series. Chosen adaptively when omitted.
    singular_radius : float, optional
        Exclusion radius around lattice points. Defaults to
        ``1e-6 * min(|2 omega1|, |2 omega2|)``.
    """

    omega1: complex
    omega2: complex
    series_terms: int | None = None
    singular_radius: float | None = None
    tau: complex = field(init=False)
    nome_q: complex = field(init=False)
    eta1: complex = field(init=False)
    eta2: complex = field(init=False)
    g2: complex = field(init=False)
    g3: complex = field(init=False)
    params: KernelParams = field(init=False, repr=False)

    def __post_init__(self):
        w1, w2 = complex(self.omega1), complex(self.omega2)
        if w1 == 0 or w2 == 0:
            raise ValueError("half-periods must be nonzero")
        tau = w2 / w1
        if not tau.imag > 0:
            raise ValueError(f"Im(omega2/omega1) must be positive, got tau={tau}")
        q = cmath.exp(1j * math.pi * tau)
        K = self.series_terms
        if K is None:
            K = 4
            while K < MAX_SERIES_TERMS and K**4 * abs(q) ** K > _SERIES_EPS:
                K += 1
            if K**4 * abs(q) ** K > _SERIES_EPS:
                warnings.warn(
                    f"q-series capped at {K} terms with |q|={abs(q):.3g}; "
                    "accuracy below double precision",
                    AccuracyWarning,
                    stacklevel=2,
                )
        K = int(K)
        if K < 1:
            raise ValueError("series_terms must be positive")
        rs = self.singular_radius
        if rs is None:
            rs = 1e-6 * min(abs(2 * w1), abs(2 * w2))

        n = np.arange(1, K + 1, dtype=float)
        qpow = q ** (2 * n)
        coef = qpow / (1.0 - qpow)
        k = math.pi / (2 * w1)
        eta1 = (math.pi**2 / (12 * w1)) * (1.0 - 24.0 * np.sum(n * coef))
        g2 = (4.0 / 3.0) * k**4 * (1.0 + 240.0 * np.sum(n**3 * coef))
        g3 = (8.0 / 27.0) * k**6 * (1.0 - 504.0 * np.sum(n**5 * coef))

        object.__setattr__(self, "omega1", w1)
        object.__setattr__(self, "omega2", w2)
        object.__setattr__(self, "series_terms", K)
        object.__setattr__(self, "singular_radius", float(rs))
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "nome_q", q)
        object.__setattr__(self, "eta1", complex(eta1))
        object.__setattr__(self, "g2", complex(g2))
        object.__setattr__(self, "g3", complex(g3))

        # eta2 from the zeta series at omega2 itself, so Legendre is a real check
        kp = KernelParams(w1, w2, tau.real, tau.imag, complex(eta1), 0j,
                          coef.astype(np.complex128), qpow.astype(np.complex128), float(rs))
        zr, m, _, _ = kernel.reduce_args(np.array([w2]), kp)
        v = k * zr[0]
        ser = np.sum(coef * np.sin(2 * n * v))
        eta2 = eta1 * zr[0] / w1 + k * (cmath.cos(v) / cmath.sin(v) + 4 * ser)
        eta2 = complex(eta2 + 2 * m[0] * eta1)
        object.__setattr__(self, "eta2", eta2)
        object.__setattr__(self, "params", kp._replace(eta2=eta2))

        leg = self.legendre_defect()
        if leg > 1e-9:
            raise ArithmeticError(f"Legendre relation violated by {leg:.3g}")

    @classmethod
    def square(cls, **kw):
        """The lemniscatic test lattice with periods (2, 2i)."""
        return cls(1.0, 1.0j, **kw)

    def legendre_defect(self):
        """``|eta1 omega2 - eta2 omega1 - i pi/2|``, relative to ``pi/2``."""
        return abs(self.eta1 * self.omega2 - self.eta2 * self.omega1 - 0.5j * math.pi) / (
            0.5 * math.pi
        )

    def periods(self):
        return 2 * self.omega1, 2 * self.omega2

    def to_dict(self):
        return {"omega1": [self.omega1.real, self.omega1.imag],
                "omega2": [self.omega2.real, self.omega2.imag]}


@dataclass(frozen=True)
class EllipticPoint:
    """A complex argument together with its distance to the lattice."""

    x: complex
    dist_to_lattice: float

    @classmethod
    def at(cls, lat: Lattice, x: complex) -> "EllipticPoint":
        return cls(complex(x), float(dist_to_lattice(lat, x)))

    def is_singular(self, lat: Lattice) -> bool:
        return self.dist_to_lattice <= lat.singular_radius


def _prep(x):
    arr = np.asarray(x, dtype=np.complex128)
    return arr.ravel(), arr.shape


def _out(vals, shape):
    vals = vals.reshape(shape)
    return complex(vals) if shape == () else vals


def _guard(dist, lat, what="x"):
    if dist.size and dist.min() <= lat.singular_radius:
        raise SingularArgument(
            f"{what} within {lat.singular_radius:.3g} of a lattice point "
            f"(distance {dist.min():.3g})"
        )


def dist_to_lattice(lat: Lattice, x):
    """Distance from ``x`` to the nearest lattice point."""
    flat, shape = _prep(x)
    dist = kernel.reduce_args(flat, lat.params)[3]
    dist = np.asarray(dist).reshape(shape)
    return float(dist) if shape == () else dist


def wp_all(lat: Lattice, x, nder: int = 3):
    """Stack of ``wp^(k)(x)`` for ``k = 0..nder`` (shape ``(nder+1,) + x.shape``)."""
    if nder not in (0, 1, 2, 3):
        raise InvalidOrder(f"derivative order must be in 0..3, got {nder}")
    flat, shape = _prep(x)
    vals, dist = kernel.wp_family(flat, lat.params, nder)
    _guard(dist, lat)
    return np.asarray(vals).reshape((nder + 1,) + shape)


def wp(lat: Lattice, x, order: int = 0):
    """Weierstrass wp or one of its first three derivatives."""
    if order not in (0, 1, 2, 3):
        raise InvalidOrder(f"derivative order must be in 0..3, got {order}")
    flat, shape = _prep(x)
    vals, dist = kernel.wp_family(flat, lat.params, order)
    _guard(dist, lat)
    return _out(np.asarray(vals[order]), shape)


def zeta(lat: Lattice, x):
    flat, shape = _prep(x)
    vals, dist = kernel.zeta_vals(flat, lat.params)
    _guard(dist, lat)
    return _out(np.asarray(vals), shape)


def sigma(lat: Lattice, x):
    """Weierstrass sigma; entire, so never raises."""
    flat, shape = _prep(x)
    sig, logf, _ = kernel.sigma_parts(flat, lat.params)
    return _out(np.asarray(sig) * np.exp(logf), shape)


def phi(lat: Lattice, x, lam, order: int = 0):
    """``d^order/dx^order`` of ``sigma(x+lam) exp(-zeta(lam) x) / (sigma(lam) sigma(x))``.

    ``x`` may be an array; ``lam`` is a scalar spectral parameter.
    """
    if order not in (0, 1, 2):
        raise InvalidOrder(f"phi derivative order must be in 0..2, got {order}")
    flat, shape = _prep(x)
    lam = complex(lam)
    kp = lat.params
    lam_arr = np.array([lam])
    s_l, lf_l, d_l = kernel.sigma_parts(lam_arr, kp)
    _guard(np.asarray(d_l), lat, "lambda")
    s_x, lf_x, d_x = kernel.sigma_parts(flat, kp)
    _guard(np.asarray(d_x), lat)
    s_xl, lf_xl, d_xl = kernel.sigma_parts(flat + lam, kp)
    z_l = np.asarray(kernel.zeta_vals(lam_arr, kp)[0])[0]
    val = np.asarray(s_xl) / (np.asarray(s_l)[0] * np.asarray(s_x))
    val = val * np.exp(np.asarray(lf_xl) - np.asarray(lf_l)[0] - np.asarray(lf_x) - z_l * flat)
    if order == 0:
        return _out(val, shape)
    _guard(np.asarray(d_xl), lat, "x + lambda")
    z_xl, _ = kernel.zeta_vals(flat + lam, kp)
    z_x, _ = kernel.zeta_vals(flat, kp)
    g = np.asarray(z_xl) - np.asarray(z_x) - z_l
    if order == 1:
        return _out(val * g, shape)
    w_xl = np.asarray(kernel.wp_family(flat + lam, kp, 0)[0][0])
    w_x = np.asarray(kernel.wp_family(flat, kp, 0)[0][0])
    return _out(val * (g * g + w_x - w_xl), shape)


def laurent_coeffs(lat: Lattice, nterms: int = 12):
    """Coefficients ``c_k`` of ``wp(z) = z^-2 + sum_{k>=2} c_k z^(2k-2)``, k = 2..nterms+1."""
    cache = lat.__dict__.setdefault("_laurent_cache", {})
    if nterms not in cache:
        c = {2: lat.g2 / 20.0, 3: lat.g3 / 28.0}
        for k in range(4, nterms + 2):
            c[k] = 3.0 / ((2 * k + 1) * (k - 3)) * sum(c[m] * c[k - m] for m in range(2, k - 1))
        cache[nterms] = np.array([c[k] for k in range(2, nterms + 2)], dtype=np.complex128)
    return cache[nterms].copy()


def _regular_poly(lat, order):
    """Powers and coefficients of the differentiated Laurent tail."""
    cache = lat.__dict__.setdefault("_regular_cache", {})
    if order not in cache:
        c = laurent_coeffs(lat, 24)
        pows, coefs = [], []
        for idx in range(len(c)):
            p = 2 * idx + 2
            if p - order >= 0:
                pows.append(p - order)
                coefs.append(c[idx] * math.prod(range(p - order + 1, p + 1)))
        cache[order] = (np.array(pows), np.array(coefs, dtype=np.complex128))
    return cache[order]


def wp_regular(lat: Lattice, x, order: int = 0):
    """``wp^(order)(x)`` with the pole part ``d^order/dx^order x^-2`` removed.

    Uses the Laurent series near the origin so there is no cancellation when
    ``x`` is tiny. Only meaningful for ``|x|`` well inside the central cell.
    """
    if order not in (0, 1, 2, 3):
        raise InvalidOrder(f"derivative order must be in 0..3, got {order}")
    flat, shape = _prep(x)
    rad = 0.25 * min(abs(2 * lat.omega1), abs(2 * lat.omega2))
    small = np.abs(flat) < rad
    out = np.empty_like(flat)
    if small.any():
        pows, coefs = _regular_poly(lat, order)
        z = flat[small]
        out[small] = (z[:, None] ** pows[None, :]) @ coefs
    if (~small).any():
        z = flat[~small]
        pole = (-1) ** order * math.factorial(order + 1) * z ** (-(order + 2))
        out[~small] = np.asarray(wp(lat, z, order)) - pole
    return _out(out, shape)


def wp_tower(lat: Lattice, x, kmax: int):
    """All derivatives ``wp^(k)(x)``, ``k = 0..kmax``, via ``wp'' = 6 wp^2 - g2/2``.

    Returns an array of shape ``(kmax+1,) + x.shape``.
    """
    flat, shape = _prep(x)
    base, dist = kernel.wp_family(flat, lat.params, 1)
    _guard(dist, lat)
    base = np.asarray(base)
    W = np.empty((max(kmax, 1) + 1, flat.size), dtype=np.complex128)
    W[0], W[1] = base[0], base[1]
    if kmax >= 2:
        W[2] = 6.0 * W[0] ** 2 - lat.g2 / 2.0
    for k in range(1, kmax - 1):
        # d^k of wp'' = 6 wp^2 - g2/2
        binom = np.array([math.comb(k, m) for m in range(k + 1)], dtype=float)
        W[k + 2] = 6.0 * np.einsum("m,mi,mi->i", binom, W[: k + 1], W[k::-1])
    return W[: kmax + 1].reshape((kmax + 1,) + shape)
