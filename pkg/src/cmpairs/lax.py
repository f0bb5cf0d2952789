"""Lax matrices, determinants and the spectral-curve limit.

Three matrices are built here: the CM Lax matrix, its block form on the
stuck-pair submanifold (entries kept through order eps), and the n x n
matrix for the reduced pair dynamics. ``det`` is a small LU with partial
pivoting; ``spectral_limit`` Richardson-extrapolates ``det(L_eps - z)`` to
``eps = 0``.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .bkp import ReducedState, reduced_rhs
from .dynamics import CMState, check_collisions
from .elliptic import Lattice, dist_to_lattice, phi, wp, wp_all
from .errors import NoConvergence, SingularArgument

__all__ = [
    "lax_cm",
    "lax_eps",
    "lax_bkp",
    "det",
    "eigenvalues",
    "match_multisets",
    "richardson",
    "spectral_limit",
    "default_ladder",
    "SpectralScan",
    "spectral_scan",
    "zero_locus_report",
]


def _check_lambda(lat, lam):
    if dist_to_lattice(lat, lam) <= lat.singular_radius:
        raise SingularArgument(f"spectral parameter {lam} lies on the lattice")


def _offdiag(n):
    return [(j, k) for j in range(n) for k in range(n) if j != k]


def lax_cm(lat: Lattice, s: CMState, lam: complex) -> np.ndarray:
    """``L_jk = p_j delta_jk + (1 - delta_jk) Phi(x_j - x_k, lam)``."""
    _check_lambda(lat, lam)
    check_collisions(lat, s.x)
    n = s.n_particles
    L = np.diag(s.p.astype(np.complex128))
    idx = _offdiag(n)
    if idx:
        j, k = np.array(idx).T
        L[j, k] = phi(lat, s.x[j] - s.x[k], lam)
    return L


def lax_eps(lat: Lattice, r: ReducedState, eps: float, lam: complex) -> np.ndarray:
    """Block Lax matrix on the pair submanifold, O(eps^2) entries dropped."""
    _check_lambda(lat, lam)
    check_collisions(lat, r.x)
    n = r.n_pairs
    w = complex(wp(lat, lam))
    L = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    for i in range(n):
        a = r.alpha[i]
        L[2 * i:2 * i + 2, 2 * i:2 * i + 2] = [
            [1 / eps + a * eps, -1 / eps + w * eps / 2],
            [1 / eps - w * eps / 2, -1 / eps - a * eps],
        ]
    idx = _offdiag(n)
    if idx:
        j, k = np.array(idx).T
        xjk = r.x[j] - r.x[k]
        f0 = np.asarray(phi(lat, xjk, lam, 0))
        f1 = np.asarray(phi(lat, xjk, lam, 1))
        for q, (i, l) in enumerate(idx):
            L[2 * i:2 * i + 2, 2 * l:2 * l + 2] = [
                [f0[q], f0[q] - eps * f1[q]],
                [f0[q] + eps * f1[q], f0[q]],
            ]
    return L


def lax_bkp(lat: Lattice, r: ReducedState, z: complex, lam: complex) -> np.ndarray:
    """n x n Lax matrix of the reduced pair dynamics.

    The diagonal sum uses ``wp(x_j - x_l)`` over ``l != j``.
    """
    _check_lambda(lat, lam)
    n = r.n_pairs
    xdot = reduced_rhs(lat, r).dx
    w = complex(wp(lat, lam))
    diag = -xdot - 3 * (z * z - w)
    M = np.zeros((n, n), dtype=np.complex128)
    if n > 1:
        iu, ju = np.triu_indices(n, 1)
        w0 = wp_all(lat, r.x[iu] - r.x[ju], 0)[0]
        s0 = np.zeros(n, dtype=np.complex128)
        np.add.at(s0, iu, w0)
        np.add.at(s0, ju, w0)
        diag = diag + 6 * s0
        j, k = np.array(_offdiag(n)).T
        xjk = r.x[j] - r.x[k]
        M[j, k] = -6 * np.asarray(phi(lat, xjk, lam, 1)) - 6 * z * np.asarray(phi(lat, xjk, lam, 0))
    M[np.diag_indices(n)] = diag
    return M


def det(m) -> complex:
    """Determinant by LU factorization with partial pivoting."""
    a = np.array(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"det needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    sign = 1.0
    logdet = 1.0 + 0j
    for c in range(n):
        piv = c + int(np.argmax(np.abs(a[c:, c])))
        if a[piv, c] == 0:
            return 0j
        if piv != c:
            a[[c, piv]] = a[[piv, c]]
            sign = -sign
        logdet *= a[c, c]
        if c + 1 < n:
            f = a[c + 1:, c] / a[c, c]
            a[c + 1:, c + 1:] -= np.outer(f, a[c, c + 1:])
    return complex(sign * logdet)


def eigenvalues(m) -> np.ndarray:
    return np.linalg.eigvals(np.asarray(m, dtype=np.complex128))


def match_multisets(a, b) -> float:
    """Largest pairing distance under the minimal-cost matching of two multisets."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ValueError("multisets differ in size")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max(initial=0.0))


def default_ladder(k: int = 6, eps0: float = 1e-2) -> list[float]:
    return [eps0 * 2.0**-j for j in range(k)]


def richardson(eps: Sequence[float], vals: Sequence[complex]):
    """Extrapolate ``vals(eps)`` to 0 assuming an even-power error expansion.

    ``eps`` must be a geometric ladder with ratio 2 (largest first). Returns
    ``(limit, order)``, with ``order`` the observed leading error exponent.
    """
    eps = np.asarray(eps, dtype=float)
    vals = np.asarray(vals, dtype=np.complex128)
    if eps.size < 4:
        raise ValueError("need at least 4 ladder entries")
    ratios = eps[:-1] / eps[1:]
    if not np.allclose(ratios, ratios[0], rtol=1e-9):
        raise ValueError("eps ladder must be geometric")
    rho = float(ratios[0])
    d = np.diff(vals)
    num, den = np.abs(d[:-1]), np.abs(d[1:])
    ok = den > 0
    if np.any(ok):
        order = float(np.median(np.log(num[ok] / den[ok]) / np.log(rho)))
    else:
        order = np.inf  # ladder values already identical
    # Full Richardson tableau. Entries built from small eps carry the most
    # roundoff (det cancels terms of size eps^-2), so the returned value is
    # the entry whose difference to its finer neighbour is smallest.
    table = [vals.copy()]
    for level in range(1, eps.size):
        prev = table[-1]
        f = rho ** (2 * level)
        table.append((f * prev[1:] - prev[:-1]) / (f - 1))
    best, limit = np.inf, complex(table[-1][0])
    for row in table[1:]:
        for i in range(row.size - 1):
            e = abs(row[i + 1] - row[i])
            if e < best:
                best, limit = e, complex(row[i + 1])
    if not order >= 1:
        raise NoConvergence(f"ladder values do not stabilize (order estimate {order:.3g})")
    return limit, order


def spectral_limit(
    lat: Lattice,
    r: ReducedState,
    z: complex,
    lam: complex,
    eps_ladder: Sequence[float] | None = None,
    return_details: bool = False,
):
    """``R(z, lam) = lim det(L_eps - z)`` by Richardson extrapolation."""
    ladder = sorted(eps_ladder or default_ladder(), reverse=True)
    n2 = 2 * r.n_pairs
    vals = [det(lax_eps(lat, r, e, lam) - z * np.eye(n2)) for e in ladder]
    limit, order = richardson(ladder, vals)
    if return_details:
        return limit, {"order": order, "ladder": ladder, "values": vals,
                       "max_abs": float(np.max(np.abs(vals)))}
    return limit


@dataclass
class SpectralScan:
    z_grid: list
    lambda_grid: list
    det_values: np.ndarray
    eps_ladder: list | None = None
    extrapolated: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.det_values = np.asarray(self.det_values, dtype=np.complex128)
        if self.det_values.shape != (len(self.z_grid), len(self.lambda_grid)):
            raise ValueError("det_values shape must be (|z_grid|, |lambda_grid|)")

    def rows(self):
        tag = "extrapolated" if self.extrapolated else (
            repr(self.eps_ladder[0]) if self.eps_ladder else "")
        for a, z in enumerate(self.z_grid):
            for b, lam in enumerate(self.lambda_grid):
                v = self.det_values[a, b]
                yield [repr(z.real), repr(z.imag), repr(lam.real), repr(lam.imag),
                       repr(v.real), repr(v.imag), tag]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re_z", "im_z", "re_lambda", "im_lambda", "re_det", "im_det", "eps"])
            w.writerows(self.rows())

    def to_dict(self):
        return {
            "z_grid": [[z.real, z.imag] for z in self.z_grid],
            "lambda_grid": [[l.real, l.imag] for l in self.lambda_grid],
            "det_values": [[[v.real, v.imag] for v in row] for row in self.det_values],
            "eps_ladder": self.eps_ladder,
            "extrapolated": self.extrapolated,
            "meta": self.meta,
        }

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))


def _scan_one(args):
    lat, r, z, lam, ladder, kind = args
    if kind == "limit":
        return spectral_limit(lat, r, z, lam, ladder)
    return det(lax_bkp(lat, r, z, lam))


def spectral_scan(
    lat: Lattice,
    r: ReducedState,
    z_grid: Sequence[complex],
    lambda_grid: Sequence[complex],
    eps_ladder: Sequence[float] | None = None,
    kind: str = "limit",
    jobs: int = 1,
) -> SpectralScan:
    """Grid of ``R(z, lam)`` (``kind="limit"``) or ``det Lbkp`` (``kind="bkp"``)."""
    if kind not in ("limit", "bkp"):
        raise ValueError(f"unknown scan kind {kind!r}")
    z_grid = [complex(z) for z in z_grid]
    lambda_grid = [complex(l) for l in lambda_grid]
    ladder = sorted(eps_ladder or default_ladder(), reverse=True)
    tasks = [(lat, r, z, lam, ladder, kind) for z in z_grid for lam in lambda_grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            vals = list(ex.map(_scan_one, tasks))
    else:
        vals = [_scan_one(t) for t in tasks]
    grid = np.array(vals, dtype=np.complex128).reshape(len(z_grid), len(lambda_grid))
    return SpectralScan(z_grid, lambda_grid, grid,
                        eps_ladder=ladder if kind == "limit" else None,
                        extrapolated=kind == "limit", meta={"kind": kind})


def _poly_in_z(f, degree, radius=1.0):
    """Coefficients (highest first) of a polynomial in ``z`` from samples on a circle."""
    m = degree + 1
    nodes = radius * np.exp(2j * np.pi * np.arange(m) / m)
    vals = np.array([f(z) for z in nodes])
    c = np.fft.fft(vals) / m  # c[k] is the z^k coefficient times radius^k
    c = c / radius ** np.arange(m)
    return c[::-1]


def zero_locus_report(lat: Lattice, r: ReducedState, lambdas: Sequence[complex],
                      eps_ladder: Sequence[float] | None = None) -> dict:
    """Compare the z-roots of ``R(z, lam)`` and of ``det Lbkp(z, lam)``.

    ``R`` has degree ``2n`` in ``z`` and ``det Lbkp`` degree ``2n`` as well,
    so both root sets have ``2n`` points and are matched as multisets.
    """
    n = r.n_pairs
    rows = []
    for lam in lambdas:
        lam = complex(lam)
        cr = _poly_in_z(lambda z: spectral_limit(lat, r, z, lam, eps_ladder), 2 * n)
        cb = _poly_in_z(lambda z: det(lax_bkp(lat, r, z, lam)), 2 * n)
        roots_r = np.roots(cr)
        roots_b = np.roots(cb)
        rows.append({
            "lambda": [lam.real, lam.imag],
            "roots_R": [[z.real, z.imag] for z in np.sort_complex(roots_r)],
            "roots_det_bkp": [[z.real, z.imag] for z in np.sort_complex(roots_b)],
            "max_root_distance": match_multisets(roots_r, roots_b),
            "leading_ratio": [complex(cb[0] / cr[0]).real, complex(cb[0] / cr[0]).imag],
        })
    dist = [row["max_root_distance"] for row in rows]
    return {
        "n_pairs": n,
        "rows": rows,
        "max_root_distance": max(dist) if dist else None,
        "note": "experiment only; no pass threshold",
    }
