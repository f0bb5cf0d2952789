"""Configurations where 2n CM particles stick together in pairs.

Particles ``2i-1`` and ``2i`` (0-based ``2i``, ``2i+1``) form pair ``i``, with
separation exactly ``eps`` (gauge delta_i = 1) and momenta::

    p_a = 1/eps + alpha eps + beta eps^2,   p_b = -1/eps - alpha eps + beta eps^2,
    beta = beta0 + beta2 eps^2  (beta1 vanishes in this gauge)

Besides embedding and projection this module integrates the *full* t3 flow
in pair-adapted coordinates ``(X, S, A, B)``::

    x_a = X,  x_b = X + eps + eps^3 S,
    p_a - p_b = 2/eps + 2 eps A,  p_a + p_b = 2 eps^2 B

which is an exact affine change of variables. Evaluated naively, the flow on
such states cancels terms of size ``eps^-4`` and loses all digits below
``eps ~ 1e-3``; here every such cancellation is carried out analytically,
with Taylor expansions of wp around the inter-pair separations.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._backend import kernel
from .bkp import ReducedState
from .dynamics import CMState, Tangent, check_collisions, flow_rhs
from .elliptic import Lattice, wp_all, wp_regular, wp_tower
from .errors import EpsilonTooSmall, OddParticleCount
from .integrate import Trajectory, dopri5

__all__ = [
    "ReducedState",
    "PairEmbedding",
    "beta_coeffs",
    "closure_terms",
    "alpha_rate_closure",
    "embed",
    "project",
    "PairFrame",
    "integrate_pairs_t3",
    "t0_rates",
    "stickiness_report",
    "loglog_slope",
]

_TAYLOR_ORDER = 40


@dataclass
class PairEmbedding:
    epsilon: float | None
    beta0: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray

    def beta(self, eps: float):
        return self.beta0 + self.beta1 * eps + self.beta2 * eps**2


def _pair_tables(lat, x, nder):
    n = x.size
    tabs = np.zeros((nder + 1, n, n), dtype=np.complex128)
    if n > 1:
        iu, ju = np.triu_indices(n, 1)
        vals = wp_all(lat, x[iu] - x[ju], nder)
        for k in range(nder + 1):
            tabs[k, iu, ju] = vals[k]
            tabs[k, ju, iu] = vals[k] if k % 2 == 0 else -vals[k]
    return tabs


def closure_terms(lat: Lattice, x, alpha, delta):
    """Order-by-order closure data for general pair separations ``eps*delta``.

    Returns a dict with ``beta0`` (making ``d delta/dt = 0``), ``beta1`` and
    ``beta2`` solving the order eps^2 and eps^3 consistency conditions, and
    the resulting ``alpha_dot``. Only used to cross-check the gauge-fixed
    formulas.
    """
    x = np.asarray(x, dtype=np.complex128)
    a = np.asarray(alpha, dtype=np.complex128)
    d = np.asarray(delta, dtype=np.complex128)
    _, w1, w2, w3 = _pair_tables(lat, x, 3)
    beta0 = -0.5 * d**2 * w1.sum(axis=1)
    beta1 = 0.25 * d**2 * (w2 * (d[None, :] - d[:, None])).sum(axis=1)
    coef = 2 * d[:, None] ** 2 + 3 * d[None, :] ** 2 - 3 * d[:, None] * d[None, :]
    beta2 = -(24 * a * beta0 * d + d**2 * (coef * w3).sum(axis=1)) / 24.0
    alpha_dot = (
        -6 * a * w1.sum(axis=1)
        - 1.5 * ((1 / d[:, None] - 1 / d[None, :]) * d[None, :] ** 2 * w3).sum(axis=1)
        - 12 * beta2 / d**3
    )
    delta_dot = 12 * beta0 / d + 6 * d * w1.sum(axis=1)
    return {"beta0": beta0, "beta1": beta1, "beta2": beta2,
            "alpha_dot": alpha_dot, "delta_dot": delta_dot}


def beta_coeffs(lat: Lattice, r: ReducedState, eps: float | None = None) -> PairEmbedding:
    """Momentum-ansatz coefficients in the gauge delta_i = 1."""
    _, w1, _, w3 = _pair_tables(lat, r.x, 3)
    beta0 = -0.5 * w1.sum(axis=1)
    beta2 = -r.alpha * beta0 - w3.sum(axis=1) / 12.0
    return PairEmbedding(eps, beta0, np.zeros_like(beta0), beta2)


def alpha_rate_closure(lat: Lattice, r: ReducedState):
    """alpha_dot from the order-eps^3 momentum equation with beta2 substituted."""
    return closure_terms(lat, r.x, r.alpha, np.ones(r.n_pairs))["alpha_dot"]


def _check_eps(lat, eps):
    if not eps > 10 * lat.singular_radius:
        raise EpsilonTooSmall(
            f"eps={eps:.3g} must exceed 10 * singular_radius = {10 * lat.singular_radius:.3g}"
        )


def embed(lat: Lattice, r: ReducedState, eps: float) -> CMState:
    """Full 2n-particle state on the stuck-pair submanifold."""
    _check_eps(lat, eps)
    b = beta_coeffs(lat, r, eps).beta(eps)
    n = r.n_pairs
    x = np.empty(2 * n, dtype=np.complex128)
    p = np.empty(2 * n, dtype=np.complex128)
    x[0::2] = r.x
    x[1::2] = r.x + eps
    p[0::2] = 1 / eps + r.alpha * eps + b * eps**2
    p[1::2] = -1 / eps - r.alpha * eps + b * eps**2
    check_collisions(lat, x)
    return CMState(x, p)


def project(s: CMState, eps: float, separation: str = "nominal") -> ReducedState:
    """Pair coordinates of a full state.

    ``alpha_i = ((p_a - p_b)/2 - 1/eps)/eps`` by default. With
    ``separation="actual"`` the ``1/eps`` is replaced by ``1/(x_b - x_a)``;
    along the t3 flow the separation drifts by O(eps^3), which shifts the
    nominal alpha by O(1) but leaves the actual-separation alpha O(eps^2)
    close to the reduced flow.
    """
    if s.n_particles % 2:
        raise OddParticleCount(f"cannot pair {s.n_particles} particles")
    if separation not in ("nominal", "actual"):
        raise ValueError(f"separation must be 'nominal' or 'actual', got {separation!r}")
    pa, pb = s.p[0::2], s.p[1::2]
    inv = 1 / eps if separation == "nominal" else 1 / (s.x[1::2] - s.x[0::2])
    return ReducedState(s.x[0::2].copy(), ((pa - pb) / 2 - inv) / eps)


def _pow_m1(s, p):
    """``(1 + s)^p - 1`` without cancellation for small ``s``."""
    s = np.asarray(s, dtype=np.complex128)
    out = np.empty_like(s)
    small = np.abs(s) < 1e-2
    if small.any():
        z = s[small]
        acc = np.zeros_like(z)
        term = np.ones_like(z)
        for k in range(1, 12):
            term = term * (p - k + 1) / k * z
            acc = acc + term
        out[small] = acc
    if (~small).any():
        out[~small] = (1 + s[~small]) ** p - 1
    return out


def _taylor(W, k, h, m0):
    """``sum_{m>=m0} W[k+m] h^m / m!`` for each pair."""
    acc = np.zeros_like(h)
    hm = h ** m0 / math.factorial(m0)
    for m in range(m0, W.shape[0] - k):
        acc = acc + W[k + m] * hm
        hm = hm * h / (m + 1)
    return acc


@dataclass
class PairFrame:
    """Full t3 flow in pair-adapted coordinates at fixed ``eps``.

    The state vector is ``[X, S, A, B]``, each of length ``n``.
    """

    lat: Lattice
    eps: float
    n: int
    order: int = _TAYLOR_ORDER
    _I: np.ndarray = field(init=False, repr=False)
    _J: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        _check_eps(self.lat, self.eps)
        idx = [(i, j) for i in range(self.n) for j in range(self.n) if i != j]
        self._I = np.array([i for i, _ in idx], dtype=int)
        self._J = np.array([j for _, j in idx], dtype=int)

    def _tower_order(self, X, d):
        """Taylor order for the inter-pair expansions.

        Terms decay like ``rho^m`` with ``rho`` the shift over the distance to
        the nearest pole; the separation equation divides by ``eps^3`` so
        the target is tightened accordingly.
        """
        dist = np.asarray(kernel.reduce_args(X[self._I] - X[self._J], self.lat.params)[3])
        rho = 2.5 * float(np.abs(d).max()) / float(dist.min())
        if rho >= 0.5:
            return self.order
        m = math.ceil(math.log(1e-17 * self.eps**3) / math.log(rho)) + 2
        return int(min(max(m, 6), self.order))

    # conversions
    def from_reduced(self, r: ReducedState):
        b = beta_coeffs(self.lat, r, self.eps).beta(self.eps)
        return np.concatenate([r.x, np.zeros(self.n), r.alpha, b]).astype(np.complex128)

    def from_cm(self, s: CMState):
        e = self.eps
        xa, xb = s.x[0::2], s.x[1::2]
        pa, pb = s.p[0::2], s.p[1::2]
        S = (xb - xa - e) / e**3
        A = ((pa - pb) / 2 - 1 / e) / e
        B = (pa + pb) / (2 * e**2)
        return np.concatenate([xa, S, A, B]).astype(np.complex128)

    def split(self, v):
        n = self.n
        return v[:n], v[n:2 * n], v[2 * n:3 * n], v[3 * n:]

    def to_cm(self, v) -> CMState:
        X, S, A, B = self.split(v)
        e = self.eps
        x = np.empty(2 * self.n, dtype=np.complex128)
        p = np.empty(2 * self.n, dtype=np.complex128)
        x[0::2] = X
        x[1::2] = X + (e + e**3 * S)
        p[0::2] = 1 / e + A * e + B * e**2
        p[1::2] = -1 / e - A * e + B * e**2
        return CMState(x, p)

    def to_reduced(self, v) -> ReducedState:
        X, _, A, _ = self.split(v)
        return ReducedState(X.copy(), A.copy())

    def tangent_to_cm(self, dv) -> Tangent:
        dX, dS, dA, dB = self.split(dv)
        e = self.eps
        dx = np.empty(2 * self.n, dtype=np.complex128)
        dp = np.empty(2 * self.n, dtype=np.complex128)
        dx[0::2] = dX
        dx[1::2] = dX + e**3 * dS
        dp[0::2] = e * dA + e**2 * dB
        dp[1::2] = -e * dA + e**2 * dB
        return Tangent(dx, dp)

    # vector field
    def rhs(self, v):
        lat, e, n = self.lat, self.eps, self.n
        X, S, A, B = self.split(np.asarray(v, dtype=np.complex128))
        sig = e**2 * S
        d = e + e**3 * S
        r0 = np.asarray(wp_regular(lat, d, 0))
        r1 = np.asarray(wp_regular(lat, d, 1))

        dX = (3 / e**2) * _pow_m1(sig, -2) - 6 * A - 6 * e * B - 3 * (A * e + e**2 * B) ** 2 + 3 * r0
        dS = np.zeros(n, dtype=np.complex128)
        dA = -(12 / e**2) * B * _pow_m1(sig, -3) + 6 * e * B * r1
        dB = np.zeros(n, dtype=np.complex128)
        beta0 = np.zeros(n, dtype=np.complex128)

        if n > 1:
            I, J = self._I, self._J
            W = wp_tower(lat, X[I] - X[J], self._tower_order(X, d))
            dI, dJ = d[I], d[J]
            Sij = S[I] - S[J]
            dd = e**3 * Sij
            t1m = _taylor(W, 1, -dJ, 1)
            t1p = _taylor(W, 1, dI, 1)
            t1d = _taylor(W, 1, dd, 1)
            Q = _q_series(W, dd)

            def psum(vals):
                return np.bincount(I, weights=vals.real, minlength=n) + 1j * np.bincount(
                    I, weights=vals.imag, minlength=n
                )

            beta0 = -0.5 * psum(W[1])
            dX = dX + 3 * psum(2 * W[0] + _taylor(W, 0, -dJ, 1))

            # separation defect, scaled by eps^-3
            eI = 1 + sig[I]
            eJ = 1 + sig[J]
            R = 0.5 * W[2] * e * Sij * ((2 + sig[I] + sig[J]) + e**2 * Sij)
            hm_i, hm_j, hm_d = eI**2, eJ**2, (e**2 * Sij) ** 2
            fact = 2.0
            for m in range(3, W.shape[0]):
                hm_i, hm_j, hm_d = hm_i * eI, hm_j * eJ, hm_d * (e**2 * Sij)
                fact *= m
                R = R + W[m] / fact * e ** (m - 3) * (hm_i - (-1) ** m * hm_j + hm_d)
            dS = (12 * (B - beta0) / e**2 + 12 * A * B - 12 * S * beta0) + 3 * psum(R)

            AI, AJ, BI, BJ = A[I], A[J], B[I], B[J]
            dA = (
                dA
                - (12 / e**2) * (B - beta0)
                + psum(
                    -3 * e * Sij * Q
                    - 1.5 * AI * (4 * W[1] + t1m + t1p + t1d)
                    - 1.5 * AJ * (-t1m - t1p + t1d)
                    - 1.5 * e * (BI + BJ) * (t1m - t1p - t1d)
                )
            )
            dB = psum(
                3 * Sij * Q
                - (1.5 / e) * (AI * (t1m - t1p - t1d) + AJ * (-t1m + t1p - t1d))
                - 1.5 * (BI + BJ) * (4 * W[1] + t1m + t1p + t1d)
            )
        else:
            dS = 12 * B / e**2 + 12 * A * B
            dA = dA - (12 / e**2) * B
        return np.concatenate([dX, dS, dA, dB])


def _q_series(W, h):
    """``sum_{m>=1} W[1+m] h^(m-1) / m!``."""
    acc = np.zeros_like(h)
    hm = np.ones_like(h)
    for m in range(1, W.shape[0] - 1):
        hm_f = hm / math.factorial(m)
        acc = acc + W[1 + m] * hm_f
        hm = hm * h
    return acc


def integrate_pairs_t3(
    lat: Lattice,
    r: ReducedState,
    eps: float,
    t_end: float,
    tol: float = 1e-12,
    t_eval: Sequence[float] | None = None,
) -> Trajectory:
    """Full t3 flow started on the embedded pair state, sampled as CM states.

    ``traj.vectors`` keeps the pair-frame vectors ``[X, S, A, B]``.
    """
    frame = PairFrame(lat, eps, r.n_pairs)
    v0 = frame.from_reduced(r)
    embed(lat, r, eps)  # collision check on the full configuration
    times, Y, stats = dopri5(lambda _t, v: frame.rhs(v), v0, t_end, tol=tol, t_eval=t_eval)
    traj = Trajectory(times, [frame.to_cm(v) for v in Y], stats, vectors=Y)
    traj.meta.update(kind="full-pairs", flow=3, eps=eps, n_pairs=r.n_pairs)
    return traj


def t0_rates(lat: Lattice, r: ReducedState, eps: float):
    """Vector-field diagnostics at the embedded state.

    Per pair: ``|dp_a + dp_b|`` and ``|d(x_b - x_a)|`` under t3, evaluated in
    the pair frame (the plain CM field loses these to roundoff once
    ``eps`` is small), the same two quantities from the plain CM field for
    comparison, and ``|d(x_b - x_a)|`` under t2.
    """
    s = embed(lat, r, eps)
    frame = PairFrame(lat, eps, r.n_pairs)
    tg = frame.tangent_to_cm(frame.rhs(frame.from_reduced(r)))
    t3 = flow_rhs(lat, 3, s)
    t2 = flow_rhs(lat, 2, s)
    return {
        "momentum_sum_rate": np.abs(tg.dp[0::2] + tg.dp[1::2]),
        "separation_rate": np.abs(tg.dx[1::2] - tg.dx[0::2]),
        "naive_momentum_sum_rate": np.abs(t3.dp[0::2] + t3.dp[1::2]),
        "naive_separation_rate": np.abs(t3.dx[1::2] - t3.dx[0::2]),
        "t2_separation_rate": np.abs(t2.dx[1::2] - t2.dx[0::2]),
    }


def loglog_slope(xs, ys):
    """Least-squares slope of ``log y`` against ``log x``."""
    xs = np.log(np.asarray(xs, dtype=float))
    ys = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(xs, ys, 1)[0])


def _stick_one(args):
    lat, r, eps, t_end, tol, nsamp = args
    rates = t0_rates(lat, r, eps)
    ts = np.linspace(0.0, t_end, nsamp)
    traj = integrate_pairs_t3(lat, r, eps, t_end, tol=tol, t_eval=ts)
    frame = PairFrame(lat, eps, r.n_pairs)
    S = np.array([frame.split(v)[1] for v in traj.vectors])
    B = np.array([frame.split(v)[3] for v in traj.vectors])
    return {
        "eps": eps,
        "momentum_sum_rate_t0": float(rates["momentum_sum_rate"].max()),
        "separation_rate_t0": float(rates["separation_rate"].max()),
        "naive_momentum_sum_rate_t0": float(rates["naive_momentum_sum_rate"].max()),
        "naive_separation_rate_t0": float(rates["naive_separation_rate"].max()),
        "t2_separation_rate_t0": float(rates["t2_separation_rate"].max()),
        "max_separation_deviation": float(eps**3 * np.abs(S).max()),
        "max_momentum_sum": float(2 * eps**2 * np.abs(B).max()),
        "steps": traj.step_stats,
    }


def stickiness_report(
    lat: Lattice,
    r: ReducedState,
    eps_list: Sequence[float],
    t_end: float,
    tol: float = 1e-12,
    jobs: int = 1,
    samples: int = 21,
    rate_slope_min: float = 1.9,
    c_factor_max: float = 2.0,
    rate_eps_list: Sequence[float] | None = None,
) -> dict:
    """Quantify how well the t3 flow keeps pairs stuck along an eps ladder.

    Each ``eps`` in ``eps_list`` gets a full integration over ``[0, t_end]``;
    the t=0 rate slope is fitted over ``rate_eps_list`` (default
    ``eps_list``), which only needs vector-field evaluations.
    """
    eps_list = sorted((float(e) for e in eps_list), reverse=True)
    tasks = [(lat, r, e, t_end, tol, samples) for e in eps_list]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_stick_one, tasks))
    else:
        rows = [_stick_one(t) for t in tasks]

    eps = np.array([row["eps"] for row in rows])
    if rate_eps_list is None:
        rate_eps = eps
        rate = np.array([row["momentum_sum_rate_t0"] for row in rows])
    else:
        rate_eps = np.array(sorted((float(e) for e in rate_eps_list), reverse=True))
        rate = np.array([t0_rates(lat, r, e)["momentum_sum_rate"].max() for e in rate_eps])
    sep = np.array([row["max_separation_deviation"] for row in rows])
    psum = np.array([row["max_momentum_sum"] for row in rows])
    c_vals = sep / eps**2
    c_ratios = [float(c_vals[k + 1] / c_vals[k]) if c_vals[k] > 0 else 0.0
                for k in range(len(c_vals) - 1)]
    slopes = {
        "momentum_sum_rate_t0": loglog_slope(rate_eps, rate) if np.all(rate > 0) else None,
        "max_momentum_sum": loglog_slope(eps, psum) if np.all(psum > 0) else None,
        "max_separation_deviation": loglog_slope(eps, sep) if np.all(sep > 0) else None,
    }
    rate_zero = bool(np.all(rate == 0))  # a single pair feels no force at all
    checks = {
        "momentum_sum_rate_slope": {
            "value": slopes["momentum_sum_rate_t0"], "threshold": rate_slope_min,
            "pass": bool(rate_zero or (slopes["momentum_sum_rate_t0"] is not None
                                       and slopes["momentum_sum_rate_t0"] >= rate_slope_min)),
            "identically_zero": rate_zero,
        },
        "separation_c_stable": {
            "value": max(c_ratios) if c_ratios else None, "threshold": c_factor_max,
            "pass": bool(all(c <= c_factor_max for c in c_ratios)),
        },
    }
    return {
        "n_pairs": r.n_pairs,
        "t_end": t_end,
        "tol": tol,
        "per_eps": rows,
        "rate_eps": rate_eps.tolist(),
        "rate_values": rate.tolist(),
        "c_values": c_vals.tolist(),
        "c_ratios": c_ratios,
        "slopes": slopes,
        "checks": checks,
        "pass": all(c["pass"] for c in checks.values()),
    }
