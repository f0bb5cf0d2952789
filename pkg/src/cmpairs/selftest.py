"""Fast identity and property checks behind ``cmpairs selftest``.

Each suite returns rows ``(suite, check, value, threshold, passed)``; values
are worst cases over a handful of random points drawn from ``seed``.
"""
from __future__ import annotations

import cmath
import math

import numpy as np

from .bkp import ReducedState, integrate_reduced, reduced_rhs, residual_along, second_order_residual
from .dynamics import CMState, flow_rhs, hamiltonians, integrate_flow
from .elliptic import Lattice, phi, sigma, wp, zeta
from .lax import det, lax_bkp, spectral_limit
from .oracles import lattice_sum_wp
from .pair_manifold import alpha_rate_closure, embed, project, t0_rates

__all__ = ["run_suites", "SUITES", "format_table"]


def _row(suite, check, value, threshold):
    value = float(value)
    return (suite, check, value, threshold, bool(value <= threshold))


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1.0)


def _points(rng, n, lat):
    w1, w2 = lat.omega1, lat.omega2
    u = rng.uniform(0.1, 0.9, size=(n, 2))
    return [2 * (a * w1 + b * w2) - (w1 + w2) * 0.0 for a, b in u]


def suite_elliptic(lat, rng):
    pts = _points(rng, 20, lat)
    r = []
    r.append(_row("elliptic", "wp''' = 12 wp wp'", max(
        _rel(wp(lat, z, 3), 12 * wp(lat, z) * wp(lat, z, 1)) for z in pts), 1e-9))
    r.append(_row("elliptic", "wp'^2 = 4wp^3 - g2 wp - g3", max(
        _rel(wp(lat, z, 1) ** 2, 4 * wp(lat, z) ** 3 - lat.g2 * wp(lat, z) - lat.g3) for z in pts), 1e-9))
    r.append(_row("elliptic", "Legendre relation", abs(lat.legendre_defect()), 1e-9))
    w1, w2 = lat.omega1, lat.omega2
    per = 0.0
    for z in pts:
        per = max(per, _rel(wp(lat, z + 2 * w1), wp(lat, z)), _rel(wp(lat, z + 2 * w2), wp(lat, z)))
        per = max(per, _rel(zeta(lat, z + 2 * w1), zeta(lat, z) + 2 * lat.eta1))
        per = max(per, _rel(zeta(lat, z + 2 * w2), zeta(lat, z) + 2 * lat.eta2))
        per = max(per, _rel(sigma(lat, z + 2 * w1),
                            -cmath.exp(2 * lat.eta1 * (z + w1)) * sigma(lat, z)))
        lam = 0.31 + 0.17j
        per = max(per, _rel(phi(lat, z + 2 * w2, lam),
                            phi(lat, z, lam) * cmath.exp(2 * lat.eta2 * lam - 2 * w2 * zeta(lat, lam))))
    r.append(_row("elliptic", "quasi-periodicity wp/zeta/sigma/Phi", per, 1e-9))
    z0 = pts[0]
    r.append(_row("elliptic", "kernel vs lattice-sum oracle",
                  _rel(wp(lat, z0), lattice_sum_wp(lat, z0)), 1e-8))
    lam = 0.4 + 0.3j
    hs = np.array([1e-3, 2e-3, 3e-3, 4e-3, 5e-3]) * cmath.exp(0.3j)
    ys = np.array([phi(lat, h, lam) - 1 / h for h in hs])
    c = np.polyfit(hs, ys, 4)[::-1]  # c[0] + c[1] h + c[2] h^2 + ...
    r.append(_row("elliptic", "Phi expansion residue/linear/quadratic", max(
        abs(c[0]) / max(abs(wp(lat, lam)), 1.0),
        _rel(c[1], -wp(lat, lam) / 2),
        _rel(c[2], -wp(lat, lam, 1) / 6)), 1e-6))
    return r


def suite_dynamics(lat, rng):
    r = []
    x = np.array([0.0, 0.7 + 0.4j, 0.2 + 1.1j, 1.3 + 0.6j])
    p = rng.normal(size=4) * 0.3 + 1j * rng.normal(size=4) * 0.3
    s = CMState(x, p)
    h = 1e-5
    worst = 0.0
    for a in (2, 3):
        tg = flow_rhs(lat, a, s)
        for i in range(4):
            e = np.zeros(4)
            e[i] = 1
            dHp = (hamiltonians(lat, CMState(x, p + h * e))[a - 1]
                   - hamiltonians(lat, CMState(x, p - h * e))[a - 1]) / (2 * h)
            dHx = (hamiltonians(lat, CMState(x + h * e, p))[a - 1]
                   - hamiltonians(lat, CMState(x - h * e, p))[a - 1]) / (2 * h)
            worst = max(worst, _rel(tg.dx[i], dHp), _rel(tg.dp[i], -dHx))
    r.append(_row("dynamics", "flow = Hamiltonian gradient", worst, 1e-6))
    traj = integrate_flow(lat, 3, s, 0.2, tol=1e-10)
    H0 = np.array(hamiltonians(lat, s))
    H1 = np.array(hamiltonians(lat, traj.final))
    r.append(_row("dynamics", "H1,H2,H3 drift along t3 (t=0.2)",
                  (np.abs(H1 - H0) / np.maximum(np.abs(H0), 1)).max(), 1e-8))
    return r


def suite_pairs(lat, rng):
    r = []
    red = ReducedState([0.0, 0.9 + 0.8j], [0.2 + 0.1j, -0.1 + 0.05j])
    back = project(embed(lat, red, 1e-3), 1e-3)
    r.append(_row("pairs", "project(embed(r)) = r",
                  max(np.abs(back.x - red.x).max(), np.abs(back.alpha - red.alpha).max()), 1e-9))
    worst = 0.0
    for _ in range(5):
        xs = np.array([0.0, 0.8 + 0.3j, 0.3 + 1.0j]) + 0.1 * rng.normal(size=3)
        al = rng.normal(size=3) * 0.2 + 0.2j * rng.normal(size=3)
        rs = ReducedState(xs, al)
        da = reduced_rhs(lat, rs).dalpha
        worst = max(worst, float(np.abs(alpha_rate_closure(lat, rs) - da).max() / np.abs(da).max()))
    r.append(_row("pairs", "closure alpha rate = reduced flow", worst, 1e-9))
    rates = [t0_rates(lat, red, e)["momentum_sum_rate"].max() for e in (1e-2, 1e-3)]
    r.append(_row("pairs", "|dp_a + dp_b| slope deficit (2 - slope)",
                  2 - math.log(rates[0] / rates[1]) / math.log(10), 0.1))
    t2 = [t0_rates(lat, red, e)["t2_separation_rate"].max() * e for e in (1e-2, 1e-3)]
    r.append(_row("pairs", "t2 separation rate eps*rate - 4", max(abs(v - 4) for v in t2), 0.1))
    return r


def suite_reduced(lat, rng):
    red = ReducedState([0.0, 0.9 + 0.8j], [0.2 + 0.1j, -0.1 + 0.05j])
    traj = integrate_reduced(lat, red, 0.1, tol=1e-11, t_eval=np.linspace(0, 0.1, 6))
    r = [_row("reduced", "second-order residual", residual_along(lat, traj).max(), 1e-8)]
    xs = np.array([0.0, 0.8 + 0.3j, 0.3 + 1.0j])
    xd = rng.normal(size=3) + 1j * rng.normal(size=3)
    xdd = rng.normal(size=3) + 1j * rng.normal(size=3)
    a = second_order_residual(lat, xs, xd, xdd, "distinct")
    b = second_order_residual(lat, xs, xd, xdd, "full")
    r.append(_row("reduced", "distinct vs full summation",
                  np.abs(a - b).max() / max(np.abs(a).max(), 1.0), 1e-12))
    return r


def suite_lax(lat, rng):
    r = []
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    B = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    r.append(_row("lax", "det multiplicative", _rel(det(A @ B), det(A) * det(B)), 1e-12))
    worst = worst_b = 0.0
    for _ in range(3):
        al = complex(*rng.normal(size=2) * 0.3)
        z = complex(*rng.normal(size=2) * 0.5)
        lam = complex(*rng.uniform(0.2, 0.8, size=2))
        red = ReducedState([0.3], [al])
        target = z * z - 2 * al - wp(lat, lam)
        worst = max(worst, abs(spectral_limit(lat, red, z, lam) - target))
        worst_b = max(worst_b, abs(det(lax_bkp(lat, red, z, lam)) + 3 * target))
    r.append(_row("lax", "n=1 spectral limit = z^2 - 2 alpha - wp(lambda)", worst, 1e-8))
    r.append(_row("lax", "n=1 det Lbkp = -3 (z^2 - 2 alpha - wp(lambda))", worst_b, 1e-10))
    return r


SUITES = {
    "elliptic": suite_elliptic,
    "dynamics": suite_dynamics,
    "pairs": suite_pairs,
    "reduced": suite_reduced,
    "lax": suite_lax,
}


def run_suites(lat: Lattice | None = None, seed: int = 0, names=None):
    lat = lat or Lattice.square()
    rows = []
    for name in names or SUITES:
        rng = np.random.default_rng([seed, list(SUITES).index(name)])
        rows.extend(SUITES[name](lat, rng))
    return rows


def format_table(rows) -> str:
    w = max(len(r[1]) for r in rows)
    lines = [f"{'suite':<10} {'check':<{w}} {'value':>11} {'limit':>9}  result"]
    for suite, check, value, thr, ok in rows:
        lines.append(f"{suite:<10} {check:<{w}} {value:>11.3e} {thr:>9.1e}  {'PASS' if ok else 'FAIL'}")
    n_fail = sum(not r[4] for r in rows)
    lines.append(f"{len(rows) - n_fail}/{len(rows)} checks passed")
    return "\n".join(lines)
