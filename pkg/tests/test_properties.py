from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from cmpairs.bkp import ReducedState, reduced_rhs, second_order_residual
from cmpairs.elliptic import Lattice, phi, wp, zeta
from cmpairs.lax import det
from cmpairs.pair_manifold import embed, project

LAT = Lattice.square()
unit = st.floats(0.05, 0.95)
small = st.floats(-0.5, 0.5)


def cplx(re, im):
    return st.builds(complex, re, im)


@settings(max_examples=40, deadline=None)
@given(cplx(unit, unit))
def test_wp_is_even_and_zeta_odd(u):
    z = 2 * u - 1 - 1j  # cell centred at the origin
    if abs(z) < 0.05:
        return
    assert abs(wp(LAT, -z) - wp(LAT, z)) <= 1e-11 * max(abs(wp(LAT, z)), 1)
    assert abs(zeta(LAT, -z) + zeta(LAT, z)) <= 1e-11 * max(abs(zeta(LAT, z)), 1)


@settings(max_examples=30, deadline=None)
@given(cplx(unit, unit), cplx(unit, unit))
def test_phi_product_gives_wp_difference(a, b):
    # Phi(x, l) Phi(-x, l) = wp(l) - wp(x)
    x, lam = 2 * a - 1 - 1j, 2 * b
    if abs(x) < 0.05:
        return
    lhs = phi(LAT, x, lam) * phi(LAT, -x, lam)
    rhs = wp(LAT, lam) - wp(LAT, x)
    assert abs(lhs - rhs) <= 1e-9 * max(abs(rhs), 1)


@settings(max_examples=25, deadline=None)
@given(cplx(small, small), cplx(small, small), cplx(small, small))
def test_embed_project_roundtrip(dx, a1, a2):
    r = ReducedState([0.0, 0.9 + 0.8j + dx], [a1, a2])
    back = project(embed(LAT, r, 1e-2), 1e-2)
    assert np.abs(back.x - r.x).max() < 1e-14
    assert np.abs(back.alpha - r.alpha).max() < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.lists(cplx(small, small), min_size=3, max_size=3), cplx(small, small))
def test_reduced_translation(alpha, c):
    r = ReducedState([0.0, 0.8 + 0.3j, 0.3 + 1.0j], alpha)
    a = reduced_rhs(LAT, r)
    b = reduced_rhs(LAT, ReducedState(r.x + c, alpha))
    assert np.allclose(a.dx, b.dx, rtol=1e-11, atol=1e-11)
    assert np.allclose(a.dalpha, b.dalpha, rtol=1e-11, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.lists(cplx(small, small), min_size=6, max_size=6))
def test_residual_forms_agree(v):
    x = np.array([0.0, 0.8 + 0.3j, 0.3 + 1.0j])
    a = second_order_residual(LAT, x, v[:3], v[3:], "distinct")
    b = second_order_residual(LAT, x, v[:3], v[3:], "full")
    assert np.abs(a - b).max() <= 1e-12 * max(np.abs(a).max(), 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_det_matches_numpy(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    ref = np.linalg.det(m)
    assert abs(det(m) - ref) <= 1e-11 * max(abs(ref), 1)
