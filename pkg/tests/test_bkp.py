from __future__ import annotations

import numpy as np
import pytest

from cmpairs.bkp import (
    ReducedState,
    integrate_reduced,
    reduced_accel,
    reduced_rhs,
    residual_along,
    second_order_residual,
)
from cmpairs.elliptic import wp_all
from cmpairs.errors import LengthMismatch, SingularArgument

from conftest import rel

# direct transcription of the reduced field with wp from the theta oracle
FIX_X = [0.1, 0.6 + 0.4j]
FIX_A = [0.05, -0.02j]
BKP_DX = [complex(3.20242689387782, -12.896740598075983), complex(3.50242689387782, -12.776740598075982)]
BKP_DA = [complex(-213.08275021834388, 52.700511922370346), complex(213.64395081338128, -47.39283886364482)]

R3 = ReducedState([0.0, 0.8 + 0.3j, 0.3 + 1.0j], [0.2 + 0.1j, -0.1 + 0.05j, 0.1])


def test_fixture_values(lat, backend):
    tg = reduced_rhs(lat, ReducedState(FIX_X, FIX_A))
    assert rel(tg.dx, BKP_DX).max() < 1e-12
    assert rel(tg.dalpha, BKP_DA).max() < 1e-12


def test_single_pair(lat):
    tg = reduced_rhs(lat, ReducedState([0.3], [0.2 - 0.1j]))
    assert np.allclose(tg.dx, [-6 * (0.2 - 0.1j)]) and np.allclose(tg.dalpha, [0])
    tr = integrate_reduced(lat, ReducedState([0.3], [0.2 - 0.1j]), 1.0, tol=1e-12)
    assert abs(tr.final.x[0] - (0.3 - 6 * (0.2 - 0.1j))) < 1e-12


def test_translation_invariance(lat):
    a = reduced_rhs(lat, R3)
    b = reduced_rhs(lat, ReducedState(R3.x + 0.4 - 0.7j, R3.alpha))
    assert np.allclose(a.dx, b.dx, rtol=1e-12) and np.allclose(a.dalpha, b.dalpha, rtol=1e-12)


def test_center_of_mass_identity(lat):
    tg = reduced_rhs(lat, R3)
    w0 = wp_all(lat, np.array([R3.x[0] - R3.x[1], R3.x[0] - R3.x[2], R3.x[1] - R3.x[2]]), 0)[0]
    assert abs(tg.dx.sum() - (-6 * R3.alpha.sum() + 12 * w0.sum())) < 1e-12


def test_errors(lat):
    with pytest.raises(LengthMismatch):
        ReducedState([0.1, 0.2], [0.0])
    with pytest.raises(SingularArgument):
        reduced_rhs(lat, ReducedState([0.1, 0.1 + 2j], [0, 0]))
    with pytest.raises(ValueError):
        second_order_residual(lat, R3.x, R3.x, R3.x, form="other")


def test_accel_by_finite_difference(lat):
    h = 1e-5
    xd, xdd = reduced_accel(lat, R3)
    v = R3.to_vector()
    tg = reduced_rhs(lat, R3).to_vector()
    up = reduced_rhs(lat, ReducedState.from_vector(v + h * tg)).dx
    dn = reduced_rhs(lat, ReducedState.from_vector(v - h * tg)).dx
    assert rel((up - dn) / (2 * h), xdd).max() < 1e-6


def test_forms_agree(lat, rng):
    for _ in range(5):
        xd = rng.normal(size=3) + 1j * rng.normal(size=3)
        xdd = rng.normal(size=3) + 1j * rng.normal(size=3)
        a = second_order_residual(lat, R3.x, xd, xdd, "distinct")
        b = second_order_residual(lat, R3.x, xd, xdd, "full")
        assert np.abs(a - b).max() <= 1e-12 * max(np.abs(a).max(), 1)


def test_residual_vanishes_along_flow(lat):
    tr = integrate_reduced(lat, R3, 0.3, tol=1e-11, t_eval=np.linspace(0, 0.3, 7))
    assert residual_along(lat, tr).max() < 1e-8
    assert residual_along(lat, tr, "full").max() < 1e-8
    assert tr.meta["kind"] == "reduced"


def test_residual_detects_wrong_acceleration(lat):
    xd, xdd = reduced_accel(lat, R3)
    res = second_order_residual(lat, R3.x, xd, xdd + 1e-3)
    assert np.allclose(np.abs(res), 1e-3, rtol=1e-6)
