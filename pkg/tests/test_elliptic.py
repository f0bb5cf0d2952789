from __future__ import annotations

import cmath
import math
import warnings

import numpy as np
import pytest

from cmpairs.elliptic import (
    EllipticPoint,
    Lattice,
    dist_to_lattice,
    laurent_coeffs,
    phi,
    sigma,
    wp,
    wp_all,
    wp_regular,
    wp_tower,
    zeta,
)
from cmpairs.errors import AccuracyWarning, InvalidOrder, SingularArgument
from cmpairs.oracles import lattice_sum_wp, lattice_sum_zeta

from conftest import cell_points, rel

# 50-digit theta-function oracle (tests/mp_oracle.py), square lattice, x = 0.37+0.21i
WP_037_021 = [
    complex(2.8867789897185117, -4.651597860109608),
    complex(-0.145070663024054, 26.219340957494865),
    complex(-85.73174080421491, -161.1376196542081),
    complex(1458.5165201918994, 916.3710358325951),
]
# same oracle on the lattice with half-periods 0.8+0.3i, 0.2+1.1i
SKEW_WP = complex(2.9548188043569135, -4.811560969413765)
SKEW_WP1 = complex(-0.147836494045036, 25.374441320667856)


def test_lattice_constants(lat):
    assert lat.tau == 1j
    assert abs(lat.nome_q - math.exp(-math.pi)) < 1e-16
    assert abs(lat.g3) < 1e-12  # square lattice
    assert abs(lat.eta1 - math.pi / 4) < 1e-14
    assert abs(lat.legendre_defect()) < 1e-13
    assert lat.series_terms == 16


def test_lattice_rejects_bad_tau():
    with pytest.raises(ValueError):
        Lattice(1.0, -1j)
    with pytest.raises(ValueError):
        Lattice(0.0, 1j)


def test_series_cap_warns():
    with pytest.warns(AccuracyWarning):
        L = Lattice(1.0, 0.2j)
    assert L.series_terms == 64
    assert abs(L.legendre_defect()) < 1e-12


@pytest.mark.parametrize("k", range(4))
def test_wp_matches_theta_oracle(lat, backend, k):
    assert rel(wp(lat, 0.37 + 0.21j, k), WP_037_021[k]) < 1e-12


def test_wp_matches_lattice_sum(lat, backend):
    assert rel(wp(lat, 0.37 + 0.21j), lattice_sum_wp(lat, 0.37 + 0.21j)) < 1e-8


def test_skew_lattice(skew, backend):
    assert rel(wp(skew, 0.37 + 0.21j), SKEW_WP) < 1e-12
    assert rel(wp(skew, 0.37 + 0.21j, 1), SKEW_WP1) < 1e-12
    assert rel(wp(skew, 0.37 + 0.21j), lattice_sum_wp(skew, 0.37 + 0.21j)) < 1e-8
    assert abs(skew.legendre_defect()) < 1e-12


def test_zeta_matches_lattice_sum(lat, skew, backend):
    for L in (lat, skew):
        assert rel(zeta(L, 0.31 + 0.4j), lattice_sum_zeta(L, 0.31 + 0.4j)) < 1e-8


def test_periodicity_and_parity(lat, rng, backend):
    z = cell_points(lat, rng, 20)
    w = wp(lat, z)
    assert rel(wp(lat, z + 2 * lat.omega1), w).max() < 1e-11
    assert rel(wp(lat, z - 6 * lat.omega2 + 4 * lat.omega1), w).max() < 1e-11
    assert rel(wp(lat, -z), w).max() < 1e-12
    assert rel(wp(lat, -z, 1), -wp(lat, z, 1)).max() < 1e-12


def test_zeta_quasi_periodic_and_odd(lat, rng, backend):
    z = cell_points(lat, rng, 20)
    zz = zeta(lat, z)
    assert rel(zeta(lat, z + 2 * lat.omega1), zz + 2 * lat.eta1).max() < 1e-11
    assert rel(zeta(lat, z + 2 * lat.omega2), zz + 2 * lat.eta2).max() < 1e-11
    assert rel(zeta(lat, -z), -zz).max() < 1e-12


def test_zeta_derivative_is_minus_wp(lat):
    x, h = 0.4 + 0.3j, 1e-4
    fd = (zeta(lat, x + h) - zeta(lat, x - h)) / (2 * h)
    assert abs(fd + wp(lat, x)) < 1e-6


def test_sigma(lat, skew, rng, backend):
    assert sigma(lat, 0.0) == 0
    for x in (1e-3, 2e-3 * cmath.exp(0.7j)):
        assert abs(sigma(lat, x) - x) < 1e-12
    z = cell_points(lat, rng, 10)
    s = sigma(lat, z)
    s1 = sigma(lat, z + 2 * lat.omega1)
    assert rel(s1, -np.exp(2 * lat.eta1 * (z + lat.omega1)) * s).max() < 1e-10
    s2 = sigma(lat, z + 2 * lat.omega2)
    assert rel(s2, -np.exp(2 * lat.eta2 * (z + lat.omega2)) * s).max() < 1e-10
    # log-derivative is zeta
    x, h = 0.3 + 0.2j, 1e-5
    ld = (cmath.log(sigma(skew, x + h)) - cmath.log(sigma(skew, x - h))) / (2 * h)
    assert abs(ld - zeta(skew, x)) < 1e-7


def test_singular_argument(lat):
    with pytest.raises(SingularArgument):
        wp(lat, 2 * lat.omega1)
    with pytest.raises(SingularArgument):
        zeta(lat, 1e-9)
    with pytest.raises(InvalidOrder):
        wp(lat, 0.3, 4)
    with pytest.raises(SingularArgument):
        wp_all(lat, np.array([0.3, 0.0]), 1)


def test_elliptic_point(lat):
    p = EllipticPoint.at(lat, 2.01 + 2j)
    assert abs(p.dist_to_lattice - 0.01) < 1e-12
    assert not p.is_singular(lat)
    assert EllipticPoint.at(lat, 2 + 1e-9j).is_singular(lat)
    assert dist_to_lattice(lat, 1 + 1j) == pytest.approx(math.sqrt(2))


def test_differential_identities(lat, skew, rng, backend):
    for L in (lat, skew):
        z = cell_points(L, rng, 20)
        w0, w1, w2, w3 = wp_all(L, z, 3)
        assert rel(w3, 12 * w0 * w1).max() < 1e-9
        assert rel(w1**2, 4 * w0**3 - L.g2 * w0 - L.g3).max() < 1e-9
        assert rel(w2, 6 * w0**2 - L.g2 / 2).max() < 1e-9


def test_laurent_and_regular_part(lat, skew):
    c = laurent_coeffs(skew, 6)
    assert c[0] == pytest.approx(skew.g2 / 20) and c[1] == pytest.approx(skew.g3 / 28)
    for x in (0.3 + 0.1j, 1e-4j, 0.45):
        for k in range(4):
            pole = (-1) ** k * math.factorial(k + 1) * x ** (-(k + 2))
            if abs(x) > 0.1:
                assert abs(wp_regular(skew, x, k) - (wp(skew, x, k) - pole)) < 1e-9
    # small argument: regular part tends to the Laurent constant term
    assert abs(wp_regular(lat, 1e-6) - lat.g2 / 20 * 1e-12) < 1e-20


def test_wp_tower(lat):
    x = np.array([0.4 + 0.3j, 0.7 - 0.2j])
    W = wp_tower(lat, x, 6)
    assert np.allclose(W[:4], wp_all(lat, x, 3), rtol=1e-12)
    h = 1e-4
    fd = (wp_tower(lat, x + h, 6)[5] - wp_tower(lat, x - h, 6)[5]) / (2 * h)
    assert rel(fd, W[6]).max() < 1e-5


def test_phi_limits(lat, backend):
    lam = 0.4 + 0.3j
    x = 1e-5
    assert abs(x * phi(lat, x, lam) - 1) < 1e-9
    # derivatives by finite difference
    x, h = 0.3 + 0.2j, 1e-5
    d1 = (phi(lat, x + h, lam) - phi(lat, x - h, lam)) / (2 * h)
    assert abs(d1 - phi(lat, x, lam, 1)) < 1e-6 * abs(d1)
    d2 = (phi(lat, x + h, lam, 1) - phi(lat, x - h, lam, 1)) / (2 * h)
    assert abs(d2 - phi(lat, x, lam, 2)) < 1e-6 * abs(d2)


def test_phi_quasi_periodic(lat, rng):
    lam = 0.31 + 0.17j
    for x in cell_points(lat, rng, 5):
        for w, eta in ((lat.omega1, lat.eta1), (lat.omega2, lat.eta2)):
            f = cmath.exp(2 * eta * lam - 2 * w * zeta(lat, lam))
            assert rel(phi(lat, x + 2 * w, lam), phi(lat, x, lam) * f) < 1e-10


def test_no_warning_on_default_lattice():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        Lattice.square()
