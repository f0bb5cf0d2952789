from __future__ import annotations

import numpy as np
import pytest

from cmpairs.dynamics import CMState, Tangent, check_collisions, flow_rhs, hamiltonians, integrate_flow
from cmpairs.elliptic import wp
from cmpairs.errors import LengthMismatch, SingularArgument

from conftest import rel

X4 = np.array([0.0, 0.7 + 0.4j, 0.2 + 1.1j, 1.3 + 0.6j])


@pytest.fixture
def state4(rng):
    return CMState(X4, 0.3 * (rng.normal(size=4) + 1j * rng.normal(size=4)))


def test_single_particle(lat):
    s = CMState([0.2], [1.5 - 0.5j])
    c = 1.5 - 0.5j
    assert np.allclose(hamiltonians(lat, s), (-c, c**2, -(c**3)))
    tg = flow_rhs(lat, 3, s)
    assert np.allclose(tg.dx, [-3 * c**2]) and np.allclose(tg.dp, [0])


def test_two_particles_at_rest(lat):
    a, b = 0.1 + 0.2j, 0.6 - 0.3j
    H = hamiltonians(lat, CMState([a, b], [0, 0]))
    assert abs(H[1] + 2 * wp(lat, a - b)) < 1e-13


def test_t1_flow(lat, state4):
    tg = flow_rhs(lat, 1, state4)
    assert np.all(tg.dx == -1) and np.all(tg.dp == 0)


def test_translation_invariance(lat, state4, backend):
    a = flow_rhs(lat, 3, state4)
    b = flow_rhs(lat, 3, state4.shifted(0.37 - 0.8j))
    assert np.allclose(a.dx, b.dx, rtol=1e-12) and np.allclose(a.dp, b.dp, rtol=1e-12)


@pytest.mark.parametrize("flow", [2, 3])
def test_gradient_check(lat, state4, backend, flow):
    """dx = dH/dp and dp = -dH/dx by central differences, h = 1e-5."""
    x, p, h = state4.x, state4.p, 1e-5
    tg = flow_rhs(lat, flow, state4)
    for i in range(4):
        e = np.eye(4)[i]
        dHp = (hamiltonians(lat, CMState(x, p + h * e))[flow - 1]
               - hamiltonians(lat, CMState(x, p - h * e))[flow - 1]) / (2 * h)
        dHx = (hamiltonians(lat, CMState(x + h * e, p))[flow - 1]
               - hamiltonians(lat, CMState(x - h * e, p))[flow - 1]) / (2 * h)
        assert rel(tg.dx[i], dHp) < 1e-6
        assert rel(tg.dp[i], -dHx) < 1e-6


def test_backends_agree(lat, state4):
    from cmpairs._backend import available, load

    outs = [load(n).cm_rhs(state4.x, state4.p, 3, lat.params) for n in available()]
    for o in outs[1:]:
        assert np.allclose(o[0], outs[0][0], rtol=1e-12)
        assert np.allclose(o[1], outs[0][1], rtol=1e-12)


def test_collision_guard(lat):
    with pytest.raises(SingularArgument):
        check_collisions(lat, [0.1, 0.1 + 2 * lat.omega1])
    with pytest.raises(SingularArgument):
        flow_rhs(lat, 3, CMState([0.1, 0.1], [0, 0]))
    with pytest.raises(ValueError):
        flow_rhs(lat, 4, CMState([0.1], [0]))
    with pytest.raises(LengthMismatch):
        CMState([0.1, 0.2], [0.0])


def test_state_vector_round_trip(state4):
    v = state4.to_vector()
    back = CMState.from_vector(v)
    assert np.array_equal(back.x, state4.x) and np.array_equal(back.p, state4.p)
    assert Tangent(back.x, back.p).to_vector().shape == (8,)


def test_time_reversal(lat, state4):
    tol = 1e-11
    fwd = integrate_flow(lat, 3, state4, 0.3, tol=tol)
    back = integrate_flow(lat, 3, fwd.final, 0.3, tol=tol, direction=-1.0)
    assert np.abs(back.final.to_vector() - state4.to_vector()).max() < 10 * tol * 100


def test_conservation_along_t3(lat, state4):
    traj = integrate_flow(lat, 3, state4, 1.0, tol=1e-10, t_eval=np.linspace(0, 1, 11))
    H = np.array([hamiltonians(lat, s) for s in traj.states])
    assert (np.abs(H - H[0]) / np.maximum(np.abs(H[0]), 1)).max() < 1e-8
    assert traj.meta["flow"] == 3 and traj.meta["n_particles"] == 4


def test_self_convergence_order(lat):
    """Global error vs tolerance on the N=2 t3 flow, fitted order >= 4."""
    s = CMState([0.0, 0.8 + 0.5j], [0.4 + 0.1j, -0.3 + 0.2j])
    ref = integrate_flow(lat, 3, s, 0.5, tol=1e-14).final.to_vector()
    errs, work = [], []
    for tol in (1e-5, 1e-6, 1e-7, 1e-8):
        tr = integrate_flow(lat, 3, s, 0.5, tol=tol)
        errs.append(np.abs(tr.final.to_vector() - ref).max())
        work.append(tr.step_stats["accepted"])
    # error against step count: error ~ steps^-order
    order = -np.polyfit(np.log(work), np.log(errs), 1)[0]
    assert order >= 4
    assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))
