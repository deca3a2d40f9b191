import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgsoliton.evolve import compact_random_fields
from kgsoliton.fields import FullState
from kgsoliton.soliton import SolitonParams, soliton_state, tangent_spectral, tangent_vectors
from kgsoliton.symplectic import (ProjectionError, complement_projector, gram_matrix, omega,
                                  omega_matrix, project, tangent_projector)


def random_state(model, rng, scale=1.0):
    F = compact_random_fields(model.grid, rng, radius=3.0)
    return FullState(F.psi * scale, F.pi * scale, rng.standard_normal(3) * scale,
                     rng.standard_normal(3) * scale, grid=model.grid)


@pytest.mark.parametrize("v", [[0, 0, 0], [0.3, 0, 0], [0.7, 0, 0], [0.2, 0.3, -0.4]])
def test_gram_matches_closed_form(model64, profile, v):
    G = gram_matrix(v, model64)
    W = omega_matrix(v, profile)
    scale = np.abs(W.full).max()
    np.testing.assert_allclose(G[:3, :3], 0, atol=1e-12 * scale)
    np.testing.assert_allclose(G[3:, 3:], 0, atol=1e-12 * scale)
    np.testing.assert_allclose(G[:3, 3:], W.plus, rtol=1e-6, atol=1e-9 * scale)
    assert W.is_spd


def test_omega_antisymmetric(model32, rng):
    a, b = random_state(model32, rng), random_state(model32, rng)
    assert omega(a, b) == pytest.approx(-omega(b, a), abs=1e-13)
    assert omega(a, a) == 0.0


@given(st.floats(-2, 2))
def test_omega_bilinear(c):
    from kgsoliton.fields import Grid
    g = Grid(4, 1.0)
    r = np.random.default_rng(1)
    a, b, d = (FullState(r.random(g.shape), r.random(g.shape), r.random(3), r.random(3), grid=g)
               for _ in range(3))
    assert omega(a * c + d, b) == pytest.approx(c * omega(a, b) + omega(d, b), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("v", [[0.0, 0, 0], [0.5, 0, 0]])
def test_projectors(model32, rng, v):
    Z = random_state(model32, rng)
    PZ = complement_projector(v, Z, model32)
    for t in tangent_vectors(v, model32):
        assert abs(omega(PZ, t)) <= 1e-11 * max(1.0, Z.l2())
        back = tangent_projector(v, t, model32)
        assert (back - t).l2() <= 1e-10 * t.l2()
    TZ = tangent_projector(v, Z, model32)
    assert (tangent_projector(v, TZ, model32) - TZ).l2() <= 1e-10 * TZ.l2()
    assert (complement_projector(v, PZ, model32) - PZ).l2() <= 1e-10 * PZ.l2()


@pytest.mark.parametrize("v", [[0.0, 0, 0], [0.3, 0.1, 0]])
def test_projection_recovers_parameters(model32, rng, v):
    sigma = SolitonParams([0.4, -0.3, 0.2], v)
    Z = complement_projector(v, random_state(model32, rng, 1e-3), model32, b=sigma.b)
    Y = soliton_state(sigma, model32) + Z
    Y.q = Y.q + np.array([0.02, 0, 0])  # start Newton away from the answer
    res = project(Y, model32, sigma0=SolitonParams(Y.q, np.asarray(v) + 0.01))
    assert res.residual <= 1e-10
    Y.q = Y.q - np.array([0.02, 0, 0])
    res = project(Y, model32)
    np.testing.assert_allclose(res.sigma.b, sigma.b, atol=1e-9)
    np.testing.assert_allclose(res.sigma.v, sigma.v, atol=1e-9)
    assert (res.Z - Z).l2() <= 1e-9
    for t in tangent_vectors(res.sigma.v, model32, res.sigma.b):
        assert abs(omega(res.Z, t)) <= 1e-9


def test_newton_converges_quadratically(model32, rng):
    sigma = SolitonParams([0.0, 0, 0], [0.3, 0, 0])
    Y = soliton_state(sigma, model32) + random_state(model32, rng, 1e-2)
    res = project(Y, model32, tol=1e-13)
    h = res.history
    assert res.newton_iters <= 6
    # quadratic: each error is bounded by a multiple of the previous one squared
    for a, b in zip(h[1:-1], h[2:]):
        assert b <= 50 * a * a + 1e-13


def test_projection_fails_far_from_manifold(model32):
    Y = soliton_state(SolitonParams([0, 0, 0], [0, 0, 0]), model32)
    Y.p = np.array([500.0, 0, 0])
    with pytest.raises(ProjectionError):
        project(Y, model32)


def test_tangent_frame_gram_orientation(model32):
    frame = tangent_spectral([0.3, 0, 0], model32)
    G = gram_matrix([0.3, 0, 0], model32)
    assert G[0, 3] == pytest.approx(model32.omega(frame[0], frame[3]))
    assert G[0, 3] > 0
