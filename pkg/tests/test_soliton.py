import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgsoliton.linop import vector_field
from kgsoliton.soliton import (SolitonParams, gamma, momentum_jacobian, momentum_of_velocity,
                               soliton_residual, soliton_spectral, soliton_spectral_state,
                               soliton_state, soliton_trajectory, tangent_spectral, tangent_vectors,
                               velocity_of_momentum)

V = [np.zeros(3), np.array([0.3, 0, 0]), np.array([0.2, -0.4, 0.5])]


@pytest.mark.parametrize("v", V)
def test_residual(model64, v):
    assert soliton_residual(v, model64) <= 1e-12


@pytest.mark.parametrize("v", V)
def test_soliton_is_a_travelling_wave(model32, v):
    # F(S(sigma)) = sum_j v_j tau_j: the state only translates with velocity v
    S = soliton_spectral_state(SolitonParams(np.zeros(3), v), model32)
    F = vector_field(S, model32)
    frame = tangent_spectral(v, model32)
    ref = sum((frame[j] * v[j] for j in range(3)), start=frame[0] * 0.0)
    scale = np.sqrt(model32.grid.spectral_dot(S.psi, S.psi))
    d = F - ref
    assert np.sqrt(model32.grid.spectral_dot(d.psi, d.psi)) <= 1e-12 * scale
    assert np.sqrt(model32.grid.spectral_dot(d.pi, d.pi)) <= 1e-12 * scale
    np.testing.assert_allclose(d.q, 0, atol=1e-14)
    np.testing.assert_allclose(d.p, 0, atol=1e-12)


@pytest.mark.parametrize("v", V)
def test_tangent_vectors_match_finite_differences(model32, v):
    frame = tangent_spectral(v, model32)
    g = model32.grid
    h = 1e-5
    for j in range(3):
        e = np.eye(3)[j] * h
        plus = soliton_spectral_state(SolitonParams(e, v), model32)
        minus = soliton_spectral_state(SolitonParams(-e, v), model32)
        fd = (plus - minus) * (0.5 / h)
        d = fd - frame[j]
        assert np.sqrt(g.spectral_dot(d.psi, d.psi)) <= 1e-8 * np.sqrt(g.spectral_dot(fd.psi, fd.psi))
        np.testing.assert_allclose(d.q, 0, atol=1e-9)
        plus = soliton_spectral_state(SolitonParams(np.zeros(3), v + e), model32)
        minus = soliton_spectral_state(SolitonParams(np.zeros(3), v - e), model32)
        fd = (plus - minus) * (0.5 / h)
        d = fd - frame[j + 3]
        assert np.sqrt(g.spectral_dot(d.pi, d.pi)) <= 1e-7 * np.sqrt(g.spectral_dot(fd.pi, fd.pi)) + 1e-12
        np.testing.assert_allclose(d.p, 0, atol=1e-8)


def test_self_force_vanishes(model64):
    psi, _ = soliton_spectral([0.4, 0.2, -0.1], model64)
    g = model64.grid
    f = [g.spectral_dot(psi, 1j * kc * model64.rho_k) for kc in g.kdiff]
    np.testing.assert_allclose(f, 0.0, atol=1e-15)


def test_soliton_state_centre_and_momentum(model32):
    sigma = SolitonParams([1.0, -0.5, 0.25], [0.5, 0, 0])
    Y = soliton_state(sigma, model32)
    np.testing.assert_array_equal(Y.q, sigma.b)
    np.testing.assert_allclose(Y.p, momentum_of_velocity(sigma.v))
    i = np.unravel_index(np.argmin(Y.psi), Y.psi.shape)
    np.testing.assert_allclose([model32.grid.x[k] for k in i], sigma.b, atol=model32.grid.h)


def test_tangent_vectors_real_space(model32):
    fr = tangent_vectors([0.3, 0, 0], model32, b=(1.0, 0, 0))
    assert len(fr) == 6 and fr[0].psi.shape == model32.grid.shape


@given(st.lists(st.floats(-0.57, 0.57), min_size=3, max_size=3))
def test_velocity_momentum_roundtrip(v):
    v = np.array(v)
    np.testing.assert_allclose(velocity_of_momentum(momentum_of_velocity(v)), v, atol=1e-14)
    assert gamma(v) == pytest.approx(np.sqrt(1 + momentum_of_velocity(v) @ momentum_of_velocity(v)))


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
def test_velocity_of_momentum_subluminal(p):
    assert np.linalg.norm(velocity_of_momentum(p)) < 1


def test_momentum_jacobian_fd():
    v = np.array([0.3, -0.2, 0.4])
    h = 1e-6
    fd = np.column_stack([(momentum_of_velocity(v + h * e) - momentum_of_velocity(v - h * e)) / (2 * h)
                          for e in np.eye(3)])
    np.testing.assert_allclose(momentum_jacobian(v), fd, rtol=1e-8)


@pytest.mark.parametrize("v", [[1.0, 0, 0], [0.8, 0.7, 0], [np.nan, 0, 0]])
def test_superluminal_rejected(v):
    with pytest.raises(ValueError, match="superluminal"):
        SolitonParams(np.zeros(3), v)


def test_trajectory_and_clipping(model32):
    s = soliton_trajectory(SolitonParams([0, 0, 0], [0.5, 0, 0]), 2.0)
    np.testing.assert_array_equal(s.b, [1.0, 0, 0])
    with pytest.raises(ValueError, match="support clipped"):
        soliton_state(SolitonParams([10.0, 0, 0], [0, 0, 0]), model32)
