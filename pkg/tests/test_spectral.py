import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgsoliton.spectral import (F_diagonal, H_axis, H_matrix, K_matrix, M_matrix,
                                f_inequality_admissible, f_inequality_check, f_inequality_samples,
                                f_inequality_value, green_function, im_H_surface, invertibility_scan,
                                kappa, puiseux_fit, spectral_gap, tail_check)
from oracles import H_epsilon, H_limit, K_qmc, green_bessel

A = 0.5
MU = spectral_gap(A)


def test_gap():
    assert MU == pytest.approx(np.sqrt(0.75))
    with pytest.raises(ValueError, match="superluminal"):
        spectral_gap(1.0)


@pytest.mark.parametrize("lam", [0.3, 0.2 + 0.7j, 0.1 - 2.0j, 1e-3 + 1.5j])
def test_kappa_branch(lam):
    k = kappa(lam, A)
    g2 = 1 / (1 - A * A)
    assert k * k == pytest.approx(g2 * (lam * lam + MU * MU), rel=1e-12)
    assert k.real > 0


@pytest.mark.parametrize("w", [0.4, 1.5, -2.0])
def test_kappa_axis_is_limit_from_right(w):
    assert kappa(1j * w, A) == pytest.approx(kappa(1e-10 + 1j * w, A), abs=1e-8)


@pytest.mark.parametrize("lam", [0.4, 0.3 + 0.8j])
@pytest.mark.parametrize("y", [(1.0, 0.5, 0.0), (-0.7, 0.0, 1.2)])
def test_green_function_matches_fourier_oracle(lam, y):
    y1, yperp = y[0], np.hypot(y[1], y[2])
    ref = green_bessel(lam, A, 1.0, y1, yperp)
    assert green_function(lam, [A, 0, 0], 1.0, y) == pytest.approx(ref, rel=1e-8)


def test_green_function_rotates_with_velocity():
    v = np.array([0.0, 0.3, 0.4])
    y = np.array([0.2, 0.9, -0.4])
    y1 = y @ v / 0.5
    ref = green_function(0.3, [0.5, 0, 0], 1.0, [y1, np.sqrt(y @ y - y1 * y1), 0.0])
    assert green_function(0.3, v, 1.0, y) == pytest.approx(ref, rel=1e-13)
    with pytest.raises(ValueError, match="singular"):
        green_function(0.3, v, 1.0, [0, 0, 0])


def test_K_against_qmc(profile):
    K = np.diag(K_matrix(A, profile))
    ref = K_qmc(profile, A, 1.0, k_max=6.0)
    np.testing.assert_allclose(K, ref, rtol=1e-3)
    assert K[1] == K[2] and np.all(K > 0)


def test_H_zero_is_K(profile):
    K = K_matrix(A, profile)
    np.testing.assert_allclose(H_matrix(0.0, A, profile), K, rtol=1e-10)
    np.testing.assert_allclose(H_matrix(1e-9, A, profile).real, K, rtol=1e-8)


@pytest.mark.parametrize("lam", [0.5, 0.2 + 1.3j])
def test_H_off_axis_against_oracle(profile, lam):
    H = np.diag(H_matrix(lam, A, profile))
    ref = H_epsilon(profile, lam, A, 1.0, k_max=30.0)
    np.testing.assert_allclose(H[:2], ref, rtol=1e-8)
    assert H[1] == H[2]


@pytest.mark.parametrize("w", [0.4, 1.3, 2.5, -1.8])
def test_H_axis_against_eps_limit(profile, w):
    H = np.array(H_axis(w, A, profile))
    ref = H_limit(profile, w, A, 1.0, k_max=12.0)
    np.testing.assert_allclose(H, ref, rtol=1e-5)


@pytest.mark.parametrize("w", [1.0, 2.0, 4.5, -3.0])
def test_im_H_surface_two_ways(profile, w):
    surf = im_H_surface(w, A, profile)
    par, perp = H_axis(w, A, profile)
    np.testing.assert_allclose(surf, [par.imag, perp.imag, perp.imag], rtol=1e-9)
    assert np.all(np.sign(surf) == -np.sign(w))


def test_im_H_surface_below_gap_rejected(profile):
    with pytest.raises(ValueError):
        im_H_surface(0.5 * MU, A, profile)


def test_H_rejects_left_half_plane(profile):
    with pytest.raises(ValueError):
        H_matrix(-0.1, A, profile)


def test_F_positive_below_gap(profile):
    for w in np.linspace(0.05, 0.95, 5) * MU:
        F = F_diagonal(w, A, profile)
        assert np.all(F.real > 0) and np.all(np.abs(F.imag) < 1e-14)


@pytest.mark.parametrize("lam", [0.0, 0.4j, 1.7j, 0.3 + 0.5j])
def test_determinant_two_ways(profile, lam):
    s = M_matrix(lam, A, profile)
    if lam == 0:
        scale = np.prod(np.abs(np.linalg.eigvals(s.M)) + np.linalg.norm(s.M))
        assert abs(s.detM) <= 1e-8 * scale
    else:
        assert s.detM == pytest.approx(s.det_factored, rel=1e-10)
        np.testing.assert_allclose(s.inverse() @ s.M, np.eye(6), atol=1e-10)


def test_f_inequality_random_samples():
    rng = np.random.default_rng(2024)
    M, r, w = f_inequality_samples(10_000, rng)
    assert np.all(f_inequality_admissible(M, r, w))
    assert f_inequality_check(M, r, w)


@given(st.floats(1.0, 30.0), st.floats(-0.99, 0.99), st.floats(1e-6, 1.0))
def test_f_inequality_symmetry_and_positivity(M, rfrac, wfrac):
    r = rfrac * M
    w = wfrac * (M - abs(r))
    val = f_inequality_value(M, r, w)
    assert val > 0
    assert f_inequality_value(M, r, -w) == val
    assert f_inequality_value(M, -r, w) == pytest.approx(val, rel=1e-14)


def test_f_inequality_small_omega_limit():
    M, r = 2.0, 0.7
    for w in (1e-3, 1e-6, 1e-9):
        lim = 2 * w * w * (1 / (M - r) ** 3 + 1 / (M + r) ** 3)
        assert f_inequality_value(M, r, w) == pytest.approx(lim, rel=1e-5)
    # the six-term form agrees where cancellation is mild
    assert f_inequality_value(M, r, 0.5, grouped=False) == pytest.approx(f_inequality_value(M, r, 0.5), rel=1e-12)
    assert f_inequality_value(1.0, 0.0, 1.0) == np.inf


def test_f_inequality_inadmissible():
    with pytest.raises(ValueError, match="admissible"):
        f_inequality_check(1.0, 0.5, 0.8)


@pytest.mark.parametrize("side", [1, -1])
def test_puiseux_threshold(profile, side):
    fit = puiseux_fit(A, profile, side=side)
    assert fit.R0_error <= 1e-3
    assert fit.residual <= 1e-3
    assert fit.branch == pytest.approx(side * MU)


def test_tail(profile):
    rep = tail_check(A, profile, omegas=np.geomspace(MU + 1, 40.0, 16))
    assert rep.bounded and np.isfinite(rep.bound)


def test_invertibility_scan(profile):
    _, summary = invertibility_scan(A, profile, omegas=[0.2, 0.6, 1.2, 3.0])
    assert summary["all_invertible"]
    assert summary["min_F_below_gap"] > 0 and summary["max_ImF_above_gap"] < 0


def test_puiseux_residual_shrinks_with_window(profile):
    res = [puiseux_fit(A, profile, window=w, n=6, degree=2).residual for w in (0.04, 0.01)]
    assert res[1] < res[0]
    with pytest.raises(ValueError, match="ill-conditioned"):
        puiseux_fit(A, profile, n=2, degree=4)
