import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgsoliton.charge import (ChargeProfile, rho_hat, rho_hat_radial, rho_on_grid, total_charge,
                              wiener_check)
from kgsoliton.fields import Grid
from oracles import ball_transform, rho_hat_cartesian


@pytest.mark.parametrize("kind", ["wendland", "quartic"])
def test_transform_matches_cartesian_cubature(kind):
    p = ChargeProfile(kind, 1.3, 2.5)
    k = np.array([0.7, 0.3, -0.5])
    assert rho_hat(p, k) == pytest.approx(rho_hat_cartesian(p, k), rel=1e-6)


def test_ball_transform_closed_form():
    p = ChargeProfile("ball", 2.0, 1.5)
    ks = np.linspace(0.1, 15.0, 50)
    np.testing.assert_allclose(rho_hat_radial(p, ks), ball_transform(2.0, 1.5, ks), rtol=1e-10, atol=1e-14)


def test_total_charge_wendland():
    # int (1-s)^4 (4s+1) 4 pi r^2 dr = 4 pi R^3 / 42
    p = ChargeProfile("wendland", 1.0, 2.0)
    assert total_charge(p) == pytest.approx(4 * np.pi * 8 / 42, rel=1e-13)


def test_zero_limit_is_charge():
    p = ChargeProfile()
    assert rho_hat_radial(p, 0.0) == pytest.approx(total_charge(p) * (2 * np.pi) ** -1.5, rel=1e-14)


def test_wiener_default_passes_and_quartic_fails():
    assert wiener_check(ChargeProfile()).passed
    rep = wiener_check(ChargeProfile("quartic"))
    assert not rep.passed
    assert set(rep.as_dict()) >= {"min_abs_rho_hat", "argmin_k", "passed"}


def test_wiener_ball_fails():
    assert not wiener_check(ChargeProfile("ball")).passed


@given(st.floats(0.0, 30.0), st.floats(0.5, 5.0), st.floats(-3.0, 3.0))
def test_transform_even_and_linear(k, R, A):
    p = ChargeProfile("wendland", A, R)
    base = ChargeProfile("wendland", 1.0, R)
    assert rho_hat_radial(p, k) == pytest.approx(A * rho_hat_radial(base, k), rel=1e-12, abs=1e-15)
    assert rho_hat_radial(p, -k) == rho_hat_radial(p, k)


def test_tabulated_matches_analytic():
    R = 3.0
    r = np.linspace(0, R, 400)
    ref = ChargeProfile("wendland", 1.0, R)
    tab = ChargeProfile("tabulated", 1.0, R, (r, ref.radial(r)))
    ks = np.linspace(0, 5, 11)
    np.testing.assert_allclose(rho_hat_radial(tab, ks), rho_hat_radial(ref, ks), rtol=1e-6, atol=1e-9)
    assert hash(tab) == hash(ChargeProfile("tabulated", 1.0, R, (r, ref.radial(r))))


def test_radial_derivative_matches_difference():
    p = ChargeProfile("wendland", 1.0, 3.0)
    r = np.linspace(0.1, 2.9, 30)
    h = 1e-6
    np.testing.assert_allclose(p.radial_derivative(r), (p.radial(r + h) - p.radial(r - h)) / (2 * h),
                               rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("kwargs", [dict(kind="cube"), dict(radius=-1.0), dict(radius=np.nan),
                                    dict(kind="tabulated"), dict(amplitude=np.inf)])
def test_invalid_profiles(kwargs):
    with pytest.raises(ValueError, match="invalid profile"):
        ChargeProfile(**kwargs)


def test_support_clipped():
    g = Grid(16, 4.0)
    with pytest.raises(ValueError, match="support clipped"):
        rho_on_grid(ChargeProfile(radius=3.0), g, center=(1.5, 0, 0))
    rho = rho_on_grid(ChargeProfile(radius=3.0), g)
    assert rho.shape == (16, 16, 16) and rho.max() == pytest.approx(1.0)
