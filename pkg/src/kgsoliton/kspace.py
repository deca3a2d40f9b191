"""Quadrature over wavevector space for radial charge densities.

Integrals of the form ``int |rho_hat(k)|^2 k_j^2 g(|k|, u) dk`` are done in
spherical coordinates whose polar axis points along ``v`` (``u`` is the
cosine of the polar angle, ``k_1 = |k| u``).  The azimuth is integrated
analytically, so a ``(k, u)`` tensor Gauss-Legendre rule suffices.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .charge import ChargeProfile, rho_hat_radial

__all__ = ["radial_cutoff", "gauss_panels", "axial_moments", "rotate_axial", "QuadratureError"]


class QuadratureError(RuntimeError):
    """Raised when refinement fails to reach the requested tolerance."""


@lru_cache(maxsize=64)
def _leggauss(n):
    return leggauss(n)


def gauss_panels(a, b, panels, order=24, breaks=()):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``.

    ``breaks`` are extra panel boundaries (e.g. a singular radius).
    """
    edges = np.linspace(a, b, panels + 1)
    if breaks:
        edges = np.unique(np.concatenate([edges, [x for x in breaks if a < x < b]]))
    x, w = _leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * w
    return nodes.ravel(), weights.ravel()


@lru_cache(maxsize=64)
def radial_cutoff(profile: ChargeProfile, rel_tol: float = 1e-9) -> float:
    """Radius beyond which ``|rho_hat|`` stays below ``rel_tol * rho_hat(0)``."""
    R = profile.radius
    ks = np.linspace(0.0, 400.0 / R, 40001)
    vals = np.abs(rho_hat_radial(profile, ks))
    env = np.maximum.accumulate(vals[::-1])[::-1]
    above = np.nonzero(env > rel_tol * vals[0])[0]
    return float(ks[min(above[-1] + 1, len(ks) - 1)]) if above.size else float(ks[1])


def axial_moments(profile: ChargeProfile, g, *, rtol=1e-10, panels=16, order=24,
                  n_u=48, max_levels=6, k_max=None):
    """Return ``(I_par, I_perp)`` with

    ``I_par = int |rho_hat|^2 k_1^2 g dk`` and
    ``I_perp = int |rho_hat|^2 k_2^2 g dk``,

    where ``g(k, u)`` is a vectorized callable (``k = |k|``,
    ``u = k_1/|k|``) that may return complex values.  The rule is refined by
    doubling until the relative change is below ``rtol``.
    """
    kc = radial_cutoff(profile) if k_max is None else k_max
    prev = None
    for level in range(max_levels):
        k, wk = gauss_panels(0.0, kc, panels * 2**level, order)
        u, wu = _leggauss(n_u * 2**level)
        rh2 = rho_hat_radial(profile, k) ** 2
        G = g(k[:, None], u[None, :])
        base = (2.0 * np.pi * wk * k**4 * rh2)[:, None] * wu[None, :] * G
        par = np.sum(base * u[None, :] ** 2)
        perp = 0.5 * np.sum(base * (1.0 - u[None, :] ** 2))
        cur = np.array([par, perp])
        if prev is not None:
            change = np.max(np.abs(cur - prev)) / max(np.max(np.abs(cur)), 1e-300)
            if change <= rtol:
                return cur[0], cur[1]
        prev = cur
    raise QuadratureError(f"k-space quadrature did not converge (last relative change {change:.2e})")


def rotate_axial(par, perp, v):
    """3x3 matrix ``perp E + (par - perp) vhat vhat^T`` in the original frame."""
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    vhat = v / nv if nv > 0 else np.array([1.0, 0.0, 0.0])
    dtype = np.result_type(par, perp, float)
    return perp * np.eye(3, dtype=dtype) + (par - perp) * np.outer(vhat, vhat)
