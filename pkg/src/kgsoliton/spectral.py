"""Resolvent layer of the linearization: kappa, g_lambda, K, H(lambda), M(lambda).

All matrices are returned in coordinates where ``v = |v| e_1``; the
velocity enters only through its modulus.  With

    D(k, lambda) = k^2 + m^2 + (i |v| k_1 + lambda)^2

the diagonal matrices are

    K_jj = int k_j^2 |rho_hat|^2 / D(k, 0) dk,
    H_jj(lambda) = int k_j^2 |rho_hat|^2 / D(k, lambda) dk,

and ``M(lambda) = [[lambda E, -B_v], [K - H(lambda), lambda E]]`` with
``B_v = diag(nu^3, nu, nu)``, ``nu = sqrt(1 - v^2)``.

On the imaginary axis ``lambda = i omega + 0`` the substitution
``s = nu k_1 - |v| omega / nu`` turns ``D`` into ``r^2 - R^2`` with
``r^2 = s^2 + k_2^2 + k_3^2`` and ``R^2 = (omega^2 - mu^2) / nu^2``,
``mu = m nu``.  For ``|omega| > mu`` the zero set of ``D`` is an ellipsoid
and the radial integral is split into a principal value and a delta term.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charge import ChargeProfile, rho_hat_radial
from .kspace import QuadratureError, _leggauss, axial_moments, gauss_panels, radial_cutoff

__all__ = [
    "ResolventSample",
    "PuiseuxFit",
    "TailReport",
    "spectral_gap",
    "kappa",
    "green_function",
    "K_matrix",
    "H_matrix",
    "H_axis",
    "im_H_surface",
    "F_diagonal",
    "M_matrix",
    "f_inequality_value",
    "f_inequality_admissible",
    "f_inequality_check",
    "appendix_b_check",
    "f_inequality_samples",
    "puiseux_fit",
    "tail_check",
    "invertibility_scan",
]


def _speed(v) -> float:
    a = float(np.linalg.norm(np.atleast_1d(np.asarray(v, dtype=float))))
    if not a < 1.0:
        raise ValueError("superluminal velocity |v| >= 1")
    return a


def spectral_gap(v, m: float = 1.0) -> float:
    """``mu = m sqrt(1 - v^2)``."""
    a = _speed(v)
    return m * np.sqrt(1.0 - a * a)


def kappa(lam, v, m: float = 1.0) -> complex:
    """``kappa = gamma sqrt(lambda^2 + mu^2)`` on the branch ``Re kappa > 0``.

    A purely imaginary ``lam = i omega`` is read as the limit from
    ``Re lambda > 0``: for ``|omega| > mu`` the result is
    ``i sign(omega) gamma sqrt(omega^2 - mu^2)``.
    """
    a = _speed(v)
    gam = 1.0 / np.sqrt(1.0 - a * a)
    mu = m / gam
    lam = complex(lam)
    if lam.real == 0.0:
        w = lam.imag
        d = mu * mu - w * w
        if d >= 0:
            return complex(gam * np.sqrt(d))
        return complex(0.0, np.sign(w) * gam * np.sqrt(-d))
    return complex(gam * np.sqrt(lam * lam + mu * mu))


def green_function(lam, v, m: float, y) -> complex:
    """Kernel of ``(-Laplace + m^2 + (lambda - v.grad)^2)^{-1}``.

    ``g(y) = gamma exp(-kappa |y~| - kappa_1 y~_1) / (4 pi |y~|)`` with
    ``y~ = (gamma y_1, y_2, y_3)`` in coordinates where ``v = |v| e_1`` and
    ``kappa_1 = gamma |v| lambda``.  Equivalently
    ``g(y) = (2 pi)^-3 int exp(-i k.y) / D(k, lambda) dk``.
    """
    y = np.asarray(y, dtype=float)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    a = _speed(v)
    if v.size == 3 and a > 0:
        vhat = v / a
        y1 = float(y @ vhat)
        yperp = float(np.sqrt(max(y @ y - y1 * y1, 0.0)))
    else:
        y1 = float(y[0])
        yperp = float(np.hypot(y[1], y[2]))
    gam = 1.0 / np.sqrt(1.0 - a * a)
    yt1 = gam * y1
    rt = np.hypot(yt1, yperp)
    if rt == 0.0:
        raise ValueError("green function is singular at y = 0")
    k = kappa(lam, a, m)
    k1 = gam * a * complex(lam)
    return complex(gam * np.exp(-k * rt - k1 * yt1) / (4.0 * np.pi * rt))


def K_matrix(v, profile: ChargeProfile, m: float = 1.0, rtol: float = 1e-11) -> np.ndarray:
    """Diagonal ``K = diag(K_par, K_perp, K_perp)`` (positive definite)."""
    a = _speed(v)

    def g(k, u):
        return 1.0 / (k**2 + m**2 - (a * k * u) ** 2)

    par, perp = axial_moments(profile, g, rtol=rtol)
    return np.diag([par, perp, perp])


def _shell_moments(r, omega, a, profile, m, n_u):
    """Angular moments ``h(r) = g(r) / r^2`` of the stretched-coordinate integrand.

    Returns ``(h_par, h_perp)`` such that
    ``H_jj = (1/nu) int h_j(r) r^2 / (r^2 - R^2) dr``.
    """
    nu = np.sqrt(1.0 - a * a)
    c = a * omega / nu
    u, wu = _leggauss(n_u)
    r = np.asarray(r, dtype=float)[:, None]
    k1 = (r * u + c) / nu
    kperp2 = r**2 * (1.0 - u**2)
    rh2 = rho_hat_radial(profile, np.sqrt(k1**2 + kperp2)) ** 2
    h_par = 2.0 * np.pi * (rh2 * k1**2) @ wu
    h_perp = np.pi * (rh2 * kperp2) @ wu
    return h_par, h_perp


def H_axis(omega: float, v, profile: ChargeProfile, m: float = 1.0, *, rtol: float = 1e-10,
           panels: int = 8, order: int = 24, n_u: int = 48, max_levels: int = 6):
    """``(H_par, H_perp)`` at ``lambda = i omega + 0`` for real ``omega``.

    ``|omega| <= mu``: ordinary quadrature (the denominator is positive away
    from an integrable point singularity at ``|omega| = mu``).
    ``|omega| > mu``: principal value by subtraction of the singular part at
    ``r = R`` plus ``-i pi sign(omega) g(R) / (2 R nu)``.
    """
    a = _speed(v)
    nu = np.sqrt(1.0 - a * a)
    mu = m * nu
    omega = float(omega)
    R2 = (omega**2 - mu**2) / nu**2
    c = abs(a * omega / nu)
    kc = radial_cutoff(profile)
    R = np.sqrt(abs(R2))
    rmax = max(kc + c, 2.0 * R, 1.0)
    # near the threshold the integrand varies on the scale R: grade the
    # panels geometrically from R outwards
    graded = tuple(R * 2.0 ** np.arange(1, int(np.ceil(np.log2(rmax / R))))) if R > 0 else ()
    prev = None
    change = np.inf
    for level in range(max_levels):
        n = panels * 2**level
        nu_nodes = n_u * 2**level
        if R2 <= 0.0:
            r, w = gauss_panels(0.0, rmax, n, order, breaks=(R, *graded) if R > 0 else ())
            hp, ht = _shell_moments(r, omega, a, profile, m, nu_nodes)
            weight = w * r**2 / (r**2 + R * R)
            cur = np.array([weight @ hp, weight @ ht], dtype=complex)
        else:
            r1, w1 = gauss_panels(0.0, R, n, order)
            r2, w2 = gauss_panels(R, rmax, n, order, breaks=graded)
            r = np.concatenate([r1, r2])
            w = np.concatenate([w1, w2])
            hp, ht = _shell_moments(np.append(r, R), omega, a, profile, m, nu_nodes)
            cur = np.empty(2, dtype=complex)
            for i, h in enumerate((hp, ht)):
                # G(r) = h(r) r^2 / (r + R); integrand G / (r - R)
                G = h[:-1] * r**2 / (r + R)
                GR = h[-1] * R / 2.0
                pv = w @ ((G - GR) / (r - R)) + GR * np.log((rmax - R) / R)
                cur[i] = complex(pv, -np.sign(omega) * np.pi * GR)
        cur /= nu
        if prev is not None:
            change = np.max(np.abs(cur - prev)) / max(np.max(np.abs(cur)), 1e-300)
            if change <= rtol:
                return cur[0], cur[1]
        prev = cur
    raise QuadratureError(f"H quadrature did not converge at omega={omega} "
                          f"(last relative change {change:.2e})")


def H_matrix(lam, v, profile: ChargeProfile, m: float = 1.0, rtol: float = 1e-10) -> np.ndarray:
    """Diagonal complex ``H(lambda)``; ``Re lambda = 0`` means ``i omega + 0``."""
    lam = complex(lam)
    if lam.real < 0:
        raise ValueError("H_matrix needs Re lambda >= 0")
    if lam.real == 0.0:
        par, perp = H_axis(lam.imag, v, profile, m, rtol=rtol)
    else:
        a = _speed(v)

        def g(k, u):
            return 1.0 / (k**2 + m**2 + (1j * a * k * u + lam) ** 2)

        par, perp = axial_moments(profile, g, rtol=rtol)
    return np.diag(np.array([par, perp, perp], dtype=complex))


def im_H_surface(omega: float, v, profile: ChargeProfile, m: float = 1.0, *,
                 n_theta: int = 48, n_phi: int = 48, rtol: float = 1e-10, max_levels: int = 6):
    """``Im H_jj(i omega + 0)`` as a surface integral over the ellipsoid ``D = 0``.

    ``Im H_jj = -sign(omega) pi int_T k_j^2 |rho_hat|^2 / |grad D| dS`` with
    ``grad D = 2 k - 2 |v| (|v| k_1 + omega) e_1``.  The ellipsoid is
    parametrized by polar angles in the stretched coordinates and the area
    element is the norm of the cross product of the tangent vectors.
    """
    a = _speed(v)
    nu = np.sqrt(1.0 - a * a)
    mu = m * nu
    omega = float(omega)
    if abs(omega) <= mu:
        raise ValueError("im_H_surface needs |omega| > mu")
    R = np.sqrt(omega**2 - mu**2) / nu
    c = a * omega / nu
    prev = None
    change = np.inf
    for level in range(max_levels):
        th, wth = gauss_panels(0.0, np.pi, 2**level, n_theta)
        nph = n_phi * 2**level
        ph = 2.0 * np.pi * np.arange(nph) / nph
        wph = 2.0 * np.pi / nph
        T, P = np.meshgrid(th, ph, indexing="ij")
        st, ct, sp, cp = np.sin(T), np.cos(T), np.sin(P), np.cos(P)
        k = np.stack([(R * ct + c) / nu, R * st * cp, R * st * sp], axis=-1)
        d_th = np.stack([-R * st / nu, R * ct * cp, R * ct * sp], axis=-1)
        d_ph = np.stack([np.zeros_like(T), -R * st * sp, R * st * cp], axis=-1)
        dS = np.linalg.norm(np.cross(d_th, d_ph), axis=-1)
        grad = 2.0 * k
        grad[..., 0] -= 2.0 * a * (a * k[..., 0] + omega)
        dens = rho_hat_radial(profile, np.linalg.norm(k, axis=-1)) ** 2 * dS / np.linalg.norm(grad, axis=-1)
        wts = wth[:, None] * wph
        cur = -np.sign(omega) * np.pi * np.array([np.sum(wts * dens * k[..., j] ** 2) for j in range(3)])
        if prev is not None:
            change = np.max(np.abs(cur - prev)) / max(np.max(np.abs(cur)), 1e-300)
            if change <= rtol:
                return cur
        prev = cur
    raise QuadratureError(f"surface quadrature did not converge (last relative change {change:.2e})")


def F_diagonal(omega: float, v, profile: ChargeProfile, m: float = 1.0, rtol: float = 1e-10):
    """``F(omega) = -K + H(i omega + 0)`` as ``(F_par, F_perp, F_perp)``."""
    K = np.diag(K_matrix(v, profile, m))
    H = np.diag(H_matrix(1j * omega, v, profile, m, rtol))
    return H - K


@dataclass
class ResolventSample:
    """``M(lambda)`` with its ingredients and both determinant evaluations."""

    lam: complex
    K: np.ndarray
    H: np.ndarray
    M: np.ndarray
    detM: complex
    det_factored: complex
    kappa: complex
    B: np.ndarray = field(repr=False, default=None)

    @property
    def F(self):
        """Diagonal of ``H - K``."""
        return np.diag(self.H) - np.diag(self.K)

    def inverse(self):
        return np.linalg.inv(self.M)


def M_matrix(lam, v, profile: ChargeProfile, m: float = 1.0, *, K=None,
             rtol: float = 1e-10) -> ResolventSample:
    """Assemble ``M(lambda)``; ``detM`` is the direct 6x6 determinant and
    ``det_factored = prod_j (lambda^2 + b_j (K_jj - H_jj))``."""
    a = _speed(v)
    nu = np.sqrt(1.0 - a * a)
    lam = complex(lam)
    K = K_matrix(a, profile, m) if K is None else K
    H = H_matrix(lam, a, profile, m, rtol)
    B = np.diag([nu**3, nu, nu])
    E = np.eye(3)
    M = np.block([[lam * E, -B], [K - H, lam * E]]).astype(complex)
    det = complex(np.linalg.det(M))
    fac = complex(np.prod(lam**2 + np.diag(B) * (np.diag(K) - np.diag(H))))
    return ResolventSample(lam, K, H, M, det, fac, kappa(lam, a, m), B)


# ---------------------------------------------------------------- positivity of F

def f_inequality_admissible(M, r, omega) -> np.ndarray:
    """Parameter ranges implied by ``|v| < 1`` and ``0 < |omega| <= mu``.

    With ``M = sqrt(m^2 + k^2)`` and ``r = |v| k_1`` one has
    ``M - |r| >= mu >= |omega|``; this is what the check requires.
    """
    M, r, omega = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (M, r, omega)))
    return (np.abs(r) < M) & (omega != 0) & (np.abs(omega) <= M - np.abs(r))


def f_inequality_value(M, r, omega, grouped: bool = True):
    """Left side of the inequality

    ``1/(M-r-w) + 1/(M-r+w) - 2/(M-r) + 1/(M+r+w) + 1/(M+r-w) - 2/(M+r)``.

    ``grouped=True`` evaluates each three-term group as
    ``2 w^2 / ((N + w)(N - w) N)``, which is free of cancellation for small
    ``w``.  ``N = |w|`` gives ``+inf``.
    """
    M, r, w = (np.asarray(x, dtype=float) for x in (M, r, omega))
    with np.errstate(divide="ignore"):
        if grouped:
            out = 0.0
            for N in (M - r, M + r):
                den = (N + w) * (N - w) * N
                out = out + np.where(den == 0, np.inf, 2.0 * w * w / np.where(den == 0, 1.0, den))
            return out
        rp, rm = r + w, r - w
        return (1 / (M - rp) + 1 / (M - rm) - 2 / (M - r)
                + 1 / (M + rp) + 1 / (M + rm) - 2 / (M + r))


def f_inequality_check(M, r, omega) -> bool:
    """True when the inequality holds (``+inf`` counts as positive)."""
    if not np.all(f_inequality_admissible(M, r, omega)):
        raise ValueError("parameters outside the admissible range")
    return bool(np.all(f_inequality_value(M, r, omega) > 0))


appendix_b_check = f_inequality_check


def f_inequality_samples(n: int, rng, m: float = 1.0, k_max: float = 20.0):
    """Draw ``(M, r, omega)`` from random ``v``, ``k`` and ``0 < |omega| <= mu``."""
    speed = rng.uniform(0.0, 1.0, n)
    kdir = rng.normal(size=(n, 3))
    kdir /= np.linalg.norm(kdir, axis=1, keepdims=True)
    k = kdir * rng.uniform(0.0, k_max, n)[:, None]
    mu = m * np.sqrt(1.0 - speed**2)
    omega = rng.choice([-1.0, 1.0], n) * mu * (1.0 - rng.uniform(0.0, 1.0, n))
    M = np.sqrt(m**2 + np.sum(k**2, axis=1))
    return M, speed * k[:, 0], omega


# ---------------------------------------------------------------- thresholds and tails

@dataclass
class PuiseuxFit:
    """Least-squares fit ``M^-1(i omega) ~ sum_j R_j s^j`` near ``omega = +-mu``.

    ``s = sqrt(mu - |omega|)`` below the threshold and
    ``s = i sign(omega) sqrt(|omega| - mu)`` above it.  ``coefficients``
    holds all fitted ``R_j``; ``R0``, ``R1``, ``R2`` are the leading ones.
    """

    branch: float
    R0: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    residual: float
    window: float
    direct: np.ndarray
    coefficients: np.ndarray = field(repr=False, default=None)

    @property
    def half_power_norm(self) -> float:
        return float(np.linalg.norm(self.R1))

    @property
    def R0_error(self) -> float:
        """Relative difference between ``R0`` and the directly computed ``M^-1(i mu)``."""
        return float(np.linalg.norm(self.R0 - self.direct) / np.linalg.norm(self.direct))


def _puiseux_variable(omega, mu):
    d = mu - abs(omega)
    return np.sqrt(d) + 0j if d >= 0 else 1j * np.sign(omega) * np.sqrt(-d)


def puiseux_fit(v, profile: ChargeProfile, m: float = 1.0, side: int = 1, *,
                window: float = 0.02, n: int = 12, degree: int = 4,
                rtol: float = 1e-11) -> PuiseuxFit:
    """Fit ``M^-1(i omega)`` around ``omega = side * mu`` from both sides.

    ``n`` samples on each side, quadratically clustered towards the
    threshold, and powers ``s^0 .. s^degree``.  With ``degree = 2`` the
    truncation error in ``R0`` is of order ``window^1.5``.
    """
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    if not 2 <= degree < 2 * n:
        raise ValueError("fit ill-conditioned: need 2 <= degree < 2 n")
    mu = spectral_gap(v, m)
    if not 0 < window < mu:
        raise ValueError("window must lie in (0, mu)")
    K = K_matrix(v, profile, m)
    d = window * (np.arange(1, n + 1) / n) ** 2
    deltas = np.concatenate([-d[::-1], d])
    omegas = side * (mu + deltas)
    s = np.array([_puiseux_variable(w, mu) for w in omegas])
    Y = np.array([M_matrix(1j * w, v, profile, m, K=K, rtol=rtol).inverse().ravel() for w in omegas])
    A = np.stack([s**j for j in range(degree + 1)], axis=1)
    if np.linalg.cond(A) > 1e12:
        raise ValueError("fit ill-conditioned")
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = np.max(np.abs(A @ coef - Y)) / np.max(np.abs(Y))
    direct = M_matrix(1j * side * mu, v, profile, m, K=K, rtol=rtol).inverse()
    R = coef.reshape(degree + 1, 6, 6)
    return PuiseuxFit(side * mu, R[0], R[1], R[2], float(resid), float(window), direct, R)


@dataclass
class TailReport:
    """``|H_jj(i omega)| |omega|`` along a frequency grid."""

    omegas: np.ndarray
    H: np.ndarray
    products: np.ndarray
    bound: float
    exponent: float

    @property
    def bounded(self) -> bool:
        """Finite products whose log-log slope does not exceed that of ``C/omega``."""
        return bool(np.all(np.isfinite(self.products)) and self.exponent <= -1.0)


def tail_check(v, profile: ChargeProfile, m: float = 1.0, omegas=None,
               rtol: float = 1e-9) -> TailReport:
    """Evaluate ``H(i omega)`` on ``omegas`` (default 40 points on ``[mu + 1, 40]``)."""
    mu = spectral_gap(v, m)
    if omegas is None:
        omegas = np.geomspace(mu + 1.0, 40.0, 40)
    omegas = np.asarray(omegas, dtype=float)
    H = np.array([np.diag(H_matrix(1j * w, v, profile, m, rtol)) for w in omegas])
    prod = np.abs(H) * np.abs(omegas)[:, None]
    # slope of log max_j |H_jj| against log omega on the upper half of the range
    half = len(omegas) // 2
    y = np.log(np.max(np.abs(H[half:]), axis=1))
    slope = float(np.polyfit(np.log(omegas[half:]), y, 1)[0])
    return TailReport(omegas, H, prod, float(np.max(prod)), slope)


def invertibility_scan(v, profile: ChargeProfile, m: float = 1.0, omegas=None,
                       rtol: float = 1e-9):
    """``M(i omega)`` on a frequency grid; returns the samples and a summary dict."""
    mu = spectral_gap(v, m)
    if omegas is None:
        omegas = np.concatenate([np.linspace(0.05, 0.95, 19) * mu, mu + np.geomspace(0.05, 10.0, 20)])
    K = K_matrix(v, profile, m)
    samples = [M_matrix(1j * w, v, profile, m, K=K, rtol=rtol) for w in omegas]
    dets = np.array([s.detM for s in samples])
    summary = {
        "speed": _speed(v),
        "mu": mu,
        "n": len(samples),
        "min_abs_det": float(np.min(np.abs(dets))),
        "all_invertible": bool(np.all(np.abs(dets) > 0)),
        "max_det_mismatch": float(max(abs(s.detM - s.det_factored) / max(abs(s.detM), 1e-300)
                                      for s in samples)),
        "min_F_below_gap": float(min((np.min(s.F.real) for s, w in zip(samples, omegas)
                                      if abs(w) < mu), default=np.nan)),
        "max_ImF_above_gap": float(max((np.max(s.F.imag) for s, w in zip(samples, omegas)
                                        if abs(w) > mu), default=np.nan)),
    }
    return samples, summary
