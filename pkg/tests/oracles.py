"""Independent reference computations used by the tests.

None of these share quadrature code with the package; they only reuse the
radial transform ``rho_hat_radial`` where the integrand needs it (that
routine is itself checked against a Cartesian cubature).
"""
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.special import j1, kv
from scipy.stats import qmc

from kgsoliton.charge import rho_hat_radial


def rho_hat_cartesian(profile, k, n=96):
    """``(2 pi)^{-3/2} int cos(k.x) rho(|x|) dx`` by a tensor Gauss rule on ``[-R, R]^3``.

    The rule is split at ``0`` on each axis; the support boundary is not
    aligned with the cells, so accuracy is limited by the profile's
    smoothness at ``r = R``.
    """
    R = profile.radius
    x, w = leggauss(n)
    nodes = np.concatenate([0.5 * R * (x - 1), 0.5 * R * (x + 1)])
    wts = np.concatenate([0.5 * R * w, 0.5 * R * w])
    X, Y, Z = np.meshgrid(nodes, nodes, nodes, indexing="ij")
    W = wts[:, None, None] * wts[None, :, None] * wts[None, None, :]
    r = np.sqrt(X**2 + Y**2 + Z**2)
    phase = np.cos(k[0] * X + k[1] * Y + k[2] * Z)
    return float(np.sum(W * phase * profile.radial(r))) * (2 * np.pi) ** -1.5


def ball_transform(amplitude, R, k):
    """Closed-form transform of the indicator of a ball."""
    k = np.asarray(k, dtype=float)
    return amplitude * (2 * np.pi) ** -1.5 * 4 * np.pi * (np.sin(k * R) - k * R * np.cos(k * R)) / k**3


def green_bessel(lam, a, m, y1, yperp):
    """``(2 pi)^-3 int exp(-i k.y) / D dk`` with the transverse integral done exactly.

    ``int exp(-i k_perp.y_perp) / (k_perp^2 + c^2) dk_perp = 2 pi K0(c |y_perp|)``
    with ``c^2 = m^2 + k1^2 + (i a k1 + lam)^2``.
    """
    def c(k1):
        return np.sqrt(m * m + k1 * k1 + (1j * a * k1 + lam) ** 2)

    def f(k1, part):
        val = np.exp(-1j * k1 * y1) * 2 * np.pi * kv(0, c(k1) * yperp)
        return val.real if part == 0 else val.imag

    kmax = 60.0 / max(yperp, 0.1)
    re = quad(f, -kmax, kmax, args=(0,), limit=4000, epsabs=1e-14)[0]
    im = quad(f, -kmax, kmax, args=(1,), limit=4000, epsabs=1e-14)[0]
    return (re + 1j * im) / (2 * np.pi) ** 3


def K_qmc(profile, a, m, k_max, log2n=18, seed=0):
    """Quasi Monte-Carlo ``K_jj`` over the ball ``|k| < k_max`` (scrambled Sobol)."""
    s = qmc.Sobol(3, scramble=True, seed=seed).random_base2(log2n)
    k = (2 * s - 1) * k_max
    inside = np.sum(k**2, axis=1) < k_max**2
    k = k[inside]
    vol = (2 * k_max) ** 3 / len(s)
    rh2 = rho_hat_radial(profile, np.linalg.norm(k, axis=1)) ** 2
    D = np.sum(k**2, axis=1) + m * m - (a * k[:, 0]) ** 2
    return np.array([np.sum(k[:, j] ** 2 * rh2 / D) * vol for j in range(3)])


def _u_moments(k, lam, a, m):
    """Closed-form ``int_{-1}^{1} u^2 / D du`` and ``int (1 - u^2)/2 / D du``.

    ``D = k^2 + m^2 + (i a k u + lam)^2 = -A (u - u1)(u - u2)``.
    ``int_{-1}^{1} du / (u - c) = log(1 - c) - log(-1 - c)`` for ``c`` off ``[-1, 1]``
    (``u - c`` never crosses the branch cut along the path).
    """
    A = (a * k) ** 2
    B = 2j * a * k * lam
    C = k * k + m * m + lam * lam
    disc = np.sqrt(B * B + 4 * A * C)
    u1 = (B + disc) / (2 * A)
    u2 = (B - disc) / (2 * A)

    def log_int(c):
        return np.log(1 - c + 0j) - np.log(-1 - c + 0j)

    def integral(p0, p2):
        # (p2 u^2 + p0) / ((u - u1)(u - u2)) = p2 + (r1 u + r0)/((u - u1)(u - u2))
        r1 = p2 * (u1 + u2)
        r0 = p0 - p2 * u1 * u2
        a1 = (r1 * u1 + r0) / (u1 - u2)
        a2 = (r1 * u2 + r0) / (u2 - u1)
        return 2 * p2 + a1 * log_int(u1) + a2 * log_int(u2)

    return -integral(0.0, 1.0) / A, -integral(0.5, -0.5) / A


def H_epsilon(profile, lam, a, m, k_max):
    """``(H_par, H_perp)`` at complex ``lam`` by adaptive outer quadrature in ``|k|``."""
    out = []
    for j in range(2):
        def f(k, part):
            val = 2 * np.pi * k**4 * rho_hat_radial(profile, k) ** 2 * _u_moments(k, lam, a, m)[j]
            return val.real if part == 0 else val.imag

        re = quad(f, 0, k_max, args=(0,), limit=4000, epsabs=1e-15, epsrel=1e-11)[0]
        im = quad(f, 0, k_max, args=(1,), limit=4000, epsabs=1e-15, epsrel=1e-11)[0]
        out.append(re + 1j * im)
    return np.array(out)


def H_limit(profile, omega, a, m, k_max, eps=(1e-3, 1e-4)):
    """Richardson limit ``eps -> 0`` of ``H(i omega + eps)`` assuming linear error in ``eps``."""
    e1, e2 = eps
    h1 = H_epsilon(profile, e1 + 1j * omega, a, m, k_max)
    h2 = H_epsilon(profile, e2 + 1j * omega, a, m, k_max)
    return (e1 * h2 - e2 * h1) / (e1 - e2)


def kg_bessel_solution(bump, t, d, m):
    """``psi(x, t)`` for ``psi(0) = 0``, ``pi(0) = bump(|x - x0|)``, at ``|x - x0| = d``.

    Kirchhoff-type formula for the Klein-Gordon equation::

        psi = t <bump>_{sphere radius t}
              - (m/2) int_0^t r^2 J1(m s)/s  int_0^pi bump(|r n - d e|) sin(th) dth dr,

    with ``s = sqrt(t^2 - r^2)`` and ``<.>`` the spherical mean.
    """
    def shell(r):
        if r == 0:
            return 2.0 * bump(d)
        lo, hi = abs(r - d), r + d
        # int_0^pi f(sqrt(r^2 + d^2 - 2 r d cos th)) sin th dth = (1/(r d)) int_{|r-d|}^{r+d} f(s) s ds
        if d == 0:
            return 2.0 * bump(r)
        return quad(lambda s: bump(s) * s, lo, hi, epsabs=1e-14, limit=200)[0] / (r * d)

    sphere = 0.5 * t * shell(t)

    def ball(r):
        s = np.sqrt(max(t * t - r * r, 0.0))
        kern = 0.5 * m * m if s == 0 else m * j1(m * s) / s
        return r * r * kern * shell(r)

    inner = quad(ball, 0.0, t, epsabs=1e-13, limit=400)[0]
    return sphere - 0.5 * inner
