"""Symplectic form, the matrix Omega(v) and projection onto the solitary manifold."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charge import ChargeProfile
from .fields import FullState
from .kspace import axial_moments, rotate_axial
from .model import Model, SpectralState
from .soliton import (SolitonParams, check_velocity, momentum_jacobian, momentum_of_velocity,
                      soliton_spectral, tangent_spectral, velocity_of_momentum)

__all__ = [
    "OmegaMatrix",
    "ProjectionResult",
    "ProjectionError",
    "omega",
    "gram_matrix",
    "omega_matrix",
    "project",
    "tangent_projector",
    "complement_projector",
    "modulation_jacobian",
]


class ProjectionError(RuntimeError):
    """Newton projection failed (no convergence or superluminal iterate)."""


def omega(Y1: FullState, Y2: FullState) -> float:
    """``Omega(Y1, Y2) = <psi1, pi2> - <pi1, psi2> + q1.p2 - p1.q2``."""
    Y1.grid.check(Y2.grid)
    g = Y1.grid
    return (g.dot(Y1.psi, Y2.pi) - g.dot(Y1.pi, Y2.psi)
            + float(Y1.q @ Y2.p - Y1.p @ Y2.q))


def _gram(frame, model: Model):
    """``G[l, j] = Omega(tau_l, tau_j)``."""
    n = len(frame)
    G = np.zeros((n, n))
    for l in range(n):
        for j in range(l + 1, n):
            G[l, j] = model.omega(frame[l], frame[j])
            G[j, l] = -G[l, j]
    return G


def gram_matrix(v, model: Model):
    """Gram matrix ``Omega(tau_l, tau_j)`` of the tangent frame on the grid."""
    return _gram(tangent_spectral(v, model), model)


@dataclass(frozen=True)
class OmegaMatrix:
    """Closed-form ``Omega(v)`` with its blocks."""

    v: np.ndarray
    K: np.ndarray
    plus: np.ndarray
    full: np.ndarray

    @property
    def is_spd(self) -> bool:
        return bool(np.allclose(self.plus, self.plus.T) and np.linalg.eigvalsh(self.plus).min() > 0)


def omega_matrix(v, profile: ChargeProfile, m: float = 1.0, rtol: float = 1e-10) -> OmegaMatrix:
    """Assemble ``Omega(v) = [[0, W], [-W, 0]]`` with
    ``W = K + gamma E + gamma^3 v v^T`` and
    ``K_ij = int |rho_hat|^2 k_i k_j (k^2 + m^2 + 3 (k.v)^2) / (k^2 + m^2 - (k.v)^2)^3 dk``.
    """
    v = check_velocity(v)
    va = np.linalg.norm(v)

    def g(k, u):
        s2 = (va * k * u) ** 2
        A = k**2 + m**2
        return (A + 3.0 * s2) / (A - s2) ** 3

    par, perp = axial_moments(profile, g, rtol=rtol)
    K = rotate_axial(par, perp, v)
    W = K + momentum_jacobian(v)
    full = np.zeros((6, 6))
    full[:3, 3:] = W
    full[3:, :3] = -W
    return OmegaMatrix(v, K, W, full)


def _second_derivative_frame(v, model: Model):
    """``d tau_j / d v_l`` for ``j = 4..6`` as ``out[l][j]`` (SpectralState)."""
    s = model.kdotv(v)
    D = model.k2 + model.m**2 - s**2
    psi = -model.rho_k / D
    kd = model.grid.kdiff
    g = 1.0 / np.sqrt(1.0 - v @ v)
    eye = np.eye(3)
    a_psi = psi * (2.0 / D + 8.0 * s**2 / D**2)
    a_pi = -1j * s * psi * (6.0 / D + 8.0 * s**2 / D**2)
    out = [[None] * 3 for _ in range(3)]
    for l in range(3):
        for j in range(l, 3):
            kk = kd[j] * kd[l]
            d2p = (g**3 * v[l] * eye[j] + 3.0 * g**5 * v[l] * v[j] * v
                   + g**3 * ((j == l) * v + v[j] * eye[l]))
            out[l][j] = out[j][l] = SpectralState(kk * a_psi, kk * a_pi, np.zeros(3), d2p)
    return out


def modulation_jacobian(Z: SpectralState, frame, v, model: Model, gram=None):
    """Jacobian ``dG_j/dsigma_l`` of ``G_j = Omega(Y - S(sigma), tau_j(sigma))``.

    Everything is expressed in the frame of the soliton: ``Z`` is the
    transversal part translated by ``-b`` and ``frame`` the untranslated
    tangent frame at ``v``.  Rows index ``j``, columns ``l``.
    """
    grid = model.grid
    G = _gram(frame, model) if gram is None else gram
    J = -G.T
    second = _second_derivative_frame(v, model)
    # Omega(Z, -d_l tau) = Omega(d_l Z, tau) after integration by parts
    dZ = [Z.derivative(grid, l) for l in range(3)]
    for j in range(6):
        for l in range(6):
            if l < 3:
                # d/db_l tau_j = -d/dx_l tau_j on the field parts
                J[j, l] += model.omega(dZ[l], frame[j])
            elif j < 3:
                # d/dv_l tau_j = -d/dx_j tau_{l+3} on the field parts
                J[j, l] += model.omega(dZ[j], frame[l])
            else:
                J[j, l] += model.omega(Z, second[l - 3][j - 3])
    return J


@dataclass
class ProjectionResult:
    """Outcome of the symplectic orthogonal projection ``Y = S(sigma) + Z``."""

    sigma: SolitonParams
    Z: FullState
    newton_iters: int
    residual: float
    history: list


def _centered_transversal(Ys: SpectralState, sigma: SolitonParams, model: Model):
    """``Y - S(sigma)`` with its field parts translated by ``-b``."""
    psi, pi = soliton_spectral(sigma.v, model)
    ph = model.grid.shift_phase(-sigma.b)
    return SpectralState(Ys.psi * ph - psi, Ys.pi * ph - pi, Ys.q - sigma.b,
                         Ys.p - momentum_of_velocity(sigma.v))


def project(Y: FullState, model: Model, *, tol: float = 1e-10, max_iter: int = 50,
            v_bar: float = 0.999, sigma0: SolitonParams | None = None,
            spectral_input: SpectralState | None = None) -> ProjectionResult:
    """Find ``sigma`` with ``Omega(Y - S(sigma), tau_j(sigma)) = 0``.

    Newton iteration from ``sigma0 = (q, v(p))`` using the exact Jacobian.
    Convergence is declared when ``max_j |G_j| <= tol * scale`` with
    ``scale`` the largest entry of the Gram matrix at the iterate.
    """
    if spectral_input is None:
        model.grid.check(Y.grid)
        Ys = model.to_spectral(Y)
    else:
        Ys = spectral_input
    if sigma0 is None:
        sigma0 = SolitonParams(Ys.q, velocity_of_momentum(Ys.p))
    s = sigma0.vector.copy()
    history = []
    for it in range(max_iter + 1):
        if not np.all(np.isfinite(s)):
            break
        if np.linalg.norm(s[3:]) >= v_bar:
            raise ProjectionError("superluminal iterate")
        sigma = SolitonParams.from_vector(s)
        Z = _centered_transversal(Ys, sigma, model)
        frame = tangent_spectral(sigma.v, model)
        Gv = np.array([model.omega(Z, t) for t in frame])
        gram = _gram(frame, model)
        scale = max(np.max(np.abs(gram)), 1.0)
        res = float(np.max(np.abs(Gv)))
        history.append(res)
        if res <= tol * scale:
            result = ProjectionResult(sigma, None, it, res / scale, history)
            result.Z_centered = Z
            result.frame = frame
            result.gram = gram
            if spectral_input is None:
                result.Z = model.to_state(Z.translated(model.grid, sigma.b))
            return result
        if it == max_iter:
            break
        J = modulation_jacobian(Z, frame, sigma.v, model, gram)
        s = s - np.linalg.solve(J, Gv)
    raise ProjectionError("outside projection neighborhood")


def tangent_projector(v, Z: FullState, model: Model, b=(0.0, 0.0, 0.0)) -> FullState:
    """``Pi_v Z = sum_{j,l} Pi_{jl} tau_j Omega(tau_l, Z)``.

    ``Pi_{jl}`` is chosen so that ``Pi_v tau_k = tau_k``; it is the inverse of
    the Gram matrix ``Omega(tau_l, tau_j)`` up to orientation.
    """
    v = check_velocity(v)
    frame = [t.translated(model.grid, np.asarray(b, float)) for t in tangent_spectral(v, model)]
    G = _gram(frame, model)
    Zs = model.to_spectral(Z)
    w = np.array([model.omega(t, Zs) for t in frame])
    # coefficients c with Omega(tau_l, sum_j c_j tau_j) = w_l, i.e. G c = w
    c = np.linalg.solve(G, w)
    out = SpectralState(np.zeros_like(Zs.psi), np.zeros_like(Zs.pi), np.zeros(3), np.zeros(3))
    for cj, t in zip(c, frame):
        out = out + t * cj
    return model.to_state(out)


def complement_projector(v, Z: FullState, model: Model, b=(0.0, 0.0, 0.0)) -> FullState:
    """``P_v Z = Z - Pi_v Z``."""
    return Z - tangent_projector(v, Z, model, b)
