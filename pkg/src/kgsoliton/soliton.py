"""Solitary waves and the tangent frame of the solitary manifold.

In grid coefficients (``d/dx_j -> i k_j``) the soliton moving with velocity
``v`` is ``psi_v = -rho / D`` and ``pi_v = -i (k.v) psi_v`` with
``D = k^2 + m^2 - (k.v)^2``, i.e. ``pi_v = -v.grad psi_v``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import FullState
from .model import Model, SpectralState

__all__ = [
    "SolitonParams",
    "TangentFrame",
    "gamma",
    "check_velocity",
    "momentum_of_velocity",
    "velocity_of_momentum",
    "momentum_jacobian",
    "soliton_spectral",
    "soliton_state",
    "soliton_residual",
    "tangent_spectral",
    "tangent_vectors",
    "soliton_trajectory",
]


def check_velocity(v, vmax: float = 1.0):
    v = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)) or np.linalg.norm(v) >= vmax:
        raise ValueError("superluminal velocity |v| >= 1")
    return v


def gamma(v) -> float:
    v = check_velocity(v)
    return 1.0 / np.sqrt(1.0 - v @ v)


def momentum_of_velocity(v):
    """``p_v = v / sqrt(1 - v^2)``."""
    v = check_velocity(v)
    return v / np.sqrt(1.0 - v @ v)


def velocity_of_momentum(p):
    """``v(p) = p / sqrt(1 + p^2)``; always subluminal."""
    p = np.asarray(p, dtype=float).reshape(3)
    return p / np.sqrt(1.0 + p @ p)


def momentum_jacobian(v):
    """``d p_v / d v``: ``gamma E + gamma^3 v v^T`` (symmetric)."""
    v = check_velocity(v)
    g = 1.0 / np.sqrt(1.0 - v @ v)
    return g * np.eye(3) + g**3 * np.outer(v, v)


@dataclass(frozen=True)
class SolitonParams:
    """Point ``sigma = (b, v)`` of the solitary manifold."""

    b: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(3))
        object.__setattr__(self, "v", check_velocity(self.v))

    @property
    def vector(self):
        return np.concatenate([self.b, self.v])

    @classmethod
    def from_vector(cls, s):
        return cls(s[:3], s[3:])

    def __eq__(self, other):
        return np.array_equal(self.b, other.b) and np.array_equal(self.v, other.v)


def _denominator(v, model: Model):
    s = model.kdotv(v)
    return s, model.k2 + model.m**2 - s**2


def soliton_spectral(v, model: Model):
    """Coefficients of ``(psi_v, pi_v)`` centred at the origin."""
    v = check_velocity(v)
    s, D = _denominator(v, model)
    psi = -model.rho_k / D
    return psi, -1j * s * psi


def _check_inside(b, model):
    if model.profile.radius + np.max(np.abs(b)) > model.grid.L:
        raise ValueError("support clipped")


def soliton_state(sigma: SolitonParams, model: Model) -> FullState:
    """Soliton state ``S(sigma)`` on the grid."""
    _check_inside(sigma.b, model)
    psi, pi = soliton_spectral(sigma.v, model)
    ph = model.grid.shift_phase(sigma.b)
    g = model.grid
    return FullState(g.ifft(psi * ph), g.ifft(pi * ph), sigma.b, momentum_of_velocity(sigma.v), grid=g)


def soliton_spectral_state(sigma: SolitonParams, model: Model) -> SpectralState:
    psi, pi = soliton_spectral(sigma.v, model)
    ph = model.grid.shift_phase(sigma.b)
    return SpectralState(psi * ph, pi * ph, sigma.b.copy(), momentum_of_velocity(sigma.v))


def soliton_residual(v, model: Model) -> float:
    """``||Lambda psi_v + rho|| / ||rho||`` with
    ``Lambda = -Delta + m^2 + (v.grad)^2`` applied spectrally."""
    psi, _ = soliton_spectral(v, model)
    _, D = _denominator(np.asarray(v, float), model)
    r = D * psi + model.rho_k
    g = model.grid
    return float(np.sqrt(g.spectral_dot(r, r)) / model.rho_norm)


def tangent_spectral(v, model: Model):
    """The six tangent vectors at ``(b=0, v)`` as ``SpectralState`` objects.

    ``tau_j = (-d_j psi_v, -d_j pi_v, e_j, 0)`` and
    ``tau_{j+3} = (d_{v_j} psi_v, d_{v_j} pi_v, 0, d_{v_j} p_v)``.
    """
    v = check_velocity(v)
    s, D = _denominator(v, model)
    psi = -model.rho_k / D
    pi = -1j * s * psi
    kd = model.grid.kdiff
    dp = momentum_jacobian(v)
    eye = np.eye(3)
    zero = np.zeros(3)
    frame = []
    for j in range(3):
        ik = 1j * kd[j]
        frame.append(SpectralState(-ik * psi, -ik * pi, eye[j].copy(), zero.copy()))
    A = model.k2 + model.m**2
    for j in range(3):
        dpsi = 2.0 * s * kd[j] * psi / D
        dpi = -1j * kd[j] * (A + s**2) / D * psi
        frame.append(SpectralState(dpsi, dpi, zero.copy(), dp[:, j].copy()))
    return frame


@dataclass
class TangentFrame:
    """Tangent vectors ``tau_1..tau_6`` of the solitary manifold at ``(b, v)``."""

    v: np.ndarray
    b: np.ndarray
    vectors: list

    def __getitem__(self, j):
        return self.vectors[j]

    def __len__(self):
        return len(self.vectors)


def tangent_vectors(v, model: Model, b=(0.0, 0.0, 0.0)) -> TangentFrame:
    """Real-space tangent frame, translated to ``b``."""
    b = np.asarray(b, dtype=float)
    frame = tangent_spectral(v, model)
    states = [model.to_state(t.translated(model.grid, b)) for t in frame]
    return TangentFrame(check_velocity(v), b, states)


def soliton_trajectory(sigma0: SolitonParams, t: float) -> SolitonParams:
    """Free soliton motion ``b(t) = b0 + v t``."""
    return SolitonParams(sigma0.b + sigma0.v * t, sigma0.v)
