"""Linearization at a soliton: generator, quadratic Hamiltonian, frozen flow.

States ``X = (Psi, Pi, Q, P)`` live in the frame moving with the soliton
(coordinate ``y = x - b``) and are handled as ``SpectralState`` internally
and ``FullState`` at the API boundary.

The generator is

    Psi' = w.grad Psi + Pi
    Pi'  = Laplace Psi - m^2 Psi + w.grad Pi + Q.grad rho
    Q'   = B_v P,                 B_v = sqrt(1 - v^2) (E - v v^T)
    P'   = <Psi, grad rho> - K Q, K_ij = -<d_i psi_v, d_j rho>
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .evolve import _splitting_coefficients
from .fields import weighted_norm
from .model import Model, SpectralState
from .soliton import (check_velocity, momentum_of_velocity, soliton_spectral, tangent_spectral,
                      velocity_of_momentum)

__all__ = [
    "b_matrix",
    "coupling_matrix",
    "apply_A",
    "linear_hamiltonian",
    "linear_hamiltonian_squares",
    "skew_symmetry_check",
    "FrozenSeries",
    "FrozenIntegrator",
    "frozen_evolve",
    "nonlinear_remainder",
    "transport_rate",
]


def b_matrix(v):
    """``B_v = sqrt(1 - v^2) (E - v v^T)``, the derivative of ``v(p)`` at ``p_v``."""
    v = check_velocity(v)
    return np.sqrt(1.0 - v @ v) * (np.eye(3) - np.outer(v, v))


def coupling_matrix(v, model: Model):
    """``K_ij = -<d_i psi_v, d_j rho>`` on the grid."""
    psi, _ = soliton_spectral(v, model)
    g = model.grid
    kd = g.kdiff
    K = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            K[i, j] = -g.spectral_dot(1j * kd[i] * psi, 1j * kd[j] * model.rho_k)
    return 0.5 * (K + K.T)


def _spec(X, model):
    return X if isinstance(X, SpectralState) else model.to_spectral(X)


def _out(Xs, like, model):
    return Xs if isinstance(like, SpectralState) else model.to_state(Xs)


def _apply(v, w, X: SpectralState, model: Model, K, B):
    g = model.grid
    kd = g.kdiff
    ikw = 1j * model.kdotv(w)
    grad_rho = [1j * kc * model.rho_k for kc in kd]
    q_grad_rho = sum(X.q[j] * grad_rho[j] for j in range(3))
    dpsi = ikw * X.psi + X.pi
    dpi = -(model.k2 + model.m**2) * X.psi + ikw * X.pi + q_grad_rho
    dq = B @ X.p
    dp = np.array([g.spectral_dot(X.psi, gr) for gr in grad_rho]) - K @ X.q
    return SpectralState(dpsi, dpi, dq, dp)


def apply_A(v, w, X, model: Model, K=None):
    """Apply ``A_{v,w}`` to ``X`` (``FullState`` or ``SpectralState``)."""
    v = check_velocity(v)
    w = np.asarray(w, dtype=float)
    K = coupling_matrix(v, model) if K is None else K
    return _out(_apply(v, w, _spec(X, model), model, K, b_matrix(v)), X, model)


def linear_hamiltonian(v, w, X, model: Model, K=None) -> float:
    """Quadratic form whose Hamiltonian flow is ``A_{v,w}``::

        1/2 int (Pi^2 + |grad Psi|^2 + m^2 Psi^2) + int Pi w.grad Psi
        + int rho Q.grad Psi + 1/2 P.B_v P + 1/2 Q.K Q
    """
    v = check_velocity(v)
    w = np.asarray(w, dtype=float)
    K = coupling_matrix(v, model) if K is None else K
    X = _spec(X, model)
    g = model.grid
    wk = model.omega_k
    e = 0.5 * (g.spectral_dot(X.pi, X.pi) + g.spectral_dot(wk * X.psi, wk * X.psi))
    e += g.spectral_dot(X.pi, 1j * model.kdotv(w) * X.psi)
    e += g.spectral_dot(model.rho_k, 1j * model.kdotv(X.q) * X.psi)
    e += 0.5 * X.p @ b_matrix(v) @ X.p + 0.5 * X.q @ K @ X.q
    return float(e)


def linear_hamiltonian_squares(v, X, model: Model) -> float:
    """``H_{v,v}`` as a sum of squares::

        1/2 ||Pi + v.grad Psi||^2 + 1/2 ||Lam^{1/2} Psi - Lam^{-1/2} Q.grad rho||^2
        + 1/2 P.B_v P,     Lam = -Laplace + m^2 + (v.grad)^2
    """
    v = check_velocity(v)
    X = _spec(X, model)
    g = model.grid
    s = model.kdotv(v)
    lam = model.k2 + model.m**2 - s**2
    a = X.pi + 1j * s * X.psi
    qgr = 1j * model.kdotv(X.q) * model.rho_k
    b = np.sqrt(lam) * X.psi - qgr / np.sqrt(lam)
    return float(0.5 * g.spectral_dot(a, a) + 0.5 * g.spectral_dot(b, b)
                 + 0.5 * X.p @ b_matrix(v) @ X.p)


def skew_symmetry_check(v, w, X1, X2, model: Model):
    """Return ``(|Omega(A X1, X2) + Omega(X1, A X2)|, scale)``.

    ``scale`` is ``|Omega(A X1, X2)| + |Omega(X1, A X2)|`` so the relative
    residual is ``residual / scale``.
    """
    v = check_velocity(v)
    K = coupling_matrix(v, model)
    B = b_matrix(v)
    a = _spec(X1, model)
    b = _spec(X2, model)
    w = np.asarray(w, float)
    lhs = model.omega(_apply(v, w, a, model, K, B), b)
    rhs = model.omega(a, _apply(v, w, b, model, K, B))
    return abs(lhs + rhs), abs(lhs) + abs(rhs)


@dataclass
class FrozenSeries:
    """Samples of a frozen linear run."""

    times: np.ndarray
    H: np.ndarray
    norm_minus_beta: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    states: list


class FrozenIntegrator:
    """Splitting integrator for ``X' = A_{v,w} X``.

    The Hamiltonian splits into the moving-frame free field part (solved by
    rotation plus translation of each mode) and the coupling part, which is
    linear in ``(Q, P)`` with ``Psi`` frozen and is solved by a matrix
    exponential.  Composition as in ``evolve.Integrator``.
    """

    def __init__(self, v, w, model: Model, dt: float, order: int = 4):
        self.v = check_velocity(v)
        self.w = np.asarray(w, dtype=float)
        self.model = model
        self.K = coupling_matrix(self.v, model)
        self.B = b_matrix(self.v)
        outer, inner = _splitting_coefficients(order)
        self.kicks = [c * dt for c in outer]
        self.drifts = [c * dt for c in inner]
        kd = model.grid.kdiff
        self.grad_rho = [1j * kc * model.rho_k for kc in kd]
        self._field = {}
        self._coupling = {}
        wk = model.omega_k
        for tau in set(self.drifts):
            ph = model.grid.shift_phase(-self.w * tau)
            self._field[tau] = (ph * np.cos(wk * tau), ph * np.sin(wk * tau) / wk,
                                -ph * wk * np.sin(wk * tau))
        for tau in set(self.kicks):
            self._coupling[tau] = self._coupling_propagator(tau)

    def _coupling_propagator(self, tau):
        # state (Q, P, int Q, f) with f = <Psi, grad rho> held fixed
        Z3 = np.zeros((3, 3))
        I3 = np.eye(3)
        A = np.block([[Z3, self.B, Z3, Z3],
                      [-self.K, Z3, Z3, I3],
                      [I3, Z3, Z3, Z3],
                      [Z3, Z3, Z3, Z3]])
        return expm(A * tau)

    def coupling_step(self, X: SpectralState, tau):
        g = self.model.grid
        f = np.array([g.spectral_dot(X.psi, gr) for gr in self.grad_rho])
        y = self._coupling[tau] @ np.concatenate([X.q, X.p, np.zeros(3), f])
        X.q, X.p, iq = y[:3], y[3:6], y[6:9]
        X.pi = X.pi + sum(iq[j] * self.grad_rho[j] for j in range(3))

    def field_step(self, X: SpectralState, tau):
        c, sw, ws = self._field[tau]
        psi = c * X.psi + sw * X.pi
        X.pi = ws * X.psi + c * X.pi
        X.psi = psi

    def step(self, X: SpectralState):
        for kick, drift in zip(self.kicks, self.drifts):
            self.coupling_step(X, kick)
            self.field_step(X, drift)
        self.coupling_step(X, self.kicks[-1])
        return X


def frozen_evolve(v, X0, dt: float, T: float, model: Model, *, w=None, beta: float = 2.0,
                  sample_every: int = 1, order: int = 4, keep_states: bool = False,
                  norms: bool = True) -> FrozenSeries:
    """Integrate ``X' = A_{v,w} X`` (default ``w = v``) from ``X0``.

    Records ``H_{v,w}``, ``||X||_{-beta}`` (centred at the origin of the
    moving frame) and the particle components.
    """
    v = check_velocity(v)
    w = v if w is None else np.asarray(w, float)
    integ = FrozenIntegrator(v, w, model, dt, order)
    X = _spec(X0, model)
    X = SpectralState(X.psi.copy(), X.pi.copy(), X.q.copy(), X.p.copy())
    n = int(round(T / dt))
    times, H, nb, Q, P, states = [], [], [], [], [], []
    for i in range(n + 1):
        if i % sample_every == 0 or i == n:
            times.append(i * dt)
            H.append(linear_hamiltonian(v, w, X, model, integ.K))
            Q.append(X.q.copy())
            P.append(X.p.copy())
            if norms:
                nb.append(weighted_norm(model.to_state(X), -beta))
            if keep_states:
                states.append(SpectralState(X.psi.copy(), X.pi.copy(), X.q.copy(), X.p.copy()))
        if i < n:
            integ.step(X)
    return FrozenSeries(np.array(times), np.array(H), np.array(nb), np.array(Q), np.array(P), states)


def transport_rate(Y: SpectralState, sigma, sigma_dot, model: Model, Ydot: SpectralState | None = None):
    """Time derivative of the moving-frame transversal part.

    ``Y`` is the lab-frame state (coefficients), ``sigma = (b, v)`` and
    ``sigma_dot = (w, vdot)`` with ``w = db/dt``.  Returns ``Z_dot`` with

        Psi' = [pi + w.grad psi](y + b) - vdot.d_v psi_v
        Pi'  = [pi' + w.grad pi](y + b) - vdot.d_v pi_v
        Q'   = v(p) - w
        P'   = p' - vdot.d_v p_v

    where ``(psi', pi', q', p')`` is the nonlinear vector field at ``Y``
    unless ``Ydot`` is given.
    """
    g = model.grid
    b, v = sigma.b, sigma.v
    w, vdot = np.asarray(sigma_dot[:3], float), np.asarray(sigma_dot[3:], float)
    if Ydot is None:
        Ydot = vector_field(Y, model)
    ph = g.shift_phase(-b)
    ikw = 1j * model.kdotv(w)
    frame = tangent_spectral(v, model)
    dpsi = ph * (Ydot.psi + ikw * Y.psi)
    dpi = ph * (Ydot.pi + ikw * Y.pi)
    dp = Ydot.p.copy()
    for l in range(3):
        dpsi = dpsi - vdot[l] * frame[l + 3].psi
        dpi = dpi - vdot[l] * frame[l + 3].pi
        dp = dp - vdot[l] * frame[l + 3].p
    return SpectralState(dpsi, dpi, Ydot.q - w, dp)


def vector_field(Y: SpectralState, model: Model) -> SpectralState:
    """Right-hand side of the coupled nonlinear system at ``Y``."""
    g = model.grid
    rho_q = model.rho_shifted_k(Y.q)
    force = np.array([g.spectral_dot(Y.psi, 1j * kc * rho_q) for kc in g.kdiff])
    return SpectralState(Y.pi.copy(), -(model.k2 + model.m**2) * Y.psi - rho_q,
                         velocity_of_momentum(Y.p), force)


def nonlinear_remainder(sigma, sigma_dot, Z, model: Model):
    """Split the transversal dynamics as ``Z' = A_{v,w} Z + T + N``.

    ``Z`` is the transversal part in the moving frame (centred at the
    origin).  ``T = -sum_l [(w - v)_l tau_l + vdot_l tau_{l+3}]`` and ``N`` is
    the exact residual computed from the full nonlinear vector field at
    ``Y = S(sigma) + Z``.  Returns ``(T, N)`` in the type of ``Z``.
    """
    v = sigma.v
    sd = np.asarray(sigma_dot, dtype=float)
    w, vdot = sd[:3], sd[3:]
    Zs = _spec(Z, model)
    g = model.grid
    psi_v, pi_v = soliton_spectral(v, model)
    ph = g.shift_phase(sigma.b)
    Y = SpectralState((psi_v + Zs.psi) * ph, (pi_v + Zs.pi) * ph, sigma.b + Zs.q,
                      momentum_of_velocity(v) + Zs.p)
    Zdot = transport_rate(Y, sigma, sd, model)
    frame = tangent_spectral(v, model)
    T = SpectralState(np.zeros_like(Zs.psi), np.zeros_like(Zs.pi), np.zeros(3), np.zeros(3))
    for l in range(3):
        T = T - frame[l] * (w - v)[l] - frame[l + 3] * vdot[l]
    N = Zdot - _apply(v, w, Zs, model, coupling_matrix(v, model), b_matrix(v)) - T
    return _out(T, Z, model), _out(N, Z, model)
