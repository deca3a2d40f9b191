"""Post-processing of nonlinear runs: modulation, decay fits, asymptotic data.

Along a trajectory the state is split as ``Y(t) = S(sigma(t)) + Z(t)`` with
``Z`` symplectically orthogonal to the tangent space.  Modulation rates are
obtained from the implicit relation ``Omega(Y - S(sigma), tau_j(sigma)) = 0``:
differentiating in time gives ``J sigma' = -Omega(Y', tau_j)`` with ``J``
the projection Jacobian, so no time differencing is needed.  Centred
differences of ``sigma(t)`` are recorded as well for comparison.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolve import TrajectoryRecord, free_kg_propagate, hamiltonian
from .fields import FieldPair, energy_norm, weighted_norm
from .linop import nonlinear_remainder, vector_field
from .model import Model, SpectralState
from .soliton import SolitonParams, soliton_spectral, soliton_state, velocity_of_momentum
from .symplectic import modulation_jacobian, project

__all__ = [
    "Decomposition",
    "Decomposer",
    "DecayFit",
    "ScatteringRecord",
    "OutgoingWave",
    "decompose_trajectory",
    "modulation_rates",
    "fit_decay",
    "extract_asymptotics",
    "outgoing_wave",
    "energy_budget",
    "force_decay_audit",
    "scattering_record",
]


def modulation_rates(Ys: SpectralState, proj, model: Model) -> np.ndarray:
    """``sigma' = (b', v')`` at ``Y`` from the projection data ``proj``."""
    sigma = proj.sigma
    J = modulation_jacobian(proj.Z_centered, proj.frame, sigma.v, model, proj.gram)
    F = vector_field(Ys, model).translated(model.grid, -sigma.b)
    rhs = np.array([model.omega(F, t) for t in proj.frame])
    return -np.linalg.solve(J, rhs)


@dataclass
class Decomposition:
    """Per-sample modulation data.

    ``sigma_dot`` holds the rates from the projection Jacobian and
    ``sigma_dot_fd`` centred differences of ``sigma`` (one-sided at the
    ends).  ``cdot = b' - v`` and ``vdot = v'`` use the former.
    """

    times: np.ndarray
    sigma: np.ndarray
    Z_norm: np.ndarray
    sigma_dot: np.ndarray
    orthogonality: np.ndarray
    newton_iters: np.ndarray
    N_norm: np.ndarray
    beta: float
    Z: list = field(default_factory=list, repr=False)

    @property
    def b(self):
        return self.sigma[:, :3]

    @property
    def v(self):
        return self.sigma[:, 3:]

    @property
    def cdot(self):
        return self.sigma_dot[:, :3] - self.v

    @property
    def vdot(self):
        return self.sigma_dot[:, 3:]

    @property
    def sigma_dot_fd(self):
        return np.gradient(self.sigma, self.times, axis=0)

    def rate_size(self):
        """``sup_t (|c'| + |v'|)``."""
        return float(np.max(np.linalg.norm(self.cdot, axis=1) + np.linalg.norm(self.vdot, axis=1)))


class Decomposer:
    """Streaming decomposition; pass an instance as ``callback`` to ``evolve.run``.

    Parameters
    ----------
    model : Model
    beta : float
        Weight exponent: ``||Z||_{-beta}`` and ``||N||_beta`` are recorded,
        both centred at the origin of the soliton frame.
    remainder : bool
        Also evaluate the nonlinear remainder ``N``.
    keep : bool
        Keep the centred ``Z`` (as ``SpectralState``).
    """

    def __init__(self, model: Model, beta: float = 2.0, remainder: bool = False,
                 keep: bool = False, tol: float = 1e-10):
        self.model = model
        self.beta = beta
        self.remainder = remainder
        self.keep = keep
        self.tol = tol
        self._rows = []
        self._Z = []
        self._sigma = None

    def __call__(self, t, Ys: SpectralState):
        model = self.model
        try:
            proj = project(None, model, spectral_input=Ys, sigma0=self._sigma, tol=self.tol)
        except Exception as exc:
            raise type(exc)(f"{exc} at t = {t:.6g}") from exc
        self._sigma = proj.sigma
        rates = modulation_rates(Ys, proj, model)
        Zc = proj.Z_centered
        zn = weighted_norm(model.to_state(Zc), -self.beta)
        nn = np.nan
        if self.remainder:
            _, N = nonlinear_remainder(proj.sigma, rates, Zc, model)
            nn = weighted_norm(model.to_state(N), self.beta)
        self._rows.append((t, proj.sigma.vector, zn, rates, proj.residual, proj.newton_iters, nn))
        if self.keep:
            self._Z.append(Zc)

    def result(self) -> Decomposition:
        if not self._rows:
            raise ValueError("no samples were decomposed")
        cols = list(zip(*self._rows))
        return Decomposition(np.array(cols[0]), np.array(cols[1]), np.array(cols[2]),
                             np.array(cols[3]), np.array(cols[4]), np.array(cols[5]),
                             np.array(cols[6]), self.beta, self._Z)


def decompose_trajectory(traj: TrajectoryRecord, model: Model | None = None, beta: float = 2.0,
                         remainder: bool = False, keep: bool = False) -> Decomposition:
    """Project every stored sample of ``traj`` (needs ``store_all=True``)."""
    model = model or traj.model
    if not traj.spectral:
        raise ValueError("trajectory has no stored states; run with store_all=True "
                         "or pass a Decomposer as callback")
    dec = Decomposer(model, beta, remainder, keep)
    for t, s in zip(traj.times, traj.spectral):
        dec(t, s)
    return dec.result()


# ---------------------------------------------------------------- decay fits

@dataclass(frozen=True)
class DecayFit:
    """Power law ``amplitude (1 + t)^exponent`` fitted on ``[t0, t1]``."""

    t0: float
    t1: float
    exponent: float
    amplitude: float
    r2: float


def fit_decay(times, values, window=None) -> DecayFit:
    """Least-squares slope of ``log values`` against ``log(1 + t)``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t0, t1 = (times.min(), times.max()) if window is None else window
    if not t0 < t1:
        raise ValueError("empty fit window")
    sel = (times >= t0) & (times <= t1)
    if sel.sum() < 2:
        raise ValueError("empty fit window")
    if np.any(values[sel] <= 0):
        raise ValueError("decay fit needs positive values")
    x = np.log1p(times[sel])
    y = np.log(values[sel])
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return DecayFit(float(t0), float(t1), float(slope), float(np.exp(icpt)), float(r2))


# ---------------------------------------------------------------- asymptotics

def extract_asymptotics(traj: TrajectoryRecord, dec: Decomposition, tail: float = 0.75):
    """Return ``(v_plus, a_plus, info)``.

    ``v_plus = v(T)`` with Cauchy estimate ``|v(T) - v(tail T)|``; ``a_plus``
    is the mean of ``q(t) - v_plus t`` over ``t >= tail T``.  ``info`` holds
    the Cauchy estimate and the residual series ``|q - v_plus t - a_plus|``.
    """
    T = dec.times[-1]
    i_tail = int(np.argmin(np.abs(dec.times - tail * T)))
    v_plus = dec.v[-1].copy()
    cauchy = float(np.linalg.norm(dec.v[-1] - dec.v[i_tail]))
    sel = traj.times >= traj.times[-1] * tail - 1e-12
    drift = traj.q[sel] - np.outer(traj.times[sel], v_plus)
    a_plus = drift.mean(axis=0)
    resid = np.linalg.norm(drift - a_plus, axis=1)
    return v_plus, a_plus, {"cauchy": cauchy, "tail_times": traj.times[sel], "residual": resid}


@dataclass
class OutgoingWave:
    """``D(t) = W0(-t)(F(t) - F_{v(t)}(t))`` at the snapshot times."""

    times: np.ndarray
    D: list
    psi_plus: FieldPair
    remainder: np.ndarray
    norms: np.ndarray
    m: float

    def cauchy_trend(self):
        """``(||D(T) - D(T/2)||_F, ||D(T/2)||_F)``."""
        i = int(np.argmin(np.abs(self.times - self.times[-1] / 2)))
        return float(energy_norm(self.D[-1] - self.D[i], self.m)), float(energy_norm(self.D[i], self.m))


def outgoing_wave(traj: TrajectoryRecord, model: Model | None = None) -> OutgoingWave:
    """Free outgoing wave from the stored snapshots.

    The accompanying soliton at time ``t`` has velocity ``q'(t) = v(p(t))``
    (exact for the dynamics) and centre ``q(t)``.
    """
    model = model or traj.model
    if not traj.snapshots:
        raise ValueError("trajectory has no snapshots")
    times = np.array(sorted(traj.snapshots))
    D = []
    for t in times:
        Y = traj.snapshots[t]
        S = soliton_state(SolitonParams(Y.q, velocity_of_momentum(Y.p)), model)
        D.append(free_kg_propagate(Y.fields - S.fields, -t, model.m))
    plus = D[-1]
    rem = np.array([energy_norm(d - plus, model.m) for d in D])
    norms = np.array([energy_norm(d, model.m) for d in D])
    return OutgoingWave(times, D, plus, rem, norms, model.m)


def energy_budget(H0: float, v_plus, psi_plus: FieldPair, model: Model):
    """Split ``H(Y0) - H(S(v_plus))`` into the free energy of ``Psi_plus`` and a residual.

    Returns a dict with ``excess = H0 - H(S(v_plus))``, ``radiated =
    1/2 ||Psi_plus||_F^2`` and ``relative_residual = |excess - radiated| / |excess|``.
    """
    S = soliton_state(SolitonParams(np.zeros(3), np.asarray(v_plus, float)), model)
    e_sol = hamiltonian(S, model)
    excess = H0 - e_sol
    radiated = 0.5 * energy_norm(psi_plus, model.m) ** 2
    rel = abs(excess - radiated) / abs(excess) if excess != 0 else np.inf
    return {"H0": float(H0), "soliton_energy": float(e_sol), "excess": float(excess),
            "radiated": float(radiated), "relative_residual": float(rel)}


def force_decay_audit(traj: TrajectoryRecord, model: Model | None = None):
    """Force ``p'(t)`` along the run and the stationary term ``<psi_{v(t)}, grad rho>``.

    The stationary term is the force the accompanying soliton exerts on its
    own charge; it vanishes identically.  Returns ``(|p'| series, max |stationary term|)``.
    """
    model = model or traj.model
    g = model.grid
    kd = g.kdiff
    station = 0.0
    for v in traj.qdot:
        psi, _ = soliton_spectral(v, model)
        f = np.array([g.spectral_dot(psi, 1j * kc * model.rho_k) for kc in kd])
        station = max(station, float(np.max(np.abs(f))))
    pdot = np.gradient(traj.p, traj.times, axis=0)
    return np.linalg.norm(pdot, axis=1), station


@dataclass
class ScatteringRecord:
    """Inputs and asymptotic outputs of a scattering run."""

    sigma0: SolitonParams
    perturbation: dict
    v_plus: np.ndarray
    a_plus: np.ndarray
    psi_plus: FieldPair = field(repr=False)
    residuals: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.linalg.norm(self.v_plus) < 1.0:
            raise ValueError("superluminal asymptotic velocity")

    def as_dict(self):
        return {
            "sigma0": {"b": self.sigma0.b.tolist(), "v": self.sigma0.v.tolist()},
            "perturbation": self.perturbation,
            "v_plus": self.v_plus.tolist(),
            "a_plus": self.a_plus.tolist(),
            "residuals": self.residuals,
        }


def scattering_record(traj: TrajectoryRecord, dec: Decomposition, pert: dict | None = None,
                      model: Model | None = None, fit_window=None) -> ScatteringRecord:
    """Assemble ``v_plus``, ``a_plus``, ``Psi_plus`` and the audit numbers."""
    model = model or traj.model
    v_plus, a_plus, info = extract_asymptotics(traj, dec)
    wave = outgoing_wave(traj, model)
    budget = energy_budget(traj.H[0], v_plus, wave.psi_plus, model)
    diff, ref = wave.cauchy_trend()
    T = dec.times[-1]
    fit = fit_decay(dec.times, dec.Z_norm, fit_window or (T / 4, T))
    residuals = {
        "velocity_cauchy": info["cauchy"],
        "position_residual_final": float(info["residual"][-1]),
        "orthogonality_max": float(dec.orthogonality.max()),
        "decay_exponent": fit.exponent,
        "decay_r2": fit.r2,
        "outgoing_cauchy": diff,
        "outgoing_reference": ref,
        "energy_budget": budget,
    }
    return ScatteringRecord(traj.config.sigma0, pert or {}, v_plus, a_plus, wave.psi_plus, residuals)
