"""Bundle of grid, mass and charge profile shared by the grid-based modules."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .charge import ChargeProfile, rho_hat_radial
from .fields import Grid

__all__ = ["Model", "SpectralState"]


@dataclass(frozen=True)
class Model:
    """Discretized coupled system on a periodic box.

    Parameters
    ----------
    grid : Grid
    profile : ChargeProfile
    m : float
        Field mass, must be positive.
    """

    grid: Grid = field(default_factory=Grid)
    profile: ChargeProfile = field(default_factory=ChargeProfile)
    m: float = 1.0

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("mass m must be positive")
        if self.profile.radius >= self.grid.L:
            raise ValueError("support clipped")

    @cached_property
    def rho_k(self):
        """Grid coefficients of ``rho`` centred at the origin.

        Built from the exact radial transform on the grid wavevectors, i.e.
        the band-limited interpolant of ``rho`` rather than the FFT of its
        samples.
        """
        kabs = np.sqrt(self.k2)
        rt = (2.0 * np.pi) ** 1.5 * rho_hat_radial(self.profile, kabs)
        return self.grid.from_continuum(rt).real

    @cached_property
    def k2(self):
        kx, ky, kz = self.grid.kdiff
        return kx**2 + ky**2 + kz**2

    @cached_property
    def omega_k(self):
        """Free dispersion ``sqrt(k^2 + m^2)``."""
        return np.sqrt(self.k2 + self.m**2)

    @cached_property
    def rho(self):
        """Real-space band-limited ``rho`` centred at the origin."""
        return self.grid.ifft(self.rho_k)

    @cached_property
    def rho_norm(self) -> float:
        return float(np.sqrt(self.grid.spectral_dot(self.rho_k, self.rho_k)))

    def kdotv(self, v):
        kx, ky, kz = self.grid.kdiff
        return kx * v[0] + ky * v[1] + kz * v[2]

    def rho_shifted_k(self, q):
        return self.rho_k * self.grid.shift_phase(q)

    def filter(self, f):
        """Remove Nyquist content from a real field."""
        F = self.grid.fft(f)
        F[self.grid.nyquist] = 0.0
        return self.grid.ifft(F)

    def to_spectral(self, state):
        g = self.grid
        return SpectralState(g.fft(state.psi), g.fft(state.pi), np.array(state.q, float),
                             np.array(state.p, float))

    def to_state(self, s):
        from .fields import FullState
        g = self.grid
        return FullState(g.ifft(s.psi), g.ifft(s.pi), s.q, s.p, grid=g)

    def omega(self, a, b) -> float:
        """Symplectic form of two spectral states."""
        g = self.grid
        return (g.spectral_dot(a.psi, b.pi) - g.spectral_dot(a.pi, b.psi)
                + float(a.q @ b.p - a.p @ b.q))


@dataclass
class SpectralState:
    """Half-spectrum coefficients of ``(psi, pi)`` with the two 3-vectors."""

    psi: np.ndarray
    pi: np.ndarray
    q: np.ndarray
    p: np.ndarray

    def __add__(self, o):
        return SpectralState(self.psi + o.psi, self.pi + o.pi, self.q + o.q, self.p + o.p)

    def __sub__(self, o):
        return SpectralState(self.psi - o.psi, self.pi - o.pi, self.q - o.q, self.p - o.p)

    def __mul__(self, c):
        return SpectralState(self.psi * c, self.pi * c, self.q * c, self.p * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def translated(self, grid, b):
        """Translate the field parts by ``b``; vector parts unchanged."""
        ph = grid.shift_phase(b)
        return SpectralState(self.psi * ph, self.pi * ph, self.q, self.p)

    def derivative(self, grid, axis):
        """``d/dx_axis`` of the field parts; vector parts set to zero."""
        ik = 1j * grid.kdiff[axis]
        return SpectralState(ik * self.psi, ik * self.pi, np.zeros(3), np.zeros(3))
