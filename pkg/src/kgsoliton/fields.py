"""Periodic grid, spectral transforms, phase-space states and weighted norms.

Internally fields are real arrays of shape ``(N, N, N)`` on the nodes
``x_n = -L + n h``.  Spectral work uses the half-spectrum layout of
``scipy.fft.rfftn``.  The continuum transform convention of the model is
``f_hat(k) = (2 pi)^{-3/2} int exp(i k.x) f(x) dx``; ``Grid.transform``
gives its discrete counterpart.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "FieldPair",
    "FullState",
    "set_threads",
    "weighted_norm",
    "energy_norm",
    "write_snapshot",
    "read_snapshot",
    "SNAPSHOT_MAGIC",
]

_WORKERS = 1


def set_threads(n: int):
    """Number of worker threads used by the FFTs."""
    global _WORKERS
    _WORKERS = max(1, int(n))


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-L, L)^3`` with ``N`` points per axis."""

    N: int = 64
    L: float = 16.0

    def __post_init__(self):
        if self.N < 4 or self.N % 2:
            raise ValueError("grid needs an even N >= 4")
        if not self.L > 0:
            raise ValueError("grid needs L > 0")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def shape(self):
        return (self.N, self.N, self.N)

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @cached_property
    def x(self):
        return -self.L + self.h * np.arange(self.N)

    @cached_property
    def mesh(self):
        """Broadcastable coordinate arrays ``(X, Y, Z)``."""
        x = self.x
        return x[:, None, None], x[None, :, None], x[None, None, :]

    @cached_property
    def k1d(self):
        """Wavenumbers ``(pi/L) m`` in FFT order, ``m`` in ``[-N/2, N/2)``."""
        return 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    @cached_property
    def kvec(self):
        """Broadcastable wavevector components on the half spectrum."""
        k = self.k1d
        kz = 2.0 * np.pi * np.fft.rfftfreq(self.N, d=self.h)
        return k[:, None, None], k[None, :, None], kz[None, None, :]

    @cached_property
    def kdiff(self):
        """Wavevector components with the Nyquist mode zeroed.

        Used for derivatives and shifts so that real fields stay real.
        """
        out = []
        for comp in self.kvec:
            c = comp.copy()
            c[np.isclose(np.abs(c), np.pi / self.h)] = 0.0
            out.append(c)
        return tuple(out)

    @cached_property
    def k2(self):
        kx, ky, kz = self.kvec
        return kx**2 + ky**2 + kz**2

    @cached_property
    def nyquist(self):
        """Boolean mask of half-spectrum modes touching a Nyquist index."""
        kx, ky, kz = self.kvec
        kn = np.pi / self.h
        return (np.isclose(np.abs(kx), kn) | np.isclose(np.abs(ky), kn)
                | np.isclose(np.abs(kz), kn))

    @cached_property
    def spectral_weight(self):
        """Multiplicity of each half-spectrum mode in the full spectrum."""
        w = np.full(self.N // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w[None, None, :]

    @cached_property
    def origin_phase(self):
        """``exp(i k L)`` per axis: maps continuum transforms centred at 0
        to coefficients of a grid starting at ``-L``."""
        m = np.arange(self.N)
        s = np.where(m % 2 == 0, 1.0, -1.0)
        sz = s[: self.N // 2 + 1]
        return s[:, None, None] * s[None, :, None] * sz[None, None, :]

    def fft(self, f):
        return sfft.rfftn(f, workers=_WORKERS)

    def ifft(self, F):
        return sfft.irfftn(F, s=self.shape, workers=_WORKERS)

    def from_continuum(self, values):
        """Grid coefficients of a function whose unnormalized continuum
        transform ``int exp(-i k.x) f(x) dx`` takes ``values`` on the
        half-spectrum wavevectors.  Nyquist modes are dropped."""
        out = self.origin_phase * values / self.h**3
        return np.where(self.nyquist, 0.0, out)

    def shift_phase(self, a):
        """Multiplier that translates a field by ``a``: ``f(x) -> f(x - a)``."""
        kx, ky, kz = self.kdiff
        return (np.exp(-1j * kx * a[0]) * np.exp(-1j * ky * a[1])) * np.exp(-1j * kz * a[2])

    def dot(self, f, g) -> float:
        """``<f, g> = int f g dx`` by the trapezoidal rule."""
        return float(np.vdot(f, g).real * self.h**3)

    def spectral_dot(self, F, G) -> float:
        """``<f, g>`` evaluated from half-spectrum coefficients (Parseval)."""
        # interior kz planes count twice; the kz = 0 and Nyquist planes once
        total = 2.0 * np.vdot(F, G).real
        total -= np.vdot(F[..., 0], G[..., 0]).real + np.vdot(F[..., -1], G[..., -1]).real
        return float(total * self.h**3 / self.N**3)

    def derivative(self, f, axis: int):
        return self.ifft(1j * self.kdiff[axis] * self.fft(f))

    def gradient(self, f):
        F = self.fft(f)
        return tuple(self.ifft(1j * kc * F) for kc in self.kdiff)

    def translate(self, f, a):
        """Exact spectral translation ``f(x) -> f(x - a)``."""
        return self.ifft(self.fft(f) * self.shift_phase(np.asarray(a, float)))

    def transform(self, field, direction: str = "forward"):
        """Discrete counterpart of the continuum Fourier transform.

        ``forward``: real field to complex coefficients ``f_hat(k_m)`` on the
        full wavenumber grid in FFT order, normalized as
        ``h^3 (2 pi)^{-3/2} sum_n exp(i k.x_n) f_n``.
        ``inverse`` undoes it.
        """
        norm = self.h**3 * (2.0 * np.pi) ** -1.5
        m = np.arange(self.N)
        s = np.where(m % 2 == 0, 1.0, -1.0)
        sign = s[:, None, None] * s[None, :, None] * s[None, None, :]
        if direction == "forward":
            return norm * self.N**3 * sign * sfft.ifftn(field, workers=_WORKERS)
        if direction == "inverse":
            return sfft.fftn(field * sign, workers=_WORKERS) / (norm * self.N**3)
        raise ValueError("direction must be 'forward' or 'inverse'")

    def evaluate(self, F, point):
        """Trigonometric interpolation of coefficients ``F`` at ``point``."""
        point = np.asarray(point, float) + self.L
        kx, ky, kz = self.kvec
        ex = np.exp(1j * kx * point[0])
        ey = np.exp(1j * ky * point[1])
        ez = np.exp(1j * kz * point[2])
        term = np.where(self.nyquist, 0.0, F * ex * ey * ez)
        return float(np.sum(self.spectral_weight * term).real / self.N**3)

    def distance(self, center):
        """Minimum-image distance ``|x - center|`` on the periodic box."""
        d2 = 0.0
        for comp, c in zip(self.mesh, np.asarray(center, float)):
            d = (comp - c + self.L) % (2.0 * self.L) - self.L
            d2 = d2 + d**2
        return np.sqrt(d2)

    def check(self, other: "Grid"):
        if other != self:
            raise ValueError("grid mismatch")


class _VectorOps:
    """Elementwise linear algebra shared by ``FieldPair`` and ``FullState``."""

    _parts: tuple = ()

    def _map(self, fn, other=None):
        if other is None:
            vals = [fn(getattr(self, n)) for n in self._parts]
        else:
            self.grid.check(other.grid)
            vals = [fn(getattr(self, n), getattr(other, n)) for n in self._parts]
        return type(self)(*vals, grid=self.grid)

    def __add__(self, other):
        return self._map(np.add, other)

    def __sub__(self, other):
        return self._map(np.subtract, other)

    def __neg__(self):
        return self._map(np.negative)

    def __mul__(self, c):
        return self._map(lambda a: a * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self._map(lambda a: a / c)

    def axpy(self, a, other):
        """Return ``self + a * other``."""
        return self._map(lambda x, y: x + a * y, other)

    def copy(self):
        return self._map(np.copy)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(getattr(self, n))) for n in self._parts)


@dataclass(eq=False)
class FieldPair(_VectorOps):
    """Field pair ``(psi, pi)`` on a common grid."""

    psi: np.ndarray
    pi: np.ndarray
    grid: Grid = Grid()
    _parts = ("psi", "pi")

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        self.pi = np.asarray(self.pi, dtype=float)
        if self.psi.shape != self.grid.shape or self.pi.shape != self.grid.shape:
            raise ValueError("field shape does not match grid")

    @classmethod
    def zeros(cls, grid: Grid):
        return cls(np.zeros(grid.shape), np.zeros(grid.shape), grid=grid)

    def dot(self, other: "FieldPair") -> float:
        self.grid.check(other.grid)
        return self.grid.dot(self.psi, other.psi) + self.grid.dot(self.pi, other.pi)


@dataclass(eq=False)
class FullState(_VectorOps):
    """Phase-space point ``(psi, pi, q, p)``."""

    psi: np.ndarray
    pi: np.ndarray
    q: np.ndarray
    p: np.ndarray
    grid: Grid = Grid()
    _parts = ("psi", "pi", "q", "p")

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        self.pi = np.asarray(self.pi, dtype=float)
        self.q = np.asarray(self.q, dtype=float).reshape(3)
        self.p = np.asarray(self.p, dtype=float).reshape(3)
        if self.psi.shape != self.grid.shape or self.pi.shape != self.grid.shape:
            raise ValueError("field shape does not match grid")

    @classmethod
    def zeros(cls, grid: Grid):
        return cls(np.zeros(grid.shape), np.zeros(grid.shape), np.zeros(3), np.zeros(3), grid=grid)

    @classmethod
    def from_fields(cls, fields: FieldPair, q, p):
        return cls(fields.psi, fields.pi, q, p, grid=fields.grid)

    @property
    def fields(self) -> FieldPair:
        return FieldPair(self.psi, self.pi, grid=self.grid)

    def dot(self, other: "FullState") -> float:
        """Euclidean inner product on fields and vectors."""
        self.grid.check(other.grid)
        return (self.grid.dot(self.psi, other.psi) + self.grid.dot(self.pi, other.pi)
                + float(self.q @ other.q + self.p @ other.p))

    def l2(self) -> float:
        return float(np.sqrt(max(self.dot(self), 0.0)))


def weighted_norm(state, alpha: float = 0.0, center=(0.0, 0.0, 0.0)) -> float:
    """Weighted norm ``||Y||_alpha``.

    With ``w = (1 + |x - center|)^alpha`` the field part is
    ``||w psi|| + ||w grad psi|| + ||w pi||`` (L2 norms, spectral gradient,
    minimum-image distance); a ``FullState`` adds ``|q| + |p|``.
    """
    grid = state.grid
    w2 = (1.0 + grid.distance(center)) ** (2.0 * alpha)
    dv = grid.h**3
    grad2 = sum(g**2 for g in grid.gradient(state.psi))
    total = (np.sqrt(np.sum(w2 * state.psi**2) * dv)
             + np.sqrt(np.sum(w2 * grad2) * dv)
             + np.sqrt(np.sum(w2 * state.pi**2) * dv))
    if isinstance(state, FullState):
        total += np.linalg.norm(state.q) + np.linalg.norm(state.p)
    return float(total)


def energy_norm(fields, m: float = 1.0) -> float:
    """``(int pi^2 + |grad psi|^2 + m^2 psi^2 dx)^{1/2}``, computed spectrally."""
    grid = fields.grid
    P = grid.fft(fields.pi)
    F = grid.fft(fields.psi)
    kx, ky, kz = grid.kdiff
    kk = kx**2 + ky**2 + kz**2
    e = grid.spectral_dot(P, P) + grid.spectral_dot(np.sqrt(kk + m**2) * F, np.sqrt(kk + m**2) * F)
    return float(np.sqrt(e))


# Snapshot layout: little-endian header of exactly 64 bytes
#   magic   8s   b"KGSNAP01"
#   N       u4   points per axis
#   count   u4   number of N^3 float64 arrays that follow
#   L       f8   half box length
#   time    f8   simulation time
#   flags   u4   bit 0: a 6-double trailer (q, p) follows the arrays
#   pad     28x
# then `count` arrays, float64 little-endian, C order (z index fastest).
SNAPSHOT_MAGIC = b"KGSNAP01"
_HEADER = struct.Struct("<8sIIddI28x")
assert _HEADER.size == 64


def write_snapshot(path, data, time: float = 0.0):
    """Write a ``FullState``, ``FieldPair`` or list of arrays to ``path``."""
    if isinstance(data, (FullState, FieldPair)):
        arrays = [data.psi, data.pi]
        N, L = data.grid.N, data.grid.L
    else:
        arrays = [np.asarray(a, dtype=float) for a in data]
        N, L = arrays[0].shape[0], float("nan")
    flags = 1 if isinstance(data, FullState) else 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, N, len(arrays), L, float(time), flags))
        for a in arrays:
            if a.shape != (N, N, N):
                raise ValueError("snapshot arrays must be N x N x N")
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
        if flags & 1:
            fh.write(np.concatenate([data.q, data.p]).astype("<f8").tobytes())


def read_snapshot(path):
    """Read a snapshot; returns ``(obj, time)``.

    ``obj`` is a ``FullState`` if the particle trailer is present, a
    ``FieldPair`` for two arrays, otherwise a list of arrays.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, N, count, L, time, flags = _HEADER.unpack_from(raw, 0)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError("not a field snapshot (bad magic)")
    size = N**3
    body = np.frombuffer(raw, dtype="<f8", offset=64)
    if body.size < count * size + (6 if flags & 1 else 0):
        raise ValueError("truncated snapshot")
    arrays = [body[i * size:(i + 1) * size].reshape(N, N, N).astype(float) for i in range(count)]
    if flags & 1 and count == 2:
        trailer = body[count * size:count * size + 6]
        return FullState(arrays[0], arrays[1], trailer[:3], trailer[3:], grid=Grid(N, L)), time
    if count == 2 and np.isfinite(L):
        return FieldPair(arrays[0], arrays[1], grid=Grid(N, L)), time
    return arrays, time
