"""Tabulate the coupling matrix H(i omega) across the continuum threshold.

Below ``mu = sqrt(1 - v^2)`` the matrix is real and ``F = H - K`` is positive;
above it ``Im H`` is negative.  Run with ``python demos/threshold_resolvent.py``.
"""
import numpy as np

from kgsoliton import ChargeProfile, H_matrix, K_matrix
from kgsoliton.spectral import spectral_gap

profile, v = ChargeProfile(), 0.5
mu = spectral_gap(v, 1.0)
K = K_matrix(v, profile)
print(f"mu = {mu:.6f}")
print(f"{'omega':>8} {'Re H11':>12} {'Im H11':>12} {'Re H22':>12} {'Im H22':>12} {'F11':>10}")
for w in mu * np.array([0.2, 0.6, 0.95, 1.05, 1.5, 3.0]):
    H = H_matrix(1j * w, v, profile)
    print(f"{w:8.4f} {H[0, 0].real:12.6f} {H[0, 0].imag:12.2e} {H[1, 1].real:12.6f} "
          f"{H[1, 1].imag:12.2e} {(H[0, 0] - K[0, 0]).real:10.2e}")
