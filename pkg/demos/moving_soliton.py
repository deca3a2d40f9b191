"""Evolve a soliton at v = 0.3 e1 and compare with the exact travelling wave.

Run with ``python demos/moving_soliton.py``; takes a few seconds.
"""
import numpy as np

from kgsoliton import ChargeProfile, Grid, Model, RunConfig, SolitonParams, run, soliton_state

model = Model(Grid(64, 16.0), ChargeProfile(), m=1.0)
sigma = SolitonParams(np.zeros(3), np.array([0.3, 0.0, 0.0]))
T = 5.0
rec = run(RunConfig(model, dt=model.grid.h / 4, T=T, sigma0=sigma, snapshot_times=(T,)))

Y = rec.snapshots[T]
S = soliton_state(SolitonParams(sigma.b + sigma.v * T, sigma.v), model)
g = model.grid
err = np.sqrt(g.dot(Y.psi - S.psi, Y.psi - S.psi) + g.dot(Y.pi - S.pi, Y.pi - S.pi))
print(f"q(T)            = {Y.q}")
print(f"field L2 error  = {err:.2e}")
print(f"energy drift    = {rec.energy_drift():.2e}")
