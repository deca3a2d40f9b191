"""Klein-Gordon field coupled to a relativistic extended charge.

Solitons, symplectic projection onto the solitary manifold, the linearized
generator, resolvent quantities and scattering diagnostics on a periodic
pseudospectral grid.
"""
__version__ = "0.1.0"

from .charge import ChargeProfile, WienerReport, rho_hat, rho_hat_radial, wiener_check
from .evolve import (BlowUpError, Integrator, PerturbationSpec, RunConfig, TrajectoryRecord,
                     WraparoundError, free_kg_propagate, hamiltonian, local_decay_probe,
                     moving_frame_propagate, run, step)
from .fields import FieldPair, FullState, Grid, read_snapshot, weighted_norm, write_snapshot
from .linop import apply_A, frozen_evolve, linear_hamiltonian, nonlinear_remainder, skew_symmetry_check
from .model import Model, SpectralState
from .soliton import SolitonParams, TangentFrame, soliton_state, tangent_vectors
from .spectral import H_matrix, K_matrix, M_matrix, green_function, im_H_surface, kappa, puiseux_fit
from .scatter import Decomposer, DecayFit, ScatteringRecord, decompose_trajectory, fit_decay
from .symplectic import ProjectionError, ProjectionResult, omega_matrix, project

__all__ = [
    "__version__",
    "ChargeProfile", "WienerReport", "rho_hat", "rho_hat_radial", "wiener_check",
    "BlowUpError", "Integrator", "PerturbationSpec", "RunConfig", "TrajectoryRecord",
    "WraparoundError", "free_kg_propagate", "hamiltonian", "local_decay_probe",
    "moving_frame_propagate", "run", "step",
    "FieldPair", "FullState", "Grid", "read_snapshot", "weighted_norm", "write_snapshot",
    "apply_A", "frozen_evolve", "linear_hamiltonian", "nonlinear_remainder", "skew_symmetry_check",
    "Model", "SpectralState",
    "SolitonParams", "TangentFrame", "soliton_state", "tangent_vectors",
    "H_matrix", "K_matrix", "M_matrix", "green_function", "im_H_surface", "kappa", "puiseux_fit",
    "Decomposer", "DecayFit", "ScatteringRecord", "decompose_trajectory", "fit_decay",
    "ProjectionError", "ProjectionResult", "omega_matrix", "project",
]
