"""Plane-wavelet phase-space basis and difference kinetic equations.

A one-dimensional carrier gas lives on a lattice of position cells and
quantized momenta.  This package provides the orthonormal cell basis and
its closed-form overlaps, the difference transport/drift stencils, Pauli
collision models, mean-field polarization-matrix evolution, explicit time
integration with conservation diagnostics, and batch drivers (CLI and
HTTP) including a grid-refinement study of the classical Boltzmann limit.
"""

from .grid import (GridSpec, WaveletIndex, closure_defect, expand_plane_wave,
                   inner_product, inner_product_quadrature,
                   phase_matrix_element, project_function, reconstruct,
                   wavelet_eval)
from .stencils import (DriftStencil, LatticeField, dft_derivative_oracle,
                       drift_apply, shift_k, shift_x, stream_d, stream_d2,
                       stream_d_back)
from .kinetics import (CollisionModel, DistributionField, PolarizationMatrix,
                       PotentialProfile, build_screened_coulomb_rates,
                       classical_rhs, collision_rhs, dbe_rhs,
                       detailed_balance_table, effective_hamiltonian,
                       hermiticity_defect, kinetic_energies, meanfield_rhs)
from .evolve import (Diagnostics, HermiticityError, IntegratorConfig,
                     PositivityError, occupation_entropy,
                     polarization_dt_bound, run_distribution,
                     run_polarization, stability_dt_bound, step,
                     transport_dt_bound)
from .scenario import (ConfigError, ScenarioConfig, build_collision,
                       build_initial, build_profile, load_config,
                       parse_config, serialize_config)
from .runner import (LimitStudyResult, SimulateResult, VerifyResult,
                     limit_study, simulate, verify_basis_report,
                     write_limit_study, write_outputs)

__version__ = "0.1.0"

__all__ = [
    "GridSpec", "WaveletIndex", "wavelet_eval", "inner_product",
    "inner_product_quadrature", "expand_plane_wave", "reconstruct",
    "phase_matrix_element", "project_function", "closure_defect",
    "LatticeField", "DriftStencil", "shift_k", "shift_x", "drift_apply",
    "stream_d", "stream_d_back", "stream_d2", "dft_derivative_oracle",
    "PotentialProfile", "DistributionField", "PolarizationMatrix",
    "CollisionModel", "collision_rhs", "dbe_rhs", "classical_rhs",
    "effective_hamiltonian", "meanfield_rhs", "build_screened_coulomb_rates",
    "detailed_balance_table", "kinetic_energies", "hermiticity_defect",
    "IntegratorConfig", "Diagnostics", "step", "run_distribution",
    "run_polarization", "PositivityError", "HermiticityError",
    "occupation_entropy", "transport_dt_bound", "stability_dt_bound",
    "polarization_dt_bound",
    "ScenarioConfig", "ConfigError", "parse_config", "serialize_config",
    "load_config", "build_profile", "build_initial", "build_collision",
    "VerifyResult", "SimulateResult", "LimitStudyResult",
    "verify_basis_report", "simulate", "limit_study", "write_outputs",
    "write_limit_study",
]
