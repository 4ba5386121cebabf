"""Numerical laboratory for kinetically frustrated quantum many-body scars."""

__version__ = "0.1.0"

from .analysis import (FitError, LifetimeFit, fit_lifetime, perturbation_exponent,
                       regress_tau_sigma, shot_average)
from .basis import (ConfigurationNotFoundError, EmptySectorError, FockBasis,
                    IncompatibleSymmetryError, ReducedBasis, SectorConstraint,
                    SymmetrySector, configuration_index, enumerate_basis,
                    symmetry_reduce)
from .dynamics import (FloquetSchedule, KrylovError, ObservableSpec, StateTrajectory,
                       average_hamiltonian, evolve, floquet_evolve,
                       four_rung_floquet_schedule, lanczos_expm, measure)
from .lattices import LatticeSpec, ladder_site
from .models import (CouplingGraph, DisorderModel, FermiHubbardParams, HHBHParams,
                     LadderParams, NoSolutionError, ZigzagGeometry,
                     build_coupling_graph, build_fermi_hubbard, build_hhbh,
                     build_jw_partner_ladder, build_pi_flux_ladder,
                     build_spin_exchange, dipolar_coupling, initial_state,
                     named_configuration, sample_disorder, solve_zigzag_geometry)
from .operators import (Hop, QuantumState, SparseOperator, compile_operator,
                        compile_oneway, compile_reduced_operator)
from .spectral import (DimensionCapError, EigenDecomposition, FractionalEnergyStats,
                       LevelStatistics, R_MEAN_POISSON, R_MEAN_WIGNER_DYSON,
                       ScarTower, SgaReport, SpectralDecomposition, build_scar_tower,
                       fidelity_from_overlaps, fractional_energy_width,
                       full_diagonalize, level_spacing_stats, measured_tower_spacing,
                       overlap_spectrum, sga_split, spectral_measure_lanczos,
                       verify_sga)
