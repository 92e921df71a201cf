"""Exact-diagonalization toolkit for thermalization on finite spin lattices."""

from .lattice import (FEASIBILITY_CAP, FeasibilityError, Region, Translation,
                      boundary_sites, embed_operator, make_region,
                      periodic_translations)
from .linalg import (SpectralDecomposition, eigh, entropy, partial_trace,
                     reduced_from_vector, relative_entropy, trace_norm,
                     trace_norm_distance, von_neumann_entropy)
from .hamiltonian import (OPEN, PERIODIC, BoundaryCondition, Interaction,
                          build_hamiltonian, build_hamiltonian_on_sites,
                          energy_density_extremes, interaction_from_json,
                          interaction_to_json, sample_random_2local,
                          translation_invariance_check)
from .ensembles import (EmptyWindowError, EnergyWindow, MicrocanonicalSubspace,
                        block_pseudonorm, dephase, gibbs_state, microcanonical,
                        population_entropy, pseudonorm_equivalence_bound,
                        solve_beta, weighted_microcanonical)
from .sampling import (SeededSampler, design_state_in_subspace,
                       haar_concentration_tail, haar_state_in_subspace,
                       haar_unitary)
from .dynamics import (GapStatistics, effective_dimension, equilibration_bound,
                       gap_structure, mc_time_average_distance, renyi2_floor,
                       time_evolve)
from .ising import (LevelSpec, definetti_check, finitesize_check,
                    gibbs_occupations, microcanonical_dim, min_bath_size,
                    rational_dependence, relent_check)
from .eth import (LRConstants, ShellGeometry, coherence_violation,
                  estimate_lr_constants, filtered_reduction, gaussian_width,
                  locality_check, middle_core, shell_region)
from .experiments import ExperimentConfig, ExperimentRecord, config_from_dict, run

__version__ = "0.1.0"
