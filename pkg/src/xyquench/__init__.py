"""Quench dynamics of a noisy transverse-field XY spin chain.

Simulates defect production across the chain's quantum critical structure for
three linear quench protocols under white control-field noise, reproduces the
noise-free Kibble-Zurek power laws and the anti-KZ regime where slower
driving creates more defects, extracts the optimal-quench-time scaling, and
maps each momentum mode onto a standard Landau-Zener sweep for two-level
quantum simulation.
"""

__version__ = "0.1.0"

from .errors import (BoundaryMinimumError, ConfigError, DegeneracyError,
                     DomainError, IntegrationError, InvariantViolation,
                     QuenchError, SchemaError)
from .model import (KGrid, KModeHamiltonian, NoiseOperator, Protocol,
                    ProtocolSpec, build_hamiltonian, build_noise_operator,
                    instantaneous_eigenstates)
from .evolve import (IntegratorConfig, KModeState, NoiseConfig,
                     average_trajectories, evolve_master, evolve_trajectory,
                     sample_trajectories, trace_distance)
from .observables import (CutoffResult, ExcitationProfile, SweepResult,
                          cutoff_momentum, defect_density,
                          excitation_probability, scan_excitations,
                          sweep_defect_density)
from .analysis import (NoiseInducedFit, OptimalTimeFit, PowerLawFit,
                       fit_alpha, fit_linear_rate, fit_power_law,
                       noise_induced_defects, optimal_quench_time,
                       optimal_time_study)
from .lzmap import (LZMapping, impulse_region_check, lz_defect_estimate,
                    lz_map, lz_probability, standard_frame_excitation)
