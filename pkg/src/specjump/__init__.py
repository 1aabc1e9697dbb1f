"""Spectral half-line simulator for single-jump boundary dynamics.

A verification kit for the equivalence between a piecewise-free evolution
with one unitary jump at the origin and a first-order boundary-value
problem on the half line, together with the relativistic dressing of that
picture and its large-carrier plane-wave limit.
"""

from .config import NumericsConfig, adjusted, numerics, set_numerics
from .errors import (ConfigError, DegenerateDensity, EmptyRecords, GridMismatch,
                     NonCommensurateShift, NonHermitianInput, NonpositiveTolerance,
                     NotInHardyClass, NotInInductiveClass, NumericalAssertionFailure,
                     SkippedPrecondition, SpecjumpError, SupportViolation,
                     UnnormalizedAmplitudes, UnsupportedInput, WrongRepresentation)
from .field import (MOMENTUM, POSITION, SpectralGrid, SymbolTable, WaveField,
                    apply_constant_matrix, apply_on_mask, apply_propagator,
                    bump_packet, class_mass_defect, dump_field_csv,
                    gaussian_packet, generator_phase, grid_shift,
                    hardy_project, jump_left_of,
                    keep_left_of, load_field, make_field,
                    reflect_through_origin, save_field, scalar_symbol,
                    seam_guard_mass, to_momentum, to_position, transform)
from .linalg import (InvariantCheck, ModelSpec, all_invariants_hold, evolve,
                     hermitian_function, preset_matrix, validate_model)
from .reflect import (DressedSpec, ReflectionSolution, conjugated_propagator,
                      connection_persistence_defect, dressed_jump,
                      energy_symbol, moving_cut_projector, norm_split,
                      probability_current, reflect_time_reversal_check,
                      solve_reflection)
from .ultra import (ConvergenceRecord, LimitSweepConfig, SWEEP_COLUMNS,
                    dressed_propagate, jump_equation_residual, kappa_threshold,
                    limit_error_integral, limit_truncated_chi, omega_symbol,
                    run_kappa_sweep, sup_phase_factor)
from .montecarlo import (JumpDensity, TrajectoryEnsemble,
                         deterministic_expectation, exponential_density,
                         expectation_from_ensemble, jump_density,
                         jump_time_quantile, mc_expectation,
                         quadrature_expectation, run_trajectories,
                         sample_jump_time, trajectory_values, uniform_density)
from .toy import (ReflectionPair, TimeReversalReport, boundary_trace_defect,
                  cocycle_oracle_defect, connection_defect, equivalence_defect,
                  half_line_mass, input_output_connection, ito_residual,
                  jump_cocycle, jump_indicator, reflection_pair,
                  signed_jump_count, solve_jump_transport, time_reversal_check)
from .report import FORMATS, emit_report, emit_single_json, format_float
from .scenarios import (SCENARIOS, PacketSpec, ScenarioConfig, ScenarioOutcome,
                        default_config, load_config, parse_config,
                        run_scenario)
from .acceptance import CriterionResult, run_all, self_test

__version__ = "0.1.0"
