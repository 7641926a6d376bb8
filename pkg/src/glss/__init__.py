"""Stochastic switched linear systems with edge-constrained mode words.

The package covers the round trip from a model description to certified
statistics: admissible switching generation, stationary simulation,
output decomposition into input-driven and noise-driven parts, innovation
(one-step predictor) forms, and minimality/basis-change checks, each with
a statistical or algebraic validation report.
"""

from .decompose import (DecompositionResult, decompose_projection,
                        decompose_series, export_decomposition, ridge_fit,
                        stack_input_regressors, verify_decomposition)
from .errors import (ConvergenceError, DimensionError, GlssError,
                     HypothesisViolationError, InstabilityError,
                     InvalidAlphabetError, InvalidTransitionError,
                     ModelFormatError, SingularRegressionError, WindowError)
from .innovation import (InnovationEstimate, InnovationModel,
                         PredictorEstimate, build_innovation_form,
                         estimate_innovation, fit_innovation_gains,
                         predictor_estimate, run_predictor_filter)
from .model import (GlssModel, StationaryMoments, independent_noise_moments,
                    output_covariance_family, restricted_lyapunov_fixed_point,
                    solve_stationary_gramian, stationary_state_series,
                    validate_sglss)
from .modelio import (canonical_json, load_model, model_from_dict,
                      model_to_dict, save_model)
from .realize import (Isomorphism, RankReport, check_minimality,
                      find_isomorphism, observability_matrix,
                      reachability_matrix)
from .reporting import Check, ValidationReport
from .simulate import (CovEstimate, Seeds, Series, Trajectory, ZSeries,
                       compute_z, cross_moment_battery, default_burn_in,
                       empirical_cov, load_trajectory_binary,
                       load_trajectory_csv, replay, save_trajectory_binary,
                       save_trajectory_csv, simulate, simulate_batch,
                       whiteness_report)
from .switching import (KINDS, SwitchingSpec, make_discrete_iid_spec,
                        make_iid_white_spec, make_markov_spec,
                        sample_switching, stationary_distribution,
                        validate_admissibility)
from .words import (EPSILON, Alphabet, Word, WordTable, admissible_words,
                    build_word_table, full_edges, stability_radius,
                    word_series_table)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
