"""Co-state data fusion for descent telemetry.

Geometric consistency monitoring via a regularized algebraic co-state,
behavioral-regime generator learning, and intrinsic risk forecasting
(hazard probability, mean first-passage time), with an EKF baseline and a
synthetic powered-descent simulator.
"""

from ._core import (
    CHI3_MEAN,
    FusionError,
    chi2_3_quantile,
    compute_costate,
    correct_probabilities,
    default_config_json,
    enforce_generator_validity,
    eval_dynamics,
    eval_h,
    eval_jacobian,
    expm,
    is_valid_generator,
    lyapunov_value,
    mc_mfpt,
    mfpt,
    mle_generator,
    predicted_increment,
    project_state_update,
    propagate_probabilities,
    random_generator,
    regularized_gram_inverse,
    run_monitor,
    simulate_descent,
    solve_mpc,
    spectral_real_parts,
    whitened_innovation,
)

__all__ = [
    "CHI3_MEAN",
    "FusionError",
    "chi2_3_quantile",
    "compute_costate",
    "correct_probabilities",
    "default_config_json",
    "enforce_generator_validity",
    "eval_dynamics",
    "eval_h",
    "eval_jacobian",
    "expm",
    "is_valid_generator",
    "lyapunov_value",
    "mc_mfpt",
    "mfpt",
    "mle_generator",
    "predicted_increment",
    "project_state_update",
    "propagate_probabilities",
    "random_generator",
    "regularized_gram_inverse",
    "run_monitor",
    "simulate_descent",
    "solve_mpc",
    "spectral_real_parts",
    "whitened_innovation",
]

__version__ = "0.1.0"
