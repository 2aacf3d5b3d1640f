"""Differentially private full-batch gradient descent for least-squares
regression: exact zCDP accounting, the closed-form iterate distribution,
no-clipping certification, and Student-t confidence intervals."""

from .accountant import (InfiniteNoise, MechanismSpec, PrivacyBudget,
                         calibrate_noise, compose, dp_to_zcdp,
                         gradient_sensitivity, step_cost, zcdp_to_dp)
from .baselines import (BaselineResult, DegenerateInference, adassp_fit,
                        ols_with_ci)
from .conditions import (ConditionReport, SingularCovariance,
                         check_conditions, noise_ratio_certificate)
from .data import (Dataset, GenerativeSpec, RngStream, SingularDesign,
                   empirical_covariance, generate_dataset, load_dataset,
                   ols_solve, random_rotation, save_dataset)
from .engine import (GdConfig, IterateLaw, SingularGeometry, Trajectory,
                     clip, coupled_run, geometric_noise_factor,
                     huber_objective, iterate_law, run, tail_average)
from .intervals import (CiConfig, CiMethod, IntervalSet, build_interval,
                        collect_estimates)
from .studentt import t_quantile

__all__ = [name for name in dir() if not name.startswith("_")]
