"""Model selection between a three-parameter noisy-GHZ error model and the
full permutationally invariant model, via AIC on simulated collective
measurements."""

__version__ = "0.1.0"

from .estimation import FitResult, fit_pi, fit_three_param, log_likelihood
from .measurement import (CountsDataset, MeasurementPlan, Setting, generate_plan,
                          outcome_distribution, plan_distributions, projected_povm,
                          sample_dataset, setting_count)
from .selection import (AicReport, SweepResult, aic, auto_sweep, delta_aic, scaling_in_n,
                        scaling_in_q, sweep)
from .spin import ladder_operators, rotation_to_axis
from .states import (PIState, ThreeParamState, ghz_state, maximally_mixed, mix_true_state,
                     multiplicities, orthogonalize_to_3p, pi_param_count, random_pi_state,
                     three_param_state)

__all__ = [
    "AicReport", "CountsDataset", "FitResult", "MeasurementPlan", "PIState", "Setting",
    "SweepResult", "ThreeParamState", "aic", "auto_sweep", "delta_aic", "fit_pi",
    "fit_three_param", "generate_plan", "ghz_state", "ladder_operators", "log_likelihood",
    "maximally_mixed", "mix_true_state", "multiplicities", "orthogonalize_to_3p",
    "outcome_distribution", "pi_param_count", "plan_distributions", "projected_povm",
    "random_pi_state", "rotation_to_axis", "sample_dataset", "scaling_in_n", "scaling_in_q",
    "setting_count", "sweep", "three_param_state",
]
