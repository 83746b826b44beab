"""Thompson sampling for log-concave bandits with exact and Langevin posterior samplers."""
from .diagnostics import (
    EmpiricalSample,
    concentration_radius_approx,
    concentration_radius_exact,
    grad_subgaussian_check,
    sampler_convergence_report,
    wasserstein_1d,
)
from .estimators import ExactPosteriorSampler, LangevinPosteriorSampler
from .family import (
    FamilySpec,
    InvalidFamilyError,
    PriorSpec,
    TrueArm,
    condition_number,
    gaussian_arm,
    gaussian_family,
    gaussian_prior,
)
from .harness import ExperimentConfig, ResultTable, builtin_instance, run_experiment
from .policies import UCB, BanditInstance, RegretTrace, ThompsonSampling
from .posterior import ArmPosteriorState, conjugate_gaussian_posterior
from .samplers import SamplerConfig, SamplerKind, Schedule, run_langevin

__version__ = "0.1.0"

__all__ = [
    "ArmPosteriorState",
    "BanditInstance",
    "EmpiricalSample",
    "ExactPosteriorSampler",
    "ExperimentConfig",
    "FamilySpec",
    "InvalidFamilyError",
    "LangevinPosteriorSampler",
    "PriorSpec",
    "RegretTrace",
    "ResultTable",
    "SamplerConfig",
    "SamplerKind",
    "Schedule",
    "ThompsonSampling",
    "TrueArm",
    "UCB",
    "builtin_instance",
    "concentration_radius_approx",
    "concentration_radius_exact",
    "condition_number",
    "conjugate_gaussian_posterior",
    "gaussian_arm",
    "gaussian_family",
    "gaussian_prior",
    "grad_subgaussian_check",
    "run_experiment",
    "run_langevin",
    "sampler_convergence_report",
    "wasserstein_1d",
]
