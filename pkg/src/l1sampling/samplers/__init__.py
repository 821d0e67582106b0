from .baselines import (
    GibbsKernel,
    gibbs_eta_given_x,
    gibbs_step,
    gibbs_x_given_eta,
    lasso_map,
    moreau_envelope_grad,
    myula_recipe,
    myula_step,
    prox_l1,
)
from .chain import GibbsSampler, GroupHadamardULA, HadamardMALA, HadamardULA, MYULA, run_chain
from .hadamard import (
    drift_constants,
    group_hadamard_step,
    group_pi_log_unnormalized,
    hadamard_mala_step,
    hadamard_step,
    hadamard_transition_logdensity,
    lift,
    lyapunov,
    mala_log_acceptance,
    positive_root,
)
from .state import ChainRecord, GibbsState, SamplerState, StepConfig, StepError

__all__ = [
    "ChainRecord",
    "GibbsKernel",
    "GibbsSampler",
    "GibbsState",
    "GroupHadamardULA",
    "HadamardMALA",
    "HadamardULA",
    "MYULA",
    "SamplerState",
    "StepConfig",
    "StepError",
    "drift_constants",
    "gibbs_eta_given_x",
    "gibbs_step",
    "gibbs_x_given_eta",
    "group_hadamard_step",
    "group_pi_log_unnormalized",
    "hadamard_mala_step",
    "hadamard_step",
    "hadamard_transition_logdensity",
    "lasso_map",
    "lift",
    "lyapunov",
    "mala_log_acceptance",
    "moreau_envelope_grad",
    "myula_recipe",
    "myula_step",
    "positive_root",
    "prox_l1",
    "run_chain",
]
