"""Langevin sampling for posteriors with l1 and group-l1 priors.

The main sampler lifts ``x`` to ``(u, v)`` with ``x = u * v`` and ``u > 0``;
Moreau–Yosida ULA and the Bayesian-lasso Gibbs sampler are included as
baselines, together with diagnostics and an experiment harness.
"""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    DataTerm,
    DomainError,
    GroupStructure,
    QuadratureConfig,
    TargetModel,
    grad_G,
    laplace_mixture_residual,
    pi_log_unnormalized,
    rho_log_unnormalized,
)
from .rng_dist import RngStream  # noqa: E402
