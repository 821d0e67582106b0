"""Reference samplers: Moreau–Yosida ULA and the Bayesian-lasso Gibbs sampler."""
from __future__ import annotations

import numpy as np

from ..model import TargetModel
from ..rng_dist import RngStream, sample_gamma, sample_inverse_gaussian
from .state import GibbsState, StepConfig, StepError


def prox_l1(x, threshold: float):
    """Soft thresholding ``sign(x) max(|x| - threshold, 0)``."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def moreau_envelope_grad(x, lam: float, gamma: float):
    """Gradient of the Moreau envelope of ``lam |.|_1`` with parameter ``gamma``."""
    return (x - prox_l1(x, gamma * lam)) / gamma


def myula_recipe(lipschitz_L: float, K: float = 1.0) -> StepConfig:
    """``gamma = 1/(K L)`` and ``dt = gamma / (5 (gamma L + 1))``."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if not lipschitz_L > 0:
        raise ValueError("the recipe needs a positive Lipschitz constant")
    gamma = 1.0 / (K * lipschitz_L)
    return StepConfig(dt=gamma / (5.0 * (gamma * lipschitz_L + 1.0)), moreau_gamma=gamma)


def myula_step(x, model: TargetModel, cfg: StepConfig, rng: RngStream | None, noise=None):
    if cfg.moreau_gamma is None:
        raise ValueError("MYULA needs moreau_gamma")
    x = np.asarray(x, dtype=float)
    dt, gamma = cfg.dt, cfg.moreau_gamma
    xi = rng.standard_normal(x.shape) if noise is None else noise
    drift = moreau_envelope_grad(x, model.lam, gamma)
    if model.data_term.kind != "zero":
        g = model.data_term.grad(x)
        if not np.all(np.isfinite(g)):
            bad = np.argwhere(~np.isfinite(g))[0]
            raise StepError("non-finite data gradient", index=tuple(int(i) for i in bad))
        drift = drift + g
    return x - dt * drift + np.sqrt(2.0 * dt / model.beta) * xi


class GibbsKernel:
    """Precomputed pieces of the Gaussian conditional for a quadratic data term."""

    def __init__(self, model: TargetModel):
        dt = model.data_term
        if dt.kind != "quadratic":
            raise ValueError("the Gibbs sampler needs a quadratic data term")
        M = dt.A.to_dense()
        self.gram = model.beta * (M.T @ M)
        self.rhs = model.beta * (M.T @ dt.y)
        self.model = model


def gibbs_x_given_eta(eta, kernel: GibbsKernel, rng: RngStream):
    """Draw ``x ~ N(P^{-1} beta A^T y, P^{-1})`` with ``P = beta A^T A + diag(1/eta)``."""
    d = kernel.model.dim
    P = np.broadcast_to(kernel.gram, eta.shape[:-1] + (d, d)).copy()
    idx = np.arange(d)
    P[..., idx, idx] += 1.0 / eta
    try:
        L = np.linalg.cholesky(P)
    except np.linalg.LinAlgError as exc:  # only reachable through eta overflow
        raise StepError("precision matrix not positive definite") from exc
    rhs = np.broadcast_to(kernel.rhs, eta.shape)
    # P m = rhs via the factor, then x = m + L^{-T} z
    y = np.linalg.solve(L, rhs[..., None])
    z = rng.standard_normal(eta.shape)[..., None]
    return np.linalg.solve(np.swapaxes(L, -1, -2), y + z)[..., 0]


def gibbs_eta_given_x(x, model: TargetModel, rng: RngStream):
    """Draw the latent scales: ``1/eta ~ IG(beta lam / |x|, (beta lam)^2)``.

    Coordinates with ``|x| < 1e-12 (1 + |x|_inf)`` use the ``x -> 0`` limit
    ``eta ~ Gamma(1/2, rate (beta lam)^2 / 2)``.
    """
    a = model.beta * model.lam
    ax = np.abs(x)
    eps0 = 1e-12 * (1.0 + np.max(ax, axis=-1, keepdims=True))
    small = ax < eps0
    inv_eta = sample_inverse_gaussian(rng, a / np.where(small, 1.0, ax), a * a, size=x.shape)
    eta = 1.0 / np.asarray(inv_eta, dtype=float)
    n_small = int(np.count_nonzero(small))
    if n_small:
        eta[small] = sample_gamma(rng, 0.5, 0.5 * a * a, size=n_small)
    return eta


def gibbs_step(state: GibbsState, model: TargetModel, rng: RngStream, kernel: GibbsKernel | None = None):
    """Alternate ``x | eta`` (Gaussian) and ``eta | x`` (inverse Gaussian in ``1/eta``).

    Batched over leading axes of ``state.x``.
    """
    kernel = GibbsKernel(model) if kernel is None else kernel
    x = gibbs_x_given_eta(state.eta, kernel, rng)
    return GibbsState(x, gibbs_eta_given_x(x, model, rng))


def lasso_map(model: TargetModel, n_iter: int = 20000, tol: float = 1e-12) -> np.ndarray:
    """Posterior mode ``argmin lam |x|_1 + G(x)`` by FISTA with step ``1/L``."""
    d = model.dim
    if model.data_term.kind == "zero":
        return np.zeros(d)
    L = model.data_term.lipschitz_L
    x = np.zeros(d)
    z = x.copy()
    t = 1.0
    for _ in range(n_iter):
        x_new = prox_l1(z - model.data_term.grad(z) / L, model.lam / L)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = x_new + (t - 1.0) / t_new * (x_new - x)
        step = np.max(np.abs(x_new - x))
        x, t = x_new, t_new
        if step <= tol * (1.0 + np.max(np.abs(x))):
            break
    return x
