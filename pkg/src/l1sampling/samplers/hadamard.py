"""Implicit-explicit discretization of the lifted Langevin dynamics.

The drift is explicit in the data term and the noise, implicit in the
``lam`` contraction and in the ``1/(beta u)`` repulsion from ``u = 0``; the
implicit part reduces to one scalar quadratic per coordinate.
"""
from __future__ import annotations

import numpy as np

from ..model import GroupStructure, TargetModel, pi_log_unnormalized
from ..rng_dist import RngStream
from .state import SamplerState, StepConfig, StepError

_TINY = 1e-300


def positive_root(w, q, c, m=1):
    """Positive root of ``c t^2 - w t - m q = 0`` (``q, c > 0``).

    For ``w < 0`` the conjugate form ``2 m q / (sqrt(w^2 + 4 m q c) - w)`` avoids
    cancellation, so the result stays strictly positive in floating point.
    """
    disc = np.sqrt(w * w + 4.0 * m * q * c)
    neg = w < 0
    safe_pos = np.where(neg, 0.0, w)
    safe_neg = np.where(neg, w, 0.0)
    return np.where(neg, 2.0 * m * q / (disc - safe_neg), (safe_pos + disc) / (2.0 * c))


def _data_grad(model: TargetModel, x):
    if model.data_term.kind == "zero":
        return None
    # overflow is reported below as a StepError, not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        g = model.data_term.grad(x)
    if not np.all(np.isfinite(g)):
        bad = np.argwhere(~np.isfinite(g))[0]
        raise StepError("non-finite data gradient", index=tuple(int(i) for i in bad))
    return g


def _draw_pair(rng: RngStream, shape_u, shape_v):
    n1 = int(np.prod(shape_u))
    z = rng.standard_normal(n1 + int(np.prod(shape_v)))
    return z[:n1].reshape(shape_u), z[n1:].reshape(shape_v)


def _check_positive(u):
    if not np.min(u) > _TINY:
        bad = np.argwhere(~(u > _TINY))[0]
        raise StepError("u left the positive half-space", index=tuple(int(i) for i in bad))


def hadamard_step(
    state: SamplerState,
    model: TargetModel,
    cfg: StepConfig,
    rng: RngStream | None,
    noise=None,
) -> SamplerState:
    """One step of the positivity-preserving scheme.

    ``noise`` optionally supplies the standard normals ``(xi_u, xi_v)``;
    otherwise they are drawn from ``rng`` (all of ``xi_u`` first).
    """
    u, v = state.u, state.v
    dt, lam, beta = cfg.dt, model.lam, model.beta
    xi_u, xi_v = _draw_pair(rng, u.shape, v.shape) if noise is None else noise
    s = np.sqrt(2.0 * dt / beta)
    with np.errstate(over="ignore"):
        x = u * v
    g = _data_grad(model, x)
    if g is None:
        w = u + s * xi_u
        vh = v + s * xi_v
    else:
        w = u - dt * v * g + s * xi_u
        vh = v - dt * u * g + s * xi_v
    c = 1.0 + dt * lam
    u_new = positive_root(w, dt / beta, c)
    _check_positive(u_new)
    return SamplerState(u_new, vh / c)


def group_hadamard_step(
    state: SamplerState,
    groups: GroupStructure,
    model: TargetModel,
    cfg: StepConfig,
    rng: RngStream | None,
    noise=None,
) -> SamplerState:
    """Group-l1 variant: one ``u_j`` shared by the block ``v_{b_j}``.

    The lifted density carries ``u_j ** |b_j|``; with that factor the block norm
    ``|x_{b_j}|`` follows the group-l1 law. The implicit ``u`` update becomes
    ``c u^2 - w u - |b_j| dt / beta = 0``.
    """
    u, v = state.u, state.v
    if u.shape[-1] != groups.n_groups or v.shape[-1] != groups.dim:
        raise ValueError(
            f"group sampler expects u with {groups.n_groups} and v with {groups.dim} entries, "
            f"got {u.shape[-1]} and {v.shape[-1]}"
        )
    if groups.dim != model.dim:
        raise ValueError("group structure and model disagree on the dimension")
    dt, lam, beta = cfg.dt, model.lam, model.beta
    xi_u, xi_v = _draw_pair(rng, u.shape, v.shape) if noise is None else noise
    s = np.sqrt(2.0 * dt / beta)
    ue = u[..., groups.labels]
    g = _data_grad(model, ue * v)
    if g is None:
        w = u + s * xi_u
        vh = v + s * xi_v
    else:
        w = u - dt * groups.group_sum(v * g) + s * xi_u
        vh = v - dt * ue * g + s * xi_v
    c = 1.0 + dt * lam
    u_new = positive_root(w, dt / beta, c, groups.sizes)
    _check_positive(u_new)
    return SamplerState(u_new, vh / c)


def group_pi_log_unnormalized(u, v, groups: GroupStructure, model: TargetModel):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(u <= 0):
        raise ValueError("u must be positive")
    sq = np.sum(u * u, axis=-1) + np.sum(v * v, axis=-1)
    x = u[..., groups.labels] * v
    return np.sum(groups.sizes * np.log(u), axis=-1) - model.beta * (
        0.5 * model.lam * sq + model.data_term.value(x)
    )


def hadamard_transition_logdensity(
    src: SamplerState, dst: SamplerState, model: TargetModel, cfg: StepConfig
):
    """Log density of one :func:`hadamard_step` from ``src`` to ``dst``.

    Exact up to the additive constant ``d log(c) - d log(4 pi dt / beta)``
    with ``c = 1 + dt lam`` (Gaussian normaliser and the Jacobian of the
    ``v`` map). The Jacobian of the implicit ``u`` map is evaluated at
    the destination ``u``, which is where the change of variables puts it.
    """
    u, v, up, vp = src.u, src.v, dst.u, dst.v
    if np.any(up <= 0) or np.any(u <= 0):
        raise ValueError("transition density needs u > 0 at both ends")
    dt, lam, beta = cfg.dt, model.lam, model.beta
    c = 1.0 + dt * lam
    g = model.data_term.grad(u * v)
    ru = c * up - dt / (beta * up) - u + dt * v * g
    rv = c * vp - v + dt * u * g
    quad = np.sum(ru * ru, axis=-1) + np.sum(rv * rv, axis=-1)
    jac = np.sum(np.log(c + dt / (beta * up * up)), axis=-1)
    return -beta / (4.0 * dt) * quad + jac


def hadamard_mala_step(
    state: SamplerState,
    model: TargetModel,
    cfg: StepConfig,
    rng: RngStream | None,
    noise=None,
    uniform=None,
):
    """Metropolis-adjusted step using the scheme as proposal.

    Returns ``(new_state, accepted)`` where ``accepted`` has the batch shape.
    """
    prop = hadamard_step(state, model, cfg, rng, noise=noise)
    log_alpha = mala_log_acceptance(state, prop, model, cfg)
    if uniform is None:
        uniform = rng.uniform(np.shape(log_alpha))
    accepted = np.log(uniform) < log_alpha
    if np.ndim(accepted) == 0:
        return (prop if accepted else state), bool(accepted)
    keep = accepted[..., None]
    return SamplerState(np.where(keep, prop.u, state.u), np.where(keep, prop.v, state.v)), accepted


def mala_log_acceptance(src: SamplerState, dst: SamplerState, model: TargetModel, cfg: StepConfig):
    """``log pi(dst) + log q(dst->src) - log pi(src) - log q(src->dst)``, capped at 0."""
    num = pi_log_unnormalized(dst.u, dst.v, model) + hadamard_transition_logdensity(dst, src, model, cfg)
    den = pi_log_unnormalized(src.u, src.v, model) + hadamard_transition_logdensity(src, dst, model, cfg)
    return np.minimum(0.0, num - den)


def lyapunov(state: SamplerState):
    """``V(u, v) = 1 + |u|^2 + |v|^2``."""
    return 1.0 + np.sum(state.u ** 2, axis=-1) + np.sum(state.v ** 2, axis=-1)


def drift_constants(model: TargetModel, dt: float, grad_bound: float) -> tuple[float, float]:
    """Contraction factor ``alpha`` and offset ``R`` with ``E[V(next)|now] <= alpha V(now) + R``.

    ``grad_bound`` bounds ``|grad G|_inf`` at the current point; ``alpha < 1``
    requires ``dt < lam / grad_bound**2``.
    """
    lam, beta, d = model.lam, model.beta, model.dim
    K = model.data_term.lower_bound_K
    c2 = (1.0 + lam * dt) ** 2
    alpha = (1.0 + dt * dt * grad_bound * grad_bound) / c2
    R = (1.0 - alpha) + 4.0 * K * dt / c2 + (4.0 * (1.0 + dt * lam) * d + 4.0 * d) / (beta * c2) * dt
    return alpha, R


def lift(x, floor: float = 1e-3) -> SamplerState:
    """A lifted point with ``u * v == x``: ``u = sqrt(|x|) + floor``, ``v = x / u``."""
    x = np.asarray(x, dtype=float)
    if not floor > 0:
        raise ValueError("floor must be positive")
    u = np.sqrt(np.abs(x)) + floor
    return SamplerState(u, x / u)
