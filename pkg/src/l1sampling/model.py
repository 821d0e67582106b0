"""Target densities for l1-regularized posteriors and their Hadamard lift.

All densities are unnormalized log densities. ``x`` has shape ``(..., d)``;
leading axes index independent chains.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .linops import DenseOperator, DimensionError, LinearOperator, operator_norm_estimate


class DomainError(ValueError):
    """Raised when a point lies outside the support of a density."""


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-13
    rel_tol: float = 1e-10
    # None: chosen per integrand so the neglected tail is below 1e-14 of the bulk
    domain_halfwidth: float | None = None

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.domain_halfwidth is not None and self.domain_halfwidth <= 0:
            raise ValueError("domain_halfwidth must be positive")


@dataclass
class DataTerm:
    """``G(x) = ||Ax - y||^2 / 2`` (``kind='quadratic'``) or ``G = 0``."""

    kind: str
    dim: int
    A: LinearOperator | None = None
    y: np.ndarray | None = None
    lipschitz_L: float = 0.0
    grad_bound_B: float | None = None

    def __post_init__(self):
        if self.kind == "zero":
            self.A = None
            self.y = None
            self.lipschitz_L = 0.0
            return
        if self.kind != "quadratic":
            raise ValueError(f"unknown data term kind {self.kind!r}")
        if self.A is None or self.y is None:
            raise ValueError("quadratic data term needs A and y")
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.A.cols != self.dim:
            raise DimensionError(f"A has {self.A.cols} columns but the state has dimension {self.dim}")
        if self.y.size != self.A.rows:
            raise DimensionError(f"y has length {self.y.size} but A has {self.A.rows} rows")
        if not self.lipschitz_L:
            self.lipschitz_L = operator_norm_estimate(self.A) ** 2

    @classmethod
    def zero(cls, dim: int) -> "DataTerm":
        return cls("zero", dim)

    @classmethod
    def quadratic(cls, A, y) -> "DataTerm":
        if not isinstance(A, LinearOperator):
            A = DenseOperator(A)
        return cls("quadratic", A.cols, A, y)

    def value(self, x):
        if self.kind == "zero":
            return np.zeros(np.shape(x)[:-1])
        r = self.A.apply(x) - self.y
        return 0.5 * np.sum(r * r, axis=-1)

    def grad(self, x):
        if self.kind == "zero":
            return np.zeros_like(x)
        return self.A.adjoint(self.A.apply(x) - self.y)

    @property
    def lower_bound_K(self) -> float:
        """Constant ``K`` with ``x^T grad G(x) >= -K`` for every ``x``.

        For the quadratic term ``x^T A^T(Ax - y) >= min_z (|z|^2 - z^T y) = -|y|^2/4``.
        """
        if self.kind == "zero":
            return 0.0
        return float(self.y @ self.y) / 4.0

    def describe(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim, "lipschitz_L": self.lipschitz_L}
        if self.kind == "quadratic":
            out["operator"] = self.A.describe()
            out["y_norm"] = float(np.linalg.norm(self.y))
        if self.grad_bound_B is not None:
            out["grad_bound_B"] = self.grad_bound_B
        return out


@dataclass
class TargetModel:
    """Posterior ``rho(x) ∝ exp(-beta (lam |x|_1 + G(x)))``."""

    lam: float
    beta: float
    data_term: DataTerm

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    @property
    def dim(self) -> int:
        return self.data_term.dim

    def describe(self) -> dict:
        return {"lambda": self.lam, "beta": self.beta, "data_term": self.data_term.describe()}


@dataclass(frozen=True)
class GroupStructure:
    """Partition of ``{0..d-1}`` into ``K`` blocks, stored as a label per coordinate."""

    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int).ravel()
        if labels.size == 0:
            raise ValueError("empty group structure")
        k = labels.max() + 1
        if labels.min() < 0 or np.unique(labels).size != k:
            raise ValueError("group labels must be 0..K-1 with every block nonempty")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_blocks(cls, blocks, d: int) -> "GroupStructure":
        labels = np.full(d, -1)
        for j, b in enumerate(blocks):
            b = np.asarray(b, dtype=int)
            if b.size == 0:
                raise ValueError(f"block {j} is empty")
            if np.any((b < 0) | (b >= d)):
                raise ValueError(f"block {j} has indices outside [0, {d})")
            if np.any(labels[b] >= 0):
                raise ValueError("blocks overlap")
            labels[b] = j
        if np.any(labels < 0):
            raise ValueError("blocks do not cover every coordinate")
        return cls(labels)

    @classmethod
    def singletons(cls, d: int) -> "GroupStructure":
        return cls(np.arange(d))

    @property
    def n_groups(self) -> int:
        return int(self.labels.max()) + 1

    @property
    def dim(self) -> int:
        return self.labels.size

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels)

    def blocks(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == j) for j in range(self.n_groups)]

    def group_sum(self, z):
        """Sum ``z`` (shape ``(..., d)``) within each block -> ``(..., K)``."""
        z = np.asarray(z, dtype=float)
        flat = z.reshape(-1, z.shape[-1])
        out = np.zeros((flat.shape[0], self.n_groups))
        np.add.at(out.T, self.labels, flat.T)
        return out.reshape(z.shape[:-1] + (self.n_groups,))

    def group_norms(self, x):
        return np.sqrt(self.group_sum(np.square(x)))


def _check_dim(x, model: TargetModel) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != model.dim:
        raise DimensionError(f"expected dimension {model.dim}, got shape {x.shape}")
    return x


def rho_log_unnormalized(x, model: TargetModel):
    """``-beta (lam |x|_1 + G(x))``."""
    x = _check_dim(x, model)
    return -model.beta * (model.lam * np.sum(np.abs(x), axis=-1) + model.data_term.value(x))


def pi_log_unnormalized(u, v, model: TargetModel):
    """``sum log u - beta (lam (|u|^2 + |v|^2) / 2 + G(u*v))`` on ``u > 0``."""
    u = _check_dim(u, model)
    v = _check_dim(v, model)
    if np.any(u <= 0):
        raise DomainError("pi is supported on u > 0")
    sq = np.sum(u * u, axis=-1) + np.sum(v * v, axis=-1)
    return np.sum(np.log(u), axis=-1) - model.beta * (0.5 * model.lam * sq + model.data_term.value(u * v))


def grad_G(x, model: TargetModel):
    return model.data_term.grad(_check_dim(x, model))


def laplace_mixture_residual(z: float, a: float, quad: QuadratureConfig | None = None) -> float:
    """``|a/sqrt(2 pi) ∫ eta^{-1/2} exp(-z^2/(2 eta) - a^2 eta/2) d eta - exp(-a|z|)|``.

    Integrated in ``s = sqrt(eta)`` where the integrand is smooth:
    ``2 a / sqrt(2 pi) ∫_0^smax exp(-z^2/(2 s^2) - a^2 s^2 / 2) ds``.
    """
    quad = QuadratureConfig() if quad is None else quad
    if not a > 0:
        raise ValueError("a must be positive")
    # exp(-a^2 s^2/2) < 1e-16 beyond smax
    smax = np.sqrt(2.0 * 37.0) / a + np.sqrt(abs(z) / a)
    if quad.domain_halfwidth is not None:
        smax = quad.domain_halfwidth
    z2 = z * z

    def f(s):
        if s == 0.0:
            return 0.0 if z2 > 0 else 1.0
        return np.exp(-z2 / (2 * s * s) - 0.5 * a * a * s * s)

    # integrand peaks at s* = sqrt(|z|/a); hand that point to the adaptive rule
    peak = np.sqrt(abs(z) / a)
    pts = [peak] if 0 < peak < smax else None
    val, err = integrate.quad(
        f, 0.0, smax, epsabs=quad.abs_tol, epsrel=quad.rel_tol, limit=500, points=pts, full_output=False
    )[:2]
    if not np.isfinite(val) or err > max(quad.abs_tol, quad.rel_tol * abs(val)) * 1e3:
        raise ArithmeticError(f"quadrature did not converge (error estimate {err:g})")
    total = 2.0 * a / np.sqrt(2.0 * np.pi) * val
    return float(abs(total - np.exp(-a * abs(z))))
