"""Linear operators acting on the last axis of an array.

Every operator maps arrays of shape ``(..., cols)`` to ``(..., rows)`` so a
batch of chains can be pushed through in one call.
"""
from __future__ import annotations

import warnings

import numpy as np


class DimensionError(ValueError):
    pass


class ConvergenceWarning(UserWarning):
    pass


def _check_last(x: np.ndarray, n: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != n:
        raise DimensionError(f"{what}: expected last axis of length {n}, got shape {x.shape}")
    return x


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


class LinearOperator:
    """Base class. Subclasses implement ``_apply`` and ``_adjoint``."""

    rows: int
    cols: int

    def apply(self, x):
        return self._apply(_check_last(x, self.cols, type(self).__name__ + ".apply"))

    def adjoint(self, w):
        return self._adjoint(_check_last(w, self.rows, type(self).__name__ + ".adjoint"))

    def to_dense(self) -> np.ndarray:
        """Materialize the operator as a ``rows x cols`` matrix (testing aid)."""
        return self.apply(np.eye(self.cols)).T

    def describe(self) -> dict:
        return {"variant": type(self).__name__, "rows": self.rows, "cols": self.cols}

    def __matmul__(self, other: "LinearOperator") -> "ComposedOperator":
        return ComposedOperator(self, other)


class DenseOperator(LinearOperator):
    def __init__(self, matrix):
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        if m.ndim != 2:
            raise DimensionError("dense operator needs a 2-D matrix")
        self.matrix = m
        self.rows, self.cols = m.shape

    def _apply(self, x):
        return x @ self.matrix.T

    def _adjoint(self, w):
        return w @ self.matrix

    def to_dense(self):
        return self.matrix.copy()

    def describe(self):
        d = super().describe()
        d["frobenius_norm"] = float(np.linalg.norm(self.matrix))
        return d


def identity(n: int) -> DenseOperator:
    return DenseOperator(np.eye(n))


def haar_forward(x, levels: int | None = None) -> np.ndarray:
    """Orthonormal multi-level Haar analysis along the last axis.

    Output layout is ``[approx, detail_coarsest, ..., detail_finest]``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if not _is_power_of_two(n):
        raise DimensionError(f"Haar transform needs a power-of-two length, got {n}")
    full = int(np.log2(n))
    levels = full if levels is None else levels
    if not 0 <= levels <= full:
        raise ValueError(f"levels must lie in [0, {full}]")
    out = x.copy()
    m = n
    s = np.sqrt(0.5)
    for _ in range(levels):
        even = out[..., 0:m:2].copy()
        odd = out[..., 1:m:2].copy()
        out[..., m // 2 : m] = (even - odd) * s
        out[..., : m // 2] = (even + odd) * s
        m //= 2
    return out


def haar_inverse(c, levels: int | None = None) -> np.ndarray:
    """Inverse of :func:`haar_forward` (equal to its transpose)."""
    c = np.asarray(c, dtype=float)
    n = c.shape[-1]
    if not _is_power_of_two(n):
        raise DimensionError(f"Haar transform needs a power-of-two length, got {n}")
    full = int(np.log2(n))
    levels = full if levels is None else levels
    if not 0 <= levels <= full:
        raise ValueError(f"levels must lie in [0, {full}]")
    out = c.copy()
    m = n >> levels
    s = np.sqrt(0.5)
    for _ in range(levels):
        a = out[..., :m].copy()
        d = out[..., m : 2 * m].copy()
        out[..., 0 : 2 * m : 2] = (a + d) * s
        out[..., 1 : 2 * m : 2] = (a - d) * s
        m *= 2
    return out


class HaarOperator(LinearOperator):
    """Haar analysis ``W`` or, with ``synthesis=True``, its inverse ``W^T``."""

    def __init__(self, length: int, levels: int | None = None, synthesis: bool = False):
        if not _is_power_of_two(length):
            raise DimensionError(f"Haar transform needs a power-of-two length, got {length}")
        self.length = length
        self.levels = int(np.log2(length)) if levels is None else levels
        self.synthesis = synthesis
        self.rows = self.cols = length

    def _apply(self, x):
        if self.synthesis:
            return haar_inverse(x, self.levels)
        return haar_forward(x, self.levels)

    def _adjoint(self, w):
        if self.synthesis:
            return haar_forward(w, self.levels)
        return haar_inverse(w, self.levels)

    def describe(self):
        d = super().describe()
        d.update(levels=self.levels, synthesis=self.synthesis)
        return d


def _kernel_offsets(k: int) -> np.ndarray:
    # tap j sits at circular offset j - (k - 1) // 2
    return np.arange(k) - (k - 1) // 2


def circular_convolve(kernel, x) -> np.ndarray:
    """Circular convolution along the last axis, kernel centred at index 0.

    Tap ``j`` of a length-``k`` kernel acts at offset ``j - (k - 1) // 2``,
    so ``(K x)_i = sum_j kernel_j * x_{(i - offset_j) mod n}``. Odd symmetric
    kernels therefore give a zero-phase (symmetric) operator.
    """
    kernel = np.asarray(kernel, dtype=float).ravel()
    x = np.asarray(x, dtype=float)
    if kernel.size == 0:
        raise ValueError("empty convolution kernel")
    if kernel.size > x.shape[-1]:
        raise DimensionError("kernel longer than signal")
    out = np.zeros_like(x)
    for kj, off in zip(kernel, _kernel_offsets(kernel.size)):
        if kj != 0.0:
            out += kj * np.roll(x, off, axis=-1)
    return out


def circular_correlate(kernel, w) -> np.ndarray:
    """Adjoint of :func:`circular_convolve` for the same kernel."""
    kernel = np.asarray(kernel, dtype=float).ravel()
    w = np.asarray(w, dtype=float)
    if kernel.size == 0:
        raise ValueError("empty convolution kernel")
    out = np.zeros_like(w)
    for kj, off in zip(kernel, _kernel_offsets(kernel.size)):
        if kj != 0.0:
            out += kj * np.roll(w, -off, axis=-1)
    return out


def gaussian_kernel(sigma: float, truncate: float = 4.0) -> np.ndarray:
    """Discrete Gaussian, odd length ``2*ceil(truncate*sigma)+1``, sums to one."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    r = int(np.ceil(truncate * sigma))
    t = np.arange(-r, r + 1)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


class ConvolutionOperator(LinearOperator):
    def __init__(self, kernel, length: int):
        kernel = np.asarray(kernel, dtype=float).ravel()
        if kernel.size == 0:
            raise ValueError("empty convolution kernel")
        if kernel.size > length:
            raise DimensionError("kernel longer than signal")
        self.kernel = kernel
        self.length = length
        self.rows = self.cols = length

    def _apply(self, x):
        return circular_convolve(self.kernel, x)

    def _adjoint(self, w):
        return circular_correlate(self.kernel, w)

    def describe(self):
        d = super().describe()
        d.update(kernel=self.kernel.tolist(), alignment="centre tap at offset 0")
        return d


class MaskOperator(LinearOperator):
    """Keeps the entries listed in ``keep`` (in increasing order)."""

    def __init__(self, keep, length: int):
        keep = np.unique(np.asarray(keep, dtype=int))
        if keep.size and (keep[0] < 0 or keep[-1] >= length):
            raise DimensionError("mask index out of range")
        self.keep = keep
        self.length = length
        self.rows = keep.size
        self.cols = length

    def _apply(self, x):
        return x[..., self.keep]

    def _adjoint(self, w):
        out = np.zeros(w.shape[:-1] + (self.length,))
        out[..., self.keep] = w
        return out

    def describe(self):
        d = super().describe()
        d["kept"] = int(self.keep.size)
        return d


class ComposedOperator(LinearOperator):
    """``outer @ inner``: applies ``inner`` first."""

    def __init__(self, outer: LinearOperator, inner: LinearOperator):
        if outer.cols != inner.rows:
            raise DimensionError(
                f"cannot compose {outer.rows}x{outer.cols} with {inner.rows}x{inner.cols}"
            )
        self.outer = outer
        self.inner = inner
        self.rows = outer.rows
        self.cols = inner.cols

    def _apply(self, x):
        return self.outer.apply(self.inner.apply(x))

    def _adjoint(self, w):
        return self.inner.adjoint(self.outer.adjoint(w))

    def describe(self):
        d = super().describe()
        d.update(outer=self.outer.describe(), inner=self.inner.describe())
        return d


def apply(op: LinearOperator, x) -> np.ndarray:
    return op.apply(x)


def apply_adjoint(op: LinearOperator, w) -> np.ndarray:
    return op.adjoint(w)


def operator_norm_estimate(
    op: LinearOperator,
    tol: float = 1e-10,
    max_iters: int = 5000,
    rng: np.random.Generator | None = None,
) -> float:
    """Spectral norm ``||A||`` by power iteration on ``A^T A``.

    Stops when successive Rayleigh quotients agree to relative ``tol``.
    If that never happens a :class:`ConvergenceWarning` is issued and the
    last iterate is returned.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    x = rng.standard_normal(op.cols)
    x /= np.linalg.norm(x)
    sq = 0.0
    for _ in range(max_iters):
        z = op.adjoint(op.apply(x))
        new_sq = float(x @ z)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        x = z / nz
        if abs(new_sq - sq) <= tol * abs(new_sq):
            return float(np.sqrt(new_sq))
        sq = new_sq
    warnings.warn(
        f"power iteration did not reach tol={tol} in {max_iters} iterations",
        ConvergenceWarning,
        stacklevel=2,
    )
    return float(np.sqrt(sq))
