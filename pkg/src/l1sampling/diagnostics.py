"""Chain diagnostics and the 1-D quadrature oracle used as ground truth."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .model import QuadratureConfig, TargetModel, rho_log_unnormalized

# integrand tails are cut where the log density has dropped this far below its peak
_LOG_CUTOFF = 45.0


def _log_rho_1d(model: TargetModel):
    def f(x):
        return rho_log_unnormalized(np.reshape(np.asarray(x, dtype=float), (-1, 1)), model)
    return f


def _support_1d(model: TargetModel, quad: QuadratureConfig) -> tuple[float, float, float]:
    """Interval carrying all but ~exp(-45) of the mass, plus the peak log density."""
    logf = _log_rho_1d(model)
    res = optimize.minimize_scalar(lambda t: -logf(t)[0], bracket=(-1.0, 1.0))
    mode = float(res.x)
    # the kink at 0 can beat the smooth optimizer
    peak = max(float(logf(mode)[0]), float(logf(0.0)[0]))
    if quad.domain_halfwidth is not None:
        return mode - quad.domain_halfwidth, mode + quad.domain_halfwidth, peak
    ends = []
    for sign in (-1.0, 1.0):
        step = 1.0
        while logf(mode + sign * step)[0] > peak - _LOG_CUTOFF:
            step *= 2.0
        ends.append(mode + sign * step)
    return ends[0], ends[1], peak


def _pieces(lo: float, hi: float) -> list[tuple[float, float]]:
    if lo < 0.0 < hi:
        return [(lo, 0.0), (0.0, hi)]
    return [(lo, hi)]


def _gauss_legendre(f, a: float, b: float, panels: int = 400, order: int = 24) -> float:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    vals = f(pts).reshape(panels, order)
    return float(np.sum(half * (vals @ weights)))


def quadrature_expectation_1d(
    phi, model: TargetModel, quad: QuadratureConfig | None = None, rule: str = "adaptive"
) -> float:
    """``∫ phi rho / ∫ rho`` for a one-dimensional model.

    The domain is split at the kink ``x = 0``. ``rule='adaptive'`` uses
    QUADPACK; ``rule='gauss_legendre'`` is a composite fixed-order rule kept
    as an independent cross-check.
    """
    if model.dim != 1:
        raise ValueError("quadrature oracle needs a one-dimensional model")
    quad = QuadratureConfig() if quad is None else quad
    lo, hi, peak = _support_1d(model, quad)
    logf = _log_rho_1d(model)

    def w(t):
        return np.exp(logf(t) - peak)

    def num(t):
        t = np.asarray(t, dtype=float)
        return np.asarray(phi(t), dtype=float) * w(t)

    total_n = 0.0
    total_d = 0.0
    for a, b in _pieces(lo, hi):
        if rule == "adaptive":
            kw = dict(epsabs=quad.abs_tol, epsrel=quad.rel_tol, limit=1000)
            vn, en = integrate.quad(lambda t: float(num(t)[0]), a, b, **kw)
            vd, ed = integrate.quad(lambda t: float(w(t)[0]), a, b, **kw)
            for v, e in ((vn, en), (vd, ed)):
                if not np.isfinite(v) or e > max(quad.abs_tol, quad.rel_tol * abs(v)) * 100:
                    raise ArithmeticError(f"adaptive quadrature did not converge (error {e:g})")
        elif rule == "gauss_legendre":
            vn = _gauss_legendre(num, a, b)
            vd = _gauss_legendre(w, a, b)
        else:
            raise ValueError(f"unknown quadrature rule {rule!r}")
        total_n += vn
        total_d += vd
    return total_n / total_d


def ess(samples) -> float:
    """Effective sample size with Geyer's initial monotone sequence.

    Autocorrelations come from the biased FFT autocovariance. Pairs
    ``rho_{2k} + rho_{2k+1}`` are summed up to the first nonpositive pair and
    made monotone. A zero-variance chain returns ``n``; the result is capped
    at ``n``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 10:
        raise ValueError("ESS needs at least 10 samples")
    x = x - x.mean()
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n] / n
    if not acov[0] > 0:
        return float(n)
    rho = acov / acov[0]
    m = (n - 1) // 2
    pairs = rho[0 : 2 * m : 2] + rho[1 : 2 * m + 1 : 2]
    nonpos = np.flatnonzero(pairs <= 0)
    if nonpos.size:
        pairs = pairs[: nonpos[0]]
    pairs = np.minimum.accumulate(pairs)
    tau = -1.0 + 2.0 * float(np.sum(pairs))
    if not tau > 0:
        return float(n)
    return float(min(n / tau, n))


def multichain_ess(samples) -> float:
    """Sum of per-chain ESS for ``samples`` of shape ``(n, chains)``."""
    s = np.asarray(samples, dtype=float)
    if s.ndim == 1:
        return ess(s)
    return float(sum(ess(s[:, c]) for c in range(s.shape[1])))


def ks_statistic(samples, cdf) -> float:
    """``sup_x |F_n(x) - F(x)|``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("KS statistic needs at least one sample")
    F = np.clip(np.asarray(cdf(x), dtype=float), 0.0, 1.0)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


@dataclass
class Summary:
    mean: np.ndarray
    variance: np.ndarray
    q05: np.ndarray
    q95: np.ndarray
    ess: np.ndarray
    mcse: np.ndarray

    def to_dict(self) -> dict:
        return {k: np.asarray(v).tolist() for k, v in self.__dict__.items()}


def moments_and_quantiles(samples) -> Summary:
    """Per-coordinate mean, variance, 5%/95% quantiles, ESS and MC standard error.

    ``samples`` is ``(n, d)`` or ``(n, chains, d)``. Quantiles use linear
    interpolation between order statistics (Hyndman–Fan type 7), pooled over
    chains; ESS is summed over chains.
    """
    s = np.asarray(samples, dtype=float)
    if s.size == 0:
        raise ValueError("no samples")
    if s.ndim == 1:
        s = s[:, None]
    if s.ndim == 2:
        s = s[:, None, :]
    n, c, d = s.shape
    pooled = s.reshape(n * c, d)
    mean = pooled.mean(axis=0)
    var = pooled.var(axis=0, ddof=1) if n * c > 1 else np.zeros(d)
    q05, q95 = np.quantile(pooled, [0.05, 0.95], axis=0, method="linear")
    if n >= 10:
        e = np.array([multichain_ess(s[:, :, j]) for j in range(d)])
    else:
        e = np.full(d, float(n * c))
    mcse = np.sqrt(var / e)
    return Summary(mean, var, q05, q95, e, mcse)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def linear_fit_r2(x, y) -> tuple[float, float, float]:
    """``(slope, intercept, R^2)`` of an ordinary least-squares line."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2
