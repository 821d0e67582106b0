"""Experiment presets: build the model, run every sampler job, write reports."""
from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .. import __version__
from ..diagnostics import (
    ks_statistic,
    linear_fit_r2,
    loglog_slope,
    moments_and_quantiles,
    multichain_ess,
    quadrature_expectation_1d,
)
from ..linops import ComposedOperator, ConvolutionOperator, DenseOperator, HaarOperator, gaussian_kernel, identity
from ..model import DataTerm, TargetModel
from ..rng_dist import RngStream
from ..samplers import (
    MYULA,
    GibbsSampler,
    HadamardMALA,
    HadamardULA,
    SamplerState,
    StepConfig,
    hadamard_step,
    lasso_map,
    lift,
    myula_recipe,
    run_chain,
)
from .config import ExperimentConfig, SamplerConfig
from .signals import jump_locations, synthesize_signal

log = logging.getLogger(__name__)

OUTPUT_ENV = "L1SAMPLING_OUT"
# top quantile-gap pixels count as "at a jump" within this many samples
JUMP_TOLERANCE = 8


@dataclass
class Problem:
    model: TargetModel
    x0: np.ndarray | None = None
    # maps a coefficient vector to the domain where results are reported
    to_signal: object = None
    meta: dict = field(default_factory=dict)


def build_problem(cfg: ExperimentConfig, data: str | None = None) -> Problem:
    """Model, ground truth and reporting map; deterministic under ``cfg.seed``."""
    mc = cfg.model
    data = mc.data if data is None else data
    rng = RngStream(cfg.seed, 0)
    d = mc.dim
    x0 = None
    if mc.signal != "none":
        x0 = synthesize_signal(mc.signal, d, rng, mc.signal_param)
    to_signal = None
    if mc.operator == "scalar":
        A = DenseOperator(np.array([[mc.a]]))
    elif mc.operator == "identity":
        A = identity(d)
    elif mc.operator == "gaussian":
        A = DenseOperator(rng.generator.normal(0.0, np.sqrt(1.0 / (16.0 * mc.rows)), size=(mc.rows, d)))
    else:
        blur = ConvolutionOperator(gaussian_kernel(mc.kernel_sigma), d)
        synth = HaarOperator(d, synthesis=True)
        A = ComposedOperator(blur, synth)
        to_signal = synth.apply
    meta: dict = {}
    if data == "zero":
        term = DataTerm.zero(d)
    else:
        if mc.y is not None:
            y = np.asarray(mc.y, dtype=float)
        else:
            # ground truth lives in the signal domain for the wavelet problem
            y = (A.outer.apply(x0) if mc.operator == "conv_haar" else A.apply(x0))
            y = y + mc.noise_std * rng.standard_normal(y.shape)
        if mc.operator == "conv_haar":
            # W is orthonormal, so ||A|| is the peak of the blur's frequency response
            kernel = A.outer.kernel
            padded = np.zeros(d)
            padded[: kernel.size] = kernel
            L = float(np.max(np.abs(np.fft.fft(padded)))) ** 2
            term = DataTerm("quadratic", d, A, y, lipschitz_L=L)
        else:
            term = DataTerm.quadratic(A, y)
        meta["y"] = term.y.tolist()
    lam = mc.lam
    if mc.lambda_rule == "half_max_Aty":
        lam = 0.5 * float(np.max(np.abs(term.A.adjoint(term.y))))
    if x0 is not None:
        meta["x0"] = x0.tolist()
        meta["support" if mc.signal == "k_sparse" else "jumps"] = (
            np.flatnonzero(x0).tolist() if mc.signal == "k_sparse" else jump_locations(x0).tolist()
        )
    return Problem(TargetModel(lam, mc.beta, term), x0, to_signal, meta)


def resolve_step(sc: SamplerConfig, model: TargetModel, dt: float | None = None) -> StepConfig | None:
    """Turn symbolic step settings ("recipe", "dt") into a concrete :class:`StepConfig`."""
    if sc.name == "gibbs":
        return None
    step = sc.dt if dt is None else dt
    if sc.name != "myula":
        return StepConfig(float(step))
    if "recipe" in (step, sc.gamma):
        if not model.data_term.lipschitz_L > 0:
            raise ValueError("the MYULA recipe needs a data term with positive Lipschitz constant")
        rec = myula_recipe(model.data_term.lipschitz_L)
    step = rec.dt if step == "recipe" else float(step)
    if sc.gamma == "recipe":
        gamma = rec.moreau_gamma
    elif sc.gamma == "dt":
        gamma = step
    else:
        gamma = float(sc.gamma)
    return StepConfig(step, moreau_gamma=gamma)


def make_sampler(sc: SamplerConfig, model: TargetModel, step: StepConfig | None):
    if sc.name == "hadamard":
        return HadamardULA(model, step)
    if sc.name == "hadamard_mala":
        return HadamardMALA(model, step)
    if sc.name == "myula":
        return MYULA(model, step)
    return GibbsSampler(model)


def _initial_state(sampler, sc: SamplerConfig, model: TargetModel, batch: tuple):
    if sc.init == "default":
        return sampler.initial_state(batch)
    x = np.broadcast_to(lasso_map(model), batch + (model.dim,)).copy()
    if sampler.has_u:
        return lift(x)
    if sc.name == "gibbs":
        st = sampler.initial_state(batch)
        st.x = x
        return st
    return x


def _step_dict(step: StepConfig | None) -> dict:
    if step is None:
        return {}
    out = {"dt": step.dt}
    if step.moreau_gamma is not None:
        out["gamma"] = step.moreau_gamma
    return out


# ---------------------------------------------------------------- job bodies


def _job_chain(cfg: ExperimentConfig, job: dict) -> dict:
    prob = build_problem(cfg)
    model = prob.model
    sc = cfg.sampler(job["sampler"])
    step = resolve_step(sc, model, job.get("dt"))
    sampler = make_sampler(sc, model, step)
    run = cfg.run
    n_burn = sc.n_burn if sc.n_burn is not None else run.n_burn
    n_samples = sc.n_samples if sc.n_samples is not None else run.n_samples
    thin = sc.thin if sc.thin is not None else run.thin
    if step is not None and run.burn_time is not None:
        n_burn = int(round(run.burn_time / step.dt))
    if step is not None and run.thin_time is not None:
        thin = max(1, int(round(run.thin_time / step.dt)))
    n_chains = run.n_chains
    batch = () if n_chains == 1 else (n_chains,)
    init = _initial_state(sampler, sc, model, batch)
    rng = RngStream(cfg.seed, job["stream"])

    observe = None
    transform = None
    if cfg.preset == "null_g0" and sampler.has_u:
        observe = lambda st: np.stack([st.u * st.v, st.u, st.v])  # noqa: E731
    elif cfg.preset == "mixing_1d":
        transform = lambda x: np.mean(x[..., 0] ** 2)  # noqa: E731
    elif cfg.preset == "rate_1d":
        transform = lambda x: x[..., 0] ** 2  # noqa: E731
    elif prob.to_signal is not None:
        transform = prob.to_signal

    rec = run_chain(sampler, init, n_burn, n_samples, thin, rng, transform=transform, observe=observe)
    out = {
        "sampler": sc.name,
        **_step_dict(step),
        "n_burn": n_burn,
        "n_samples": n_samples,
        "thin": thin,
        "n_chains": n_chains,
        "init": sc.init,
        "min_u_seen": rec.min_u_seen,
        "acceptance_rate": rec.acceptance_rate,
        "wall_time": rec.wall_time,
    }
    s = rec.samples
    if cfg.preset == "mixing_1d":
        out["_trace"] = s
        return out
    if cfg.preset == "rate_1d":
        x2 = s if s.ndim == 2 else s[:, None]
        est = float(x2.mean())
        ess = multichain_ess(x2)
        out.update(estimate=est, ess=ess, stderr=float(np.sqrt(x2.var(ddof=1) / ess)))
        return out
    if observe is not None:
        x, u, v = s[:, 0], s[:, 1], s[:, 2]
        bl = model.beta * model.lam
        out["ks"] = {
            "x_vs_laplace": [ks_statistic(x[..., j], stats.laplace(scale=1 / bl).cdf) for j in range(model.dim)],
            "u_vs_rayleigh": [ks_statistic(u[..., j], stats.rayleigh(scale=bl**-0.5).cdf) for j in range(model.dim)],
            "v_vs_normal": [ks_statistic(v[..., j], stats.norm(scale=bl**-0.5).cdf) for j in range(model.dim)],
        }
        s = x
    summ = moments_and_quantiles(s)
    out["summary"] = summ.to_dict()
    out["min_ess"] = float(np.min(summ.ess))
    if cfg.output.write_samples:
        out["_samples"] = s.reshape(s.shape[0], -1, s.shape[-1])
    return out


def _job_strong(cfg: ExperimentConfig, job: dict) -> dict:
    """Mean over paths of the sup-in-time error against a ``refine``-times finer path.

    Both paths see the same Brownian increments: each coarse normal is the
    scaled sum of the ``refine`` fine normals inside its step.
    """
    prob = build_problem(cfg, data=job["data_term"])
    model = prob.model
    sw = cfg.sweep
    dt = job["dt"]
    M, R = sw.n_paths, sw.refine
    n = int(round(sw.horizon / dt))
    rng = RngStream(cfg.seed, job["stream"])
    coarse, fine = StepConfig(dt), StepConfig(dt / R)
    d = model.dim
    sc = SamplerState(np.ones((M, d)), np.zeros((M, d)))
    sf = sc
    sup = np.zeros(M)
    min_u = 1.0
    t0 = time.perf_counter()
    for _ in range(n):
        acc = np.zeros((2, M, d))
        for _ in range(R):
            xi = rng.standard_normal((2, M, d))
            sf = hadamard_step(sf, model, fine, None, noise=(xi[0], xi[1]))
            acc += xi
        acc /= np.sqrt(R)
        sc = hadamard_step(sc, model, coarse, None, noise=(acc[0], acc[1]))
        err = np.sqrt(np.sum((sc.u - sf.u) ** 2 + (sc.v - sf.v) ** 2, axis=-1))
        np.maximum(sup, err, out=sup)
        min_u = min(min_u, float(sc.u.min()), float(sf.u.min()))
    return {
        "sampler": "hadamard",
        "data_term": job["data_term"],
        "dt": dt,
        "n_paths": M,
        "refine": R,
        "sup_error": float(sup.mean()),
        "stderr": float(sup.std(ddof=1) / np.sqrt(M)),
        "min_u_seen": min_u,
        "acceptance_rate": None,
        "wall_time": time.perf_counter() - t0,
    }


def _run_job(args) -> dict:
    cfg, job = args
    body = _job_strong if cfg.preset == "strong_rate" else _job_chain
    try:
        res = body(cfg, job)
        res["status"] = "ok"
    except Exception as exc:  # a failed job is reported, the others still run
        log.exception("job %s failed", job)
        res = {k: v for k, v in job.items() if k != "stream"}
        res.update(status="failed", error=f"{type(exc).__name__}: {exc}", wall_time=0.0)
    res["job_id"] = job["stream"]
    return res


def plan_jobs(cfg: ExperimentConfig) -> list[dict]:
    """Job list in deterministic order; each job gets its own RNG stream id."""
    jobs = []
    if cfg.preset == "rate_1d":
        for sc in cfg.samplers:
            for dt in cfg.sweep.dt_grid:
                jobs.append({"sampler": sc.name, "dt": dt})
    elif cfg.preset == "strong_rate":
        for term in cfg.sweep.data_terms:
            for dt in cfg.sweep.dt_grid:
                jobs.append({"data_term": term, "dt": dt})
    else:
        jobs = [{"sampler": sc.name} for sc in cfg.samplers]
    for i, j in enumerate(jobs):
        j["stream"] = i + 1
    return jobs


# ---------------------------------------------------------------- reporting


@dataclass
class Report:
    out_dir: Path
    summary: dict
    files: list[Path]
    n_failed: int


def strip_wall_time(obj):
    """Copy of a summary with every ``wall_time`` entry removed."""
    if isinstance(obj, dict):
        return {k: strip_wall_time(v) for k, v in obj.items() if k != "wall_time"}
    if isinstance(obj, list):
        return [strip_wall_time(v) for v in obj]
    return obj


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: list[str], rows, cfg: ExperimentConfig) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# config_hash={cfg.config_hash()} version={__version__} preset={cfg.preset}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _mixing_analysis(trace: np.ndarray, tail: int) -> dict:
    long_run = float(np.mean(trace[-tail:]))
    floor = float(np.std(trace[-tail:], ddof=1))
    err = np.abs(trace - long_run)
    below = np.flatnonzero(err < 3.0 * floor)
    end = int(below[0]) if below.size else trace.size
    it = np.arange(1, trace.size + 1)
    fit = {"slope": None, "intercept": None, "r2": None}
    if end >= 3:
        slope, icpt, r2 = linear_fit_r2(it[:end], np.log(err[:end]))
        fit = {"slope": slope, "intercept": icpt, "r2": r2}
    return {"long_run": long_run, "noise_floor_sd": floor, "window_end": end, "fit": fit, "error": err}


def _jump_hits(gap: np.ndarray, jumps: np.ndarray, top: int = 10) -> int:
    idx = np.argsort(gap, kind="stable")[::-1][:top]
    edges = np.concatenate([jumps, jumps - 1])
    if edges.size == 0:
        return 0
    return int(sum(np.min(np.abs(edges - i)) <= JUMP_TOLERANCE for i in idx))


def resolve_out_dir(cfg: ExperimentConfig, out_dir=None) -> Path:
    """Command-line value, then the environment variable, then the config."""
    if out_dir is not None:
        return Path(out_dir)
    env = os.environ.get(OUTPUT_ENV)
    return Path(env) if env else Path(cfg.output.dir)


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers: int | None = None) -> Report:
    """Run every job of ``cfg`` and write ``summary.json`` plus preset CSVs."""
    out = resolve_out_dir(cfg, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = cfg.workers if workers is None else workers
    jobs = plan_jobs(cfg)
    t0 = time.perf_counter()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, [(cfg, j) for j in jobs]))
    else:
        results = [_run_job((cfg, j)) for j in jobs]
    results.sort(key=lambda r: r["job_id"])

    prob = build_problem(cfg)
    summary: dict = {
        "version": __version__,
        "config_hash": cfg.config_hash(),
        "preset": cfg.preset,
        "config": cfg.to_dict(),
        "model": {**prob.model.describe(), **prob.meta},
        "wall_time": None,
    }
    files: list[Path] = []
    ok = [r for r in results if r["status"] == "ok"]
    derived: dict = {}

    if cfg.preset == "rate_1d" and ok:
        phi = lambda t: t * t  # noqa: E731
        ref_a = quadrature_expectation_1d(phi, prob.model, rule="adaptive")
        ref_g = quadrature_expectation_1d(phi, prob.model, rule="gauss_legendre")
        derived["oracle"] = {"adaptive": ref_a, "gauss_legendre": ref_g, "abs_diff": abs(ref_a - ref_g)}
        rows = []
        slopes = {}
        for sc in cfg.samplers:
            rs = [r for r in ok if r["sampler"] == sc.name]
            for r in rs:
                r["abs_error"] = abs(r["estimate"] - ref_a)
                rows.append([sc.name, r["dt"], r["estimate"], r["abs_error"], r["stderr"]])
            if len(rs) >= 2:
                slopes[sc.name] = loglog_slope([r["dt"] for r in rs], [r["abs_error"] for r in rs])
        derived["loglog_slope"] = slopes
        files.append(write_csv(out / "rate_1d.csv", ["sampler", "dt", "estimate", "abs_error", "stderr"], rows, cfg))

    if cfg.preset == "mixing_1d":
        for r in ok:
            trace = r.pop("_trace")
            an = _mixing_analysis(trace, cfg.mixing_tail)
            err = an.pop("error")
            r["mixing"] = an
            rows = [[k + 1, float(trace[k]), float(err[k])] for k in range(trace.size)]
            files.append(
                write_csv(out / f"mixing_1d_{r['sampler']}.csv", ["iteration", "mean_x2", "error"], rows, cfg)
            )

    if cfg.preset == "strong_rate" and ok:
        rows = []
        slopes = {}
        for term in cfg.sweep.data_terms:
            rs = [r for r in ok if r["data_term"] == term]
            rows += [[term, r["dt"], r["sup_error"], r["stderr"]] for r in rs]
            if len(rs) >= 2:
                slopes[term] = loglog_slope([r["dt"] for r in rs], [r["sup_error"] for r in rs])
        derived["loglog_slope"] = slopes
        files.append(write_csv(out / "strong_rate.csv", ["data_term", "dt", "sup_error", "stderr"], rows, cfg))

    if cfg.preset == "dim20" and ok:
        names = [r["sampler"] for r in ok]
        ess = [r["summary"]["ess"] for r in ok]
        rows = [[j] + [e[j] for e in ess] for j in range(cfg.model.dim)]
        derived["min_ess"] = {r["sampler"]: r["min_ess"] for r in ok}
        files.append(write_csv(out / "dim20_ess.csv", ["dim"] + [f"ess_{n}" for n in names], rows, cfg))

    if cfg.preset == "haar_deconv" and ok:
        jumps = jump_locations(prob.x0)
        cols, header = [prob.x0], ["index", "x0"]
        hits = {}
        for r in ok:
            s = r["summary"]
            gap = np.asarray(s["q95"]) - np.asarray(s["q05"])
            hits[r["sampler"]] = _jump_hits(gap, jumps)
            cols += [np.asarray(s["mean"]), gap]
            header += [f"mean_{r['sampler']}", f"gap_{r['sampler']}"]
        derived["top10_gap_hits"] = hits
        derived["jump_tolerance"] = JUMP_TOLERANCE
        rows = [[i] + [float(c[i]) for c in cols] for i in range(cfg.model.dim)]
        files.append(write_csv(out / "haar_deconv.csv", header, rows, cfg))

    for r in ok:
        smp = r.pop("_samples", None)
        if smp is None:
            continue
        n, c, d = smp.shape
        rows = []
        for ch in range(c):
            for k in range(n):
                if len(rows) >= cfg.output.max_rows:
                    break
                rows.append([ch, k] + smp[k, ch].tolist())
        files.append(
            write_csv(out / f"samples_{r['sampler']}.csv", ["chain", "draw"] + [f"x{j}" for j in range(d)], rows, cfg)
        )

    summary["jobs"] = results
    summary["results"] = derived
    summary["n_failed"] = len(results) - len(ok)
    summary["wall_time"] = time.perf_counter() - t0
    path = out / "summary.json"
    path.write_text(json.dumps(summary, sort_keys=True, indent=1, default=_json_default) + "\n", encoding="utf-8")
    files.insert(0, path)
    return Report(out, json.loads(path.read_text(encoding="utf-8")), files, summary["n_failed"])


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")
