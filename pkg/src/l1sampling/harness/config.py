"""Experiment configuration: flat dotted-key TOML documents and preset defaults."""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


PRESET_NAMES = ("rate_1d", "mixing_1d", "dim20", "haar_deconv", "null_g0", "strong_rate", "custom")
SAMPLER_NAMES = ("hadamard", "hadamard_mala", "myula", "gibbs")
_OPERATORS = ("scalar", "gaussian", "conv_haar", "identity")
_SIGNALS = ("none", "k_sparse", "piecewise_constant")
_INITS = ("default", "map")


@dataclass
class ModelConfig:
    lam: float = 1.0
    # "fixed" uses ``lam``; "half_max_Aty" sets lam = |A^T y|_inf / 2
    lambda_rule: str = "fixed"
    beta: float = 1.0
    data: str = "quadratic"
    operator: str = "scalar"
    dim: int = 1
    rows: int = 1
    a: float = 1.0
    y: list[float] | None = None
    signal: str = "none"
    signal_param: int = 0
    noise_std: float = 0.0
    kernel_sigma: float = 2.0


@dataclass
class SamplerConfig:
    name: str
    # float, or "recipe" (MYULA step from the Lipschitz constant)
    dt: float | str | None = None
    # float, "recipe", or "dt" (tie the Moreau parameter to the step size)
    gamma: float | str | None = None
    init: str = "default"
    n_burn: int | None = None
    n_samples: int | None = None
    thin: int | None = None


@dataclass
class RunConfig:
    # n_samples counts recorded draws per chain
    n_burn: int = 1000
    n_samples: int = 10000
    thin: int = 1
    n_chains: int = 1
    # when set, burn-in and thinning are given in model time and divided by dt
    burn_time: float | None = None
    thin_time: float | None = None


@dataclass
class SweepConfig:
    dt_grid: list[float] = field(default_factory=list)
    refine: int = 64
    horizon: float = 1.0
    n_paths: int = 1000
    data_terms: list[str] = field(default_factory=lambda: ["zero", "quadratic"])


@dataclass
class OutputConfig:
    dir: str = "results"
    write_samples: bool = False
    max_rows: int = 100000


@dataclass
class ExperimentConfig:
    preset: str
    seed: int
    model: ModelConfig
    samplers: list[SamplerConfig]
    run: RunConfig
    sweep: SweepConfig
    output: OutputConfig
    mixing_tail: int = 1000
    workers: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        """Hash of everything that can change results (output location and worker count excluded)."""
        d = self.to_dict()
        d.pop("workers")
        d["output"].pop("dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def sampler(self, name: str) -> SamplerConfig:
        for s in self.samplers:
            if s.name == name:
                return s
        raise KeyError(name)


# Flat defaults per preset. Keys match the accepted document keys.
_COMMON = {
    "seed": 0,
    "workers": 1,
    "output.dir": "results",
    "output.write_samples": False,
    "output.max_rows": 100000,
    "mixing.tail": 1000,
}

_ONE_D = {
    "model.lambda": 2.7,
    "model.beta": 1.0,
    "model.data": "quadratic",
    "model.operator": "scalar",
    "model.dim": 1,
    "model.a": 1.0,
    "model.y": [3.0],
}

PRESETS: dict[str, dict] = {
    "rate_1d": {
        **_ONE_D,
        "samplers": ["hadamard", "myula"],
        "sampler.myula.gamma": "dt",
        "run.n_chains": 1000,
        "run.n_samples": 1000,
        "run.burn_time": 800.0,
        "run.thin_time": 1.0,
        "sweep.dt_grid": [0.1, 0.05, 0.025, 0.0125, 0.00625],
    },
    "mixing_1d": {
        **_ONE_D,
        "samplers": ["hadamard"],
        "sampler.hadamard.dt": 5e-4,
        "run.n_chains": 50000,
        "run.n_burn": 0,
        "run.n_samples": 10000,
    },
    "dim20": {
        "model.lambda_rule": "half_max_Aty",
        "model.beta": 1.0,
        "model.data": "quadratic",
        "model.operator": "gaussian",
        "model.dim": 20,
        "model.rows": 40,
        "model.signal": "k_sparse",
        "model.signal_param": 2,
        "samplers": ["myula", "hadamard", "gibbs"],
        "sampler.myula.dt": "recipe",
        "sampler.myula.gamma": "recipe",
        "sampler.hadamard.dt": 0.1,
        "sampler.gibbs.n_burn": 10,
        "sampler.gibbs.n_samples": 10000,
        "run.n_burn": 10000,
        "run.n_samples": 100000,
    },
    "haar_deconv": {
        "model.lambda": 1.0,
        "model.beta": 300.0,
        "model.data": "quadratic",
        "model.operator": "conv_haar",
        "model.dim": 1024,
        "model.signal": "piecewise_constant",
        "model.signal_param": 8,
        "model.noise_std": 0.01,
        "model.kernel_sigma": 2.0,
        "samplers": ["hadamard", "myula"],
        "sampler.hadamard.dt": 0.01,
        "sampler.hadamard.init": "map",
        "sampler.myula.dt": 0.01,
        "sampler.myula.gamma": "dt",
        "sampler.myula.init": "map",
        "run.n_burn": 1000,
        "run.n_samples": 10000,
    },
    "null_g0": {
        "model.lambda": 1.0,
        "model.beta": 1.0,
        "model.data": "zero",
        "model.operator": "identity",
        "model.dim": 4,
        "samplers": ["hadamard"],
        "sampler.hadamard.dt": 1e-3,
        "run.n_chains": 250,
        "run.n_burn": 100000,
        "run.n_samples": 4000,
        "run.thin": 40,
    },
    "strong_rate": {
        **_ONE_D,
        "samplers": ["hadamard"],
        "sweep.dt_grid": [2.0**-k for k in range(5, 11)],
        "sweep.refine": 64,
        "sweep.horizon": 1.0,
        "sweep.n_paths": 1000,
        "sweep.data_terms": ["zero", "quadratic"],
    },
    "custom": {
        **_ONE_D,
        "samplers": ["hadamard"],
        "sampler.hadamard.dt": 0.01,
    },
}

_TOP_KEYS = {"preset", "seed", "workers", "samplers"}
_MODEL_KEYS = {
    "model.lambda": ("lam", float),
    "model.lambda_rule": ("lambda_rule", str),
    "model.beta": ("beta", float),
    "model.data": ("data", str),
    "model.operator": ("operator", str),
    "model.dim": ("dim", int),
    "model.rows": ("rows", int),
    "model.a": ("a", float),
    "model.y": ("y", list),
    "model.signal": ("signal", str),
    "model.signal_param": ("signal_param", int),
    "model.noise_std": ("noise_std", float),
    "model.kernel_sigma": ("kernel_sigma", float),
}
_RUN_KEYS = {
    "run.n_burn": int,
    "run.n_samples": int,
    "run.thin": int,
    "run.n_chains": int,
    "run.burn_time": float,
    "run.thin_time": float,
}
_SWEEP_KEYS = {
    "sweep.dt_grid": list,
    "sweep.refine": int,
    "sweep.horizon": float,
    "sweep.n_paths": int,
    "sweep.data_terms": list,
}
_OUTPUT_KEYS = {"output.dir": str, "output.write_samples": bool, "output.max_rows": int}
_SAMPLER_FIELDS = {"dt", "gamma", "init", "n_burn", "n_samples", "thin"}


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(key: str, value, kind):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a list, got {value!r}")
        return list(value)
    raise AssertionError(kind)


def _positive(key: str, value, allow_zero: bool = False):
    ok = value >= 0 if allow_zero else value > 0
    if not ok:
        raise ConfigError(f"{key}: must be {'nonnegative' if allow_zero else 'positive'}, got {value!r}")


def _step_value(key: str, value, allowed: tuple[str, ...]):
    if value is None:
        return None
    if isinstance(value, str):
        if value not in allowed:
            raise ConfigError(f"{key}: expected a positive number or one of {list(allowed)}, got {value!r}")
        return value
    v = _coerce(key, value, float)
    _positive(key, v)
    return v


def load_document(source) -> dict:
    """Read a TOML document from a path or from inline text, flattened to dotted keys."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and source.endswith(".toml")):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {source}: {exc}") from exc
    else:
        text = str(source)
    try:
        return _flatten(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config document: {exc}") from exc


def parse_config(source, overrides: dict | None = None) -> ExperimentConfig:
    """Validate a config document (path or inline TOML) and fill preset defaults.

    Unknown keys are rejected. ``overrides`` are flat dotted keys applied last
    (used for command-line flags such as ``--seed``).
    """
    doc = load_document(source) if not isinstance(source, dict) else _flatten(source)
    if overrides:
        doc.update(overrides)
    preset = doc.get("preset")
    if preset is None:
        raise ConfigError("preset: required (one of " + ", ".join(PRESET_NAMES) + ")")
    if preset not in PRESET_NAMES:
        raise ConfigError(f"preset: unknown preset {preset!r}; valid presets: {', '.join(PRESET_NAMES)}")
    flat = copy.deepcopy(_COMMON)
    flat.update(copy.deepcopy(PRESETS[preset]))
    flat.update(doc)

    names = flat.get("samplers")
    if not isinstance(names, list):
        raise ConfigError("samplers: expected a list of sampler names")
    if not names:
        raise ConfigError("samplers: at least one sampler is required")
    for n in names:
        if n not in SAMPLER_NAMES:
            raise ConfigError(f"samplers: unknown sampler {n!r}; valid names: {', '.join(SAMPLER_NAMES)}")
    if len(set(names)) != len(names):
        raise ConfigError("samplers: duplicate sampler names")

    known = set(_TOP_KEYS) | set(_MODEL_KEYS) | set(_RUN_KEYS) | set(_SWEEP_KEYS) | set(_OUTPUT_KEYS)
    known.add("mixing.tail")
    sampler_kv: dict[str, dict] = {n: {} for n in SAMPLER_NAMES}
    for key in flat:
        if key in known:
            continue
        parts = key.split(".")
        if len(parts) == 3 and parts[0] == "sampler" and parts[2] in _SAMPLER_FIELDS:
            if parts[1] not in SAMPLER_NAMES:
                raise ConfigError(f"{key}: unknown sampler {parts[1]!r}; valid names: {', '.join(SAMPLER_NAMES)}")
            sampler_kv[parts[1]][parts[2]] = flat[key]
            continue
        raise ConfigError(f"{key}: unknown key")

    seed = _coerce("seed", flat["seed"], int)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed: must be a 64-bit unsigned integer")
    workers = _coerce("workers", flat["workers"], int)
    _positive("workers", workers)

    model = ModelConfig()
    for key, (attr, kind) in _MODEL_KEYS.items():
        if key in flat:
            setattr(model, attr, _coerce(key, flat[key], kind))
    _validate_model(model)

    samplers = []
    for n in names:
        kv = sampler_kv[n]
        sc = SamplerConfig(name=n)
        sc.dt = _step_value(f"sampler.{n}.dt", kv.get("dt"), ("recipe",))
        sc.gamma = _step_value(f"sampler.{n}.gamma", kv.get("gamma"), ("recipe", "dt"))
        init = _coerce(f"sampler.{n}.init", kv.get("init", "default"), str)
        if init not in _INITS:
            raise ConfigError(f"sampler.{n}.init: expected one of {list(_INITS)}, got {init!r}")
        sc.init = init
        for fld, allow_zero in (("n_burn", True), ("n_samples", False), ("thin", False)):
            if fld in kv:
                v = _coerce(f"sampler.{n}.{fld}", kv[fld], int)
                _positive(f"sampler.{n}.{fld}", v, allow_zero)
                setattr(sc, fld, v)
        if n == "myula":
            if sc.dt is None:
                sc.dt = "recipe"
            if sc.gamma is None:
                sc.gamma = "recipe"
        elif sc.gamma is not None:
            raise ConfigError(f"sampler.{n}.gamma: only MYULA takes a Moreau parameter")
        if n == "gibbs":
            if sc.dt is not None:
                raise ConfigError("sampler.gibbs.dt: the Gibbs sampler has no step size")
            if model.data != "quadratic":
                raise ConfigError("samplers: gibbs needs model.data = 'quadratic'")
        elif sc.dt == "recipe" and n != "myula":
            raise ConfigError(f"sampler.{n}.dt: 'recipe' applies to MYULA only")
        samplers.append(sc)

    run = RunConfig()
    for key, kind in _RUN_KEYS.items():
        if key in flat:
            setattr(run, key.split(".")[1], _coerce(key, flat[key], kind))
    _positive("run.n_burn", run.n_burn, allow_zero=True)
    _positive("run.n_samples", run.n_samples)
    _positive("run.thin", run.thin)
    _positive("run.n_chains", run.n_chains)
    for key in ("burn_time", "thin_time"):
        v = getattr(run, key)
        if v is not None:
            _positive(f"run.{key}", v, allow_zero=key == "burn_time")

    sweep = SweepConfig()
    for key, kind in _SWEEP_KEYS.items():
        if key in flat:
            setattr(sweep, key.split(".")[1], _coerce(key, flat[key], kind))
    sweep.dt_grid = [_coerce("sweep.dt_grid", v, float) for v in sweep.dt_grid]
    for v in sweep.dt_grid:
        _positive("sweep.dt_grid", v)
    _positive("sweep.refine", sweep.refine)
    _positive("sweep.horizon", sweep.horizon)
    _positive("sweep.n_paths", sweep.n_paths)
    for t in sweep.data_terms:
        if t not in ("zero", "quadratic"):
            raise ConfigError(f"sweep.data_terms: unknown data term {t!r}; valid: zero, quadratic")
    if preset in ("rate_1d", "strong_rate") and len(sweep.dt_grid) < 2:
        raise ConfigError("sweep.dt_grid: a rate fit needs at least two step sizes")

    output = OutputConfig()
    for key, kind in _OUTPUT_KEYS.items():
        if key in flat:
            setattr(output, key.split(".")[1], _coerce(key, flat[key], kind))
    _positive("output.max_rows", output.max_rows)
    tail = _coerce("mixing.tail", flat["mixing.tail"], int)
    _positive("mixing.tail", tail)

    for sc in samplers:
        if sc.name in ("hadamard", "hadamard_mala") and sc.dt is None and preset != "rate_1d" and preset != "strong_rate":
            raise ConfigError(f"sampler.{sc.name}.dt: required")
    if preset in ("rate_1d", "mixing_1d", "strong_rate") and model.dim != 1:
        raise ConfigError(f"model.dim: preset {preset} is one-dimensional")
    if preset == "mixing_1d" and tail >= run.n_samples:
        raise ConfigError("mixing.tail: must be shorter than run.n_samples")

    return ExperimentConfig(
        preset=preset,
        seed=seed,
        model=model,
        samplers=samplers,
        run=run,
        sweep=sweep,
        output=output,
        mixing_tail=tail,
        workers=workers,
    )


def _validate_model(m: ModelConfig) -> None:
    if m.lambda_rule not in ("fixed", "half_max_Aty"):
        raise ConfigError(f"model.lambda_rule: expected 'fixed' or 'half_max_Aty', got {m.lambda_rule!r}")
    _positive("model.lambda", m.lam)
    _positive("model.beta", m.beta)
    if m.data not in ("zero", "quadratic"):
        raise ConfigError(f"model.data: expected 'zero' or 'quadratic', got {m.data!r}")
    if m.operator not in _OPERATORS:
        raise ConfigError(f"model.operator: expected one of {list(_OPERATORS)}, got {m.operator!r}")
    _positive("model.dim", m.dim)
    _positive("model.rows", m.rows)
    _positive("model.kernel_sigma", m.kernel_sigma)
    _positive("model.noise_std", m.noise_std, allow_zero=True)
    if m.signal not in _SIGNALS:
        raise ConfigError(f"model.signal: expected one of {list(_SIGNALS)}, got {m.signal!r}")
    if m.y is not None:
        m.y = [_coerce("model.y", v, float) for v in m.y]
    if m.operator == "scalar" and m.dim != 1:
        raise ConfigError("model.operator: 'scalar' needs model.dim = 1")
    if m.operator == "conv_haar" and (m.dim & (m.dim - 1)):
        raise ConfigError("model.dim: the Haar transform needs a power-of-two length")
    if m.data == "quadratic" and m.y is None and m.signal == "none":
        raise ConfigError("model.y: a quadratic data term needs y or a model.signal recipe")
    if m.lambda_rule == "half_max_Aty" and m.data != "quadratic":
        raise ConfigError("model.lambda_rule: 'half_max_Aty' needs a quadratic data term")
