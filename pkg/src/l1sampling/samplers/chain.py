"""Sampler objects with a common step interface, and the chain runner."""
from __future__ import annotations

import time
from typing import Callable

import numpy as np

from ..model import GroupStructure, TargetModel
from ..rng_dist import RngStream
from .baselines import GibbsKernel, gibbs_step, myula_step
from .hadamard import group_hadamard_step, hadamard_mala_step, hadamard_step
from .state import ChainRecord, GibbsState, SamplerState, StepConfig, StepError


class HadamardULA:
    name = "hadamard"
    has_u = True
    has_acceptance = False

    def __init__(self, model: TargetModel, cfg: StepConfig):
        self.model = model
        self.cfg = cfg

    def initial_state(self, batch_shape=()):
        shape = tuple(batch_shape) + (self.model.dim,)
        return SamplerState(np.ones(shape), np.zeros(shape))

    def step(self, state, rng):
        return hadamard_step(state, self.model, self.cfg, rng), None

    def observe(self, state):
        return state.u * state.v

    def min_u(self, state):
        return float(np.min(state.u))

    def describe(self):
        return {"name": self.name, "dt": self.cfg.dt, "init": "u=1, v=0"}


class HadamardMALA(HadamardULA):
    name = "hadamard_mala"
    has_acceptance = True

    def step(self, state, rng):
        return hadamard_mala_step(state, self.model, self.cfg, rng)


class GroupHadamardULA(HadamardULA):
    name = "group_hadamard"

    def __init__(self, model: TargetModel, groups: GroupStructure, cfg: StepConfig):
        super().__init__(model, cfg)
        self.groups = groups

    def initial_state(self, batch_shape=()):
        b = tuple(batch_shape)
        return SamplerState(np.ones(b + (self.groups.n_groups,)), np.zeros(b + (self.model.dim,)))

    def step(self, state, rng):
        return group_hadamard_step(state, self.groups, self.model, self.cfg, rng), None

    def observe(self, state):
        return state.u[..., self.groups.labels] * state.v

    def describe(self):
        d = super().describe()
        d["group_sizes"] = self.groups.sizes.tolist()
        return d


class MYULA:
    name = "myula"
    has_u = False
    has_acceptance = False

    def __init__(self, model: TargetModel, cfg: StepConfig):
        if cfg.moreau_gamma is None:
            raise ValueError("MYULA needs moreau_gamma")
        self.model = model
        self.cfg = cfg

    def initial_state(self, batch_shape=()):
        return np.zeros(tuple(batch_shape) + (self.model.dim,))

    def step(self, state, rng):
        return myula_step(state, self.model, self.cfg, rng), None

    def observe(self, state):
        return state

    def min_u(self, state):
        return None

    def describe(self):
        return {"name": self.name, "dt": self.cfg.dt, "gamma": self.cfg.moreau_gamma, "init": "x=0"}


class GibbsSampler:
    name = "gibbs"
    has_u = False
    has_acceptance = False

    def __init__(self, model: TargetModel):
        self.model = model
        self.kernel = GibbsKernel(model)

    def initial_state(self, batch_shape=()):
        shape = tuple(batch_shape) + (self.model.dim,)
        return GibbsState(np.zeros(shape), np.ones(shape))

    def step(self, state, rng):
        return gibbs_step(state, self.model, rng, self.kernel), None

    def observe(self, state):
        return state.x

    def min_u(self, state):
        return None

    def describe(self):
        return {"name": self.name, "init": "eta=1"}


def run_chain(
    sampler,
    init,
    n_burn: int,
    n_samples: int,
    thin: int,
    rng: RngStream,
    transform: Callable | None = None,
    observe: Callable | None = None,
) -> ChainRecord:
    """Burn in, then record every ``thin``-th state.

    ``observe`` maps a sampler state to the recorded quantity (default: the
    sampler's ``x``). ``transform`` is applied on top of that, e.g. to keep only
    a cross-chain mean and save memory.
    """
    observe = sampler.observe if observe is None else observe
    if n_burn < 0 or n_samples < 0 or thin < 1:
        raise ValueError("need n_burn >= 0, n_samples >= 0 and thin >= 1")
    t0 = time.perf_counter()
    state = init
    track_u = getattr(sampler, "has_u", False)
    min_u = sampler.min_u(state) if track_u else None
    n_acc = 0.0
    n_prop = 0
    records = []
    total = n_burn + n_samples * thin
    for k in range(total):
        try:
            state, acc = sampler.step(state, rng)
        except StepError as exc:
            raise StepError(str(exc), index=exc.index, step=k) from exc
        if track_u:
            m = sampler.min_u(state)
            if m < min_u:
                min_u = m
        if acc is not None:
            n_acc += float(np.mean(acc))
            n_prop += 1
        j = k + 1 - n_burn
        if j > 0 and j % thin == 0:
            x = observe(state)
            records.append(np.array(transform(x) if transform is not None else x, dtype=float))
    if records:
        samples = np.stack(records)
    else:
        x = observe(state)
        shape = np.shape(transform(x) if transform is not None else x)
        samples = np.empty((0,) + tuple(shape))
    return ChainRecord(
        samples=samples,
        acceptance_rate=(n_acc / n_prop) if n_prop else None,
        min_u_seen=min_u,
        wall_time=time.perf_counter() - t0,
        n_steps=total,
        final_state=state,
    )
