from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class StepError(RuntimeError):
    """A sampler step produced a non-finite drift or left its domain."""

    def __init__(self, message: str, index=None, step: int | None = None):
        self.index = index
        self.step = step
        where = []
        if index is not None:
            where.append(f"index {index}")
        if step is not None:
            where.append(f"step {step}")
        super().__init__(message + (f" ({', '.join(where)})" if where else ""))


@dataclass
class SamplerState:
    """Point ``(u, v)`` of the lifted chain; ``u`` must stay strictly positive.

    Arrays carry the coordinate on the last axis; any leading axes are a batch
    of independent chains. For the group sampler ``u`` has ``K`` entries.
    """

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)


@dataclass(frozen=True)
class StepConfig:
    dt: float
    moreau_gamma: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.moreau_gamma is not None and not self.moreau_gamma > 0:
            raise ValueError("moreau_gamma must be positive when set")


@dataclass
class GibbsState:
    x: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.eta = np.asarray(self.eta, dtype=float)
        if np.any(~(self.eta > 0)):
            raise ValueError("latent scales eta must be positive")


@dataclass
class ChainRecord:
    """Recorded output of :func:`run_chain`.

    ``samples`` has shape ``(n_samples, *batch, d)`` unless a ``transform``
    was supplied, in which case it stacks the transformed values.
    """

    samples: np.ndarray
    acceptance_rate: float | None
    min_u_seen: float | None
    wall_time: float
    n_steps: int
    final_state: object = field(default=None, repr=False)
