from __future__ import annotations

import numpy as np

from ..rng_dist import RngStream

SIGNAL_KINDS = ("k_sparse", "piecewise_constant")


def synthesize_signal(kind: str, d: int, rng: RngStream, param: int) -> np.ndarray:
    """Ground-truth test signal.

    ``k_sparse``: ``param`` nonzeros at uniform positions with amplitudes
    ``+-1``. ``piecewise_constant``: ``param`` jumps at uniform positions in
    ``1..d-1`` with segment levels uniform on ``[-1, 1]``.
    """
    if d < 1:
        raise ValueError("d must be positive")
    g = rng.generator
    if kind == "k_sparse":
        if not 0 <= param <= d:
            raise ValueError(f"k must lie in [0, {d}], got {param}")
        x = np.zeros(d)
        idx = g.choice(d, size=param, replace=False)
        x[np.sort(idx)] = g.choice([-1.0, 1.0], size=param)
        return x
    if kind == "piecewise_constant":
        if not 0 <= param < d:
            raise ValueError(f"n_jumps must lie in [0, {d - 1}], got {param}")
        jumps = np.sort(g.choice(np.arange(1, d), size=param, replace=False))
        levels = g.uniform(-1.0, 1.0, size=param + 1)
        # adjacent equal levels would hide a jump; redraw is measure-zero, nudge instead
        for i in range(1, levels.size):
            if levels[i] == levels[i - 1]:
                levels[i] = np.nextafter(levels[i], 2.0)
        return np.repeat(levels, np.diff(np.concatenate([[0], jumps, [d]])))
    raise ValueError(f"unknown signal kind {kind!r}; valid: {', '.join(SIGNAL_KINDS)}")


def jump_locations(x) -> np.ndarray:
    """Indices ``i`` with ``x[i] != x[i-1]``."""
    return np.flatnonzero(np.diff(np.asarray(x))) + 1
