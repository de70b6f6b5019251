"""Deterministic random test fields for residual checks and certification.

Each trial draws from its own generator seeded by (seed, index), so trials
are reproducible independently of evaluation order.  Nine out of ten
trials are rough fields (independent uniform values in [-1, 1] per node);
every tenth is a smooth bump profile with random center, width, and
amplitude, covering extremal-like candidates as well.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid
from .operators import Field


def trial_field(grid: Grid, seed: int, index: int) -> Field:
    rng = np.random.default_rng([int(seed), int(index)])
    if index % 10 == 9:
        lo = np.array([b[0] for b in grid.box])
        hi = np.array([b[1] for b in grid.box])
        center = lo + rng.uniform(0.2, 0.8, size=grid.n_dim) * (hi - lo)
        width = rng.uniform(0.1, 0.5) * float((hi - lo).max())
        amplitude = rng.uniform(-2.0, 2.0)
        d2 = ((grid.interior - center) ** 2).sum(axis=1)
        values = amplitude * np.exp(-d2 / (2.0 * width**2))
        if np.all(values == 0.0):
            values = rng.uniform(-1.0, 1.0, grid.interior_count)
    else:
        values = rng.uniform(-1.0, 1.0, grid.interior_count)
    return Field(values, grid)


def trial_fields(grid: Grid, trials: int, seed: int):
    for index in range(trials):
        yield trial_field(grid, seed, index)
