"""Shared field builders for the tests."""
import math

import numpy as np


def band_limited(grid, rng, n_modes=5, decay=0.5):
    """Random smooth field with a few low tangential modes and a decaying y profile."""
    X, Y = grid.mesh()
    f = np.zeros(grid.shape)
    for k in range(n_modes):
        a, b = rng.normal(size=2) * math.exp(-decay * k)
        c = rng.uniform(0.5, 1.5)
        kk = 2 * math.pi * k / grid.lx
        f += (a * np.cos(kk * X) + b * np.sin(kk * X)) * Y * np.exp(-c * Y)
    return f
