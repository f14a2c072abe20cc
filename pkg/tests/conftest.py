import itertools
import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def brute_energy(points):
    """Independent oracle: max over every sign vector in {-1, 1}^n, plain Python loops."""
    pts = np.asarray(points, dtype=np.float64)
    best = 0.0
    for signs in itertools.product((1.0, -1.0), repeat=pts.shape[0]):
        v = np.asarray(signs) @ pts
        best = max(best, math.sqrt(float(v @ v)))
    return best


def grid_projection_max(points, directions):
    """Max over explicit directions of sum_i |u_i . v| (the energy's defining formula)."""
    pts = np.asarray(points, dtype=np.float64)
    out = 0.0
    for block in np.array_split(directions, max(1, directions.shape[0] // 65536)):
        out = max(out, float(np.abs(block @ pts.T).sum(axis=1).max()))
    return out


def random_unit_rows(rng, n, p):
    g = rng.standard_normal((n, p))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
