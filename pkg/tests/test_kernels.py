import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minimax_sphere import _kernels
from minimax_sphere.core import SignPattern, energy, enumerate_patterns

from conftest import random_unit_rows

needs_cython = pytest.mark.skipif("cython" not in _kernels.BACKENDS, reason="compiled kernels not built")


def test_pattern_tables_reproduce_combinations(rng):
    pts = random_unit_rows(rng, 7, 3)
    low, high, k_low = _kernels.pattern_tables(pts)
    for code in range(1 << 6):
        lo, hi = code & ((1 << k_low) - 1), code >> k_low
        expected = SignPattern.from_code(code, 7).as_array() @ pts
        np.testing.assert_allclose(high[hi] + low[lo], expected, atol=1e-14)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.get_backend("fortran")


@needs_cython
@given(st.integers(1, 18), st.integers(1, 5), st.integers(0, 2 ** 31))
def test_backends_agree(n, p, seed):
    pts = random_unit_rows(np.random.default_rng(seed), n, p)
    a = enumerate_patterns(pts, 1e-4, backend="cython")
    b = enumerate_patterns(pts, 1e-4, backend="python")
    assert a[0] == pytest.approx(b[0], rel=1e-14)
    np.testing.assert_array_equal(a[1], b[1])


@needs_cython
def test_cython_threads_bit_identical(rng):
    pts = random_unit_rows(rng, 24, 3)
    low, high, _ = _kernels.pattern_tables(pts)
    cy = _kernels.get_backend("cython")
    np.testing.assert_array_equal(cy.row_maxima(low, high, 1), cy.row_maxima(low, high, 4))


def test_pure_python_switch():
    env = dict(os.environ, MINIMAX_SPHERE_PURE_PYTHON="1")
    code = ("import minimax_sphere as m, numpy as np;"
            "print(m.KERNEL_BACKEND, round(m.energy(np.eye(3)).energy ** 2, 12))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "3.0"]


@needs_cython
def test_energy_same_on_both_backends_for_designs():
    from minimax_sphere.designs import cube_design, triangular_pyramid_design
    for cfg in (triangular_pyramid_design(), cube_design()):
        a, b = energy(cfg, 1e-7, backend="cython"), energy(cfg, 1e-7, backend="python")
        assert a.argmax_patterns == b.argmax_patterns
