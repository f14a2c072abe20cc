import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minimax_sphere.core import energy, random_rotation
from minimax_sphere.designs import (
    CUBE_GRAM,
    PYRAMID_GRAM,
    asymptotic_bounds,
    basis_repetition_design,
    basis_repetition_energy,
    closed_form_designs,
    cube_design,
    expected_abs_projection,
    gautschi_lower,
    gram_distance,
    max_cosine_sum,
    orthonormal_design,
    ratio_report,
    semicircle_design,
    semicircle_energy,
    triangular_pyramid_design,
)

from conftest import brute_energy


class TestOrthonormal:
    @pytest.mark.parametrize("n,p", [(3, 3), (1, 5), (2, 7)])
    def test_energy(self, n, p):
        assert abs(energy(orthonormal_design(n, p)).energy - math.sqrt(n)) <= 1e-12

    def test_rejects_n_above_p(self):
        with pytest.raises(ValueError):
            orthonormal_design(4, 3)


class TestSemicircle:
    def test_small_values(self):
        assert energy(semicircle_design(2)).energy == pytest.approx(math.sqrt(2.0), abs=1e-12)
        assert energy(semicircle_design(3)).energy == pytest.approx(2.0, abs=1e-12)
        assert energy(semicircle_design(5)).energy == pytest.approx(1 + math.sqrt(5.0), abs=1e-10)

    @pytest.mark.parametrize("n", range(1, 13))
    def test_matches_closed_form_by_independent_enumeration(self, n):
        pts = semicircle_design(n).array
        assert abs(brute_energy(pts) - semicircle_energy(n)) <= 1e-10 * semicircle_energy(n)


class TestPyramidAndCube:
    def test_pyramid_energy_and_gram(self):
        cfg = triangular_pyramid_design()
        assert abs(energy(cfg).energy - math.sqrt(5.0)) <= 1e-10
        np.testing.assert_allclose(cfg.gram(), PYRAMID_GRAM, atol=1e-15)
        np.testing.assert_allclose(cfg.array[0], [0, 0, 1])
        np.testing.assert_allclose(cfg.array[1], [1, 0, 0])

    def test_pyramid_rotation_invariance(self, rng):
        cfg = triangular_pyramid_design()
        q = random_rotation(3, rng)
        assert abs(energy(cfg.transformed(q)).energy - math.sqrt(5.0)) <= 1e-12

    def test_cube(self):
        cfg = cube_design()
        e = energy(cfg).energy
        assert abs(e - 4 / math.sqrt(3.0)) <= 1e-10
        assert e > math.sqrt(5.0)
        off = np.abs(cfg.gram()[~np.eye(4, dtype=bool)])
        np.testing.assert_allclose(off, 1 / 3, atol=1e-15)
        assert gram_distance(cfg.gram(), CUBE_GRAM) <= 1e-15

    def test_gram_distance_detects_relabelling(self, rng):
        cfg = triangular_pyramid_design()
        perm = rng.permutation(4)
        flipped = cfg.flipped([1, -1, 1, -1])
        moved = flipped.transformed(random_rotation(3, rng))
        assert gram_distance(moved.gram()[np.ix_(perm, perm)], PYRAMID_GRAM) <= 1e-12
        assert gram_distance(cube_design().gram(), PYRAMID_GRAM) > 0.1


class TestBasisRepetition:
    def test_example(self):
        assert basis_repetition_energy(7, 3) == pytest.approx(math.sqrt(17.0), abs=1e-15)
        assert energy(basis_repetition_design(7, 3)).energy == pytest.approx(math.sqrt(17.0), abs=1e-12)

    @pytest.mark.parametrize("p", [1, 2, 3, 5])
    def test_closed_form_matches_enumeration(self, p):
        for n in range(1, 15):
            assert energy(basis_repetition_design(n, p)).energy == pytest.approx(
                basis_repetition_energy(n, p), rel=1e-13)

    def test_special_cases(self):
        for p in range(1, 8):
            assert basis_repetition_energy(p, p) == pytest.approx(math.sqrt(p))
            e = basis_repetition_energy(2 * p, p)
            assert e == pytest.approx(2 * math.sqrt(p))
            assert e / (2 * p) < math.sqrt(5) / (2 * math.sqrt(p))


class TestConstants:
    def test_known_values(self):
        assert abs(expected_abs_projection(2) - 2 / math.pi) <= 1e-12
        assert abs(expected_abs_projection(3) - 0.5) <= 1e-12
        assert expected_abs_projection(1) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("p", [2, 3])
    def test_monte_carlo_oracle(self, p):
        rng = np.random.default_rng(p)
        g = rng.standard_normal((10 ** 7, p))
        v = np.abs(g[:, 0]) / np.linalg.norm(g, axis=1)
        se = v.std() / math.sqrt(v.size)
        assert abs(v.mean() - expected_abs_projection(p)) <= 3 * se

    def test_decreasing_and_gautschi(self):
        vals = [expected_abs_projection(p) for p in range(1, 200)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert all(expected_abs_projection(p) > gautschi_lower(p) for p in range(1, 200))

    def test_gautschi_squeeze(self):
        p = 10 ** 4
        assert abs(expected_abs_projection(p) * math.sqrt(p) / math.sqrt(2 / math.pi) - 1) <= 0.01


class TestAsymptoticBounds:
    def test_examples(self):
        b = asymptotic_bounds(1000, 3)
        assert b.lower >= 500
        assert b.upper <= math.sqrt(5) / 2 * 1000 / math.sqrt(3) + 1e-9
        assert b.upper == pytest.approx(645.4972243679, rel=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            asymptotic_bounds(3, 3)
        with pytest.raises(ValueError):
            asymptotic_bounds(10, 3, C_p=-1.0)

    @given(st.integers(1, 64), st.integers(1, 400), st.floats(0.1, 10))
    def test_lower_below_upper(self, p, extra, c):
        b = asymptotic_bounds(p + extra, p, C_p=c)
        assert b.lower < b.upper

    @pytest.mark.parametrize("p", [2, 3, 4, 5])
    def test_no_construction_beats_lower_bound(self, p):
        for n in range(p + 1, 17):
            lower = asymptotic_bounds(n, p).lower
            for cfg in closed_form_designs(n, p).values():
                assert energy(cfg, 0.0).energy >= lower * (1 - 1e-12)


def _cosine_grid_max(k, theta, per_axis=200):
    # grid aligned so that theta / k lies on it
    if theta == 0:
        return float(k)
    m = max(1, round(per_axis * theta / (k * math.pi)))
    h = theta / (k * m)
    axis = np.arange(0.0, math.pi + 1e-12, h)
    if k == 1:
        return math.cos(theta) if 2 * theta <= math.pi + 1e-12 else -math.inf
    mesh = np.stack(np.meshgrid(*([axis] * (k - 1)), indexing="ij"), axis=-1).reshape(-1, k - 1)
    last = theta - mesh.sum(axis=1)
    full = np.column_stack([mesh, last])
    ok = (last >= -1e-12) & (last <= math.pi + 1e-12)
    ok &= np.all(full + np.roll(full, -1, axis=1) <= math.pi + 1e-9, axis=1)
    return float(np.cos(full[ok]).sum(axis=1).max())


class TestMaxCosineSum:
    def test_examples(self):
        assert max_cosine_sum(2, math.pi) == pytest.approx(0.0, abs=1e-15)
        assert max_cosine_sum(3, math.pi / 2) == pytest.approx(3 * math.sqrt(3) / 2, abs=1e-15)
        assert max_cosine_sum(1, 0.0) == 1.0

    def test_empty_region(self):
        with pytest.raises(ValueError):
            max_cosine_sum(2, 1.01 * math.pi)
        with pytest.raises(ValueError):
            max_cosine_sum(2, -0.1)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_grid_search_oracle(self, k):
        per_axis = 200 if k <= 3 else 60
        for frac in (0.1, 0.37, 0.6, 0.95):
            theta = frac * k * math.pi / 2
            assert abs(_cosine_grid_max(k, theta, per_axis) - max_cosine_sum(k, theta)) <= 1e-6

    @given(st.integers(1, 6), st.data())
    def test_random_feasible_points_never_exceed(self, k, data):
        raw = np.array(data.draw(st.lists(st.floats(0, math.pi / 2), min_size=k, max_size=k)))
        theta = float(raw.sum())
        assert np.cos(raw).sum() <= max_cosine_sum(k, theta) + 1e-12


class TestRatioReport:
    def test_first_rows_exact(self):
        rep = ratio_report(3, 4, optimize=False)
        assert [r.ratio for r in rep.rows[:3]] == pytest.approx([1.0, math.sqrt(2) / 2, math.sqrt(3) / 3],
                                                               abs=1e-12)
        assert rep.rows[3].energy == pytest.approx(math.sqrt(5))
        assert all(0 < r.ratio <= 1 for r in rep.rows)

    def test_p2_uses_semicircle(self):
        rep = ratio_report(2, 8, optimize=False)
        ratios = [r.ratio for r in rep.rows]
        assert all(b <= a for a, b in zip(ratios, ratios[1:]))
        assert rep.violations() == []

    def test_violations_are_reported_not_raised(self):
        rep = ratio_report(3, 8, optimize=False)
        d = rep.to_dict()
        assert isinstance(d["monotonicity_violations"], list)
