import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from minimax_sphere.core import energy
from minimax_sphere.designs import semicircle_energy
from minimax_sphere.partition import (
    FOUR_PI,
    TWO_PI,
    Arc,
    Partition,
    Region,
    calibrated_constant,
    collar_counts,
    diameters,
    equal_area_partition,
    equal_area_partition_s1,
    equal_area_partition_s2,
    load_partition,
    partition_design,
    region_diameters,
    sample_region,
    save_partition,
)


def locate(part, pts):
    """Index of the region containing each point (independent of the sampler)."""
    z = pts[:, 2]
    phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), TWO_PI)
    inside = ((z[:, None] >= part.z_lo[None, :]) & (z[:, None] <= part.z_hi[None, :])
              & (phi[:, None] >= part.phi_lo[None, :]) & (phi[:, None] < part.phi_hi[None, :]))
    return np.argmax(inside, axis=1), inside.any(axis=1)


class TestConstruction:
    def test_single_region(self):
        part = equal_area_partition_s2(1)
        assert part.n == 1 and part.areas()[0] == pytest.approx(FOUR_PI, abs=1e-15)

    def test_n4_caps(self):
        part = equal_area_partition_s2(4)
        assert collar_counts(4) == [1, 2, 1]
        np.testing.assert_allclose(part.areas(), math.pi, atol=1e-15)

    def test_n169(self):
        part = equal_area_partition_s2(169)
        assert part.n == 169
        np.testing.assert_allclose(part.areas(), FOUR_PI / 169, atol=1e-9)

    @given(st.integers(1, 3000))
    def test_exact_area_and_count(self, n):
        part = equal_area_partition_s2(n)
        assert part.n == n
        assert np.max(np.abs(part.areas() - FOUR_PI / n)) <= 1e-9
        assert abs(math.fsum(part.areas().tolist()) - FOUR_PI) <= 1e-9

    @given(st.integers(1, 1500))
    def test_tiling(self, n):
        part = equal_area_partition_s2(n)
        assert part.z_hi.max() == 1.0 and part.z_lo.min() == -1.0
        bands = sorted(set(zip(part.z_hi.tolist(), part.z_lo.tolist())), reverse=True)
        for (_, lo), (hi, _) in zip(bands, bands[1:]):
            assert abs(lo - hi) <= 1e-12
        for top, bottom in bands:
            mask = (part.z_hi == top) & (part.z_lo == bottom)
            lo, hi = np.sort(part.phi_lo[mask]), np.sort(part.phi_hi[mask])
            assert lo[0] == 0.0 and hi[-1] == pytest.approx(TWO_PI, abs=1e-12)
            np.testing.assert_allclose(lo[1:], hi[:-1], atol=1e-12)

    def test_s1(self):
        part = equal_area_partition_s1(5)
        np.testing.assert_allclose(part.areas(), TWO_PI / 5, atol=1e-15)
        assert len(equal_area_partition_s1(2).regions) == 2
        assert isinstance(part.regions[0], Arc)

    def test_unsupported_p(self):
        with pytest.raises(ValueError):
            equal_area_partition(10, 4)


class TestSampling:
    def test_whole_sphere_mean(self):
        region = equal_area_partition_s2(1).regions[0]
        rng = np.random.default_rng(0)
        part = Partition(3, [region.azimuth_range[0]] * 10 ** 6, [region.azimuth_range[1]] * 10 ** 6,
                         [region.z_range[0]] * 10 ** 6, [region.z_range[1]] * 10 ** 6)
        pts = part.sample(rng)
        assert np.linalg.norm(pts.mean(axis=0)) <= 0.005

    def test_polar_cap_samples(self):
        n = 50
        cap = equal_area_partition_s2(n).regions[0]
        for i in range(200):
            assert sample_region(cap, 4, i).coords[2] >= 1 - 2 / n

    def test_sample_region_deterministic(self):
        region = Region((0.0, 0.5), (0.0, 1.0))
        a, b = sample_region(region, 1, 7), sample_region(region, 1, 7)
        np.testing.assert_array_equal(a.coords, b.coords)
        assert not np.array_equal(a.coords, sample_region(region, 1, 8).coords)

    def test_uniform_fraction_per_region(self):
        part = equal_area_partition_s2(37)
        rng = np.random.default_rng(5)
        g = rng.standard_normal((10 ** 6, 3))
        pts = g / np.linalg.norm(g, axis=1, keepdims=True)
        idx, found = locate(part, pts)
        assert found.all()
        counts = np.bincount(idx, minlength=part.n)
        se = math.sqrt(10 ** 6 * (1 / 37) * (1 - 1 / 37))
        assert np.max(np.abs(counts - 10 ** 6 / 37)) <= 4 * se
        assert stats.chisquare(counts).pvalue > 0.001

    def test_design_lands_in_own_region(self):
        part = equal_area_partition_s2(300)
        pts = partition_design(300, seed=2).array
        idx, found = locate(part, pts)
        assert found.all()
        np.testing.assert_array_equal(idx, np.arange(300))


class TestPartitionDesignEnergy:
    def test_n1(self):
        assert energy(partition_design(1)).energy == pytest.approx(1.0)

    def test_p3_n16_window(self):
        c3 = calibrated_constant(3)
        for seed in range(3):
            r = energy(partition_design(16, seed)).energy / 16
            assert 0.5 <= r <= 0.5 + c3 * 16 ** (-1 / 3)

    def test_p2_n8_floor(self):
        for seed in range(3):
            e = energy(partition_design(8, seed, p=2)).energy
            assert e >= 8 * 2 / math.pi
            assert e >= semicircle_energy(8) - 1e-12

    def test_p2_ratio_tends_to_c2(self):
        from minimax_sphere.core import energy_lower_bound_sampled
        r = energy_lower_bound_sampled(partition_design(2000, 0, p=2), 20000) / 2000
        assert abs(r - 2 / math.pi) <= 0.01


class TestDiameters:
    def test_n1(self):
        assert diameters(equal_area_partition_s2(1)) == pytest.approx(2.0, abs=1e-9)

    def test_band_region_contains_corner_chord(self):
        part = Partition(3, [0.0], [math.pi / 8], [0.0], [0.5])
        a = np.array([1.0, 0.0, 0.0])
        r = math.sqrt(1 - 0.25)
        b = np.array([r * math.cos(math.pi / 8), r * math.sin(math.pi / 8), 0.5])
        assert region_diameters(part, 8)[0] >= np.linalg.norm(a - b) - 1e-15

    def test_scaling_bound(self):
        for m in (4, 8, 16, 32):
            n = m * m
            d = diameters(equal_area_partition_s2(n))
            assert d * math.sqrt(n) <= 4 * math.pi

    def test_slope(self):
        ns = [16, 64, 256, 1024, 4096]
        d = [diameters(equal_area_partition_s2(n)) for n in ns]
        slope = np.polyfit(np.log(ns), np.log(d), 1)[0]
        assert abs(slope + 0.5) <= 0.1

    def test_rejects_too_few_samples(self):
        with pytest.raises(ValueError):
            region_diameters(equal_area_partition_s2(4), 1)


def test_json_roundtrip(tmp_path):
    part = equal_area_partition_s2(50)
    diameters(part)
    path = tmp_path / "part.json"
    save_partition(part, path)
    back = load_partition(path)
    np.testing.assert_array_equal(back.z_lo, part.z_lo)
    np.testing.assert_array_equal(back.phi_hi, part.phi_hi)
    assert back.n == 50


def test_from_dict_rejects_count_mismatch():
    data = equal_area_partition_s2(4).to_dict()
    data["n"] = 5
    with pytest.raises(ValueError):
        Partition.from_dict(data)
