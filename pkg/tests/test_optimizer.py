import math

import numpy as np
import pytest

from minimax_sphere.core import Configuration, EnumerationInfeasible, energy
from minimax_sphere.designs import (
    PYRAMID_GRAM,
    cube_design,
    gram_distance,
    orthonormal_design,
    semicircle_design,
    semicircle_energy,
    triangular_pyramid_design,
)
from minimax_sphere.optimizer import (
    OptimizerSettings,
    basin_statistics,
    certify_local_minimum,
    descend,
    local_descent,
    minimize,
    tangent_basis,
)

from conftest import random_unit_rows

FAST = OptimizerSettings(restarts=4, seed=0)


class TestSettings:
    @pytest.mark.parametrize("field,value", [("restarts", 0), ("step_size", -1.0), ("temperature_decay", 1.0),
                                             ("temperature_decay", 0.0), ("final_temperature", 0.0)])
    def test_rejects_invalid(self, field, value):
        with pytest.raises(ValueError):
            OptimizerSettings(**{field: value})


class TestMinimize:
    def test_orthonormal_case(self):
        _, rep = minimize(3, 3, OptimizerSettings(restarts=4, seed_constructions=False))
        assert abs(rep.energy - math.sqrt(3)) <= 1e-4

    def test_semicircle_case(self):
        _, rep = minimize(5, 2, OptimizerSettings(restarts=8, seed_constructions=False))
        assert abs(rep.energy - semicircle_energy(5)) <= 1e-4

    def test_pyramid_case(self):
        best, rep = minimize(4, 3, OptimizerSettings(restarts=16, seed=3, seed_constructions=False))
        assert abs(rep.energy - math.sqrt(5)) <= 1e-4
        assert gram_distance(best.gram(), PYRAMID_GRAM) <= 1e-2

    def test_never_worse_than_constructions(self):
        for n, p in [(5, 3), (6, 3), (7, 4)]:
            _, rep = minimize(n, p, FAST)
            from minimax_sphere.designs import closed_form_designs
            for cfg in closed_form_designs(n, p).values():
                assert rep.squared_energy <= energy(cfg, 0.0).squared_energy + FAST.convergence_tolerance

    def test_deterministic_across_threads(self):
        a, ra = minimize(5, 3, FAST, num_threads=1)
        b, rb = minimize(5, 3, FAST, num_threads=3)
        np.testing.assert_array_equal(a.array, b.array)
        assert ra.squared_energy == rb.squared_energy

    def test_cap(self):
        with pytest.raises(EnumerationInfeasible):
            minimize(31, 3, FAST)
        with pytest.raises(ValueError):
            minimize(3, 0, FAST)

    def test_trials_reported(self):
        _, rep, trials = minimize(4, 3, FAST, return_trials=True)
        labels = [lab for lab, _ in trials]
        assert labels[:4] == [f"random:{r}" for r in range(4)]
        assert "construction:pyramid" in labels
        assert min(e for _, e in trials) == pytest.approx(rep.energy, rel=1e-15)


class TestLocalDescent:
    def test_monotone_and_feasible(self, rng):
        trace = descend(random_unit_rows(rng, 6, 3), OptimizerSettings())
        h = np.array(trace.history)
        assert np.all(np.diff(h) <= 1e-12)
        np.testing.assert_allclose(np.linalg.norm(trace.config.array, axis=1), 1.0, atol=1e-12)

    def test_pyramid_stays(self):
        e = energy(local_descent(triangular_pyramid_design())).energy
        assert abs(e - math.sqrt(5)) <= 1e-6

    def test_cube_does_not_escape(self):
        e = energy(local_descent(cube_design())).energy
        assert abs(e - 4 / math.sqrt(3)) <= 1e-6

    def test_orthonormal_no_improvement(self):
        e = energy(local_descent(orthonormal_design(3, 4))).energy
        assert abs(e - math.sqrt(3)) <= 1e-12

    def test_windowed_objective_beyond_dense_limit(self, rng):
        cfg = random_unit_rows(rng, 16, 3)
        settings = OptimizerSettings(max_iterations=40)
        trace = descend(cfg, settings)
        assert trace.history[-1] <= trace.history[0]
        assert energy(trace.config, 0.0).squared_energy == pytest.approx(trace.history[-1], rel=1e-12)


class TestCertification:
    def test_pyramid(self):
        cert = certify_local_minimum(triangular_pyramid_design())
        assert cert.certified and not cert.descent_direction_found
        # brute-force count of sign vectors tied at squared norm 5, halved for +-
        import itertools
        pts = triangular_pyramid_design().array
        ties = sum(1 for s in itertools.product((1, -1), repeat=4)
                   if abs(np.sum((np.array(s) @ pts) ** 2) - 5.0) <= 1e-12)
        assert len(cert.active_set) == ties // 2 == 6
        assert cert.kind == "stationary (first-order)"

    def test_cube(self):
        cert = certify_local_minimum(cube_design())
        assert cert.certified
        assert len(cert.active_set) == 3
        assert cert.squared_energy == pytest.approx(16 / 3, rel=1e-14)

    @pytest.mark.parametrize("n", range(3, 9))
    def test_semicircle(self, n):
        assert certify_local_minimum(semicircle_design(n)).certified

    def test_perturbed_pyramid_has_descent(self, rng):
        pts = triangular_pyramid_design().array + 0.05 * rng.standard_normal((4, 3))
        cert = certify_local_minimum(Configuration(pts))
        assert cert.descent_direction_found and not cert.certified

    def test_random_configuration_has_descent(self, rng):
        cert = certify_local_minimum(Configuration(random_unit_rows(rng, 5, 3)))
        assert cert.descent_direction_found

    def test_certified_implies_consistency(self):
        for cfg in (triangular_pyramid_design(), cube_design(), semicircle_design(6)):
            cert = certify_local_minimum(cfg)
            assert (not cert.certified) or (not cert.descent_direction_found and cert.residual <= 1e-6)

    def test_active_set_at_least_three_for_n4_p3(self):
        for cfg in (triangular_pyramid_design(), cube_design()):
            assert len(certify_local_minimum(cfg).active_set) >= 3

    def test_tolerances_must_be_positive(self):
        with pytest.raises(ValueError):
            certify_local_minimum(cube_design(), active_tolerance=0.0)

    def test_tangent_basis(self, rng):
        u = random_unit_rows(rng, 1, 5)[0]
        b = tangent_basis(u)
        np.testing.assert_allclose(b.T @ b, np.eye(4), atol=1e-12)
        np.testing.assert_allclose(b.T @ u, 0.0, atol=1e-12)


@pytest.mark.slow
def test_basin_statistics_n4_p3():
    known = {"pyramid": math.sqrt(5), "cube": 4 / math.sqrt(3)}
    stats = basin_statistics(4, 3, 200, OptimizerSettings(seed=11), known=known)
    assert stats.total == 200
    assert sum(stats.counts.values()) == 200
    # certified terminals must be explained by the two known minima (degenerate families
    # have energy >= sqrt(6) or >= 1/sin(pi/8), both above the cube's)
    for e in stats.unexplained:
        assert e >= min(math.sqrt(6), 1 / math.sin(math.pi / 8)) - 1e-3
    assert stats.counts["pyramid"] > 0
