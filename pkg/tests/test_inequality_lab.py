import csv
import math

import numpy as np
import pytest

from seqpred.numerics import kl_bernoulli
from seqpred.inequality_lab import (
    AdmissibilityError,
    GridError,
    GridSpec,
    admissible_distance,
    admissible_lower,
    admissible_threshold,
    check_distance_bound,
    check_kl_quadratic_bound,
    check_lower_bound,
    check_threshold_bound,
    distance_margin,
    kl_quadratic_margin,
    lower_bound_edge_quadratic,
    lower_margin,
    required_b_distance,
    required_b_threshold,
    run_all_scans,
    sample_distance_params,
    sample_lower_params,
    sample_threshold_params,
    threshold_margin,
)

SMALL = GridSpec(y_count=400, z_count=400, refine_per_side=16, param_samples=12)


class TestGridSpec:
    def test_defaults(self):
        spec = GridSpec()
        assert spec.y_count == 2000
        assert spec.z_count == 2000
        assert spec.epsilon == 1e-6

    def test_epsilon_floor(self):
        with pytest.raises(GridError, match="boundary offset"):
            GridSpec(epsilon=1e-7)
        with pytest.raises(GridError):
            GridSpec(epsilon=0.5)

    def test_axis_minimums(self):
        with pytest.raises(GridError):
            GridSpec(y_count=1)

    def test_grids_stay_inside_open_square(self):
        spec = GridSpec(y_count=50, z_count=50, refine_per_side=8)
        y = spec.y_values()
        z = spec.z_values()
        assert y.min() == spec.epsilon and y.max() == 1 - spec.epsilon
        assert z.min() == spec.epsilon and z.max() == 1 - spec.epsilon
        assert len(z) > 50  # refinement adds points near the edges

    def test_refinement_points_shared_across_densities(self):
        # Doubling the base density must not move the near-edge points,
        # otherwise corner margins would wobble between resolutions.
        lo = GridSpec(y_count=100, z_count=100, refine_per_side=8)
        hi = GridSpec(y_count=200, z_count=200, refine_per_side=8)
        lo_edge = [v for v in lo.z_values() if v < 1e-3]
        hi_edge = [v for v in hi.z_values() if v < 1e-3]
        assert set(np.round(lo_edge, 12)) <= set(np.round(hi_edge, 12))


class TestPointMargins:
    def test_distance_margin_on_diagonal(self):
        # With y = z the KL and |y - z| terms vanish.
        for y in (0.1, 0.3, 0.5, 0.9):
            assert distance_margin(y, y, 1.0, 1.5) == pytest.approx(
                2 * y * (1 - y), rel=1e-12
            )

    def test_lower_margin_center_value(self):
        assert lower_margin(0.5, 0.5, 0.5, 2.0) == pytest.approx(0.25)

    def test_threshold_margin_diagonal(self):
        # Below 1/2 the step call is 0 and the margin collapses to A y.
        for y in (0.05, 0.2, 0.45):
            assert threshold_margin(y, y, 2.0, 1.0) == pytest.approx(2 * y)
        for y in (0.55, 0.8):
            assert threshold_margin(y, y, 2.0, 1.0) == pytest.approx(2 * (1 - y))

    def test_kl_quadratic_margin_example(self):
        assert kl_bernoulli(0.9, 0.1) == pytest.approx(1.7578, abs=1e-4)
        assert kl_quadratic_margin(0.9, 0.1) == pytest.approx(
            kl_bernoulli(0.9, 0.1) - 1.28, rel=1e-12
        )


class TestAdmissibility:
    def test_required_constants(self):
        assert required_b_distance(1.0) == pytest.approx(1.5)
        assert required_b_threshold(2.0) == pytest.approx(1.0)
        assert admissible_distance(1.0, 1.5)
        assert not admissible_distance(1.0, 1.2)
        assert admissible_lower(0.5, 1.01)
        assert not admissible_lower(0.5, 0.99)
        assert not admissible_lower(2.0, 0.9)
        assert admissible_threshold(2.0, 1.0)
        assert not admissible_threshold(2.0, 0.5)

    def test_samplers_respect_their_regions(self):
        for sampler, admissible in (
            (sample_distance_params, admissible_distance),
            (sample_lower_params, admissible_lower),
            (sample_threshold_params, admissible_threshold),
        ):
            pairs = sampler(40, seed=123)
            assert len(pairs) == 40
            assert all(admissible(a, b) for a, b in pairs)

    def test_samplers_include_boundary(self):
        pairs = sample_distance_params(10, seed=5)
        on_boundary = [
            (a, b) for a, b in pairs if abs(b - required_b_distance(a)) < 1e-12
        ]
        assert on_boundary

    def test_strict_mode_rejects_inadmissible(self):
        with pytest.raises(AdmissibilityError, match="explore"):
            check_distance_bound(SMALL, pairs=[(1.0, 0.5)])


class TestScans:
    def test_admissible_scans_pass(self):
        for check in (check_distance_bound, check_lower_bound,
                      check_threshold_bound):
            report = check(SMALL)
            assert report.passed
            assert report.min_margin > 0.0
            for row in report.rows:
                assert row.violations == 0

    def test_explore_reports_genuine_violations(self):
        cases = [
            (check_distance_bound, (1.0, 0.5)),
            (check_lower_bound, (0.1, 1.05)),
            (check_threshold_bound, (2.0, 0.0)),
        ]
        for check, pair in cases:
            report = check(SMALL, pairs=[pair], mode="explore")
            row = report.rows[0]
            assert not row.admissible
            assert row.min_margin < 0.0
            assert row.violations > 0
            # explore never gates: the report still renders and the
            # admissible-row pass property is vacuously true
            assert report.passed

    def test_explore_near_boundary_pair_holds_anyway(self):
        # (A, B) = (1, 1.2) sits outside the proven region yet the
        # inequality itself never fails there; the scan must report
        # zero violating cells rather than inventing any.
        report = check_distance_bound(SMALL, pairs=[(1.0, 1.2)], mode="explore")
        row = report.rows[0]
        assert not row.admissible
        assert row.violations == 0
        assert row.min_margin > 0.0

    def test_doubling_density_is_stable(self):
        # Regression property: a finer mesh may move the minimum a
        # little but must not flip a pass, and the margins of the
        # parameterized scans agree within 10%.
        coarse = GridSpec(y_count=350, z_count=350, param_samples=8)
        fine = GridSpec(y_count=700, z_count=700, param_samples=8)
        for check in (check_distance_bound, check_lower_bound,
                      check_threshold_bound):
            a = check(coarse)
            b = check(fine)
            assert a.passed and b.passed
            for row_a, row_b in zip(a.rows, b.rows):
                assert row_b.min_margin <= row_a.min_margin * 1.1
                assert row_b.min_margin >= row_a.min_margin * 0.9

    def test_margins_shrink_toward_admissibility_boundary(self):
        inside = check_distance_bound(SMALL, pairs=[(1.0, 3.0)]).rows[0]
        boundary = check_distance_bound(SMALL, pairs=[(1.0, 1.5)]).rows[0]
        assert boundary.min_margin < inside.min_margin

    def test_threads_do_not_change_results(self):
        spec = GridSpec(y_count=200, z_count=200, param_samples=6)
        serial = check_lower_bound(spec, threads=1)
        parallel = check_lower_bound(spec, threads=4)
        assert [r.min_margin for r in serial.rows] == [
            r.min_margin for r in parallel.rows
        ]
        assert [r.a for r in serial.rows] == [r.a for r in parallel.rows]


class TestKlQuadratic:
    def test_diagonal_is_exactly_zero(self):
        report = check_kl_quadratic_bound(SMALL)
        assert report.diagonal_max_abs == 0.0

    def test_off_diagonal_minimum_positive(self):
        report = check_kl_quadratic_bound(SMALL)
        row = report.rows[0]
        assert row.min_margin > 0.0
        assert row.violations == 0

    def test_minimum_sits_next_to_the_diagonal(self):
        spec = GridSpec(y_count=500, z_count=500, refine_per_side=0)
        row = check_kl_quadratic_bound(spec).rows[0]
        grid_step = (1 - 2 * spec.epsilon) / (spec.y_count - 1)
        assert abs(row.argmin_y - row.argmin_z) <= 2 * grid_step + 1e-12


class TestEdgeQuadratic:
    def test_edge_values_are_the_admissibility_product(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            b = float(rng.uniform(1.01, 4.0))
            a = float(rng.uniform(1.0, 8.0)) / (2 * b)
            expected = (2 * a * b - 1) * (b - 1)
            assert lower_bound_edge_quadratic(0.0, a, b) == pytest.approx(
                expected, abs=1e-12
            )
            assert lower_bound_edge_quadratic(1.0, a, b) == pytest.approx(
                expected, abs=1e-12
            )

    def test_center_value(self):
        for a, b in [(0.4, 1.3), (2.0, 1.1)]:
            assert lower_bound_edge_quadratic(0.5, a, b) == pytest.approx(
                2 * a * (b - 0.5) ** 2, rel=1e-12
            )

    def test_nonnegative_on_admissible_samples(self):
        for a, b in sample_lower_params(30, seed=3):
            zs = np.linspace(0, 1, 101)
            values = [lower_bound_edge_quadratic(z, a, b) for z in zs]
            assert min(values) >= -1e-12


class TestThresholdMinimizerShape:
    def test_lower_half_argmin_hugs_one_half_for_confident_y(self):
        # For y >= 1/2 the margin decreases in z all the way up to the
        # half line, so on the lower half grid the minimizing z is the
        # last point below 1/2.
        spec = GridSpec(y_count=101, z_count=400, refine_per_side=0)
        z = spec.z_values()
        lower_half = z[z < 0.5]
        a, b = 2.0, 1.0
        for y in (0.5, 0.7, 0.95):
            margins = [threshold_margin(y, zi, a, b) for zi in lower_half]
            argmin = lower_half[int(np.argmin(margins))]
            assert argmin == lower_half[-1]
            assert 0.5 - argmin <= (z[1] - z[0]) + 1e-12


class TestReports:
    def test_csv_layout(self, tmp_path):
        report = check_distance_bound(SMALL)
        path = tmp_path / "margins.csv"
        report.write_csv(path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [
            "a", "b", "admissible", "min_margin", "argmin_y", "argmin_z",
            "violations", "y_count", "z_count", "epsilon",
        ]
        assert len(rows) == 1 + len(report.rows)
        assert float(rows[1][3]) == report.rows[0].min_margin

    def test_run_all_scans_shapes(self):
        strict, explored = run_all_scans(
            SMALL, explore_pairs={"distance": [(1.0, 0.5)]},
        )
        assert [r.inequality for r in strict] == [
            "distance", "lower", "threshold", "kl_quadratic",
        ]
        assert all(r.passed for r in strict)
        assert len(explored) == 1 and explored[0].mode == "explore"

    def test_run_all_scans_rejects_unknown_name(self):
        with pytest.raises(GridError, match="unknown inequality"):
            run_all_scans(SMALL, explore_pairs={"pinsker": [(1.0, 1.0)]})
