"""Mesh crossing geometry against an exact rational oracle.

Every predicate verdict is checked against an independent implementation
written entirely in Fraction arithmetic (floats embed exactly), both on
generic random pairs and on a half-integer grid that is dense in shared
endpoints, T-junctions, and collinear overlaps.
"""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from qtnsim.mesh import (
    center_cell_count,
    center_cell_scaling,
    center_grid_side,
    count_intersections,
    density_map,
    intersection_point,
    orientation,
    sample_segments,
    segments_intersect,
)

# Two segments with iid uniform endpoints in a square cross with
# probability 25/108: four points are in convex position with
# probability 25/36 and exactly one of the three pairings crosses.
CROSSING_PROBABILITY = Fraction(25, 108)


def frac_orientation(a, b, c):
    ax, ay = Fraction(a[0]), Fraction(a[1])
    bx, by = Fraction(b[0]), Fraction(b[1])
    cx, cy = Fraction(c[0]), Fraction(c[1])
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (det > 0) - (det < 0)


def frac_on_segment(p, q, x):
    return (
        min(p[0], q[0]) <= x[0] <= max(p[0], q[0])
        and min(p[1], q[1]) <= x[1] <= max(p[1], q[1])
    )


def frac_intersect(p1, p2, p3, p4):
    o1 = frac_orientation(p1, p2, p3)
    o2 = frac_orientation(p1, p2, p4)
    o3 = frac_orientation(p3, p4, p1)
    o4 = frac_orientation(p3, p4, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and frac_on_segment(p1, p2, p3):
        return True
    if o2 == 0 and frac_on_segment(p1, p2, p4):
        return True
    if o3 == 0 and frac_on_segment(p3, p4, p1):
        return True
    if o4 == 0 and frac_on_segment(p3, p4, p2):
        return True
    return False


def point_segment_distance(point, a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = np.asarray(point, dtype=float)
    d = b - a
    t = float(np.clip((p - a) @ d / (d @ d), 0.0, 1.0))
    return float(np.linalg.norm(a + t * d - p))


class TestOrientation:
    def test_basic_signs(self):
        assert orientation((0, 0), (1, 0), (0, 1)) == 1
        assert orientation((0, 0), (1, 0), (0, -1)) == -1
        assert orientation((0, 0), (1, 1), (2, 2)) == 0

    def test_tiny_determinant_uses_exact_sign(self):
        # Determinant ~1e-13 falls below the float trust threshold; the
        # rational fallback must still resolve the true sign.
        above = (0.5, 0.5 + 1e-13)
        below = (0.5, 0.5 - 1e-13)
        assert orientation((0, 0), (1, 1), above) == 1
        assert orientation((0, 0), (1, 1), below) == -1


class TestPredicateAgainstOracle:
    def test_random_pairs(self):
        rng = np.random.default_rng(100)
        segs = rng.random((2000, 2, 2, 2))
        for s in segs:
            p1, p2, p3, p4 = s[0, 0], s[0, 1], s[1, 0], s[1, 1]
            assert segments_intersect(p1, p2, p3, p4) == frac_intersect(
                tuple(p1), tuple(p2), tuple(p3), tuple(p4)
            )

    def test_half_integer_grid_pairs(self):
        # Draw endpoints from {0, 1/2, 1, 3/2, 2}^2: shared endpoints,
        # T-junctions, and collinear overlaps occur constantly.
        rng = np.random.default_rng(200)
        grid = [v / 2.0 for v in range(5)]
        checked = 0
        while checked < 3000:
            idx = rng.integers(0, 5, size=8)
            p1 = (grid[idx[0]], grid[idx[1]])
            p2 = (grid[idx[2]], grid[idx[3]])
            p3 = (grid[idx[4]], grid[idx[5]])
            p4 = (grid[idx[6]], grid[idx[7]])
            if p1 == p2 or p3 == p4:
                continue
            assert segments_intersect(p1, p2, p3, p4) == frac_intersect(p1, p2, p3, p4)
            checked += 1

    def test_constructed_cases(self):
        assert segments_intersect((0, 0), (1, 1), (0, 1), (1, 0))
        assert segments_intersect((0, 0), (1, 1), (1, 1), (2, 0))  # shared endpoint
        assert segments_intersect((0, 0), (2, 0), (1, 0), (1, 1))  # T-junction
        assert segments_intersect((0, 0), (2, 2), (1, 1), (3, 3))  # collinear overlap
        assert not segments_intersect((0, 0), (1, 1), (2, 2), (3, 3))
        assert not segments_intersect((0, 0), (1, 0), (0, 1), (1, 1))  # parallel

    def test_degenerate_segment_rejected(self):
        with pytest.raises(ValueError, match="zero length"):
            segments_intersect((0, 0), (0, 0), (1, 0), (1, 1))
        with pytest.raises(ValueError, match="zero length"):
            segments_intersect((1, 0), (1, 1), (0.5, 0.5), (0.5, 0.5))


class TestIntersectionPoint:
    def test_disjoint_returns_none(self):
        assert intersection_point((0, 0), (1, 0), (0, 1), (1, 1)) is None

    def test_proper_crossing(self):
        pt = intersection_point((0, 0), (1, 1), (0, 1), (1, 0))
        assert pt == pytest.approx([0.5, 0.5])

    def test_endpoint_touch(self):
        pt = intersection_point((0, 0), (1, 1), (1, 1), (2, 0))
        assert pt == pytest.approx([1.0, 1.0])

    def test_t_junction(self):
        pt = intersection_point((0, 0), (2, 0), (1, 0), (1, 1))
        assert pt == pytest.approx([1.0, 0.0])

    def test_collinear_overlap_midpoint(self):
        pt = intersection_point((0, 0), (2, 2), (1, 1), (3, 3))
        assert pt == pytest.approx([1.5, 1.5])

    def test_point_lies_on_both_segments(self):
        rng = np.random.default_rng(300)
        found = 0
        while found < 300:
            s = rng.random((2, 2, 2))
            pt = intersection_point(s[0, 0], s[0, 1], s[1, 0], s[1, 1])
            if pt is None:
                continue
            assert point_segment_distance(pt, s[0, 0], s[0, 1]) < 1e-9
            assert point_segment_distance(pt, s[1, 0], s[1, 1]) < 1e-9
            found += 1


class TestCountIntersections:
    def test_matches_scalar_predicate_random(self):
        rng = np.random.default_rng(400)
        segs = sample_segments(120, rng)
        count, points = count_intersections(segs)
        expected = sum(
            segments_intersect(segs[i, 0], segs[i, 1], segs[j, 0], segs[j, 1])
            for i, j in itertools.combinations(range(len(segs)), 2)
        )
        assert count == expected
        assert points.shape == (count, 2)

    def test_matches_oracle_on_degenerate_grid(self):
        rng = np.random.default_rng(500)
        grid = np.array([v / 2.0 for v in range(5)])
        segs = []
        while len(segs) < 40:
            pts = grid[rng.integers(0, 5, size=4)].reshape(2, 2)
            if not np.array_equal(pts[0], pts[1]):
                segs.append(pts)
        segs = np.array(segs)
        count, _ = count_intersections(segs)
        expected = sum(
            frac_intersect(
                tuple(segs[i, 0]), tuple(segs[i, 1]), tuple(segs[j, 0]), tuple(segs[j, 1])
            )
            for i, j in itertools.combinations(range(len(segs)), 2)
        )
        assert count == expected

    def test_chunking_does_not_change_count(self):
        rng = np.random.default_rng(600)
        segs = sample_segments(90, rng)
        full, _ = count_intersections(segs)
        chunked, _ = count_intersections(segs, chunk=101)
        assert full == chunked

    def test_crossing_fraction_matches_convex_position_argument(self):
        # A single mesh of n segments estimates the crossing probability
        # with O(1/sqrt(n)) error because pairs sharing a segment are
        # correlated, so average over independent meshes.
        fractions = []
        for seed in range(12):
            rng = np.random.default_rng(1000 + seed)
            segs = sample_segments(1500, rng)
            count, _ = count_intersections(segs, return_points=False)
            fractions.append(count / (1500 * 1499 / 2))
        assert float(np.mean(fractions)) == pytest.approx(
            float(CROSSING_PROBABILITY), rel=0.02
        )

    def test_input_validation(self):
        with pytest.raises(ValueError, match="shape"):
            count_intersections(np.zeros((3, 2)))
        bad = np.array([[[0.0, 0.0], [1.0, 1.0]], [[0.5, 0.5], [0.5, 0.5]]])
        with pytest.raises(ValueError, match="degenerate"):
            count_intersections(bad)

    def test_sample_segments_validation(self):
        with pytest.raises(ValueError, match="at least 2"):
            sample_segments(1, np.random.default_rng(0))


class TestDensityMap:
    def test_manual_binning(self):
        pts = [(0.1, 0.1), (0.9, 0.9), (0.9, 0.95), (0.499, 0.501)]
        grid = density_map(pts, 2)
        assert grid[0, 0] == 1
        assert grid[1, 1] == 2
        assert grid[0, 1] == 1

    def test_boundary_points_absorbed(self):
        grid = density_map([(1.0, 1.0), (0.0, 1.0)], 4)
        assert grid[3, 3] == 1
        assert grid[0, 3] == 1

    def test_normalize(self):
        grid = density_map([(0.2, 0.2), (0.7, 0.7)], 3, normalize=True)
        assert grid.sum() == pytest.approx(1.0)
        assert density_map([], 3, normalize=True).sum() == 0.0

    def test_validation(self):
        with pytest.raises(ValueError, match="grid side"):
            density_map([(0.5, 0.5)], 0)


class TestCenterCell:
    def test_grid_side_values(self):
        assert center_grid_side(125) == 5
        assert center_grid_side(250) == 7
        assert center_grid_side(500) == 11
        assert center_grid_side(1000) == 15
        assert center_grid_side(2000) == 22
        assert center_grid_side(2) == 1

    def test_center_cell_count_manual(self):
        # side = 5 for n_e = 125, center cell index 2 covers [2/5, 3/5).
        pts = [(0.55, 0.55), (0.45, 0.59), (0.39, 0.5), (0.61, 0.5)]
        assert center_cell_count(pts, 125) == 2


class TestCenterCellScaling:
    def test_smoke_rows_and_fits(self):
        result = center_cell_scaling((64, 125, 216), reps=6, base_seed=1)
        rows = result["rows"]
        assert [row["n_e"] for row in rows] == [64, 125, 216]
        assert all(row["reps"] == 6 for row in rows)
        assert rows[0]["grid_side"] == center_grid_side(64)
        for row in rows:
            pairs = row["n_e"] * (row["n_e"] - 1) / 2
            assert row["total_mean"] == pytest.approx(
                float(CROSSING_PROBABILITY) * pairs, rel=0.1
            )
        assert result["total_power"]["exponent"] == pytest.approx(2.0, abs=0.15)
        assert result["total_quadratic"]["coefficient"] == pytest.approx(
            float(CROSSING_PROBABILITY) / 2, rel=0.1
        )
        assert result["center_mean_fit"].params["coefficient"] > 0

    def test_seeding_convention_reproducible(self):
        # Row statistics must come from default_rng((base_seed, size_index, rep)).
        result = center_cell_scaling((64, 125, 216), reps=3, base_seed=5)
        totals = []
        for rep in range(3):
            rng = np.random.default_rng((5, 1, rep))
            count, _ = count_intersections(sample_segments(125, rng), return_points=False)
            totals.append(count)
        assert result["rows"][1]["total_mean"] == pytest.approx(np.mean(totals), rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError, match="at least 2 replications"):
            center_cell_scaling((125, 250, 500), reps=1)
        with pytest.raises(ValueError, match="at least 3"):
            center_cell_scaling((125, 250), reps=2)
