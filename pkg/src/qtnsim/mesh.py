"""Congestion statistics for unstructured mesh networks of random links.

A mesh instance is ``n_e`` straight segments whose endpoints are drawn
uniformly in the unit square; every pairwise crossing is a point where
link traffic contends.  The toolkit counts crossings exactly (closed
segments, so shared endpoints and collinear overlaps count), maps their
spatial density on a grid, and measures how the congestion at the center
of the mesh scales with ``n_e``.

Geometric predicates use floating-point orientation tests with an exact
rational fallback whenever the determinant magnitude falls below 1e-12,
so verdicts are reliable even for constructed degenerate inputs.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .fitting import FitResult, fit_power_law, fit_proportional, fit_quadratic_coefficient

__all__ = [
    "orientation",
    "segments_intersect",
    "intersection_point",
    "sample_segments",
    "count_intersections",
    "density_map",
    "center_grid_side",
    "center_cell_count",
    "center_cell_scaling",
]

# Below this determinant magnitude the float sign is not trusted and the
# orientation is recomputed in exact rational arithmetic.
DEGENERACY_TOLERANCE = 1e-12


def orientation(a, b, c) -> int:
    """Sign of the turn a->b->c: +1 counter-clockwise, -1 clockwise, 0 collinear."""
    det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if abs(det) >= DEGENERACY_TOLERANCE:
        return 1 if det > 0 else -1
    ax, ay = Fraction(float(a[0])), Fraction(float(a[1]))
    bx, by = Fraction(float(b[0])), Fraction(float(b[1]))
    cx, cy = Fraction(float(c[0])), Fraction(float(c[1]))
    exact = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (exact > 0) - (exact < 0)


def _check_not_degenerate(p, q, name):
    if float(p[0]) == float(q[0]) and float(p[1]) == float(q[1]):
        raise ValueError(f"{name} has zero length; degenerate segments are rejected")


def _on_segment(p, q, x) -> bool:
    # Assumes x collinear with p-q; closed bounding-box membership.
    return (
        min(p[0], q[0]) <= x[0] <= max(p[0], q[0])
        and min(p[1], q[1]) <= x[1] <= max(p[1], q[1])
    )


def segments_intersect(p1, p2, p3, p4) -> bool:
    """Whether closed segments ``p1-p2`` and ``p3-p4`` share a point.

    Endpoint touches and collinear overlaps count as intersecting.
    Zero-length segments raise ``ValueError``.
    """
    _check_not_degenerate(p1, p2, "first segment")
    _check_not_degenerate(p3, p4, "second segment")
    o1 = orientation(p1, p2, p3)
    o2 = orientation(p1, p2, p4)
    o3 = orientation(p3, p4, p1)
    o4 = orientation(p3, p4, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(p1, p2, p3):
        return True
    if o2 == 0 and _on_segment(p1, p2, p4):
        return True
    if o3 == 0 and _on_segment(p3, p4, p1):
        return True
    if o4 == 0 and _on_segment(p3, p4, p2):
        return True
    return False


def intersection_point(p1, p2, p3, p4):
    """A representative shared point of two intersecting segments.

    Proper crossings return the crossing point; endpoint touches return
    the touch point; collinear overlaps return the midpoint of the shared
    sub-segment.  Returns ``None`` when the segments do not intersect.
    """
    if not segments_intersect(p1, p2, p3, p4):
        return None
    o1 = orientation(p1, p2, p3)
    o2 = orientation(p1, p2, p4)
    o3 = orientation(p3, p4, p1)
    o4 = orientation(p3, p4, p2)
    if o1 == o2 == 0:
        # Collinear overlap: order all four endpoints along the segment
        # direction and take the middle two.
        points = [np.asarray(p, dtype=float) for p in (p1, p2, p3, p4)]
        direction = points[1] - points[0]
        order = sorted(points, key=lambda pt: float(pt @ direction))
        return (order[1] + order[2]) / 2.0
    if 0 in (o1, o2, o3, o4):
        for endpoint, seg in ((p3, (p1, p2)), (p4, (p1, p2)), (p1, (p3, p4)), (p2, (p3, p4))):
            if orientation(seg[0], seg[1], endpoint) == 0 and _on_segment(*seg, endpoint):
                return np.array([float(endpoint[0]), float(endpoint[1])])
    a = np.asarray(p1, dtype=float)
    r = np.asarray(p2, dtype=float) - a
    c = np.asarray(p3, dtype=float)
    s = np.asarray(p4, dtype=float) - c
    denom = r[0] * s[1] - r[1] * s[0]
    t = ((c[0] - a[0]) * s[1] - (c[1] - a[1]) * s[0]) / denom
    return a + t * r


def sample_segments(n_e: int, rng) -> np.ndarray:
    """Draw ``n_e`` segments with iid uniform endpoints in the unit square.

    Returns an array of shape ``(n_e, 2, 2)``.  Uniform endpoints are
    distinct with probability one, so no rejection is needed.
    """
    if n_e < 2:
        raise ValueError(f"need at least 2 segments, got {n_e}")
    return rng.random((n_e, 2, 2))


def _cross(u, v):
    return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]


def count_intersections(segments, return_points: bool = True, chunk: int = 1_000_000):
    """Count all pairwise intersections among ``segments`` (brute force).

    Every unordered pair is tested, ``O(n_e**2)`` work, vectorized in
    blocks of ``chunk`` pairs.  Pairs with any orientation determinant
    below the degeneracy tolerance are re-checked through the exact
    scalar predicate.

    Returns ``(count, points)`` where ``points`` is a ``(count, 2)`` array
    of intersection locations, or ``(count, None)`` when
    ``return_points`` is false.
    """
    segs = np.asarray(segments, dtype=float)
    if segs.ndim != 3 or segs.shape[1:] != (2, 2):
        raise ValueError("segments must have shape (n_e, 2, 2)")
    lengths = np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1)
    if np.any(lengths == 0.0):
        raise ValueError("degenerate zero-length segment in input")
    n = segs.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    count = 0
    points = [] if return_points else None
    for start in range(0, iu.size, chunk):
        i = iu[start : start + chunk]
        j = ju[start : start + chunk]
        a, b = segs[i, 0], segs[i, 1]
        c, d = segs[j, 0], segs[j, 1]
        r = b - a
        s = d - c
        d1 = _cross(r, c - a)
        d2 = _cross(r, d - a)
        d3 = _cross(s, a - c)
        d4 = _cross(s, b - c)
        tol = DEGENERACY_TOLERANCE
        suspect = (
            (np.abs(d1) < tol) | (np.abs(d2) < tol) | (np.abs(d3) < tol) | (np.abs(d4) < tol)
        )
        clean_hit = ~suspect & (d1 * d2 < 0.0) & (d3 * d4 < 0.0)
        count += int(np.count_nonzero(clean_hit))
        if return_points:
            t = d3[clean_hit] / (d3[clean_hit] - d4[clean_hit])
            points.append(a[clean_hit] + t[:, None] * r[clean_hit])
        for i_s, j_s in zip(i[suspect], j[suspect]):
            if segments_intersect(segs[i_s, 0], segs[i_s, 1], segs[j_s, 0], segs[j_s, 1]):
                count += 1
                if return_points:
                    pt = intersection_point(segs[i_s, 0], segs[i_s, 1], segs[j_s, 0], segs[j_s, 1])
                    points.append(np.asarray(pt, dtype=float).reshape(1, 2))
    if return_points:
        stacked = np.concatenate(points, axis=0) if points else np.empty((0, 2))
        return count, stacked
    return count, None


def density_map(points, grid_side: int, normalize: bool = False) -> np.ndarray:
    """Bin intersection points into a ``grid_side x grid_side`` histogram.

    Cell ``[ix, iy]`` covers ``[ix/g, (ix+1)/g) x [iy/g, (iy+1)/g)``;
    points on the top/right boundary are absorbed into the last cell.
    With ``normalize`` the histogram sums to 1 (an all-zero map stays
    zero).
    """
    if grid_side < 1:
        raise ValueError(f"grid side must be >= 1, got {grid_side}")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    grid = np.zeros((grid_side, grid_side))
    if pts.size:
        idx = np.clip((pts * grid_side).astype(int), 0, grid_side - 1)
        np.add.at(grid, (idx[:, 0], idx[:, 1]), 1.0)
    if normalize:
        total = grid.sum()
        if total > 0:
            grid = grid / total
    return grid


def center_grid_side(n_e: int) -> int:
    """Analysis grid side ``s = floor(sqrt(n_e)/2)`` (at least 1)."""
    return max(1, math.floor(math.sqrt(n_e) / 2.0))


def center_cell_count(points, n_e: int) -> int:
    """Intersections falling in the center cell of the analysis grid.

    The grid has side ``center_grid_side(n_e)`` and the center cell index
    is ``s // 2`` on each axis (for even ``s`` that is the cell whose
    lower-left corner sits at the square's center; the mirror choice is
    distributionally identical).
    """
    side = center_grid_side(n_e)
    grid = density_map(points, side)
    center = side // 2
    return int(grid[center, center])


def center_cell_scaling(n_values, reps: int, base_seed: int = 0):
    """Monte Carlo center-cell and total-crossing scaling over mesh sizes ``n_values``.

    For each size, ``reps`` independent meshes are sampled; the totals and
    the center-cell counts are aggregated and three scaling laws fitted:

    - total crossings vs ``n_e``: quadratic coefficient and free exponent,
    - center-cell mean vs ``n_e``: proportional coefficient,
    - center-cell standard deviation vs ``n_e``: power law.

    Returns a dict with per-size rows and the four :class:`FitResult`\\ s.
    """
    if reps < 2:
        raise ValueError(f"need at least 2 replications, got {reps}")
    n_values = [int(v) for v in n_values]
    rows = []
    for size_index, n_e in enumerate(n_values):
        totals = np.empty(reps)
        centers = np.empty(reps)
        for rep in range(reps):
            rng = np.random.default_rng((base_seed, size_index, rep))
            segs = sample_segments(n_e, rng)
            count, points = count_intersections(segs)
            totals[rep] = count
            centers[rep] = center_cell_count(points, n_e)
        rows.append(
            {
                "n_e": n_e,
                "reps": reps,
                "grid_side": center_grid_side(n_e),
                "total_mean": float(totals.mean()),
                "total_std": float(totals.std(ddof=1)),
                "center_mean": float(centers.mean()),
                "center_std": float(centers.std(ddof=1)),
            }
        )
    sizes = np.array([row["n_e"] for row in rows], dtype=float)
    total_means = np.array([row["total_mean"] for row in rows])
    center_means = np.array([row["center_mean"] for row in rows])
    center_stds = np.array([row["center_std"] for row in rows])
    return {
        "rows": rows,
        "total_quadratic": fit_quadratic_coefficient(sizes, total_means),
        "total_power": fit_power_law(sizes, total_means),
        "center_mean_fit": fit_proportional(sizes, center_means),
        "center_std_fit": fit_power_law(sizes, center_stds),
    }
