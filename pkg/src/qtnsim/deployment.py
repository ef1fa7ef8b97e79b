"""Physical placement of tree networks on a service area.

Two embeddings are supported.  ``surface_covering`` nests disk coverings:
a node's service disk is covered by the ``k`` service disks of its
children, shrunk by the covering ratio ``a_k`` (the largest disk radius
that ``k`` unit disks can cover).  ``square_lattice`` (k = 4 only) tiles
a square with a quadtree of routers at block centers, which grows by
``a_4 = 2`` per layer.

Channel lengths form the geometric ladder ``l0 * a_k**(n - i)`` between
layers ``i-1`` and ``i``; channels longer than the elementary link length
``l0`` are subdivided by repeater stations every ``l0``.

Covering ratios for k in {3, 4, 7} are exact (2/sqrt(3), sqrt(2), 2);
the other entries of the bundled table were produced once by the local
optimizer in ``tools/build_covering_table.py`` and are validated against
the feasibility sampler at load time.
"""

from __future__ import annotations

import functools
import importlib.resources
import json
import math
from dataclasses import dataclass

import numpy as np

from .topology import NodeLabel, TreeTopology

__all__ = [
    "CoveringSolution",
    "DeploymentPlan",
    "coverage_radius",
    "feasibility_check",
    "optimize_covering",
    "covering_table",
    "covering_table_digest",
    "growth_rate",
    "repeater_count",
    "layout",
    "export_layout",
]

COVERING_DATA = "disk_coverings.json"
SUPPORTED_MODES = ("surface_covering", "square_lattice")


@dataclass(frozen=True)
class CoveringSolution:
    """``k`` unit disks at ``centers`` covering the disk of ``radius``."""

    k: int
    radius: float
    centers: tuple[tuple[float, float], ...]
    source: str = "optimizer"

    def __post_init__(self):
        if len(self.centers) != self.k:
            raise ValueError(f"expected {self.k} centers, got {len(self.centers)}")


def coverage_radius(centers) -> float:
    """Largest disk radius around the origin covered by unit disks at ``centers``.

    Exact up to float arithmetic: the boundary of the union of closed unit
    disks lies on circle arcs not interior to any other disk, so the
    covered radius is the smallest origin-distance over all such arc
    points (arc endpoints, or the point of a circle nearest the origin
    when it is exposed).  Returns 0.0 when the origin itself is uncovered.
    """
    pts = np.asarray(centers, dtype=float).reshape(-1, 2)
    norms = np.hypot(pts[:, 0], pts[:, 1])
    if norms.min() > 1.0:
        return 0.0
    best = math.inf
    two_pi = 2.0 * math.pi
    for i in range(len(pts)):
        covered: list[tuple[float, float]] = []
        fully_covered = False
        for j in range(len(pts)):
            if i == j:
                continue
            dx, dy = pts[j] - pts[i]
            d = math.hypot(dx, dy)
            if d == 0.0:
                fully_covered = True  # coincident disk covers this circle
                break
            if d >= 2.0:
                continue
            half = math.acos(d / 2.0)
            mid = math.atan2(dy, dx)
            lo, hi = mid - half, mid + half
            lo %= two_pi
            hi = lo + 2.0 * half
            if hi <= two_pi:
                covered.append((lo, hi))
            else:
                covered.append((lo, two_pi))
                covered.append((0.0, hi - two_pi))
        if fully_covered:
            continue
        covered.sort()
        # Walk the merged covered intervals; everything between them is
        # exposed.  Gaps narrower than 1e-9 rad are tangent contacts of
        # closed disks (exactly-touching arcs split by rounding), not
        # real exposure.
        exposed: list[tuple[float, float]] = []
        cursor = 0.0
        for lo, hi in covered:
            if lo > cursor + 1e-9:
                exposed.append((cursor, lo))
            cursor = max(cursor, hi)
        if cursor < two_pi - 1e-9:
            exposed.append((cursor, two_pi))
        if not exposed:
            continue
        cx, cy = pts[i]
        nearest_angle = math.atan2(-cy, -cx) % two_pi if norms[i] > 0 else 0.0
        for lo, hi in exposed:
            for angle in (lo, hi):
                best = min(best, math.hypot(cx + math.cos(angle), cy + math.sin(angle)))
            if lo <= nearest_angle <= hi or lo <= nearest_angle + two_pi <= hi:
                best = min(best, abs(norms[i] - 1.0))
    if best is math.inf:
        # All circle boundaries are interior to the union: cannot happen
        # with finitely many disks, kept as a defensive fallback.
        return float(norms.min() + 1.0)
    return float(best)


def feasibility_check(
    radius: float,
    centers,
    tol: float = 1e-9,
    n_radial: int = 160,
    n_angular: int = 512,
) -> tuple[bool, float]:
    """Sampling check that the disk of ``radius`` is covered by unit disks.

    Samples area-uniform radial rings plus the exact boundary circle and
    measures the worst nearest-center distance.  Returns
    ``(ok, max_excess)`` where ``ok`` means every sample is within
    ``1 + tol`` of some center.
    """
    pts = np.asarray(centers, dtype=float).reshape(-1, 2)
    radii = radius * np.sqrt(np.linspace(0.0, 1.0, n_radial))
    radii[-1] = radius
    angles = np.linspace(0.0, 2.0 * math.pi, n_angular, endpoint=False)
    rr, aa = np.meshgrid(radii, angles, indexing="ij")
    samples = np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1).reshape(-1, 2)
    diffs = samples[:, None, :] - pts[None, :, :]
    nearest = np.sqrt((diffs**2).sum(axis=2)).min(axis=1)
    max_excess = float(nearest.max() - 1.0)
    return max_excess <= tol, max_excess


def _ring(count: int, ring_radius: float, phase: float = 0.0) -> np.ndarray:
    angles = phase + 2.0 * math.pi * np.arange(count) / max(count, 1)
    return np.column_stack([ring_radius * np.cos(angles), ring_radius * np.sin(angles)])


def _start_layouts(k: int, rng) -> list[np.ndarray]:
    starts = []
    for ring_radius in (0.5, 0.8, 1.1, 1.5):
        starts.append(_ring(k, ring_radius))
    for inner in (1, 2):
        if k - inner >= 3:
            for ring_radius in (0.9, 1.2, 1.6):
                outer = _ring(k - inner, ring_radius)
                core = _ring(inner, 0.3) if inner > 1 else np.zeros((1, 2))
                starts.append(np.vstack([core, outer]))
    if k >= 9:
        for split in (3, 4):
            for r_in, r_out in ((0.55, 1.5), (0.7, 1.7)):
                starts.append(
                    np.vstack([_ring(split, r_in, phase=math.pi / split), _ring(k - split, r_out)])
                )
    for _ in range(4):
        starts.append(rng.normal(scale=0.9, size=(k, 2)))
    return starts


def optimize_covering(k: int, seed: int = 0, polish_rounds: int = 3) -> CoveringSolution:
    """Search center placements maximizing the covered disk radius.

    Multi-start Nelder-Mead over the 2k center coordinates with the exact
    arc-based objective.  A local optimizer only: results are recorded as
    lower bounds on the true covering ratio and frozen into the bundled
    table by ``tools/build_covering_table.py``.
    """
    from scipy.optimize import minimize

    if k < 2:
        raise ValueError(f"need k >= 2 disks, got {k}")
    rng = np.random.default_rng(seed)

    def objective(flat):
        return -coverage_radius(flat.reshape(-1, 2))

    best_val = -math.inf
    best_x = None
    for start in _start_layouts(k, rng):
        result = minimize(
            objective,
            start.ravel(),
            method="Nelder-Mead",
            options={"maxiter": 4000, "xatol": 1e-9, "fatol": 1e-12},
        )
        if -result.fun > best_val:
            best_val = -result.fun
            best_x = result.x
    for _ in range(polish_rounds):
        for scale in (0.05, 0.01):
            start = best_x + rng.normal(scale=scale, size=best_x.shape)
            result = minimize(
                objective,
                start,
                method="Nelder-Mead",
                options={"maxiter": 6000, "xatol": 1e-10, "fatol": 1e-13},
            )
            if -result.fun > best_val:
                best_val = -result.fun
                best_x = result.x
    centers = tuple((float(x), float(y)) for x, y in best_x.reshape(-1, 2))
    return CoveringSolution(k=k, radius=float(best_val), centers=centers)


@functools.lru_cache(maxsize=1)
def _load_covering_data() -> tuple[dict[int, CoveringSolution], str]:
    import hashlib

    raw = importlib.resources.files("qtnsim.data").joinpath(COVERING_DATA).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    payload = json.loads(raw)
    table: dict[int, CoveringSolution] = {}
    for entry in payload["entries"]:
        sol = CoveringSolution(
            k=int(entry["k"]),
            radius=float(entry["radius"]),
            centers=tuple((float(x), float(y)) for x, y in entry["centers"]),
            source=str(entry.get("source", "optimizer")),
        )
        table[sol.k] = sol
    previous = 0.0
    for k in sorted(table):
        sol = table[k]
        if not sol.radius < math.sqrt(k):
            raise ValueError(f"covering table entry k={k} violates radius < sqrt(k)")
        if sol.radius < previous:
            raise ValueError(f"covering table radii must be nondecreasing; k={k} regresses")
        previous = sol.radius
        ok, excess = feasibility_check(sol.radius, sol.centers)
        if not ok:
            raise ValueError(
                f"covering table entry k={k} fails feasibility by {excess:.3e}"
            )
    return table, digest


def covering_table(k_max: int = 12) -> dict[int, CoveringSolution]:
    """Validated covering solutions for k in 2..k_max (table extends to 12)."""
    table, _ = _load_covering_data()
    if k_max < 2 or k_max > max(table):
        raise ValueError(f"k_max must be in 2..{max(table)}, got {k_max}")
    return {k: sol for k, sol in table.items() if k <= k_max}


def covering_table_digest() -> str:
    """sha256 of the bundled covering data file, for run manifests."""
    _, digest = _load_covering_data()
    return digest


def growth_rate(k: int, mode: str) -> float:
    """Per-layer channel growth rate ``a_k`` of an embedding mode.

    ``surface_covering`` looks up the covering ratio (always below
    ``sqrt(k)``); ``square_lattice`` is defined for k = 4 only, with the
    exact rate 2.
    """
    if mode == "square_lattice":
        if k != 4:
            raise ValueError(f"square_lattice requires k = 4, got k = {k}")
        return 2.0
    if mode == "surface_covering":
        table = covering_table()
        if k not in table:
            raise ValueError(f"no covering solution for k = {k}; table covers 2..{max(table)}")
        return table[k].radius
    raise ValueError(f"unknown mode {mode!r}; choose from {SUPPORTED_MODES}")


def repeater_count(channel_length: float, l0: float) -> int:
    """Repeater stations needed to subdivide a channel into <= l0 hops.

    ``ceil(length / l0) - 1`` with a 1e-9 relative guard so float slop in
    geometric lengths (e.g. sqrt(2)**2) does not add a phantom station.
    """
    if l0 <= 0:
        raise ValueError(f"elementary link length must be positive, got {l0}")
    if channel_length < l0:
        raise ValueError(f"channel length {channel_length} shorter than l0 {l0}")
    return math.ceil(channel_length / l0 - 1e-9) - 1


@dataclass(frozen=True)
class DeploymentPlan:
    """Geometric embedding of a tree on the plane.

    ``channel_lengths[d]`` is the nominal channel length between depth
    ``d`` and ``d+1`` (the geometric ladder ``l0 * a_k**(n-d-1)``), and
    ``repeater_counts[d]`` the stations per channel on that interval.
    ``positions`` maps every node label to plane coordinates; ``area`` is
    the served region (``pi * (a**n l0)**2`` for coverings,
    ``2 * (a**n l0)**2`` for the square lattice).
    """

    mode: str
    k: int
    n: int
    a_k: float
    l0: float
    channel_lengths: tuple[float, ...]
    repeater_counts: tuple[int, ...]
    positions: dict[NodeLabel, tuple[float, float]]
    area: float

    def coverage_radius_at(self, depth: int) -> float:
        """Service radius of a depth-``depth`` node, ``l0 * a_k**(n-depth)``."""
        if not (0 <= depth <= self.n):
            raise ValueError(f"depth {depth} outside 0..{self.n}")
        return self.l0 * self.a_k ** (self.n - depth)


def _surface_positions(topology: TreeTopology, centers, a_k: float, l0: float):
    offsets = np.asarray(centers, dtype=float)
    positions: dict[NodeLabel, tuple[float, float]] = {(): (0.0, 0.0)}
    frontier: list[NodeLabel] = [()]
    for depth in range(topology.n):
        child_scale = l0 * a_k ** (topology.n - depth - 1)
        next_frontier = []
        for label in frontier:
            px, py = positions[label]
            for digit in range(topology.k):
                child = label + (digit,)
                positions[child] = (
                    float(px + child_scale * offsets[digit, 0]),
                    float(py + child_scale * offsets[digit, 1]),
                )
                next_frontier.append(child)
        frontier = next_frontier
    return positions


def _square_positions(topology: TreeTopology, l0: float):
    # Digits index quadrants: bit 0 is the x half, bit 1 the y half.
    spacing = math.sqrt(2.0) * l0
    side_cells = 2**topology.n
    half = side_cells * spacing / 2.0
    positions: dict[NodeLabel, tuple[float, float]] = {}
    for depth in range(topology.n + 1):
        block = 2 ** (topology.n - depth)
        for label in topology.nodes_at_depth(depth):
            ix = iy = 0
            for digit in label:
                ix = 2 * ix + (digit & 1)
                iy = 2 * iy + (digit >> 1)
            cx = (ix * block + block / 2.0) * spacing - half
            cy = (iy * block + block / 2.0) * spacing - half
            positions[label] = (cx, cy)
    return positions


def layout(topology: TreeTopology, mode: str = "surface_covering", l0: float = 1.0) -> DeploymentPlan:
    """Embed ``topology`` on the plane under the chosen deployment mode.

    Children of a surface-covering node sit at the covering centers
    scaled by the child service radius, so the union of the children's
    disks covers the parent's disk (children may overhang its rim).
    Square-lattice routers sit at quadrant-block centers, which makes
    geometric link lengths match the nominal ladder exactly.
    """
    if l0 <= 0:
        raise ValueError(f"elementary link length must be positive, got {l0}")
    if mode not in SUPPORTED_MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {SUPPORTED_MODES}")
    a_k = growth_rate(topology.k, mode)
    if mode == "surface_covering":
        centers = covering_table()[topology.k].centers
        positions = _surface_positions(topology, centers, a_k, l0)
        area = math.pi * (a_k**topology.n * l0) ** 2
    else:
        positions = _square_positions(topology, l0)
        area = 2.0 * (a_k**topology.n * l0) ** 2
    lengths = tuple(l0 * a_k ** (topology.n - d - 1) for d in range(topology.n))
    repeaters = tuple(repeater_count(length, l0) for length in lengths)
    return DeploymentPlan(
        mode=mode,
        k=topology.k,
        n=topology.n,
        a_k=a_k,
        l0=l0,
        channel_lengths=lengths,
        repeater_counts=repeaters,
        positions=positions,
        area=area,
    )


def export_layout(plan: DeploymentPlan, path) -> None:
    """Write the node placements as tabular text (label, depth, x_km, y_km).

    Labels are dot-separated digit strings ("root" for the root), which
    stays unambiguous for two-digit branching factors.
    """
    import csv

    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["label", "depth", "x_km", "y_km"])
        for label in sorted(plan.positions, key=lambda lab: (len(lab), lab)):
            x, y = plan.positions[label]
            name = ".".join(str(d) for d in label) or "root"
            writer.writerow([name, len(label), repr(float(x)), repr(float(y))])
