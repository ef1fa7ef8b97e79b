"""Cycle-based simulation of entanglement routing on a tree network.

Each cycle executes five phases in a fixed, documented order:

1. expire entangled pairs older than ``coherence`` and requests older
   than ``request_timeout`` (age = current cycle - creation cycle),
2. sample new requests: every unordered leaf pair independently with
   probability ``p0 = N p / n0``, a hit enqueuing a batch of ``b``
   requests with the same endpoints (completed individually),
3. every free slot on every edge attempts entanglement independently
   with probability ``p_e``,
4. scan pending requests in arrival (id) order; a request completes when
   every edge on its routing path holds at least one unexpired pair,
   consuming the oldest pair of each edge,
5. record per-cycle metrics.

The order makes a pair generated in phase 3 usable by phase 4 of the
same cycle, and gives an expired request a latency of exactly
``request_timeout``.  A single run is strictly sequential and
deterministic in ``seed``; concurrency lives above, in whole-run
replication.

Phase 2 draws the number of hit pairs from Binomial(n0, p0) and then
picks that many distinct pairs uniformly, which is distributionally
identical to the per-pair Bernoulli description but costs O(hits), not
O(N^2), per cycle.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .topology import NodeLabel, TreeTopology

__all__ = [
    "SimConfig",
    "MetricsRecord",
    "CycleSeries",
    "Simulation",
    "run",
    "run_schedule",
    "pair_request_probability",
    "slot_occupancy_equilibrium",
]


def pair_request_probability(n_leaves: int, p: float) -> float:
    """Per-pair hit probability ``p0 = N p / n0``, ``n0 = C(N,2)``.

    Calibrated so each end node initiates about ``p`` requests per cycle:
    hits arrive at ``N p`` per cycle network-wide, and a hit carries a
    batch of ``b`` individually completed requests, so offered load
    scales with the batch size.
    """
    n0 = n_leaves * (n_leaves - 1) // 2
    return n_leaves * p / n0


def slot_occupancy_equilibrium(p_e: float, coherence: int) -> float:
    """Stationary occupancy of one slot with no consumption.

    The slot's two-state chain under the phase order above (expire, then
    regenerate within the same cycle) solves exactly to
    ``coherence * p_e / (1 - p_e + coherence * p_e)``; the familiar
    ``coherence * p_e / (1 + coherence * p_e)`` is its small-``p_e``
    limit.
    """
    return coherence * p_e / (1.0 - p_e + coherence * p_e)


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one simulation run."""

    topology: TreeTopology
    p_e: float = 0.001
    coherence: int = 1000
    request_timeout: int = 1000
    p: float = 0.0
    b: int = 1
    warmup: int = 2000
    measure: int = 10000
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.p_e <= 1.0):
            raise ValueError(f"p_e must be in (0, 1], got {self.p_e}")
        if self.coherence < 1:
            raise ValueError(f"coherence must be >= 1, got {self.coherence}")
        if self.request_timeout < 1:
            raise ValueError(f"request_timeout must be >= 1, got {self.request_timeout}")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if self.b < 1:
            raise ValueError(f"b must be >= 1, got {self.b}")
        if self.warmup < 0:
            raise ValueError(f"warmup must be >= 0, got {self.warmup}")
        if self.measure < 1:
            raise ValueError(f"measure must be >= 1, got {self.measure}")
        p0 = self.pair_probability
        if not (0.0 <= p0 <= 1.0):
            raise ValueError(f"pair probability p0 = {p0} outside [0, 1]")

    @property
    def pair_probability(self) -> float:
        return pair_request_probability(self.topology.num_leaves, self.p)


@dataclass(frozen=True)
class MetricsRecord:
    """Aggregated result of one run.

    ``success_rate`` and ``mean_latency`` cover requests that arrived in
    the measurement window and are None when no such request exists.
    Expired requests enter the latency mean at ``request_timeout``.
    ``mean_buffered`` averages occupied slots over the measurement
    cycles; ``mean_buffered_router`` restricts to router-router edges
    (leaf edges excluded).
    """

    success_rate: float | None
    mean_latency: float | None
    mean_buffered: float
    mean_buffered_router: float
    completed: int
    expired: int
    pairs_created: int
    pairs_consumed: int
    pairs_expired: int
    seed: int
    config: SimConfig
    series: "CycleSeries | None" = None


@dataclass(frozen=True)
class CycleSeries:
    """Per-cycle records of a run, attributed to the resolution cycle.

    ``completed[c]`` and ``expired[c]`` count requests resolved at cycle
    ``c`` (an expiry resolves at arrival + request_timeout);
    ``latency_sum[c]`` sums their latencies including the timeout of
    each expiry.  ``occupied``/``occupied_router`` are slot counts at
    the record phase.
    """

    arrived: np.ndarray
    completed: np.ndarray
    expired: np.ndarray
    latency_sum: np.ndarray
    occupied: np.ndarray
    occupied_router: np.ndarray
    pairs_created: np.ndarray
    pairs_consumed: np.ndarray
    pairs_expired: np.ndarray

    def __len__(self) -> int:
        return len(self.occupied)


def _unrank_pair(index: int, n: int) -> tuple[int, int]:
    """Pair (i, j), i < j, at position ``index`` in lexicographic order."""
    disc = (2 * n - 1) ** 2 - 8 * index
    i = (2 * n - 1 - math.isqrt(disc)) // 2
    while i * (2 * n - i - 1) // 2 > index:
        i -= 1
    while (i + 1) * (2 * n - i - 2) // 2 <= index:
        i += 1
    j = index - i * (2 * n - i - 1) // 2 + i + 1
    return i, j


class Simulation:
    """Mutable engine executing the five-phase cycle.

    Tests may preload state through :meth:`inject_pair` and
    :meth:`inject_request`; injected items behave as if created at the
    start of the upcoming cycle.
    """

    def __init__(self, cfg: SimConfig, p_schedule=None, window=None):
        self.cfg = cfg
        top = cfg.topology
        self.cycle = 0
        self.rng = np.random.default_rng(cfg.seed)
        # Optional [lo, hi) arrival window: requests arriving inside it
        # accumulate the counted_* totals when they resolve.
        self._window = window
        self.counted_completed = 0
        self.counted_expired = 0
        self.counted_latency_sum = 0
        # Edge indexing: edges grouped by child depth 1..n, lexicographic
        # within a depth; index = depth offset + base-k ordinal of the label.
        self._depth_offset = [0] * (top.n + 2)
        for depth in range(1, top.n + 1):
            self._depth_offset[depth + 1] = self._depth_offset[depth] + top.k**depth
        self.num_edges = self._depth_offset[top.n + 1]
        self.capacity = np.empty(self.num_edges, dtype=np.int64)
        for depth in range(1, top.n + 1):
            lo, hi = self._depth_offset[depth], self._depth_offset[depth + 1]
            self.capacity[lo:hi] = top.edge_capacity(depth - 1)
        self.occupied = np.zeros(self.num_edges, dtype=np.int64)
        self._router_edge_end = self._depth_offset[top.n]  # leaf edges come last
        # Oldest-first pair groups per edge: deque of [created_cycle, count].
        self._pairs: list[deque] = [deque() for _ in range(self.num_edges)]
        # created_cycle -> edge indices that appended a group that cycle.
        self._expiry_schedule: dict[int, list[int]] = {}
        self._n0 = top.num_leaves * (top.num_leaves - 1) // 2
        self._path_cache: dict[int, np.ndarray] = {}
        self._leaf_ordinals: dict[NodeLabel, int] = {
            leaf: i for i, leaf in enumerate(top.leaves())
        }
        self._leaves = list(self._leaf_ordinals)
        # Pending requests as growable parallel arrays; rows keep id order,
        # so timed-out rows always form a prefix starting at _front.
        self._cap = 256
        width = 2 * top.n
        self._arrival = np.zeros(self._cap, dtype=np.int64)
        self._paths = np.full((self._cap, width), self.num_edges, dtype=np.int64)
        self._alive = np.zeros(self._cap, dtype=bool)
        self._front = 0
        self._size = 0
        self._next_id = 0
        if p_schedule is None:
            self._schedule = [(0, cfg.p)]
        else:
            starts = [s for s, _ in p_schedule]
            if not p_schedule or p_schedule[0][0] != 0:
                raise ValueError("p schedule must start at cycle 0")
            if any(b <= a for a, b in zip(starts, starts[1:])):
                raise ValueError("p schedule start cycles must be strictly increasing")
            for _, p in p_schedule:
                if not (0.0 <= p <= 1.0):
                    raise ValueError(f"scheduled p must be in [0, 1], got {p}")
                pp = pair_request_probability(top.num_leaves, p)
                if pp > 1.0:
                    raise ValueError(f"scheduled p = {p} gives pair probability > 1")
            self._schedule = [(int(s), float(p)) for s, p in p_schedule]
        self._schedule_pos = 0
        # Totals for conservation accounting.
        self.total_created = 0
        self.total_consumed = 0
        self.total_expired_pairs = 0
        self.total_arrived = 0
        self.total_completed = 0
        self.total_expired_requests = 0

    # -- edge/path helpers -------------------------------------------------

    def edge_index(self, child_label: NodeLabel) -> int:
        depth = len(child_label)
        if not (1 <= depth <= self.cfg.topology.n):
            raise ValueError(f"edge child depth must be 1..{self.cfg.topology.n}")
        ordinal = 0
        for digit in child_label:
            ordinal = ordinal * self.cfg.topology.k + digit
        return self._depth_offset[depth] + ordinal

    def _pair_path(self, pair_index: int) -> np.ndarray:
        cached = self._path_cache.get(pair_index)
        if cached is not None:
            return cached
        i, j = _unrank_pair(pair_index, self.cfg.topology.num_leaves)
        path = self.cfg.topology.routing_path(self._leaves[i], self._leaves[j])
        edges = [self.edge_index(label) for label in path if len(label) > 0]
        row = np.full(2 * self.cfg.topology.n, self.num_edges, dtype=np.int64)
        row[: len(edges)] = edges
        self._path_cache[pair_index] = row
        return row

    def _append_request(self, arrival: int, path_row: np.ndarray) -> None:
        if self._size == self._cap:
            if self._front > self._cap // 2:
                self._compact()
            else:
                self._grow()
        self._arrival[self._size] = arrival
        self._paths[self._size] = path_row
        self._alive[self._size] = True
        self._size += 1
        self._next_id += 1

    def _grow(self) -> None:
        self._cap *= 2
        for name in ("_arrival", "_alive"):
            old = getattr(self, name)
            new = np.zeros(self._cap, dtype=old.dtype)
            new[: self._size] = old
            setattr(self, name, new)
        new_paths = np.full((self._cap, self._paths.shape[1]), self.num_edges, dtype=np.int64)
        new_paths[: self._size] = self._paths
        self._paths = new_paths

    def _compact(self) -> None:
        keep = slice(self._front, self._size)
        n = self._size - self._front
        self._arrival[:n] = self._arrival[keep]
        self._paths[:n] = self._paths[keep]
        self._alive[:n] = self._alive[keep]
        self._front = 0
        self._size = n

    # -- test hooks ----------------------------------------------------------

    def inject_pair(self, child_label: NodeLabel, count: int = 1) -> None:
        """Place ``count`` entangled pairs on an edge, created this cycle."""
        edge = self.edge_index(child_label)
        free = int(self.capacity[edge] - self.occupied[edge])
        if count > free:
            raise ValueError(f"edge has {free} free slots, cannot hold {count} more")
        self._add_pairs(edge, count, self.cycle)
        self.total_created += count

    def inject_request(self, a: NodeLabel, b: NodeLabel, count: int = 1) -> None:
        """Enqueue ``count`` requests between leaves, arriving this cycle."""
        ia = self._leaf_ordinals[a]
        ib = self._leaf_ordinals[b]
        if ia == ib:
            raise ValueError("request endpoints must differ")
        if ia > ib:
            ia, ib = ib, ia
        pair_index = ia * (2 * self.cfg.topology.num_leaves - ia - 1) // 2 + (ib - ia - 1)
        row = self._pair_path(pair_index)
        for _ in range(count):
            self._append_request(self.cycle, row)
        self.total_arrived += count

    def occupied_total(self) -> int:
        return int(self.occupied.sum())

    def occupied_router(self) -> int:
        return int(self.occupied[: self._router_edge_end].sum())

    def edge_occupied(self, child_label: NodeLabel) -> int:
        return int(self.occupied[self.edge_index(child_label)])

    def pending_count(self) -> int:
        return int(self._alive[self._front : self._size].sum())

    # -- phases ---------------------------------------------------------------

    def _add_pairs(self, edge: int, count: int, created: int) -> None:
        bucket = self._pairs[edge]
        if bucket and bucket[-1][0] == created:
            bucket[-1][1] += count
        else:
            bucket.append([created, count])
            self._expiry_schedule.setdefault(created, []).append(edge)
        self.occupied[edge] += count

    def _expire_pairs(self, cycle: int) -> int:
        cutoff = cycle - self.cfg.coherence
        expired = 0
        for created in [c for c in self._expiry_schedule if c <= cutoff]:
            for edge in self._expiry_schedule.pop(created):
                bucket = self._pairs[edge]
                while bucket and bucket[0][0] <= cutoff:
                    group = bucket.popleft()
                    expired += group[1]
                    self.occupied[edge] -= group[1]
        return expired

    def _in_window(self, arrival: int) -> bool:
        return self._window is not None and self._window[0] <= arrival < self._window[1]

    def _expire_requests(self, cycle: int) -> int:
        cutoff = cycle - self.cfg.request_timeout
        expired = 0
        while self._front < self._size and self._arrival[self._front] <= cutoff:
            if self._alive[self._front]:
                self._alive[self._front] = False
                expired += 1
                if self._in_window(int(self._arrival[self._front])):
                    self.counted_expired += 1
            self._front += 1
        return expired

    def _current_p(self, cycle: int) -> float:
        while (
            self._schedule_pos + 1 < len(self._schedule)
            and self._schedule[self._schedule_pos + 1][0] <= cycle
        ):
            self._schedule_pos += 1
        return self._schedule[self._schedule_pos][1]

    def _sample_requests(self, cycle: int) -> int:
        p = self._current_p(cycle)
        if p == 0.0:
            return 0
        p0 = pair_request_probability(self.cfg.topology.num_leaves, p)
        hits = int(self.rng.binomial(self._n0, p0))
        if hits == 0:
            return 0
        chosen: set[int] = set()
        while len(chosen) < hits:
            draw = self.rng.integers(0, self._n0, size=hits - len(chosen))
            chosen.update(int(v) for v in draw)
        arrived = 0
        for pair_index in sorted(chosen):
            row = self._pair_path(pair_index)
            for _ in range(self.cfg.b):
                self._append_request(cycle, row)
            arrived += self.cfg.b
        return arrived

    def _generate(self, cycle: int) -> int:
        free = self.capacity - self.occupied
        successes = self.rng.binomial(free, self.cfg.p_e)
        created = int(successes.sum())
        if created:
            for edge in np.nonzero(successes)[0]:
                self._add_pairs(int(edge), int(successes[edge]), cycle)
        return created

    def _fulfill(self, cycle: int) -> tuple[int, int, int]:
        lo, hi = self._front, self._size
        if lo == hi:
            return 0, 0, 0
        alive = self._alive[lo:hi]
        rows = np.nonzero(alive)[0]
        if rows.size == 0:
            return 0, 0, 0
        occ_ext = np.empty(self.num_edges + 1, dtype=np.int64)
        occ_ext[: self.num_edges] = self.occupied
        occ_ext[self.num_edges] = np.iinfo(np.int64).max
        candidate = occ_ext[self._paths[lo:hi][rows]].min(axis=1) > 0
        completed = 0
        latency_sum = 0
        consumed = 0
        for row in rows[candidate]:
            idx = lo + int(row)
            edges = self._paths[idx]
            edges = edges[edges < self.num_edges]
            if not np.all(self.occupied[edges] > 0):
                continue
            for edge in edges:
                e = int(edge)
                self.occupied[e] -= 1
                bucket = self._pairs[e]
                bucket[0][1] -= 1
                if bucket[0][1] == 0:
                    bucket.popleft()
            consumed += len(edges)
            self._alive[idx] = False
            completed += 1
            latency = int(cycle - self._arrival[idx])
            latency_sum += latency
            if self._in_window(int(self._arrival[idx])):
                self.counted_completed += 1
                self.counted_latency_sum += latency
        return completed, latency_sum, consumed

    def step(self) -> dict:
        """Advance one cycle; returns that cycle's counters."""
        cycle = self.cycle
        pairs_expired = self._expire_pairs(cycle)
        requests_expired = self._expire_requests(cycle)
        arrived = self._sample_requests(cycle)
        pairs_created = self._generate(cycle)
        completed, latency_sum, pairs_consumed = self._fulfill(cycle)
        self.total_created += pairs_created
        self.total_consumed += pairs_consumed
        self.total_expired_pairs += pairs_expired
        self.total_arrived += arrived
        self.total_completed += completed
        self.total_expired_requests += requests_expired
        self.cycle += 1
        return {
            "cycle": cycle,
            "arrived": arrived,
            "completed": completed,
            "expired": requests_expired,
            "latency_sum": latency_sum + requests_expired * self.cfg.request_timeout,
            "occupied": self.occupied_total(),
            "occupied_router": self.occupied_router(),
            "pairs_created": pairs_created,
            "pairs_consumed": pairs_consumed,
            "pairs_expired": pairs_expired,
        }


_SERIES_KEYS = (
    "arrived",
    "completed",
    "expired",
    "latency_sum",
    "occupied",
    "occupied_router",
    "pairs_created",
    "pairs_consumed",
    "pairs_expired",
)


def _collect_series(sim: Simulation, cycles: int) -> CycleSeries:
    data = {key: np.zeros(cycles, dtype=np.int64) for key in _SERIES_KEYS}
    for c in range(cycles):
        rec = sim.step()
        for key in _SERIES_KEYS:
            data[key][c] = rec[key]
    return CycleSeries(**data)


def run(cfg: SimConfig, record_series: bool = False) -> MetricsRecord:
    """Run warmup + measure cycles plus a trailing timeout window.

    Only requests arriving within the measurement window count toward
    success rate and latency; the trailing ``request_timeout`` cycles
    guarantee each of them resolves.  Buffered-entanglement means cover
    the measurement cycles.
    """
    lo = cfg.warmup
    hi = cfg.warmup + cfg.measure
    total = hi + cfg.request_timeout
    sim = Simulation(cfg, window=(lo, hi))
    occupied_sum = 0
    router_sum = 0
    series_data = (
        {key: np.zeros(total, dtype=np.int64) for key in _SERIES_KEYS}
        if record_series
        else None
    )
    for c in range(total):
        rec = sim.step()
        if series_data is not None:
            for key in _SERIES_KEYS:
                series_data[key][c] = rec[key]
        if lo <= c < hi:
            occupied_sum += rec["occupied"]
            router_sum += rec["occupied_router"]
    completed = sim.counted_completed
    expired = sim.counted_expired
    resolved = completed + expired
    success = completed / resolved if resolved else None
    mean_latency = (
        (sim.counted_latency_sum + expired * cfg.request_timeout) / resolved
        if resolved
        else None
    )
    return MetricsRecord(
        success_rate=success,
        mean_latency=mean_latency,
        mean_buffered=occupied_sum / cfg.measure,
        mean_buffered_router=router_sum / cfg.measure,
        completed=completed,
        expired=expired,
        pairs_created=sim.total_created,
        pairs_consumed=sim.total_consumed,
        pairs_expired=sim.total_expired_pairs,
        seed=cfg.seed,
        config=cfg,
        series=CycleSeries(**series_data) if series_data is not None else None,
    )


def run_schedule(cfg: SimConfig, schedule, total_cycles: int) -> CycleSeries:
    """Run ``total_cycles`` with piecewise-constant request rate.

    ``schedule`` is a list of (start_cycle, p) with strictly increasing
    starts beginning at 0; ``cfg.p`` is ignored.  Returns the per-cycle
    series for ensemble averaging.
    """
    if total_cycles < 1:
        raise ValueError(f"total_cycles must be >= 1, got {total_cycles}")
    sim = Simulation(cfg, p_schedule=schedule)
    return _collect_series(sim, total_cycles)
