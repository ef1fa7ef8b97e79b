"""Replicated experiment orchestration.

Sweeps run fresh-seeded replications per grid point until a Student-t
confidence interval is narrow enough or a replication cap is reached;
dynamic studies average per-cycle series over an ensemble and reduce
them to time bins.  Seeds derive from (base seed, grid index, rep
index) through a splitmix64-style chain so reruns reproduce identical
tables regardless of execution order.

Replications are independent and merge through commutative sufficient
statistics (count, sum, sum of squares), so grid points and reps may
execute in any order or in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fitting import (
    FitResult,
    fit_power_law,
    fit_proportional,
    fit_quadratic_coefficient,
)
from .simulator import MetricsRecord, SimConfig, run, run_schedule
from .topology import TreeTopology

__all__ = [
    "derive_seed",
    "RunningStat",
    "SweepSpec",
    "sweep",
    "estimate_threshold",
    "DynamicSchedule",
    "TransitionTiming",
    "DynamicResult",
    "dynamic_response",
    "FitResult",
    "fit_power_law",
    "fit_proportional",
    "fit_quadratic_coefficient",
]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


def derive_seed(base_seed: int, *indices: int) -> int:
    """64-bit seed for (base, index...) via a splitmix64 chain.

    Each index folds in with the golden-ratio increment before the
    finalizer, so (0, 1) and (1, 0) land on unrelated streams and the
    assignment is independent of execution order.
    """
    z = base_seed & _MASK
    for idx in indices:
        z = _mix64((z + _GOLDEN * (1 + (idx & _MASK))) & _MASK)
    return z


class RunningStat:
    """Mean/CI accumulator over replications; merge is commutative."""

    def __init__(self):
        self.count = 0
        self.total = 0.0
        self.total_sq = 0.0
        self.absent = 0

    def add(self, value) -> None:
        if value is None or (isinstance(value, float) and math.isnan(value)):
            self.absent += 1
            return
        self.count += 1
        self.total += value
        self.total_sq += value * value

    def merge(self, other: "RunningStat") -> None:
        self.count += other.count
        self.total += other.total
        self.total_sq += other.total_sq
        self.absent += other.absent

    @property
    def mean(self) -> float | None:
        return self.total / self.count if self.count else None

    @property
    def sample_variance(self) -> float:
        if self.count < 2:
            return 0.0
        mean = self.total / self.count
        # Clamp tiny negative values from cancellation.
        return max((self.total_sq - self.count * mean * mean) / (self.count - 1), 0.0)

    def halfwidth(self, level: float) -> float:
        """Student-t CI half-width of the sample mean."""
        if self.count < 2:
            return math.inf
        from scipy.stats import t as student_t

        crit = float(student_t.ppf(0.5 + level / 2.0, self.count - 1))
        return crit * math.sqrt(self.sample_variance / self.count)


@dataclass(frozen=True)
class SweepSpec:
    """Grid and stopping rule for a replicated parameter sweep.

    Stopping: a grid point stops once both metrics' CI full width drops
    below ``ci_width_fraction`` of the metric's range (1 for success
    rate, ``request_timeout`` cycles for latency) with at least
    ``min_reps`` replications, or at ``max_reps``.
    """

    p_values: tuple[float, ...] = (1e-3, 2e-3, 3e-3, 5e-3, 1e-2, 3e-2, 1e-1)
    n_values: tuple[int, ...] = (64,)
    b_values: tuple[int, ...] = (1,)
    max_reps: int = 1000
    min_reps: int = 10
    ci_level: float = 0.90
    ci_width_fraction: float = 0.01

    def __post_init__(self):
        if not (self.max_reps >= self.min_reps >= 2):
            raise ValueError(
                f"need max_reps >= min_reps >= 2, got {self.max_reps}, {self.min_reps}"
            )
        if not (0.0 < self.ci_level < 1.0):
            raise ValueError(f"ci_level must be in (0, 1), got {self.ci_level}")
        if self.ci_width_fraction <= 0:
            raise ValueError(f"ci_width_fraction must be positive, got {self.ci_width_fraction}")
        if not self.p_values or not self.n_values or not self.b_values:
            raise ValueError("p_values, n_values, b_values must be non-empty")


def _topology_for(base: SimConfig, n_leaves: int) -> TreeTopology:
    k = base.topology.k
    n = round(math.log(n_leaves, k))
    if k**n != n_leaves:
        raise ValueError(f"N = {n_leaves} is not a power of k = {k}")
    return TreeTopology(k=k, n=n, m=base.topology.m)


def _default_runner(cfg: SimConfig) -> MetricsRecord:
    return run(cfg)


def _run_batch(cfgs, runner, pool):
    if pool is not None:
        return list(pool.map(run, cfgs))
    return [runner(cfg) for cfg in cfgs]


def sweep(spec: SweepSpec, base: SimConfig, runner=None, jobs: int = 1) -> list[dict]:
    """Replicated sweep over the (p, N, b) grid.

    Returns one row per grid point with means and CI half-widths for
    success rate, latency, and buffered entanglement.  A grid point
    whose configuration is invalid yields a row with an ``error`` entry
    instead of aborting the rest of the grid.  ``runner`` (cfg ->
    MetricsRecord) is injectable for testing.

    With ``jobs > 1`` and the default runner, replications run in a
    process pool.  Seeds are bound to replication indices and the
    stopping rule is applied in replication order, so the rows are
    identical for every ``jobs`` value.
    """
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    pool = None
    if jobs > 1 and runner is None:
        from concurrent.futures import ProcessPoolExecutor

        pool = ProcessPoolExecutor(max_workers=jobs)
    runner = runner or _default_runner
    try:
        return _sweep_grid(spec, base, runner, pool, jobs)
    finally:
        if pool is not None:
            pool.shutdown()


def _sweep_grid(spec, base, runner, pool, jobs):
    rows: list[dict] = []
    grid_index = 0
    for n_leaves in spec.n_values:
        for b in spec.b_values:
            for p in spec.p_values:
                row = {"p": p, "N": n_leaves, "b": b}
                try:
                    topology = _topology_for(base, n_leaves)
                    cfg0 = SimConfig(
                        topology=topology,
                        p_e=base.p_e,
                        coherence=base.coherence,
                        request_timeout=base.request_timeout,
                        p=p,
                        b=b,
                        warmup=base.warmup,
                        measure=base.measure,
                        seed=base.seed,
                    )
                except ValueError as exc:
                    row["error"] = str(exc)
                    rows.append(row)
                    grid_index += 1
                    continue
                success = RunningStat()
                latency = RunningStat()
                buffered = RunningStat()
                success_cap = spec.ci_width_fraction * 1.0
                latency_cap = spec.ci_width_fraction * cfg0.request_timeout
                reps = 0
                stopped = False
                while reps < spec.max_reps and not stopped:
                    count = min(max(jobs, 1), spec.max_reps - reps)
                    cfgs = [
                        SimConfig(
                            topology=cfg0.topology,
                            p_e=cfg0.p_e,
                            coherence=cfg0.coherence,
                            request_timeout=cfg0.request_timeout,
                            p=cfg0.p,
                            b=cfg0.b,
                            warmup=cfg0.warmup,
                            measure=cfg0.measure,
                            seed=derive_seed(base.seed, grid_index, reps + i),
                        )
                        for i in range(count)
                    ]
                    for record in _run_batch(cfgs, runner, pool):
                        success.add(record.success_rate)
                        latency.add(record.mean_latency)
                        buffered.add(record.mean_buffered)
                        reps += 1
                        if (
                            reps >= spec.min_reps
                            and success.count >= 2
                            and latency.count >= 2
                            and 2.0 * success.halfwidth(spec.ci_level) < success_cap
                            and 2.0 * latency.halfwidth(spec.ci_level) < latency_cap
                        ):
                            stopped = True
                            break
                row.update(
                    reps=reps,
                    success_rate=success.mean,
                    success_halfwidth=(
                        success.halfwidth(spec.ci_level) if success.count >= 2 else None
                    ),
                    mean_latency=latency.mean,
                    latency_halfwidth=(
                        latency.halfwidth(spec.ci_level) if latency.count >= 2 else None
                    ),
                    mean_buffered=buffered.mean,
                    buffered_halfwidth=(
                        buffered.halfwidth(spec.ci_level) if buffered.count >= 2 else None
                    ),
                )
                rows.append(row)
                grid_index += 1
    return rows


def estimate_threshold(rows, n_leaves: int, level: float = 0.95, b: int | None = None):
    """Request rate where interpolated success rate crosses ``level``.

    Filters rows to one network size (and batch size when given), sorts
    by p, and interpolates the first downward crossing linearly in
    log(p).  Returns None when the curve never crosses the level within
    the sweep range.
    """
    pts = [
        (row["p"], row["success_rate"])
        for row in rows
        if row.get("N") == n_leaves
        and (b is None or row.get("b") == b)
        and row.get("success_rate") is not None
    ]
    if len(pts) < 2:
        return None
    pts.sort()
    for (p_lo, s_lo), (p_hi, s_hi) in zip(pts, pts[1:]):
        if s_lo >= level > s_hi:
            frac = (s_lo - level) / (s_lo - s_hi)
            return float(math.exp(math.log(p_lo) + frac * (math.log(p_hi) - math.log(p_lo))))
    return None


@dataclass(frozen=True)
class DynamicSchedule:
    """Piecewise-constant request rate with ensemble and binning choices."""

    steps: tuple[tuple[int, float], ...]
    total_cycles: int
    ensemble_size: int = 512
    bin_width: int = 64

    def __post_init__(self):
        if not self.steps or self.steps[0][0] != 0:
            raise ValueError("schedule must start at cycle 0")
        starts = [s for s, _ in self.steps]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("schedule start cycles must be strictly increasing")
        if starts[-1] >= self.total_cycles:
            raise ValueError("last step starts beyond the run length")
        if self.bin_width < 1:
            raise ValueError(f"bin_width must be >= 1, got {self.bin_width}")
        if self.ensemble_size < 1:
            raise ValueError(f"ensemble_size must be >= 1, got {self.ensemble_size}")
        if self.total_cycles < self.bin_width:
            raise ValueError("run shorter than one bin")


@dataclass(frozen=True)
class TransitionTiming:
    """10-90% transition time of one metric across one rate step.

    ``pre`` and ``post`` are plateau levels (mean of the last 10 bins
    before the step and before the next step or series end).  ``time``
    is (t_end - t_start) * bin_width, None when the series never
    reaches both the 90% and 10% levels inside the window.
    """

    metric: str
    step_cycle: int
    direction: str
    pre: float
    post: float
    time: int | None


@dataclass(frozen=True)
class DynamicResult:
    """Binned ensemble means plus transition timings and raw totals."""

    bin_width: int
    bin_centers: np.ndarray
    success_rate: np.ndarray
    mean_latency: np.ndarray
    buffered: np.ndarray
    buffered_router: np.ndarray
    transitions: tuple[TransitionTiming, ...]
    totals: dict = field(default_factory=dict)


def _plateau(series: np.ndarray, end_bin: int, width: int = 10) -> float:
    lo = max(end_bin - width, 0)
    window = series[lo:end_bin]
    window = window[~np.isnan(window)]
    return float(window.mean()) if window.size else math.nan


def transition_time(
    series: np.ndarray,
    start_bin: int,
    end_bin: int,
    pre: float,
    post: float,
    bin_width: int,
):
    """10-90% transition time of a binned series after a step.

    Falling series: time from the last bin at or above the 90% level to
    the first bin at or below the 10% level (levels measured between
    the plateaus); rising series symmetric.  Returns None when either
    level is never reached in [start_bin, end_bin), or the plateaus are
    too close to define a direction.
    """
    if math.isnan(pre) or math.isnan(post) or math.isclose(pre, post, rel_tol=1e-9, abs_tol=1e-12):
        return None
    window = series[start_bin:end_bin]
    lo, hi = min(pre, post), max(pre, post)
    level10 = lo + 0.1 * (hi - lo)
    level90 = lo + 0.9 * (hi - lo)
    if pre > post:
        reached = np.nonzero(window <= level10)[0]
        if reached.size == 0:
            return None
        t_end = int(reached[0])
        before = np.nonzero(window[: t_end + 1] >= level90)[0]
    else:
        reached = np.nonzero(window >= level90)[0]
        if reached.size == 0:
            return None
        t_end = int(reached[0])
        before = np.nonzero(window[: t_end + 1] <= level10)[0]
    t_start = int(before[-1]) if before.size else 0
    return (t_end - t_start) * bin_width


def _schedule_worker(args):
    cfg, steps, total = args
    return run_schedule(cfg, steps, total)


def dynamic_response(
    schedule: DynamicSchedule, base: SimConfig, runner=None, jobs: int = 1
) -> DynamicResult:
    """Ensemble-averaged step response of the network.

    Runs ``ensemble_size`` seeded replications of the schedule, sums the
    per-cycle series, reduces them to ``bin_width`` bins (only complete
    bins are reported), and measures 10-90% transition times for each
    metric across each rate step after the first.  With ``jobs > 1``
    and the default runner, members run in a process pool; sums always
    accumulate in member order, so results match the sequential run.
    """
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    total = schedule.total_cycles
    sums = {
        key: np.zeros(total, dtype=np.float64)
        for key in ("completed", "expired", "latency_sum", "occupied", "occupied_router")
    }
    cfgs = [
        SimConfig(
            topology=base.topology,
            p_e=base.p_e,
            coherence=base.coherence,
            request_timeout=base.request_timeout,
            p=0.0,
            b=base.b,
            warmup=base.warmup,
            measure=base.measure,
            seed=derive_seed(base.seed, member),
        )
        for member in range(schedule.ensemble_size)
    ]
    if jobs > 1 and runner is None:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            work = [(cfg, list(schedule.steps), total) for cfg in cfgs]
            for series in pool.map(_schedule_worker, work, chunksize=1):
                for key in sums:
                    sums[key] += getattr(series, key)
    else:
        runner = runner or (lambda cfg, steps, total: run_schedule(cfg, steps, total))
        for cfg in cfgs:
            series = runner(cfg, list(schedule.steps), total)
            for key in sums:
                sums[key] += getattr(series, key)
    n_bins = total // schedule.bin_width
    used = n_bins * schedule.bin_width

    def binned(arr):
        return arr[:used].reshape(n_bins, schedule.bin_width)

    completed = binned(sums["completed"]).sum(axis=1)
    expired = binned(sums["expired"]).sum(axis=1)
    latency_sum = binned(sums["latency_sum"]).sum(axis=1)
    resolved = completed + expired
    with np.errstate(invalid="ignore", divide="ignore"):
        success = np.where(resolved > 0, completed / resolved, np.nan)
        latency = np.where(resolved > 0, latency_sum / resolved, np.nan)
    buffered = binned(sums["occupied"]).mean(axis=1) / schedule.ensemble_size
    buffered_router = binned(sums["occupied_router"]).mean(axis=1) / schedule.ensemble_size
    centers = (np.arange(n_bins) + 0.5) * schedule.bin_width

    metrics = {
        "success_rate": success,
        "mean_latency": latency,
        "buffered": buffered,
    }
    transitions = []
    boundaries = [s for s, _ in schedule.steps[1:]] + [total]
    for i, step_cycle in enumerate(boundaries[:-1]):
        start_bin = step_cycle // schedule.bin_width
        end_bin = min(boundaries[i + 1] // schedule.bin_width, n_bins)
        for name, series in metrics.items():
            pre = _plateau(series, start_bin)
            post = _plateau(series, end_bin)
            time = transition_time(
                series, start_bin, end_bin, pre, post, schedule.bin_width
            )
            direction = "none"
            if not (
                math.isnan(pre)
                or math.isnan(post)
                or math.isclose(pre, post, rel_tol=1e-9, abs_tol=1e-12)
            ):
                direction = "fall" if pre > post else "rise"
            transitions.append(
                TransitionTiming(
                    metric=name,
                    step_cycle=step_cycle,
                    direction=direction,
                    pre=pre,
                    post=post,
                    time=time,
                )
            )
    totals = {
        "completed": float(sums["completed"].sum()),
        "expired": float(sums["expired"].sum()),
        "latency_sum": float(sums["latency_sum"].sum()),
        "ensemble_size": schedule.ensemble_size,
        "cycles": total,
    }
    return DynamicResult(
        bin_width=schedule.bin_width,
        bin_centers=centers,
        success_rate=success,
        mean_latency=latency,
        buffered=buffered,
        buffered_router=buffered_router,
        transitions=tuple(transitions),
        totals=totals,
    )
