"""Sweep orchestration, stopping-rule soundness, and step-response reduction.

The stopping rule is replayed against an independent reimplementation on
deterministic synthetic runners (1000 grid-point decisions); binning and
transition timing are checked on handcrafted series; parallel execution
must reproduce sequential results bit for bit.
"""

import math
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.stats import t as student_t

from qtnsim.experiments import (
    DynamicSchedule,
    RunningStat,
    SweepSpec,
    derive_seed,
    dynamic_response,
    estimate_threshold,
    sweep,
    transition_time,
)
from qtnsim.simulator import MetricsRecord, SimConfig
from qtnsim.topology import TreeTopology

MASK = (1 << 64) - 1


def unit_noise(seed, salt=0):
    # Deterministic pseudo-uniform in [0, 1) from a seed, for synthetic runners.
    z = (seed + salt * 0x9E3779B97F4A7C15) & MASK
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK
    return ((z ^ (z >> 31)) & MASK) / 2.0**64


def base_config(**kw):
    defaults = dict(
        topology=TreeTopology(k=2, n=1, m=2),
        p_e=0.5,
        coherence=10,
        request_timeout=kw.pop("request_timeout", 1000),
        p=0.0,
        warmup=0,
        measure=1,
        seed=kw.pop("seed", 0),
    )
    defaults.update(kw)
    return SimConfig(**defaults)


def make_record(cfg, success, lat, buf):
    return MetricsRecord(
        success_rate=success,
        mean_latency=lat,
        mean_buffered=buf,
        mean_buffered_router=buf / 2 if buf is not None else 0.0,
        completed=0,
        expired=0,
        pairs_created=0,
        pairs_consumed=0,
        pairs_expired=0,
        seed=cfg.seed,
        config=cfg,
    )


class TestDeriveSeed:
    def test_distinct_across_grid(self):
        seeds = {derive_seed(0, g, r) for g in range(50) for r in range(50)}
        assert len(seeds) == 2500

    def test_order_sensitive(self):
        assert derive_seed(0, 1, 2) != derive_seed(0, 2, 1)
        assert derive_seed(1, 0) != derive_seed(0, 1)

    def test_range_and_determinism(self):
        s = derive_seed(123, 4, 5)
        assert 0 <= s <= MASK
        assert s == derive_seed(123, 4, 5)


class TestRunningStat:
    def test_matches_numpy(self):
        rng = np.random.default_rng(1)
        values = rng.normal(3.0, 2.0, size=40)
        stat = RunningStat()
        for v in values:
            stat.add(float(v))
        assert stat.count == 40
        assert stat.mean == pytest.approx(values.mean(), rel=1e-12)
        assert stat.sample_variance == pytest.approx(values.var(ddof=1), rel=1e-9)
        crit = student_t.ppf(0.95, 39)
        expected = crit * math.sqrt(values.var(ddof=1) / 40)
        assert stat.halfwidth(0.90) == pytest.approx(expected, rel=1e-9)

    def test_absent_values(self):
        stat = RunningStat()
        stat.add(None)
        stat.add(float("nan"))
        stat.add(2.0)
        assert stat.count == 1
        assert stat.absent == 2
        assert stat.mean == 2.0
        assert stat.halfwidth(0.9) == math.inf

    def test_empty(self):
        stat = RunningStat()
        assert stat.mean is None
        assert stat.sample_variance == 0.0
        assert stat.halfwidth(0.9) == math.inf

    def test_merge_commutes(self):
        rng = np.random.default_rng(2)
        values = [float(v) for v in rng.normal(size=30)]
        chunks = [values[:7], values[7:16], values[16:]]
        orders = [(0, 1, 2), (2, 0, 1), (1, 2, 0)]
        results = []
        for order in orders:
            total = RunningStat()
            for idx in order:
                part = RunningStat()
                for v in chunks[idx]:
                    part.add(v)
                total.merge(part)
            results.append(total)
        for stat in results[1:]:
            assert stat.count == results[0].count
            assert stat.mean == pytest.approx(results[0].mean, rel=1e-12)
            assert stat.sample_variance == pytest.approx(
                results[0].sample_variance, rel=1e-9
            )

    def test_zero_variance(self):
        stat = RunningStat()
        for _ in range(5):
            stat.add(1.25)
        assert stat.sample_variance == 0.0
        assert stat.halfwidth(0.9) == 0.0


class TestSweepSpecValidation:
    def test_rejects_bad_reps(self):
        with pytest.raises(ValueError, match="min_reps"):
            SweepSpec(min_reps=1)
        with pytest.raises(ValueError, match="min_reps"):
            SweepSpec(max_reps=5, min_reps=10)

    def test_rejects_bad_ci(self):
        with pytest.raises(ValueError, match="ci_level"):
            SweepSpec(ci_level=1.0)
        with pytest.raises(ValueError, match="positive"):
            SweepSpec(ci_width_fraction=0.0)

    def test_rejects_empty_grid(self):
        with pytest.raises(ValueError, match="non-empty"):
            SweepSpec(p_values=())


def stopping_runner(sigma_s, sigma_l, absent_every=0):
    def runner(cfg):
        u_s = unit_noise(cfg.seed, 1) - 0.5
        u_l = unit_noise(cfg.seed, 2) - 0.5
        if absent_every and cfg.seed % absent_every == 0:
            return make_record(cfg, None, None, 1.0)
        return make_record(
            cfg, 0.9 + sigma_s * u_s, 100.0 * (1.0 + sigma_l * u_l), 5.0
        )

    return runner


def replay_stop(spec, base, runner):
    """Independent restatement of the stopping rule, tracking each prefix."""
    success, latency = RunningStat(), RunningStat()
    success_cap = spec.ci_width_fraction * 1.0
    latency_cap = spec.ci_width_fraction * base.request_timeout
    decisions = []
    reps = 0
    while reps < spec.max_reps:
        cfg = SimConfig(
            topology=base.topology,
            p_e=base.p_e,
            coherence=base.coherence,
            request_timeout=base.request_timeout,
            p=spec.p_values[0],
            b=spec.b_values[0],
            warmup=base.warmup,
            measure=base.measure,
            seed=derive_seed(base.seed, 0, reps),
        )
        record = runner(cfg)
        success.add(record.success_rate)
        latency.add(record.mean_latency)
        reps += 1
        rule = (
            reps >= spec.min_reps
            and success.count >= 2
            and latency.count >= 2
            and 2.0 * success.halfwidth(spec.ci_level) < success_cap
            and 2.0 * latency.halfwidth(spec.ci_level) < latency_cap
        )
        decisions.append(rule)
        if rule:
            break
    return reps, decisions, success.mean, latency.mean


class TestStoppingSoundness:
    def test_thousand_grid_point_decisions(self):
        # 1000 randomized stopping decisions: the sweep stops at the first
        # prefix (>= min_reps) satisfying the CI rule, never later, never
        # beyond max_reps, and reports the prefix means.
        rng = np.random.default_rng(77)
        cases = 0
        while cases < 1000:
            min_reps = int(rng.integers(2, 7))
            max_reps = min_reps + int(rng.integers(0, 14))
            frac = float(rng.choice([0.5, 0.2, 0.1, 0.05, 0.01]))
            sigma_s = float(rng.choice([0.0, 1e-6, 0.02, 0.1, 0.4]))
            sigma_l = float(rng.choice([0.0, 0.01, 0.05, 0.3]))
            absent_every = int(rng.choice([0, 3]))
            n_leaves = 2
            spec = SweepSpec(
                p_values=(0.1,),
                n_values=(n_leaves,),
                b_values=(1,),
                max_reps=max_reps,
                min_reps=min_reps,
                ci_level=0.90,
                ci_width_fraction=frac,
            )
            base = base_config(seed=int(rng.integers(0, 2**31)))
            runner = stopping_runner(sigma_s, sigma_l, absent_every)
            rows = sweep(spec, base, runner=runner)
            assert len(rows) == 1
            row = rows[0]
            reps, decisions, mean_s, mean_l = replay_stop(spec, base, runner)
            assert row["reps"] == reps
            assert min_reps <= row["reps"] <= max_reps or row["reps"] == max_reps
            # minimality: the rule failed at every earlier prefix
            assert not any(decisions[:-1])
            if row["reps"] < max_reps:
                assert decisions[-1]
            if mean_s is None:
                assert row["success_rate"] is None
            else:
                assert row["success_rate"] == pytest.approx(mean_s, rel=1e-12)
            if mean_l is None:
                assert row["mean_latency"] is None
            else:
                assert row["mean_latency"] == pytest.approx(mean_l, rel=1e-12)
            cases += 1

    def test_zero_variance_stops_at_min_reps(self):
        spec = SweepSpec(
            p_values=(0.1,), n_values=(2,), b_values=(1,),
            max_reps=50, min_reps=4, ci_width_fraction=0.01,
        )
        rows = sweep(spec, base_config(), runner=stopping_runner(0.0, 0.0))
        assert rows[0]["reps"] == 4
        assert rows[0]["success_halfwidth"] == 0.0


class TestSweep:
    def test_grid_order_and_keys(self):
        spec = SweepSpec(
            p_values=(0.01, 0.1), n_values=(2, 4), b_values=(1, 2),
            max_reps=2, min_reps=2, ci_width_fraction=0.5,
        )
        rows = sweep(spec, base_config(), runner=stopping_runner(0.3, 0.3))
        assert [(r["N"], r["b"], r["p"]) for r in rows] == [
            (2, 1, 0.01), (2, 1, 0.1), (2, 2, 0.01), (2, 2, 0.1),
            (4, 1, 0.01), (4, 1, 0.1), (4, 2, 0.01), (4, 2, 0.1),
        ]
        for row in rows:
            for key in ("reps", "success_rate", "success_halfwidth", "mean_latency",
                        "latency_halfwidth", "mean_buffered", "buffered_halfwidth"):
                assert key in row

    def test_error_rows_isolated(self):
        spec = SweepSpec(
            p_values=(0.1,), n_values=(5, 4), b_values=(1,),
            max_reps=2, min_reps=2, ci_width_fraction=0.5,
        )
        rows = sweep(spec, base_config(), runner=stopping_runner(0.1, 0.1))
        assert rows[0]["error"] == "N = 5 is not a power of k = 2"
        assert "reps" not in rows[0]
        assert rows[1]["reps"] == 2
        assert "error" not in rows[1]

    def test_rate_error_rows(self):
        spec = SweepSpec(
            p_values=(0.9,), n_values=(2,), b_values=(1,),
            max_reps=2, min_reps=2, ci_width_fraction=0.5,
        )
        rows = sweep(spec, base_config(), runner=stopping_runner(0.1, 0.1))
        assert "pair probability" in rows[0]["error"]

    def test_jobs_invariance_with_synthetic_runner(self):
        spec = SweepSpec(
            p_values=(0.05, 0.2), n_values=(2, 4), b_values=(1, 2),
            max_reps=25, min_reps=3, ci_level=0.9, ci_width_fraction=0.2,
        )
        runner = stopping_runner(0.15, 0.2)
        reference = sweep(spec, base_config(), runner=runner, jobs=1)
        for jobs in (3, 7):
            assert sweep(spec, base_config(), runner=runner, jobs=jobs) == reference

    def test_rerun_determinism_with_real_runner(self):
        spec = SweepSpec(
            p_values=(0.05, 0.2), n_values=(4,), b_values=(1,),
            max_reps=3, min_reps=3, ci_width_fraction=1e-9,
        )
        base = SimConfig(
            topology=TreeTopology(k=2, n=1, m=2), p_e=0.05, coherence=50,
            request_timeout=30, p=0.0, warmup=20, measure=150, seed=11,
        )
        rows1 = sweep(spec, base)
        rows2 = sweep(spec, base)
        assert rows1 == rows2
        assert all(row["reps"] == 3 for row in rows1)

    def test_process_pool_matches_sequential(self):
        spec = SweepSpec(
            p_values=(0.1,), n_values=(4,), b_values=(1,),
            max_reps=4, min_reps=4, ci_width_fraction=1e-9,
        )
        base = SimConfig(
            topology=TreeTopology(k=2, n=1, m=2), p_e=0.05, coherence=50,
            request_timeout=30, p=0.0, warmup=20, measure=120, seed=7,
        )
        assert sweep(spec, base, jobs=2) == sweep(spec, base, jobs=1)

    def test_jobs_validation(self):
        with pytest.raises(ValueError, match="jobs"):
            sweep(SweepSpec(), base_config(), jobs=0)


class TestEstimateThreshold:
    def test_log_interpolated_crossing(self):
        rows = [
            {"p": 1e-4, "N": 64, "b": 1, "success_rate": 1.0},
            {"p": 1e-3, "N": 64, "b": 1, "success_rate": 0.99},
            {"p": 1e-2, "N": 64, "b": 1, "success_rate": 0.50},
        ]
        frac = (0.99 - 0.95) / (0.99 - 0.50)
        expected = math.exp(math.log(1e-3) + frac * (math.log(1e-2) - math.log(1e-3)))
        assert estimate_threshold(rows, 64) == pytest.approx(expected, rel=1e-12)

    def test_exact_boundary_returns_lower_point(self):
        rows = [
            {"p": 1e-3, "N": 16, "success_rate": 0.95},
            {"p": 1e-2, "N": 16, "success_rate": 0.40},
        ]
        assert estimate_threshold(rows, 16) == pytest.approx(1e-3)

    def test_no_crossing(self):
        rows = [
            {"p": 1e-3, "N": 16, "success_rate": 0.999},
            {"p": 1e-2, "N": 16, "success_rate": 0.998},
        ]
        assert estimate_threshold(rows, 16) is None

    def test_filters_by_n_and_b(self):
        rows = [
            {"p": 1e-3, "N": 16, "b": 1, "success_rate": 0.3},
            {"p": 1e-3, "N": 64, "b": 1, "success_rate": 1.0},
            {"p": 1e-2, "N": 64, "b": 1, "success_rate": 0.2},
            {"p": 1e-3, "N": 64, "b": 16, "success_rate": 0.98},
            {"p": 1e-2, "N": 64, "b": 16, "success_rate": 0.90},
        ]
        t_b1 = estimate_threshold(rows, 64, b=1)
        t_b16 = estimate_threshold(rows, 64, b=16)
        assert t_b1 is not None and t_b16 is not None
        assert t_b1 < t_b16
        assert estimate_threshold(rows, 16, b=1) is None  # single point

    def test_skips_absent_success(self):
        rows = [
            {"p": 1e-3, "N": 4, "success_rate": None},
            {"p": 1e-2, "N": 4, "success_rate": 0.99},
            {"p": 1e-1, "N": 4, "success_rate": 0.10},
        ]
        out = estimate_threshold(rows, 4)
        assert out is not None and 1e-2 < out < 1e-1

    def test_unsorted_rows(self):
        rows = [
            {"p": 1e-2, "N": 4, "success_rate": 0.50},
            {"p": 1e-3, "N": 4, "success_rate": 0.99},
        ]
        assert estimate_threshold(rows, 4) is not None


class TestScheduleValidation:
    def test_must_start_at_zero(self):
        with pytest.raises(ValueError, match="cycle 0"):
            DynamicSchedule(steps=((5, 0.1),), total_cycles=100)
        with pytest.raises(ValueError, match="cycle 0"):
            DynamicSchedule(steps=(), total_cycles=100)

    def test_strictly_increasing(self):
        with pytest.raises(ValueError, match="increasing"):
            DynamicSchedule(steps=((0, 0.1), (50, 0.2), (50, 0.3)), total_cycles=100)

    def test_last_step_inside_run(self):
        with pytest.raises(ValueError, match="beyond"):
            DynamicSchedule(steps=((0, 0.1), (100, 0.2)), total_cycles=100)

    def test_bin_and_ensemble_bounds(self):
        with pytest.raises(ValueError, match="bin_width"):
            DynamicSchedule(steps=((0, 0.1),), total_cycles=100, bin_width=0)
        with pytest.raises(ValueError, match="ensemble_size"):
            DynamicSchedule(steps=((0, 0.1),), total_cycles=100, ensemble_size=0)
        with pytest.raises(ValueError, match="shorter than one bin"):
            DynamicSchedule(steps=((0, 0.1),), total_cycles=30, bin_width=64)


class TestTransitionTime:
    def test_falling_ramp(self):
        series = np.array([1.0] * 10 + list(np.linspace(1.0, 0.0, 11)) + [0.0] * 10)
        out = transition_time(series, 10, 31, pre=1.0, post=0.0, bin_width=64)
        assert out == 8 * 64

    def test_rising_ramp_symmetric(self):
        series = np.array([0.0] * 10 + list(np.linspace(0.0, 1.0, 11)) + [1.0] * 10)
        out = transition_time(series, 10, 31, pre=0.0, post=1.0, bin_width=64)
        assert out == 8 * 64

    def test_step_within_one_bin(self):
        series = np.array([1.0] * 5 + [0.0] * 5)
        assert transition_time(series, 5, 10, pre=1.0, post=0.0, bin_width=32) == 0

    def test_transient_recovery_uses_last_high_bin(self):
        # The fall resets when the series climbs back above the 90% level.
        window = np.array([1.0, 0.95, 0.3, 0.92, 0.5, 0.08, 0.05])
        out = transition_time(window, 0, 7, pre=1.0, post=0.0, bin_width=10)
        assert out == (5 - 3) * 10

    def test_unresolved_returns_none(self):
        series = np.array([1.0, 0.8, 0.6, 0.5, 0.45])
        assert transition_time(series, 0, 5, pre=1.0, post=0.0, bin_width=8) is None

    def test_flat_plateaus_return_none(self):
        series = np.ones(20)
        assert transition_time(series, 5, 15, pre=1.0, post=1.0, bin_width=8) is None
        assert transition_time(series, 5, 15, pre=math.nan, post=1.0, bin_width=8) is None


def synthetic_series_runner(base_seed, total):
    """Runner whose per-cycle series depend deterministically on the member."""

    member_of = {derive_seed(base_seed, m): m for m in range(64)}

    def runner(cfg, steps, total_cycles):
        m = member_of[cfg.seed]
        cycles = np.arange(total_cycles, dtype=np.float64)
        return SimpleNamespace(
            completed=(cycles + m) % 3,
            expired=np.full(total_cycles, float(m % 2)),
            latency_sum=cycles * 0.5 + m,
            occupied=np.full(total_cycles, 10.0 + m),
            occupied_router=np.full(total_cycles, 4.0 + m),
        )

    return runner


class TestDynamicResponse:
    def test_bin_algebra_matches_manual_reduction(self):
        total, bw, ensemble = 130, 32, 4
        schedule = DynamicSchedule(
            steps=((0, 0.01), (64, 0.05)), total_cycles=total,
            ensemble_size=ensemble, bin_width=bw,
        )
        base = base_config(seed=9)
        runner = synthetic_series_runner(9, total)
        result = dynamic_response(schedule, base, runner=runner)

        cycles = np.arange(total, dtype=np.float64)
        completed = sum((cycles + m) % 3 for m in range(ensemble))
        expired = sum(np.full(total, float(m % 2)) for m in range(ensemble))
        latency = sum(cycles * 0.5 + m for m in range(ensemble))
        occupied = sum(np.full(total, 10.0 + m) for m in range(ensemble))
        n_bins = total // bw
        used = n_bins * bw
        c_b = completed[:used].reshape(n_bins, bw).sum(axis=1)
        e_b = expired[:used].reshape(n_bins, bw).sum(axis=1)
        l_b = latency[:used].reshape(n_bins, bw).sum(axis=1)
        assert result.success_rate == pytest.approx(c_b / (c_b + e_b), rel=1e-12)
        assert result.mean_latency == pytest.approx(l_b / (c_b + e_b), rel=1e-12)
        assert result.buffered == pytest.approx(
            occupied[:used].reshape(n_bins, bw).mean(axis=1) / ensemble, rel=1e-12
        )
        assert result.bin_centers == pytest.approx((np.arange(n_bins) + 0.5) * bw)
        # totals cover every cycle, including the incomplete trailing bin
        assert result.totals["completed"] == pytest.approx(completed.sum())
        assert result.totals["expired"] == pytest.approx(expired.sum())
        assert result.totals["ensemble_size"] == ensemble
        assert result.totals["cycles"] == total

    def test_nan_bins_when_nothing_resolves(self):
        total, bw = 96, 32
        schedule = DynamicSchedule(
            steps=((0, 0.01),), total_cycles=total, ensemble_size=2, bin_width=bw
        )
        base = base_config(seed=3)
        member_of = {derive_seed(3, m): m for m in range(2)}

        def runner(cfg, steps, total_cycles):
            arr = np.zeros(total_cycles)
            active = np.zeros(total_cycles)
            active[:32] = 1.0  # only the first bin resolves anything
            return SimpleNamespace(
                completed=active, expired=arr, latency_sum=active * 2.0,
                occupied=arr, occupied_router=arr,
            )

        result = dynamic_response(schedule, base, runner=runner)
        assert result.success_rate[0] == 1.0
        assert np.isnan(result.success_rate[1:]).all()
        assert np.isnan(result.mean_latency[1:]).all()

    def test_transitions_enumerate_steps_and_metrics(self):
        total = 256
        schedule = DynamicSchedule(
            steps=((0, 0.01), (96, 0.05), (192, 0.01)), total_cycles=total,
            ensemble_size=2, bin_width=32,
        )
        base = base_config(seed=5)
        runner = synthetic_series_runner(5, total)
        result = dynamic_response(schedule, base, runner=runner)
        assert [t.step_cycle for t in result.transitions] == [96, 96, 96, 192, 192, 192]
        assert [t.metric for t in result.transitions[:3]] == [
            "success_rate", "mean_latency", "buffered",
        ]

    def test_flat_metric_labeled_none(self):
        total = 192
        schedule = DynamicSchedule(
            steps=((0, 0.01), (96, 0.05)), total_cycles=total,
            ensemble_size=2, bin_width=32,
        )
        base = base_config(seed=4)

        def runner(cfg, steps, total_cycles):
            flat = np.ones(total_cycles)
            return SimpleNamespace(
                completed=flat, expired=np.zeros(total_cycles),
                latency_sum=flat * 3.0, occupied=flat, occupied_router=flat,
            )

        result = dynamic_response(schedule, base, runner=runner)
        assert all(t.direction == "none" for t in result.transitions)
        assert all(t.time is None for t in result.transitions)

    def test_real_simulation_deterministic(self):
        schedule = DynamicSchedule(
            steps=((0, 0.05), (128, 0.3)), total_cycles=256,
            ensemble_size=3, bin_width=32,
        )
        base = SimConfig(
            topology=TreeTopology(k=2, n=2, m=2), p_e=0.05, coherence=60,
            request_timeout=40, p=0.0, warmup=0, measure=1, seed=2,
        )
        r1 = dynamic_response(schedule, base)
        r2 = dynamic_response(schedule, base)
        assert np.array_equal(r1.buffered, r2.buffered)
        assert np.array_equal(r1.success_rate, r2.success_rate, equal_nan=True)
        assert r1.totals == r2.totals
        assert r1.buffered.shape == (8,)

    def test_process_pool_matches_sequential(self):
        schedule = DynamicSchedule(
            steps=((0, 0.05), (96, 0.3)), total_cycles=192,
            ensemble_size=3, bin_width=32,
        )
        base = SimConfig(
            topology=TreeTopology(k=2, n=2, m=2), p_e=0.05, coherence=60,
            request_timeout=40, p=0.0, warmup=0, measure=1, seed=6,
        )
        seq = dynamic_response(schedule, base, jobs=1)
        par = dynamic_response(schedule, base, jobs=2)
        assert np.array_equal(seq.buffered, par.buffered)
        assert np.array_equal(seq.success_rate, par.success_rate, equal_nan=True)
        assert seq.totals == par.totals

    def test_jobs_validation(self):
        schedule = DynamicSchedule(steps=((0, 0.1),), total_cycles=64, ensemble_size=1)
        with pytest.raises(ValueError, match="jobs"):
            dynamic_response(schedule, base_config(), jobs=0)
