"""Command-line entry point binding every module.

Subcommands: simulate, sweep, dynamic, overhead, deploy, mesh.  Each
emits comma-separated data tables plus a JSON manifest, and renders an
optional SVG figure with ``--svg``.  Parameters resolve with precedence
flags > config file > preset > defaults; config files are flat JSON
objects holding experiment parameters only (output paths and job counts
stay on the command line), and a manifest is itself accepted as a
config file, so re-running a manifest reproduces its data files byte
for byte.

Exit codes: 0 success, 2 usage (bad invocation), 3 validation (bad
values), 4 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import output as output_mod
from .deployment import DeploymentPlan, covering_table_digest, layout
from .experiments import (
    DynamicSchedule,
    SweepSpec,
    dynamic_response,
    estimate_threshold,
    sweep,
)
from .mesh import center_cell_scaling
from .output import file_sha256, write_manifest, write_table
from .overhead import EcConfig, OverheadReport, overhead
from .simulator import SimConfig, run
from .topology import TreeTopology

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4

THRESHOLD_DEFINITION = "success_rate = 0.95 crossing, interpolated linearly in log(p)"


class UsageError(Exception):
    pass


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in str(text).split(","))
    except ValueError:
        raise ValidationError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in str(text).split(","))
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


def _steps(text: str) -> tuple[tuple[int, float], ...]:
    """Parse 'CYCLE:P,CYCLE:P,...' into schedule steps."""
    steps = []
    for part in str(text).split(","):
        try:
            cycle, _, rate = part.partition(":")
            steps.append((int(cycle), float(rate)))
        except ValueError:
            raise ValidationError(
                f"expected steps as CYCLE:P[,CYCLE:P...], got {text!r}"
            ) from None
    return tuple(steps)


def _n_range(text: str) -> tuple[int, int]:
    """Parse 'BASE^LO:BASE^HI' or 'LO:HI' into a depth-exponent range."""
    lo_part, sep, hi_part = str(text).partition(":")
    if not sep:
        raise ValidationError(f"expected a range LO:HI, got {text!r}")

    def exponent(part):
        if "^" in part:
            base, _, exp = part.partition("^")
            return int(base), int(exp)
        return None, int(part)

    try:
        base_lo, lo = exponent(lo_part)
        base_hi, hi = exponent(hi_part)
    except ValueError:
        raise ValidationError(f"expected a range like 4^3:4^10 or 3:10, got {text!r}") from None
    if base_lo != base_hi:
        raise ValidationError(f"range endpoints use different bases: {text!r}")
    if lo > hi:
        raise ValidationError(f"empty range: {text!r}")
    return lo, hi


@dataclass(frozen=True)
class Opt:
    """One resolvable parameter: CLI flag, config-file key, default."""

    name: str
    parse: object
    default: object = None
    required: bool = False
    help: str = ""
    flag: bool = False

    def coerce_file(self, value):
        if self.flag:
            if not isinstance(value, bool):
                raise ValidationError(f"config key {self.name!r} must be true/false")
            return value
        if self.parse in (_ints, _floats):
            if isinstance(value, list):
                kind = int if self.parse is _ints else float
                return tuple(kind(v) for v in value)
            return self.parse(value)
        if self.parse is _steps:
            if isinstance(value, list):
                return tuple((int(c), float(p)) for c, p in value)
            return _steps(value)
        if self.parse is _n_range:
            if isinstance(value, list) and len(value) == 2:
                return int(value[0]), int(value[1])
            return _n_range(value)
        return self.parse(value)


_SIM_OPTS = [
    Opt("k", int, required=True, help="tree arity"),
    Opt("n", int, required=True, help="tree depth"),
    Opt("m", int, required=True, help="memory slots per leaf"),
    Opt("p", float, required=True, help="per-node request rate per cycle"),
    Opt("pe", float, 1e-3, help="per-slot entanglement success probability"),
    Opt("coherence", int, 1000, help="pair lifetime in cycles"),
    Opt("timeout", int, 1000, help="request expiry in cycles"),
    Opt("b", int, 1, help="requests per batch"),
    Opt("warmup", int, 2000, help="cycles before measurement"),
    Opt("measure", int, 10_000, help="measured cycles"),
    Opt("seed", int, 0, help="random seed"),
    Opt("series", None, False, flag=True, help="also write the per-cycle series"),
]

_ACCEPT_GRID = (1e-3, 2e-3, 3e-3, 5e-3, 1e-2, 3e-2, 1e-1)

_SWEEP_OPTS = [
    Opt("k", int, 4, help="tree arity"),
    Opt("m", int, 10, help="memory slots per leaf"),
    Opt("N", _ints, (64,), help="network sizes, comma-separated powers of k"),
    Opt("p_grid", _floats, _ACCEPT_GRID, help="request rates, comma-separated"),
    Opt("b", _ints, (1,), help="batch sizes, comma-separated"),
    Opt("pe", float, 1e-3, help="per-slot entanglement success probability"),
    Opt("coherence", int, 1000, help="pair lifetime in cycles"),
    Opt("timeout", int, 1000, help="request expiry in cycles"),
    Opt("warmup", int, 2000, help="cycles before measurement"),
    Opt("measure", int, 10_000, help="measured cycles"),
    Opt("max_reps", int, 1000, help="replication cap per grid point"),
    Opt("min_reps", int, 10, help="replications before the CI rule may stop"),
    Opt("ci_level", float, 0.90, help="confidence level for the stopping rule"),
    Opt("ci_width_fraction", float, 0.01, help="CI width threshold as a range fraction"),
    Opt("seed", int, 0, help="base random seed"),
]

_DYNAMIC_OPTS = [
    Opt("k", int, 4, help="tree arity"),
    Opt("n", int, 3, help="tree depth"),
    Opt("m", int, 10, help="memory slots per leaf"),
    Opt("pe", float, 1e-3, help="per-slot entanglement success probability"),
    Opt("coherence", int, 1000, help="pair lifetime in cycles"),
    Opt("timeout", int, 1000, help="request expiry in cycles"),
    Opt("b", int, 1, help="requests per batch"),
    Opt("steps", _steps, required=True, help="rate schedule CYCLE:P,CYCLE:P,..."),
    Opt("total_cycles", int, required=True, help="run length in cycles"),
    Opt("ensemble", int, 512, help="ensemble size"),
    Opt("bin_width", int, 64, help="cycles per bin"),
    Opt("seed", int, 0, help="base random seed"),
]

_OVERHEAD_OPTS = [
    Opt("k", _ints, (4,), help="tree arities, comma-separated"),
    Opt("mode", str, "2d", help="deployment regime: dense, 2d, or lattice"),
    Opt("family", str, "css", help="code family: css or surface"),
    Opt("r", int, 1, help="code nesting level"),
    Opt("n_range", _n_range, (3, 10), help="depth range, e.g. 4^3:4^10 or 3:10"),
    Opt("m", int, 10, help="memory slots per leaf"),
    Opt("l0", float, 1.0, help="leaf coverage radius in km"),
    Opt("seed", int, 0, help="recorded for the manifest; no randomness"),
]

_DEPLOY_OPTS = [
    Opt("k", int, 4, help="tree arity"),
    Opt("n", int, 3, help="tree depth"),
    Opt("m", int, 10, help="memory slots per leaf"),
    Opt("mode", str, "2d", help="deployment mode: 2d or lattice"),
    Opt("l0", float, 1.0, help="leaf coverage radius in km"),
    Opt("seed", int, 0, help="recorded for the manifest; no randomness"),
]

_MESH_OPTS = [
    Opt("ne", _ints, (125, 250, 500, 1000, 2000), help="mesh sizes, comma-separated"),
    Opt("reps", int, 200, help="instances per size"),
    Opt("seed", int, 0, help="base random seed"),
]

_OPTS = {
    "simulate": _SIM_OPTS,
    "sweep": _SWEEP_OPTS,
    "dynamic": _DYNAMIC_OPTS,
    "overhead": _OVERHEAD_OPTS,
    "deploy": _DEPLOY_OPTS,
    "mesh": _MESH_OPTS,
}

PRESETS = {
    "fig3a": (
        "sweep",
        {
            "k": 4,
            "m": 10,
            "N": (16, 64),
            "p_grid": _ACCEPT_GRID,
            "b": (1,),
            "pe": 1e-3,
            "coherence": 1000,
            "timeout": 1000,
            "warmup": 2000,
            "measure": 10_000,
        },
    ),
    "fig3c": (
        "sweep",
        {
            "k": 4,
            "m": 10,
            "N": (64,),
            "p_grid": (1e-3, 1.5e-3, 2e-3, 3e-3, 5e-3),
            "b": (2, 16),
            "pe": 1e-3,
            "coherence": 1000,
            "timeout": 1000,
            "warmup": 2000,
            "measure": 10_000,
        },
    ),
    "fig3e": (
        "dynamic",
        {
            "k": 4,
            "n": 3,
            "m": 10,
            "pe": 1e-3,
            "coherence": 1000,
            "timeout": 1000,
            "b": 1,
            "steps": ((0, 1e-3), (10_000, 1e-2), (20_000, 1e-3)),
            "total_cycles": 31_744,
            "ensemble": 512,
            "bin_width": 64,
        },
    ),
    "fig2a": (
        "overhead",
        {"k": (4,), "mode": "2d", "family": "css", "r": 1, "n_range": (3, 10)},
    ),
    "fig5d": ("mesh", {"ne": (125, 250, 500, 1000, 2000), "reps": 1000}),
}


def _load_config_file(path: str, subcommand: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {path!r} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValidationError(f"config file {path!r} must hold a JSON object")
    if "subcommand" in doc and "config" in doc:
        if doc["subcommand"] != subcommand:
            raise ValidationError(
                f"manifest {path!r} is for subcommand {doc['subcommand']!r}, not {subcommand!r}"
            )
        doc = doc["config"]
        if not isinstance(doc, dict):
            raise ValidationError(f"manifest {path!r} carries no config object")
    return dict(doc)


def _resolve(ns, subcommand: str) -> dict:
    """Merge flags > config file > preset > defaults into one dict."""
    opts = _OPTS[subcommand]
    file_cfg = _load_config_file(ns.config, subcommand) if ns.config else {}
    preset_cfg = {}
    if getattr(ns, "preset", None):
        if ns.preset not in PRESETS:
            raise ValidationError(
                f"unknown preset {ns.preset!r}; available: {', '.join(sorted(PRESETS))}"
            )
        target, preset_cfg = PRESETS[ns.preset]
        if target != subcommand:
            raise ValidationError(f"preset {ns.preset!r} belongs to subcommand {target!r}")
    resolved = {}
    missing = []
    for opt in opts:
        value = getattr(ns, opt.name)
        in_file = opt.name in file_cfg
        file_value = file_cfg.pop(opt.name) if in_file else None
        if value is None and in_file:
            value = opt.coerce_file(file_value)
        if value is None and opt.name in preset_cfg:
            value = preset_cfg[opt.name]
        if value is None:
            value = opt.default
        if value is None and opt.required:
            missing.append(opt.name)
        resolved[opt.name] = value
    if file_cfg:
        names = ", ".join(repr(key) for key in sorted(file_cfg))
        raise ValidationError(f"unknown config key(s): {names}")
    if missing:
        raise UsageError(
            f"missing required parameter(s): {', '.join('--' + name for name in missing)} "
            "(set via flags or a config file)"
        )
    return resolved


def _add_common(sub, with_preset: bool, with_jobs: bool) -> None:
    sub.add_argument("--config", metavar="FILE", help="JSON config file (or a manifest)")
    sub.add_argument("--out", metavar="DIR", default=".", help="output directory")
    sub.add_argument("--svg", action="store_true", default=False, help="also render an SVG figure")
    if with_preset:
        sub.add_argument("--preset", metavar="NAME", help="named parameter set (e.g. fig3e)")
    if with_jobs:
        sub.add_argument("--jobs", type=int, default=1, help="worker processes for replications")


def build_parser() -> _Parser:
    parser = _Parser(prog="qtnsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qtnsim {output_mod.__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    descriptions = {
        "simulate": "one seeded simulation run",
        "sweep": "replicated sweep over request rates, sizes, and batches",
        "dynamic": "ensemble step response with binned series",
        "overhead": "closed-form and bookkept qubit overhead tables",
        "deploy": "geometric layout with channel lengths and repeaters",
        "mesh": "random-mesh congestion scaling",
    }
    for name, opts in _OPTS.items():
        sub = subs.add_parser(name, help=descriptions[name], description=descriptions[name])
        for opt in opts:
            flag = "--" + opt.name.replace("_", "-")
            if opt.flag:
                sub.add_argument(flag, dest=opt.name, action="store_true", default=None,
                                 help=opt.help)
            else:
                sub.add_argument(flag, dest=opt.name, type=opt.parse, default=None,
                                 metavar=opt.name.upper(), help=opt.help)
        _add_common(
            sub,
            with_preset=name in ("sweep", "dynamic", "overhead", "mesh"),
            with_jobs=name in ("sweep", "dynamic"),
        )
    return parser


def _out_dir(ns) -> Path:
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _jsonable(value):
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


def _config_json(cfg: dict) -> dict:
    return {key: _jsonable(value) for key, value in cfg.items()}


def _nan_none(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return value


def _emit(out: Path, subcommand: str, cfg: dict, tables: dict, svg=None, data_tables=None):
    """Write data tables, the optional SVG, and the manifest; list files."""
    manifest_name = f"{subcommand}_manifest.json"
    written = []
    for name, (header, rows, metadata) in tables.items():
        meta = {
            "subcommand": subcommand,
            "version": output_mod.__version__,
            "manifest": manifest_name,
            "config": _config_json(cfg),
        }
        meta.update(metadata)
        write_table(out / name, header, rows, meta)
        written.append(name)
    if svg is not None:
        svg_name, draw = svg
        _render_svg(out / svg_name, draw)
        written.append(svg_name)
    outputs = {name: file_sha256(out / name) for name in written}
    write_manifest(
        out / manifest_name,
        subcommand=subcommand,
        config=_config_json(cfg),
        seed=cfg.get("seed", 0),
        outputs=outputs,
        data_tables=data_tables,
    )
    written.append(manifest_name)
    for name in written:
        print(out / name)


def _render_svg(path: Path, draw) -> None:
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "qtnsim"
    fig = plt.figure()
    try:
        draw(fig)
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)


def cmd_simulate(ns) -> None:
    cfg = _resolve(ns, "simulate")
    topology = TreeTopology(k=cfg["k"], n=cfg["n"], m=cfg["m"])
    sim_cfg = SimConfig(
        topology=topology,
        p_e=cfg["pe"],
        coherence=cfg["coherence"],
        request_timeout=cfg["timeout"],
        p=cfg["p"],
        b=cfg["b"],
        warmup=cfg["warmup"],
        measure=cfg["measure"],
        seed=cfg["seed"],
    )
    record = run(sim_cfg, record_series=bool(cfg["series"]))
    header = [
        "seed", "p", "b", "N", "success_rate", "mean_latency",
        "mean_buffered", "completed", "expired",
    ]
    row = [
        record.seed, cfg["p"], cfg["b"], topology.num_leaves,
        record.success_rate, record.mean_latency, record.mean_buffered,
        record.completed, record.expired,
    ]
    tables = {"simulate.csv": (header, [row], {})}
    if cfg["series"]:
        series = record.series
        s_header = [
            "cycle", "arrived", "completed", "expired", "latency_sum",
            "occupied", "occupied_router", "pairs_created",
            "pairs_consumed", "pairs_expired",
        ]
        s_rows = [
            [cycle] + [int(getattr(series, field)[cycle]) for field in s_header[1:]]
            for cycle in range(len(series.completed))
        ]
        tables["simulate_series.csv"] = (s_header, s_rows, {})
    svg = None
    if ns.svg:
        if not cfg["series"]:
            raise ValidationError("--svg for simulate requires --series")

        def draw(fig):
            series = record.series
            ax1, ax2 = fig.subplots(2, 1, sharex=True)
            ax1.plot(series.occupied, label="buffered pairs")
            ax1.plot(series.occupied_router, label="router pairs")
            ax1.set_ylabel("stored pairs")
            ax1.legend()
            ax2.plot(series.completed, label="completed")
            ax2.plot(series.expired, label="expired")
            ax2.set_xlabel("cycle")
            ax2.set_ylabel("events per cycle")
            ax2.legend()

        svg = ("simulate.svg", draw)
    _emit(_out_dir(ns), "simulate", cfg, tables, svg=svg)


def cmd_sweep(ns) -> None:
    cfg = _resolve(ns, "sweep")
    topology = TreeTopology(k=cfg["k"], n=1, m=cfg["m"])
    base = SimConfig(
        topology=topology,
        p_e=cfg["pe"],
        coherence=cfg["coherence"],
        request_timeout=cfg["timeout"],
        p=0.0,
        b=1,
        warmup=cfg["warmup"],
        measure=cfg["measure"],
        seed=cfg["seed"],
    )
    spec = SweepSpec(
        p_values=cfg["p_grid"],
        n_values=cfg["N"],
        b_values=cfg["b"],
        max_reps=cfg["max_reps"],
        min_reps=cfg["min_reps"],
        ci_level=cfg["ci_level"],
        ci_width_fraction=cfg["ci_width_fraction"],
    )
    rows = sweep(spec, base, jobs=ns.jobs)
    header = [
        "p", "N", "b", "reps", "success_rate", "success_halfwidth",
        "mean_latency", "latency_halfwidth", "mean_buffered",
        "buffered_halfwidth", "error",
    ]
    table_rows = [[row.get(key) for key in header] for row in rows]
    metadata = {"threshold_definition": THRESHOLD_DEFINITION}
    for n_leaves in cfg["N"]:
        for b in cfg["b"]:
            metadata[f"threshold_N{n_leaves}_b{b}"] = estimate_threshold(
                rows, n_leaves, b=b
            )
    metadata["covering_table_sha256"] = covering_table_digest()
    svg = None
    if ns.svg:

        def draw(fig):
            ax1, ax2 = fig.subplots(2, 1, sharex=True)
            for n_leaves in cfg["N"]:
                for b in cfg["b"]:
                    pts = [
                        row for row in rows
                        if row["N"] == n_leaves and row["b"] == b and "error" not in row
                    ]
                    ps = [row["p"] for row in pts]
                    label = f"N={n_leaves}, b={b}"
                    ax1.plot(ps, [row["success_rate"] for row in pts], "o-", label=label)
                    ax2.plot(ps, [row["mean_latency"] for row in pts], "o-", label=label)
            ax1.set_xscale("log")
            ax1.set_ylabel("success rate")
            ax1.axhline(0.95, linestyle=":", linewidth=0.8)
            ax1.legend()
            ax2.set_xscale("log")
            ax2.set_xlabel("request rate p")
            ax2.set_ylabel("mean latency (cycles)")

        svg = ("sweep.svg", draw)
    _emit(
        _out_dir(ns), "sweep", cfg,
        {"sweep.csv": (header, table_rows, metadata)},
        svg=svg,
        data_tables={"covering_table": covering_table_digest()},
    )


def cmd_dynamic(ns) -> None:
    cfg = _resolve(ns, "dynamic")
    topology = TreeTopology(k=cfg["k"], n=cfg["n"], m=cfg["m"])
    base = SimConfig(
        topology=topology,
        p_e=cfg["pe"],
        coherence=cfg["coherence"],
        request_timeout=cfg["timeout"],
        p=0.0,
        b=cfg["b"],
        seed=cfg["seed"],
    )
    schedule = DynamicSchedule(
        steps=cfg["steps"],
        total_cycles=cfg["total_cycles"],
        ensemble_size=cfg["ensemble"],
        bin_width=cfg["bin_width"],
    )
    result = dynamic_response(schedule, base, jobs=ns.jobs)
    header = [
        "bin", "start_cycle", "center_cycle", "success_rate",
        "mean_latency", "buffered", "buffered_router",
    ]
    rows = [
        [
            i,
            i * result.bin_width,
            result.bin_centers[i],
            _nan_none(float(result.success_rate[i])),
            _nan_none(float(result.mean_latency[i])),
            float(result.buffered[i]),
            float(result.buffered_router[i]),
        ]
        for i in range(result.success_rate.size)
    ]
    t_header = ["metric", "step_cycle", "direction", "pre", "post", "time_cycles"]
    t_rows = [
        [t.metric, t.step_cycle, t.direction, _nan_none(t.pre), _nan_none(t.post), t.time]
        for t in result.transitions
    ]
    metadata = {"totals": result.totals, "covering_table_sha256": covering_table_digest()}
    svg = None
    if ns.svg:

        def draw(fig):
            axes = fig.subplots(3, 1, sharex=True)
            x = result.bin_centers
            axes[0].plot(x, result.success_rate, label="success rate")
            axes[0].set_ylabel("success rate")
            axes[1].plot(x, result.mean_latency, label="latency")
            axes[1].set_ylabel("latency (cycles)")
            axes[2].plot(x, result.buffered, label="total")
            axes[2].plot(x, result.buffered_router, "--", label="routers")
            axes[2].set_ylabel("stored pairs")
            axes[2].set_xlabel("cycle")
            axes[2].legend()
            for ax in axes:
                for step_cycle, _ in cfg["steps"][1:]:
                    ax.axvline(step_cycle, linestyle=":", linewidth=0.8)

        svg = ("dynamic.svg", draw)
    _emit(
        _out_dir(ns), "dynamic", cfg,
        {
            "dynamic.csv": (header, rows, metadata),
            "dynamic_transitions.csv": (t_header, t_rows, {}),
        },
        svg=svg,
        data_tables={"covering_table": covering_table_digest()},
    )


_MODE_MAP = {"2d": "surface_covering", "lattice": "square_lattice"}
_FAMILY_MAP = {"css": "css_gv", "surface": "surface"}


def cmd_overhead(ns) -> None:
    cfg = _resolve(ns, "overhead")
    if cfg["mode"] not in ("dense",) and cfg["mode"] not in _MODE_MAP:
        raise ValidationError(f"mode must be one of dense, 2d, lattice; got {cfg['mode']!r}")
    if cfg["family"] not in _FAMILY_MAP:
        raise ValidationError(f"family must be css or surface, got {cfg['family']!r}")
    lo, hi = cfg["n_range"]
    ec = EcConfig(family=_FAMILY_MAP[cfg["family"]], r=cfg["r"])
    report_fields = list(OverheadReport.__dataclass_fields__)
    header = ["N"] + report_fields
    rows = []
    reports = {}
    for k in cfg["k"]:
        for n in range(lo, hi + 1):
            topology = TreeTopology(k=k, n=n, m=cfg["m"])
            plan = (
                None
                if cfg["mode"] == "dense"
                else layout(topology, _MODE_MAP[cfg["mode"]], cfg["l0"])
            )
            report = overhead(topology, plan, ec)
            reports[(k, n)] = report
            rows.append([topology.num_leaves] + [getattr(report, f) for f in report_fields])
    metadata = {"covering_table_sha256": covering_table_digest()}
    svg = None
    if ns.svg:

        def draw(fig):
            ax = fig.subplots()
            for k in cfg["k"]:
                ns_ = list(range(lo, hi + 1))
                xs = [k**n for n in ns_]
                ys = [reports[(k, n)].total_qubits for n in ns_]
                ax.plot(xs, ys, "o-", label=f"k={k}, {cfg['mode']}, {cfg['family']}, r={cfg['r']}")
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_xlabel("end nodes N")
            ax.set_ylabel("total qubits")
            ax.legend()

        svg = ("overhead.svg", draw)
    _emit(
        _out_dir(ns), "overhead", cfg,
        {"overhead.csv": (header, rows, metadata)},
        svg=svg,
        data_tables={"covering_table": covering_table_digest()},
    )


def cmd_deploy(ns) -> None:
    cfg = _resolve(ns, "deploy")
    if cfg["mode"] not in _MODE_MAP:
        raise ValidationError(f"mode must be 2d or lattice, got {cfg['mode']!r}")
    topology = TreeTopology(k=cfg["k"], n=cfg["n"], m=cfg["m"])
    plan: DeploymentPlan = layout(topology, _MODE_MAP[cfg["mode"]], cfg["l0"])
    l_header = ["label", "depth", "x_km", "y_km"]
    l_rows = []
    for label in sorted(plan.positions, key=lambda lab: (len(lab), lab)):
        x, y = plan.positions[label]
        text = "root" if not label else ".".join(str(d) for d in label)
        l_rows.append([text, len(label), x, y])
    s_header = [
        "depth", "nodes", "coverage_radius_km", "channel_length_km",
        "repeaters_per_channel",
    ]
    s_rows = []
    for depth in range(plan.n + 1):
        to_child = depth < plan.n
        s_rows.append([
            depth,
            cfg["k"] ** depth,
            plan.coverage_radius_at(depth),
            plan.channel_lengths[depth] if to_child else None,
            plan.repeater_counts[depth] if to_child else None,
        ])
    metadata = {
        "a_k": plan.a_k,
        "area_km2": plan.area,
        "covering_table_sha256": covering_table_digest(),
    }
    svg = None
    if ns.svg:

        def draw(fig):
            ax = fig.subplots()
            for depth in range(plan.n + 1):
                xs = [p[0] for lab, p in plan.positions.items() if len(lab) == depth]
                ys = [p[1] for lab, p in plan.positions.items() if len(lab) == depth]
                size = 60 / (depth + 1)
                ax.scatter(xs, ys, s=size, label=f"depth {depth}")
            ax.set_aspect("equal")
            ax.set_xlabel("x (km)")
            ax.set_ylabel("y (km)")
            ax.legend()

        svg = ("deploy.svg", draw)
    _emit(
        _out_dir(ns), "deploy", cfg,
        {
            "deploy_layout.csv": (l_header, l_rows, {}),
            "deploy_summary.csv": (s_header, s_rows, metadata),
        },
        svg=svg,
        data_tables={"covering_table": covering_table_digest()},
    )


def cmd_mesh(ns) -> None:
    cfg = _resolve(ns, "mesh")
    result = center_cell_scaling(cfg["ne"], cfg["reps"], cfg["seed"])
    header = [
        "n_e", "reps", "grid_side", "total_mean", "total_std",
        "center_mean", "center_std",
    ]
    rows = [[row[key] for key in header] for row in result["rows"]]
    metadata = {}
    for name in ("total_quadratic", "total_power", "center_mean_fit", "center_std_fit"):
        fit = result[name]
        metadata[name] = {
            "model": fit.model,
            "params": fit.params,
            "stderr": fit.stderr,
        }
    svg = None
    if ns.svg:

        def draw(fig):
            ax = fig.subplots()
            xs = [row["n_e"] for row in result["rows"]]
            ax.plot(xs, [row["total_mean"] for row in result["rows"]], "o-",
                    label="total crossings")
            ax.plot(xs, [row["center_mean"] for row in result["rows"]], "s-",
                    label="center cell")
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_xlabel("links n_e")
            ax.set_ylabel("crossings")
            ax.legend()

        svg = ("mesh.svg", draw)
    _emit(_out_dir(ns), "mesh", cfg, {"mesh.csv": (header, rows, metadata)}, svg=svg)


_HANDLERS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "dynamic": cmd_dynamic,
    "overhead": cmd_overhead,
    "deploy": cmd_deploy,
    "mesh": cmd_mesh,
}


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        if getattr(ns, "jobs", 1) < 1:
            raise ValidationError(f"jobs must be >= 1, got {ns.jobs}")
        _HANDLERS[ns.subcommand](ns)
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValidationError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - boundary: report and exit nonzero
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
