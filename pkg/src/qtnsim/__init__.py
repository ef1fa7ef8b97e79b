"""Hierarchical entanglement-routing network toolkit.

Simulation, resource accounting, and geometric deployment for k-ary
tree quantum networks, plus congestion statistics for unstructured
meshes.  Submodules:

- :mod:`qtnsim.topology`: tree structure, routing paths, memory and
  capacity allocation, activation probabilities.
- :mod:`qtnsim.deployment`: disk coverings, geometric layouts,
  channel lengths, and repeater counts.
- :mod:`qtnsim.overhead`: qubit-resource scaling laws with error
  correction.
- :mod:`qtnsim.simulator`: cycle-accurate discrete-event simulation
  of entanglement generation, buffering, and routing.
- :mod:`qtnsim.experiments`: replicated sweeps, threshold estimation,
  and ensemble step-response studies.
- :mod:`qtnsim.mesh`: random-mesh intersection counting and
  congestion scaling.
- :mod:`qtnsim.fitting`: power-law and proportional fits.
- :mod:`qtnsim.output`: data tables and run manifests.
- :mod:`qtnsim.cli`: command-line interface.
"""

from .deployment import (
    CoveringSolution,
    DeploymentPlan,
    coverage_radius,
    covering_table,
    covering_table_digest,
    growth_rate,
    layout,
    optimize_covering,
    repeater_count,
)
from .experiments import (
    DynamicResult,
    DynamicSchedule,
    SweepSpec,
    TransitionTiming,
    derive_seed,
    dynamic_response,
    estimate_threshold,
    sweep,
)
from .fitting import FitResult, fit_power_law, fit_proportional, fit_quadratic_coefficient
from .mesh import (
    center_cell_scaling,
    count_intersections,
    density_map,
    sample_segments,
    segments_intersect,
)
from .output import __version__
from .overhead import EcConfig, OverheadReport, overhead
from .simulator import (
    CycleSeries,
    MetricsRecord,
    SimConfig,
    Simulation,
    pair_request_probability,
    run,
    run_schedule,
    slot_occupancy_equilibrium,
)
from .topology import TreeTopology

__all__ = [
    "__version__",
    "TreeTopology",
    "CoveringSolution",
    "DeploymentPlan",
    "coverage_radius",
    "covering_table",
    "covering_table_digest",
    "growth_rate",
    "layout",
    "optimize_covering",
    "repeater_count",
    "EcConfig",
    "OverheadReport",
    "overhead",
    "SimConfig",
    "Simulation",
    "MetricsRecord",
    "CycleSeries",
    "pair_request_probability",
    "slot_occupancy_equilibrium",
    "run",
    "run_schedule",
    "SweepSpec",
    "DynamicSchedule",
    "DynamicResult",
    "TransitionTiming",
    "derive_seed",
    "sweep",
    "estimate_threshold",
    "dynamic_response",
    "FitResult",
    "fit_power_law",
    "fit_proportional",
    "fit_quadratic_coefficient",
    "center_cell_scaling",
    "count_intersections",
    "density_map",
    "sample_segments",
    "segments_intersect",
]
