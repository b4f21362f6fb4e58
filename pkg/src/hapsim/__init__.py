"""Time-slotted simulator of a dense urban RAN with an aerial super-cell
overlay: who gets served, how well capacity is used, and at what power."""

from .association import (
    DemandPoint,
    TimeSlotResult,
    associate_slot,
    collect_rejected_points,
    haps_overlay,
    run_simulation,
)
from .config import RunConfig, SweepSettings, default_config, load_config
from .densify import DensificationPlan, evaluate_plan, plan_sites
from .errors import (
    CalibrationError,
    ConfigurationError,
    HapsimError,
    InfeasiblePointError,
    MetricsError,
)
from .experiments import (
    CalibrationResult,
    SweepRecord,
    Table1Result,
    VariantSpec,
    build_densification_plan,
    calibrate_load,
    critical_demand,
    default_variants,
    run_sweep,
    run_table1,
)
from .linkbudget import (
    LinkBudgetParams,
    footprint_radius,
    parity_distance,
    propagation_latency,
)
from .metrics import (
    MetricsSummary,
    capacity_utilization,
    capacity_utilization_switchoff,
    network_power_kw,
    proportion_served,
    summarize,
)
from .mobility import (
    Assignment,
    UserStates,
    init_users,
    sample_demands,
    sigma_for_mean,
    step_mobility,
)
from .rng import SimulationStreams, make_streams
from .scenario import (
    CellSite,
    MobilityParams,
    Position,
    Scenario,
    SiteKind,
    default_scenario,
    in_coverage,
    nearest_site,
    place_initial_grid,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "CalibrationError",
    "CalibrationResult",
    "CellSite",
    "ConfigurationError",
    "DemandPoint",
    "DensificationPlan",
    "HapsimError",
    "InfeasiblePointError",
    "LinkBudgetParams",
    "MetricsError",
    "MetricsSummary",
    "MobilityParams",
    "Position",
    "RunConfig",
    "Scenario",
    "SimulationStreams",
    "SiteKind",
    "SweepRecord",
    "SweepSettings",
    "Table1Result",
    "TimeSlotResult",
    "UserStates",
    "VariantSpec",
    "associate_slot",
    "build_densification_plan",
    "calibrate_load",
    "capacity_utilization",
    "capacity_utilization_switchoff",
    "collect_rejected_points",
    "critical_demand",
    "default_config",
    "default_scenario",
    "default_variants",
    "evaluate_plan",
    "footprint_radius",
    "haps_overlay",
    "in_coverage",
    "init_users",
    "load_config",
    "make_streams",
    "nearest_site",
    "network_power_kw",
    "parity_distance",
    "place_initial_grid",
    "plan_sites",
    "propagation_latency",
    "proportion_served",
    "run_simulation",
    "run_sweep",
    "run_table1",
    "sample_demands",
    "sigma_for_mean",
    "step_mobility",
    "summarize",
]
