"""Deterministic fog-computing simulator for smart-grid charging services."""

from .engine import EventQueue, LatencyModel, RngStream, SimEvent, SimTime, link_latency
from .errors import (
    CapacityExceeded,
    ConfigError,
    CyclicFlow,
    EmptyResultSet,
    FlowNotResident,
    GridFogError,
    InvalidValue,
    MixedSweepVariables,
    NoEligibleNodes,
    ParseError,
    PileUnavailable,
    SchedulingInPast,
    StaleReport,
    UnknownKey,
)
from .harness import (
    PlotPoint,
    SweepSpec,
    default_sweep,
    derive_seed,
    emit_csv,
    emit_plot_data,
    load_config,
    parse_csv,
    run_sweep,
    write_topology_csv,
)
from .metrics import MetricsRow, MetricsTable, percentile_nearest_rank
from .scenario import (
    ScenarioConfig,
    Simulation,
    run_coordinated,
    run_scenario,
    run_traditional,
)

__version__ = "0.1.0"
