"""GRAFCET (IEC 60848) sequential control: typed charts, a textual chart
format, a deterministic scan-cycle interpreter, a two-pump hydraulic plant,
scenario runs with metrics, and a live control service."""

from __future__ import annotations

from .alternation import (
    AlternationParams,
    ClosedLoopTick,
    SignalBinding,
    build_alternation_chart,
    build_baseline_chart,
    closed_loop_step,
    default_binding,
    validate_binding,
)
from .chart import (
    ANALOG_IN,
    BOOL_IN,
    BOOL_OUT,
    Action,
    And,
    Chart,
    Compare,
    Const,
    IoImage,
    Marking,
    Not,
    Or,
    RisingEdge,
    SignalDecl,
    SignalRef,
    Step,
    StepActive,
    Timer,
    Transition,
    ValidationIssue,
    eval_receptivity,
    fire_set,
    fireable_transitions,
    initial_marking,
    validate_chart,
)
from .dsl import (
    ParseDiagnostic,
    ParseResult,
    format_diagnostics,
    parse_chart,
    print_chart,
)
from .engine import EngineState, ScanEvents, TraceStep, engine_reset, run_trace, scan
from .errors import (
    ChartInvalidError,
    GrafcetError,
    NotFireableError,
    ScenarioError,
    StoredActionConflictError,
    UnknownSignalError,
    UnstableChartError,
)
from .harness import (
    MetricsReport,
    RunResult,
    ScenarioConfig,
    TraceRecord,
    compute_metrics,
    load_scenario,
    metrics_json,
    parse_scenario,
    run_scenario,
    trace_csv,
    write_artifacts,
)
from .plant import (
    DemandProfile,
    FaultEvent,
    FaultScript,
    PlantParams,
    PlantState,
    SensorImage,
    apply_fault_events,
    apply_fault_script,
    plant_reset,
    plant_step,
    sensor_read,
)
from .service import ControlService, ServiceSettings, Session

__version__ = "0.1.0"

__all__ = [
    "ANALOG_IN",
    "BOOL_IN",
    "BOOL_OUT",
    "Action",
    "AlternationParams",
    "And",
    "Chart",
    "ChartInvalidError",
    "ClosedLoopTick",
    "Compare",
    "Const",
    "ControlService",
    "DemandProfile",
    "EngineState",
    "FaultEvent",
    "FaultScript",
    "GrafcetError",
    "IoImage",
    "Marking",
    "MetricsReport",
    "Not",
    "NotFireableError",
    "Or",
    "ParseDiagnostic",
    "ParseResult",
    "PlantParams",
    "PlantState",
    "RisingEdge",
    "RunResult",
    "ScanEvents",
    "ScenarioConfig",
    "ScenarioError",
    "SensorImage",
    "ServiceSettings",
    "Session",
    "SignalBinding",
    "SignalDecl",
    "SignalRef",
    "Step",
    "StepActive",
    "StoredActionConflictError",
    "Timer",
    "TraceRecord",
    "TraceStep",
    "Transition",
    "UnknownSignalError",
    "UnstableChartError",
    "ValidationIssue",
    "apply_fault_events",
    "apply_fault_script",
    "build_alternation_chart",
    "build_baseline_chart",
    "closed_loop_step",
    "compute_metrics",
    "default_binding",
    "engine_reset",
    "eval_receptivity",
    "fire_set",
    "fireable_transitions",
    "format_diagnostics",
    "initial_marking",
    "load_scenario",
    "metrics_json",
    "parse_chart",
    "parse_scenario",
    "plant_reset",
    "plant_step",
    "print_chart",
    "run_scenario",
    "run_trace",
    "scan",
    "sensor_read",
    "trace_csv",
    "validate_binding",
    "validate_chart",
    "write_artifacts",
    "__version__",
]
