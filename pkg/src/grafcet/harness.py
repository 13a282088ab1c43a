"""Offline scenario runner: configs, closed-loop traces, metrics, artifacts.

A scenario is an INI-style text file with [run], [plant], [alternation],
[demand] and [faults] sections, every key optional except run.duration:

    [run]
    duration = 300        # seconds of simulated time
    dt = 0.1              # scan/tick step, seconds
    seed = 0              # noise rng seed
    warmup = 5            # seconds excluded from downtime accounting
    controller = grafcet  # or baseline-hysteresis
    # chart = path.gft    # optional chart override, relative to this file

    [demand]
    profile =
        0 0.8
        120 1.2

    [faults]
    events =
        30 A fail
        90 A repair

Runs are deterministic: a fixed config yields a byte-identical trace CSV and
metrics document on every replay. Output files are written to a temp file in
the target directory and renamed into place only on success, so a failing
run never leaves partial artifacts.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
import random
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path

from .alternation import (
    AlternationParams,
    SignalBinding,
    build_alternation_chart,
    build_baseline_chart,
    closed_loop_step,
    default_binding,
    validate_binding,
)
from .chart import Chart
from .dsl import format_diagnostics, parse_chart
from .engine import engine_reset
from .errors import ScenarioError
from .plant import (
    PUMPS,
    DemandProfile,
    FaultEvent,
    FaultScript,
    PlantParams,
    apply_fault_script,
    plant_reset,
)

MAX_TICKS = 10_000_000
CONTROLLERS = ("grafcet", "baseline-hysteresis")

DEFAULT_DT = 0.1
DEFAULT_WARMUP = 5.0
DEFAULT_DEMAND = 0.8


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float
    dt: float = DEFAULT_DT
    seed: int = 0
    warmup: float = DEFAULT_WARMUP
    controller: str = "grafcet"
    chart_path: "str | None" = None
    plant: PlantParams = field(default_factory=PlantParams)
    alternation: AlternationParams = field(default_factory=AlternationParams)
    demand: DemandProfile = field(
        default_factory=lambda: DemandProfile.constant(DEFAULT_DEMAND)
    )
    faults: FaultScript = field(default_factory=FaultScript)

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ScenarioError(f"duration must be finite and > 0, got {self.duration!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ScenarioError(f"dt must be finite and > 0, got {self.dt!r}")
        if self.ticks() > MAX_TICKS:
            raise ScenarioError(
                f"duration/dt = {self.ticks()} ticks exceeds the {MAX_TICKS} cap"
            )
        if not (math.isfinite(self.warmup) and self.warmup >= 0):
            raise ScenarioError(f"warmup must be finite and >= 0, got {self.warmup!r}")
        if self.controller not in CONTROLLERS:
            raise ScenarioError(
                f"unknown controller {self.controller!r}, expected one of {CONTROLLERS}"
            )

    def ticks(self) -> int:
        # ceil with a guard against float quotient noise (1000/0.1 etc.)
        return math.ceil(self.duration / self.dt - 1e-9)


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    clock: float
    marking: tuple[str, ...]
    inputs: dict
    outputs: dict
    commands: dict
    running: tuple[str, ...]
    pressure: float  # plant pressure after this tick
    demand: float


@dataclass(frozen=True)
class MetricsReport:
    downtime_seconds: float
    downtime_fraction: float
    switchover_count: int
    runtime_balance: float
    energy_proxy_kwh: float
    faults_injected: int
    faults_recovered: int
    mean_fault_response_scans: float

    def as_document(self, cfg: "ScenarioConfig | None" = None) -> dict:
        """Flat document with stable key order for serialization."""
        doc = {}
        if cfg is not None:
            doc["controller"] = cfg.controller
            doc["duration"] = round(cfg.duration, 6)
            doc["dt"] = round(cfg.dt, 6)
            doc["seed"] = cfg.seed
            doc["ticks"] = cfg.ticks()
        for f in fields(self):
            value = getattr(self, f.name)
            doc[f.name] = round(value, 6) if isinstance(value, float) else value
        doc["uptime_fraction"] = round(1.0 - self.downtime_fraction, 6)
        return doc


@dataclass(frozen=True)
class RunResult:
    chart: Chart
    config: ScenarioConfig
    trace: list[TraceRecord]
    metrics: MetricsReport


# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------


def _parse_table(text: str, want_fields: int, where: str) -> list[list[str]]:
    rows = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != want_fields:
            raise ScenarioError(
                f"{where}: expected {want_fields} fields per line, got {line!r}"
            )
        rows.append(parts)
    return rows


def _num(section, key, text, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise ScenarioError(f"[{section}] {key}: not a number: {text!r}") from None


def parse_scenario(text: str, base_dir: "Path | None" = None) -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str  # keys stay case-sensitive
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ScenarioError(f"bad scenario file: {err}") from None

    known = {"run", "plant", "alternation", "demand", "faults"}
    for name in parser.sections():
        if name not in known:
            raise ScenarioError(f"unknown section [{name}]")

    run = parser["run"] if parser.has_section("run") else {}
    allowed_run = {"duration", "dt", "seed", "warmup", "controller", "chart"}
    for key in run:
        if key not in allowed_run:
            raise ScenarioError(f"[run] unknown key {key!r}")
    if "duration" not in run:
        raise ScenarioError("[run] duration is required")

    plant_kwargs = {}
    if parser.has_section("plant"):
        valid = {f.name for f in fields(PlantParams)}
        for key, value in parser["plant"].items():
            if key not in valid:
                raise ScenarioError(f"[plant] unknown key {key!r}")
            plant_kwargs[key] = _num("plant", key, value)
    try:
        plant = PlantParams(**plant_kwargs)
    except ValueError as err:
        raise ScenarioError(f"[plant] {err}") from None

    alt_kwargs = {}
    if parser.has_section("alternation"):
        valid = {f.name for f in fields(AlternationParams)}
        for key, value in parser["alternation"].items():
            if key not in valid:
                raise ScenarioError(f"[alternation] unknown key {key!r}")
            alt_kwargs[key] = _num("alternation", key, value)
    try:
        alternation = AlternationParams(**alt_kwargs)
    except ValueError as err:
        raise ScenarioError(f"[alternation] {err}") from None

    demand = DemandProfile.constant(DEFAULT_DEMAND)
    if parser.has_section("demand"):
        for key in parser["demand"]:
            if key != "profile":
                raise ScenarioError(f"[demand] unknown key {key!r}")
        if parser.has_option("demand", "profile"):
            rows = _parse_table(parser.get("demand", "profile"), 2, "[demand] profile")
            points = tuple(
                (_num("demand", "profile", t), _num("demand", "profile", v))
                for t, v in rows
            )
            try:
                demand = DemandProfile(points=points)
            except ValueError as err:
                raise ScenarioError(f"[demand] {err}") from None

    faults = FaultScript()
    if parser.has_section("faults"):
        for key in parser["faults"]:
            if key != "events":
                raise ScenarioError(f"[faults] unknown key {key!r}")
        if parser.has_option("faults", "events"):
            rows = _parse_table(parser.get("faults", "events"), 3, "[faults] events")
            try:
                events = tuple(
                    FaultEvent(time=_num("faults", "events", t), pump=p, op=op)
                    for t, p, op in rows
                )
                faults = FaultScript(events=events)
            except ValueError as err:
                raise ScenarioError(f"[faults] {err}") from None

    chart_path = run.get("chart") if isinstance(run, configparser.SectionProxy) else None
    if chart_path and base_dir is not None:
        chart_path = str((base_dir / chart_path).resolve())

    return ScenarioConfig(
        duration=_num("run", "duration", run["duration"]),
        dt=_num("run", "dt", run.get("dt", str(DEFAULT_DT))),
        seed=_num("run", "seed", run.get("seed", "0"), int),
        warmup=_num("run", "warmup", run.get("warmup", str(DEFAULT_WARMUP))),
        controller=run.get("controller", "grafcet"),
        chart_path=chart_path,
        plant=plant,
        alternation=alternation,
        demand=demand,
        faults=faults,
    )


def load_scenario(path: "str | Path") -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as err:
        raise ScenarioError(f"cannot read scenario {p}: {err}") from None
    return parse_scenario(text, base_dir=p.parent)


def _load_chart_file(path: str) -> Chart:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ScenarioError(f"cannot read chart {path}: {err}") from None
    result = parse_chart(text)
    if not result.ok:
        raise ScenarioError(
            f"chart {path} does not parse:\n" + format_diagnostics(result.errors, path)
        )
    return result.chart


def scenario_chart(cfg: ScenarioConfig) -> Chart:
    if cfg.chart_path:
        return _load_chart_file(cfg.chart_path)
    if cfg.controller == "baseline-hysteresis":
        return build_baseline_chart()
    return build_alternation_chart(cfg.alternation)


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    chart = scenario_chart(cfg)
    binding = default_binding()
    problems = validate_binding(chart, binding)
    if problems:
        raise ScenarioError("chart does not fit the plant binding: " + "; ".join(problems))

    engine = engine_reset(chart)
    plant = plant_reset(cfg.plant)
    rng = random.Random(cfg.seed)
    sensors = None
    trace: list[TraceRecord] = []
    n = cfg.ticks()
    for k in range(n):
        t = k * cfg.dt
        plant = apply_fault_script(plant, cfg.faults, t)
        demand = cfg.demand.at(t)
        tick = closed_loop_step(
            engine, plant, binding, cfg.plant, demand, cfg.dt,
            prev_sensors=sensors, rng=rng,
        )
        engine, plant, sensors = tick.engine, tick.plant, tick.sensors
        trace.append(
            TraceRecord(
                tick=k,
                clock=engine.clock,
                marking=tuple(sorted(engine.marking.active)),
                inputs={**tick.inputs.analogs, **tick.inputs.bools},
                outputs=dict(tick.outputs.bools),
                commands=dict(tick.commands),
                running=tuple(p for p in PUMPS if tick.running[p]),
                pressure=plant.pressure,
                demand=demand,
            )
        )
    metrics = compute_metrics(trace, cfg)
    return RunResult(chart=chart, config=cfg, trace=trace, metrics=metrics)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def _driven(record: TraceRecord) -> "str | None":
    a = record.commands.get("A", False)
    b = record.commands.get("B", False)
    if a and not b:
        return "A"
    if b and not a:
        return "B"
    return None


def compute_metrics(trace: list[TraceRecord], cfg: ScenarioConfig) -> MetricsReport:
    dt = cfg.dt
    downtime = 0.0
    t_run = {p: 0.0 for p in PUMPS}
    switchovers = 0
    last_driven = None
    for row in trace:
        if row.clock > cfg.warmup and row.pressure < cfg.plant.p_crit:
            downtime += dt
        for p in row.running:
            t_run[p] += dt
        driven = _driven(row)
        if driven is not None:
            if last_driven is not None and driven != last_driven:
                switchovers += 1
            last_driven = driven

    total_run = t_run["A"] + t_run["B"]
    balance = abs(t_run["A"] - t_run["B"]) / total_run if total_run > 0 else 0.0
    energy = cfg.plant.pump_power * total_run / 3600.0

    end_clock = len(trace) * dt
    injected = 0
    recovered = 0
    open_faults: dict[str, bool] = {p: False for p in PUMPS}
    responses: list[int] = []
    for i, event in enumerate(cfg.faults.events):
        if event.time > end_clock:
            break
        if event.op == "repair":
            if open_faults[event.pump]:
                recovered += 1
                open_faults[event.pump] = False
            continue
        injected += 1
        open_faults[event.pump] = True
        responses.extend(_response_scans(trace, event, dt))

    mean_response = sum(responses) / len(responses) if responses else 0.0
    duration = cfg.duration
    return MetricsReport(
        downtime_seconds=downtime,
        downtime_fraction=downtime / duration if duration > 0 else 0.0,
        switchover_count=switchovers,
        runtime_balance=balance,
        energy_proxy_kwh=energy,
        faults_injected=injected,
        faults_recovered=recovered,
        mean_fault_response_scans=mean_response,
    )


def _response_scans(trace: list[TraceRecord], event: FaultEvent, dt: float) -> list[int]:
    """Scans from the fault being visible in the input image until the standby
    pump's command goes true, for faults that hit the driving pump."""
    visible = math.ceil(event.time / dt - 1e-9)
    if visible >= len(trace):
        return []
    was_lead = visible > 0 and _driven(trace[visible - 1]) == event.pump
    if not was_lead:
        return []
    standby = "B" if event.pump == "A" else "A"
    for k in range(visible, len(trace)):
        if trace[k].commands.get(standby, False):
            return [k - visible]
    return []


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _fmt_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def trace_csv(result: RunResult) -> str:
    chart = result.chart
    in_names = list(chart.inputs())
    out_names = list(chart.outputs())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = (
        ["tick", "clock", "marking"]
        + [f"in_{n}" for n in in_names]
        + [f"out_{n}" for n in out_names]
        + ["pressure", "running", "demand"]
    )
    writer.writerow(header)
    for row in result.trace:
        writer.writerow(
            [row.tick, _fmt_cell(row.clock), "+".join(row.marking)]
            + [_fmt_cell(row.inputs[n]) for n in in_names]
            + [_fmt_cell(row.outputs[n]) for n in out_names]
            + [_fmt_cell(row.pressure), "+".join(row.running), _fmt_cell(row.demand)]
        )
    return buf.getvalue()


def metrics_json(result: RunResult) -> str:
    return json.dumps(result.metrics.as_document(result.config), indent=2) + "\n"


def write_artifacts(result: RunResult, out_dir: "str | Path", *, trace: bool = True) -> list[Path]:
    out = Path(out_dir)
    written = []
    if trace:
        path = out / "trace.csv"
        _atomic_write(path, trace_csv(result))
        written.append(path)
    path = out / "metrics.json"
    _atomic_write(path, metrics_json(result))
    written.append(path)
    return written
