"""Two-pump hydraulic plant: lumped pressure vessel, hysteresis switches, faults.

Forward-Euler pressure update per tick:

    pressure' = clamp(pressure + dt * (k_pump * n_running - k_demand * demand),
                      0, p_max)

where n_running counts pumps that are commanded on AND not faulted. A faulted
pump contributes no flow and accrues no run time regardless of its command.

The low/high pressure switches latch with hysteresis width h: p_low turns
true at pressure <= p_set_low and back false at pressure >= p_set_low + h,
holding its previous value in between; p_high mirrors that around p_set_high
(true at >= p_set_high, false at <= p_set_high - h). The analog transmitter
channel may carry optional uniform noise; the switches always read the true
pressure.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

PUMPS = ("A", "B")
FAULT_OPS = ("fail", "repair")


def _require(cond: bool, message: str):
    if not cond:
        raise ValueError(message)


@dataclass(frozen=True)
class PlantParams:
    p_max: float = 6.0
    k_pump: float = 0.5
    k_demand: float = 0.4
    p_set_low: float = 2.5
    p_set_high: float = 4.0
    p_crit: float = 1.5
    pump_power: float = 7.5  # kW per running pump, for the energy proxy
    hysteresis: float = 0.2
    noise_amp: float = 0.0
    p0: float = 3.0

    def __post_init__(self):
        for name in ("p_max", "k_pump", "k_demand", "p_set_low", "p_set_high",
                     "p_crit", "pump_power", "hysteresis", "noise_amp", "p0"):
            _require(math.isfinite(getattr(self, name)), f"{name} must be finite")
        _require(0 < self.p_crit <= self.p_set_low < self.p_set_high <= self.p_max,
                 "thresholds must satisfy 0 < p_crit <= p_set_low < p_set_high <= p_max")
        _require(self.k_pump > 0, "k_pump must be > 0")
        _require(self.k_demand >= 0, "k_demand must be >= 0")
        _require(self.pump_power > 0, "pump_power must be > 0")
        _require(self.hysteresis >= 0, "hysteresis must be >= 0")
        _require(self.noise_amp >= 0, "noise_amp must be >= 0")
        _require(0 <= self.p0 <= self.p_max, "p0 must lie within [0, p_max]")


@dataclass(frozen=True)
class PlantState:
    pressure: float
    run_seconds: dict[str, float] = field(default_factory=lambda: {p: 0.0 for p in PUMPS})
    faulted: dict[str, bool] = field(default_factory=lambda: {p: False for p in PUMPS})


@dataclass(frozen=True)
class SensorImage:
    pressure: float  # analog channel (noisy if configured)
    p_low: bool
    p_high: bool
    fault_A: bool
    fault_B: bool

    def channels(self) -> dict:
        return {
            "pressure": self.pressure,
            "p_low": self.p_low,
            "p_high": self.p_high,
            "fault_A": self.fault_A,
            "fault_B": self.fault_B,
        }


@dataclass(frozen=True)
class FaultEvent:
    time: float
    pump: str
    op: str  # fail | repair

    def __post_init__(self):
        _require(math.isfinite(self.time) and self.time >= 0, "event time must be finite and >= 0")
        _require(self.pump in PUMPS, f"unknown pump {self.pump!r}")
        _require(self.op in FAULT_OPS, f"unknown fault op {self.op!r}")


@dataclass(frozen=True)
class FaultScript:
    events: tuple[FaultEvent, ...] = ()

    def __post_init__(self):
        times = [e.time for e in self.events]
        _require(times == sorted(times), "fault events must be ordered by time")

    def between(self, t0: float, t1: float) -> tuple[FaultEvent, ...]:
        """Events with t0 < time <= t1, for incremental application."""
        return tuple(e for e in self.events if t0 < e.time <= t1)


@dataclass(frozen=True)
class DemandProfile:
    """Piecewise-constant demand: value of the last point at or before t.
    Before the first point (or with no points) demand is 0."""

    points: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        times = [t for t, _ in self.points]
        _require(times == sorted(times) and len(set(times)) == len(times),
                 "demand points must have strictly increasing times")
        for t, v in self.points:
            _require(math.isfinite(t) and math.isfinite(v), "demand points must be finite")
            _require(v >= 0, "demand must be >= 0")

    @classmethod
    def constant(cls, value: float) -> "DemandProfile":
        return cls(points=((0.0, value),))

    def at(self, t: float) -> float:
        value = 0.0
        for time, v in self.points:
            if time <= t:
                value = v
            else:
                break
        return value


def plant_reset(params: PlantParams) -> PlantState:
    return PlantState(pressure=params.p0)


def plant_step(
    state: PlantState,
    params: PlantParams,
    commands: dict,
    demand: float,
    dt: float,
) -> PlantState:
    """Advance the vessel by dt under pump commands and a demand draw."""
    _require(math.isfinite(dt) and dt > 0, f"dt must be finite and > 0, got {dt!r}")
    _require(math.isfinite(demand) and demand >= 0, f"demand must be finite and >= 0, got {demand!r}")
    for pump in commands:
        _require(pump in PUMPS, f"unknown pump {pump!r}")

    effective = {p: bool(commands.get(p, False)) and not state.faulted[p] for p in PUMPS}
    n_running = sum(effective.values())
    pressure = state.pressure + dt * (params.k_pump * n_running - params.k_demand * demand)
    pressure = min(max(pressure, 0.0), params.p_max)
    run = {p: state.run_seconds[p] + (dt if effective[p] else 0.0) for p in PUMPS}
    return PlantState(pressure=pressure, run_seconds=run, faulted=dict(state.faulted))


def sensor_read(
    state: PlantState,
    params: PlantParams,
    prev: "SensorImage | None" = None,
    rng: "random.Random | None" = None,
) -> SensorImage:
    """Sample the sensors. prev supplies the held switch values inside the
    hysteresis band; a fresh start reads both switches false there."""
    p = state.pressure
    if p <= params.p_set_low:
        p_low = True
    elif p >= params.p_set_low + params.hysteresis:
        p_low = False
    else:
        p_low = prev.p_low if prev is not None else False

    if p >= params.p_set_high:
        p_high = True
    elif p <= params.p_set_high - params.hysteresis:
        p_high = False
    else:
        p_high = prev.p_high if prev is not None else False

    channel = p
    if params.noise_amp > 0 and rng is not None:
        channel = p + rng.uniform(-params.noise_amp, params.noise_amp)

    return SensorImage(
        pressure=channel,
        p_low=p_low,
        p_high=p_high,
        fault_A=state.faulted["A"],
        fault_B=state.faulted["B"],
    )


def apply_fault_script(state: PlantState, script: FaultScript, now: float) -> PlantState:
    """Apply every scripted event with time <= now.

    Events assign the fault flag rather than toggling it, so replaying a
    prefix is idempotent: calling this again with the same or a later `now`
    yields the same flags as applying each event exactly once in order.
    """
    flags = dict(state.faulted)
    for event in script.events:
        if event.time > now:
            break
        flags[event.pump] = event.op == "fail"
    if flags == state.faulted:
        return state
    return replace(state, faulted=flags)


def apply_fault_events(state: PlantState, events) -> PlantState:
    """Apply an explicit batch of events (incremental form used by the live
    service, which mixes scripted events with operator injections)."""
    flags = dict(state.faulted)
    for event in events:
        flags[event.pump] = event.op == "fail"
    if flags == state.faulted:
        return state
    return replace(state, faulted=flags)
