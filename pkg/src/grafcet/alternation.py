"""Two-pump duty alternation chart and the closed control loop.

The chart mirrors the five-stage ring of the application: S1 verifies start
conditions for a dwell, S2 runs pump A, S3 monitors until demand returns, S4
runs pump B, S5 monitors and hands back to S1. A sixth, express transition
S2 -> S4 carries the alternation predicate proper: duty rotates to the
standby pump when the run-interval timer elapses or the lead pump faults,
without waiting for the pressure cycle. Monitoring and pump exits carry
tmr(step, t_alt) backstops so duty still rotates when demand is zero.

    S1 --T1: tmr(S1, start_delay) & !fault_A--> S2          (pump A)
    S2 --T2: p_high & !fault_A & !tmr(S2, t_alt)--> S3      (monitor)
    S2 --T3: tmr(S2, t_alt) | fault_A--> S4                 (alternation)
    S3 --T4: p_low | fault_A | tmr(S3, t_alt)--> S4         (pump B)
    S4 --T5: p_high | fault_B | tmr(S4, t_alt)--> S5        (monitor)
    S5 --T6: p_low | fault_B | tmr(S5, t_alt)--> S1         (cycle closes)
    S1 --T7: tmr(S1, start_delay) & fault_A--> S4           (recovery)

T7 is the recovery edge: while pump A is out, the ring skips straight from
the dwell to the B stint instead of parking with no pump commanded.

Only S2 drives cmd_A and only S4 drives cmd_B; the ring carries a single
token and T2/T3 (and T1/T7) are mutually exclusive by construction, so both
pump commands can never be true at once. A fault on the running lead pump
fires T3 (or the T5/T6 cascade) within the same scan it becomes visible.
The S1 dwell is also the stabilization anchor: with both pumps faulted the
T7/T5/T6 cascade lands back in S1, where a freshly started tmr(S1, ...)
reads false, so start_delay must be strictly positive.

closed_loop_step couples one plant tick to one scan in sensor -> control ->
actuator order: sensors are sampled from the pre-tick plant state, the scan
computes commands, and the plant integrates dt under those commands.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .chart import (
    ANALOG_IN,
    BOOL_IN,
    BOOL_OUT,
    Action,
    And,
    Chart,
    IoImage,
    Not,
    Or,
    SignalDecl,
    SignalRef,
    Step,
    Timer,
    Transition,
)
from .engine import EngineState, ScanEvents, scan
from .plant import PUMPS, PlantParams, PlantState, SensorImage, plant_step, sensor_read

SENSOR_CHANNELS = ("pressure", "p_low", "p_high", "fault_A", "fault_B")


@dataclass(frozen=True)
class AlternationParams:
    t_alt: float = 60.0  # duty rotation interval, seconds
    start_delay: float = 2.0  # verification dwell in S1, seconds

    def __post_init__(self):
        if not (math.isfinite(self.t_alt) and self.t_alt > 0):
            raise ValueError("t_alt must be finite and > 0")
        # > 0: the S1 dwell is what stops the both-pumps-faulted cascade
        if not (math.isfinite(self.start_delay) and self.start_delay > 0):
            raise ValueError("start_delay must be finite and > 0")
        if self.t_alt <= self.start_delay:
            raise ValueError("t_alt must exceed start_delay")


def _signals() -> tuple[SignalDecl, ...]:
    return (
        SignalDecl("pressure", ANALOG_IN, unit="bar"),
        SignalDecl("p_low", BOOL_IN),
        SignalDecl("p_high", BOOL_IN),
        SignalDecl("fault_A", BOOL_IN),
        SignalDecl("fault_B", BOOL_IN),
        SignalDecl("cmd_A", BOOL_OUT),
        SignalDecl("cmd_B", BOOL_OUT),
    )


def build_alternation_chart(params: "AlternationParams | None" = None) -> Chart:
    """The five-step alternation ring with the express alternation edge and
    the fault recovery edge (see the module docstring for the full shape)."""
    p = params or AlternationParams()
    sd, ta = p.start_delay, p.t_alt
    return Chart(
        name="two-pump-alternation",
        signals=_signals(),
        steps=(
            Step("S1", initial=True),
            Step("S2", actions=(Action("do", "cmd_A"),)),
            Step("S3"),
            Step("S4", actions=(Action("do", "cmd_B"),)),
            Step("S5"),
        ),
        transitions=(
            Transition(
                "T1",
                frozenset({"S1"}),
                frozenset({"S2"}),
                And(Timer("S1", sd), Not(SignalRef("fault_A"))),
            ),
            Transition(
                "T2",
                frozenset({"S2"}),
                frozenset({"S3"}),
                And(
                    And(SignalRef("p_high"), Not(SignalRef("fault_A"))),
                    Not(Timer("S2", ta)),
                ),
            ),
            Transition(
                "T3",
                frozenset({"S2"}),
                frozenset({"S4"}),
                Or(Timer("S2", ta), SignalRef("fault_A")),
            ),
            Transition(
                "T4",
                frozenset({"S3"}),
                frozenset({"S4"}),
                Or(Or(SignalRef("p_low"), SignalRef("fault_A")), Timer("S3", ta)),
            ),
            Transition(
                "T5",
                frozenset({"S4"}),
                frozenset({"S5"}),
                Or(Or(SignalRef("p_high"), SignalRef("fault_B")), Timer("S4", ta)),
            ),
            Transition(
                "T6",
                frozenset({"S5"}),
                frozenset({"S1"}),
                Or(Or(SignalRef("p_low"), SignalRef("fault_B")), Timer("S5", ta)),
            ),
            Transition(
                "T7",
                frozenset({"S1"}),
                frozenset({"S4"}),
                And(Timer("S1", sd), SignalRef("fault_A")),
            ),
        ),
    )


def build_baseline_chart() -> Chart:
    """Plain two-threshold single-pump control, no alternation. Declares the
    same signal set as the alternation chart so the same binding applies."""
    return Chart(
        name="baseline-hysteresis",
        signals=_signals(),
        steps=(
            Step("IDLE", initial=True),
            Step("PUMP", actions=(Action("do", "cmd_A"),)),
        ),
        transitions=(
            Transition("T1", frozenset({"IDLE"}), frozenset({"PUMP"}), SignalRef("p_low")),
            Transition("T2", frozenset({"PUMP"}), frozenset({"IDLE"}), SignalRef("p_high")),
        ),
    )


@dataclass(frozen=True)
class SignalBinding:
    """Wires chart signals to plant sensor channels and pump ids."""

    inputs: dict[str, str] = field(
        default_factory=lambda: {c: c for c in SENSOR_CHANNELS}
    )
    outputs: dict[str, str] = field(
        default_factory=lambda: {"cmd_A": "A", "cmd_B": "B"}
    )


def default_binding() -> SignalBinding:
    return SignalBinding()


def validate_binding(chart: Chart, binding: SignalBinding) -> list[str]:
    """Total on both sides, no channel or pump bound twice."""
    problems = []
    want = set(chart.inputs())
    got = set(binding.inputs)
    for name in sorted(want - got):
        problems.append(f"chart input {name!r} is not bound")
    for name in sorted(got - want):
        problems.append(f"binding names unknown chart input {name!r}")
    for sig, chan in sorted(binding.inputs.items()):
        if chan not in SENSOR_CHANNELS:
            problems.append(f"unknown sensor channel {chan!r} for {sig!r}")
    chans = [c for _, c in sorted(binding.inputs.items())]
    for c in sorted({c for c in chans if chans.count(c) > 1}):
        problems.append(f"sensor channel {c!r} bound twice")

    want = set(chart.outputs())
    got = set(binding.outputs)
    for name in sorted(want - got):
        problems.append(f"chart output {name!r} is not bound")
    for name in sorted(got - want):
        problems.append(f"binding names unknown chart output {name!r}")
    for sig, pump in sorted(binding.outputs.items()):
        if pump not in PUMPS:
            problems.append(f"unknown pump {pump!r} for {sig!r}")
    pumps = [p for _, p in sorted(binding.outputs.items())]
    for p in sorted({p for p in pumps if pumps.count(p) > 1}):
        problems.append(f"pump {p!r} bound twice")
    return problems


@dataclass(frozen=True)
class ClosedLoopTick:
    engine: EngineState
    plant: PlantState
    sensors: SensorImage
    inputs: IoImage
    outputs: IoImage  # chart outputs, even when manual commands drove the plant
    commands: dict[str, bool]  # what actually reached the pumps
    running: dict[str, bool]  # commanded and healthy during this tick
    events: ScanEvents


def closed_loop_step(
    engine: EngineState,
    plant: PlantState,
    binding: SignalBinding,
    params: PlantParams,
    demand: float,
    dt: float,
    prev_sensors: "SensorImage | None" = None,
    rng: "random.Random | None" = None,
    manual_commands: "dict[str, bool] | None" = None,
) -> ClosedLoopTick:
    """One coupled tick: sample sensors, scan the chart, drive the plant.

    manual_commands, when given, replaces the chart's pump commands at the
    actuator (the chart still scans and its marking still evolves).
    """
    sensors = sensor_read(plant, params, prev_sensors, rng)
    channels = sensors.channels()
    bools = {}
    analogs = {}
    for sig, chan in binding.inputs.items():
        if chan == "pressure":
            analogs[sig] = channels[chan]
        else:
            bools[sig] = channels[chan]
    inputs = IoImage(bools=bools, analogs=analogs)

    engine2, outputs, events = scan(engine, inputs, dt)

    if manual_commands is not None:
        commands = {p: bool(manual_commands.get(p, False)) for p in PUMPS}
    else:
        commands = {pump: outputs.bools[sig] for sig, pump in binding.outputs.items()}
    running = {p: commands.get(p, False) and not plant.faulted[p] for p in PUMPS}
    plant2 = plant_step(plant, params, commands, demand, dt)

    return ClosedLoopTick(
        engine=engine2,
        plant=plant2,
        sensors=sensors,
        inputs=inputs,
        outputs=outputs,
        commands=commands,
        running=running,
        events=events,
    )
