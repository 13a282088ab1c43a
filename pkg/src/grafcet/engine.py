"""Deterministic PLC-style scan interpreter for charts.

One scan latches the input image, runs the evolution rules to stability in a
bounded micro-loop, applies stored actions, and computes the output image:

    latch inputs -> evolve (fire complete fireable sets until none remain)
                 -> stored set/reset in activation order
                 -> outputs = stored image overlaid with continuous drives

Rising edges are detected against the previous scan's latched image and only
on the first micro-iteration; later iterations within the same scan see no
new edges. The micro-loop is capped at len(transitions) + 1 iterations; a
chart still evolving at the cap raises UnstableChartError. Receptivities may
reference boolean outputs: they read the output image latched at the end of
the previous scan.

EngineState is a value; scan() returns a new state and never mutates its
argument, so replaying a trace is reproducible by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .chart import (
    ANALOG_IN,
    BOOL_IN,
    BOOL_OUT,
    Chart,
    IoImage,
    Marking,
    fire_set,
    fireable_transitions,
    initial_marking,
    validate_chart,
)
from .errors import (
    ChartInvalidError,
    StoredActionConflictError,
    UnknownSignalError,
    UnstableChartError,
)

__all__ = [
    "EngineState",
    "IoImage",
    "ScanEvents",
    "TraceStep",
    "engine_reset",
    "run_trace",
    "scan",
]


@dataclass(frozen=True)
class ScanEvents:
    """What one scan did: fired transition sets per micro-iteration, the steps
    activated/deactivated (a rule-5 re-entry counts as activated), whether the
    scan stabilized, and how many micro-iterations it took."""

    fired: tuple[frozenset[str], ...]
    activated: frozenset[str]
    deactivated: frozenset[str]
    stabilized: bool
    iterations: int


@dataclass(frozen=True)
class EngineState:
    chart: Chart
    marking: Marking
    prev_inputs: "IoImage | None"  # full latched image of the previous scan
    stored_outputs: dict[str, bool]
    last_outputs: dict[str, bool]  # output image as of the previous scan's end
    clock: float
    scan_index: int


@dataclass(frozen=True)
class TraceStep:
    outputs: IoImage
    marking: Marking
    events: ScanEvents


def engine_reset(chart: Chart, t0: float = 0.0) -> EngineState:
    """Fresh state: initial situation at t0, stored outputs false (rule 1)."""
    issues = validate_chart(chart)
    if issues:
        raise ChartInvalidError(issues)
    outs = {q: False for q in chart.outputs()}
    return EngineState(
        chart=chart,
        marking=initial_marking(chart, t0),
        prev_inputs=None,
        stored_outputs=dict(outs),
        last_outputs=dict(outs),
        clock=t0,
        scan_index=0,
    )


def _check_input_cover(chart: Chart, inputs: IoImage) -> None:
    want_bool = {s.name for s in chart.signals if s.kind == BOOL_IN}
    want_analog = {s.name for s in chart.signals if s.kind == ANALOG_IN}
    if set(inputs.bools) != want_bool or set(inputs.analogs) != want_analog:
        missing = sorted((want_bool - set(inputs.bools)) | (want_analog - set(inputs.analogs)))
        extra = sorted((set(inputs.bools) - want_bool) | (set(inputs.analogs) - want_analog))
        parts = []
        if missing:
            parts.append(f"missing {missing}")
        if extra:
            parts.append(f"unexpected {extra}")
        raise UnknownSignalError("input image does not cover chart inputs: " + ", ".join(parts))


def scan(
    state: EngineState, inputs: IoImage, dt: float
) -> tuple[EngineState, IoImage, ScanEvents]:
    """Run one scan with the given latched inputs and time step."""
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be finite and > 0, got {dt!r}")
    chart = state.chart
    _check_input_cover(chart, inputs)

    clock = state.clock + dt
    io = IoImage(bools={**inputs.bools, **state.last_outputs}, analogs=dict(inputs.analogs))
    first_prev = state.prev_inputs if state.prev_inputs is not None else io

    marking = state.marking
    fired_sets: list[frozenset[str]] = []
    activated: set[str] = set()
    deactivated: set[str] = set()
    # (step, trigger) events in order: iteration by iteration, exits before
    # enters, steps in declaration order. Order matters only for determinism;
    # conflicting set/reset of one output in a single scan is an error anyway.
    trigger_log: list[tuple[str, str]] = []

    cap = len(chart.transitions) + 1
    stabilized = False
    for i in range(cap):
        prev_io = first_prev if i == 0 else io
        fireable = fireable_transitions(chart, marking, io, prev_io, clock)
        if not fireable:
            stabilized = True
            break
        fired_sets.append(fireable)
        deact = frozenset().union(*(chart.transitions_by_id[t].upstream for t in fireable))
        act = frozenset().union(*(chart.transitions_by_id[t].downstream for t in fireable))
        enter = {s for s in act if s not in marking.active or s in deact}
        exit_ = {s for s in deact if s not in act}
        declared = [s.id for s in chart.steps]
        trigger_log.extend((s, "exit") for s in declared if s in exit_)
        trigger_log.extend((s, "enter") for s in declared if s in enter)
        activated |= enter
        deactivated |= exit_
        marking = fire_set(marking, fireable, chart, clock)

    events = ScanEvents(
        fired=tuple(fired_sets),
        activated=frozenset(activated),
        deactivated=frozenset(deactivated),
        stabilized=stabilized,
        iterations=len(fired_sets),
    )
    if not stabilized:
        raise UnstableChartError(
            f"chart did not stabilize within {cap} micro-iterations",
            scan_index=state.scan_index,
            events=events,
        )

    stored = dict(state.stored_outputs)
    assigned: dict[str, set[bool]] = {}
    for sid, trigger in trigger_log:
        for act_ in chart.steps_by_id[sid].actions:
            if act_.kind == "do" or act_.trigger != trigger:
                continue
            value = act_.kind == "set"
            assigned.setdefault(act_.target, set()).add(value)
            if len(assigned[act_.target]) > 1:
                raise StoredActionConflictError(act_.target, scan_index=state.scan_index)
            stored[act_.target] = value

    drives: set[str] = set()
    for sid in marking.active:
        for act_ in chart.steps_by_id[sid].actions:
            if act_.kind == "do":
                drives.add(act_.target)
    out_bools = {q: stored[q] or (q in drives) for q in chart.outputs()}
    outputs = IoImage(bools=out_bools)

    new_state = EngineState(
        chart=chart,
        marking=marking,
        prev_inputs=io,
        stored_outputs=stored,
        last_outputs=dict(out_bools),
        clock=clock,
        scan_index=state.scan_index + 1,
    )
    return new_state, outputs, events


def run_trace(
    chart: Chart,
    input_trace: "list[IoImage] | tuple[IoImage, ...]",
    dt: float,
    t0: float = 0.0,
) -> list[TraceStep]:
    """Fold scan over a list of input images from a fresh reset at t0."""
    state = engine_reset(chart, t0)
    out: list[TraceStep] = []
    for inputs in input_trace:
        try:
            state, outputs, events = scan(state, inputs, dt)
        except Exception as err:
            if not hasattr(err, "scan_index"):
                err.scan_index = state.scan_index  # type: ignore[attr-defined]
            raise
        out.append(TraceStep(outputs=outputs, marking=state.marking, events=events))
    return out
