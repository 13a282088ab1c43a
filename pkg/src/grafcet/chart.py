"""Typed sequential-function charts and the IEC 60848 evolution rules.

A chart is a set of declared signals, steps and transitions. Steps carry
actions on boolean outputs; transitions connect non-empty sets of upstream
steps to non-empty sets of downstream steps and fire when every upstream step
is active and their receptivity evaluates true (rule 2). Firing deactivates
upstream steps and activates downstream steps (rule 3); all simultaneously
fireable transitions fire together as a set (rule 4); a step deactivated and
activated in the same firing stays active and its activation timestamp is
refreshed (rule 5).

Everything in this module is a pure value or a pure function; the scan-cycle
driver lives in grafcet.engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from .errors import NotFireableError, UnknownSignalError

BOOL_IN = "bool_in"
BOOL_OUT = "bool_out"
ANALOG_IN = "analog_in"
SIGNAL_KINDS = (BOOL_IN, BOOL_OUT, ANALOG_IN)

COMPARE_OPS = ("<", "<=", ">", ">=")

# Action kinds use the statement keywords of the chart text format:
# "do" drives an output true while an owning step is active (continuous),
# "set"/"reset" latch a stored output when the owning step's trigger fires.
ACTION_KINDS = ("do", "set", "reset")
TRIGGER_ENTER = "enter"
TRIGGER_EXIT = "exit"


@dataclass(frozen=True)
class SignalDecl:
    name: str
    kind: str
    unit: str = ""  # free text, meaningful for analog inputs only


# ---------------------------------------------------------------------------
# Receptivity expression nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class SignalRef:
    name: str


@dataclass(frozen=True)
class Compare:
    signal: str
    op: str
    value: float


@dataclass(frozen=True)
class Not:
    child: "Receptivity"


@dataclass(frozen=True)
class And:
    left: "Receptivity"
    right: "Receptivity"


@dataclass(frozen=True)
class Or:
    left: "Receptivity"
    right: "Receptivity"


@dataclass(frozen=True)
class RisingEdge:
    signal: str


@dataclass(frozen=True)
class StepActive:
    step: str


@dataclass(frozen=True)
class Timer:
    """True once `step` has been continuously active for at least `seconds`."""

    step: str
    seconds: float


Receptivity = Union[
    Const, SignalRef, Compare, Not, And, Or, RisingEdge, StepActive, Timer
]


@dataclass(frozen=True)
class Action:
    kind: str  # one of ACTION_KINDS
    target: str  # a bool_out signal name
    trigger: str = TRIGGER_ENTER  # stored actions may fire on "exit" instead


@dataclass(frozen=True)
class Step:
    id: str
    initial: bool = False
    actions: tuple[Action, ...] = ()


@dataclass(frozen=True)
class Transition:
    id: str
    upstream: frozenset[str]
    downstream: frozenset[str]
    when: Receptivity


@dataclass(frozen=True)
class Chart:
    name: str
    signals: tuple[SignalDecl, ...]
    steps: tuple[Step, ...]
    transitions: tuple[Transition, ...]

    def __post_init__(self):
        # Lookup maps are derived state, not fields: they stay out of ==/repr.
        object.__setattr__(self, "signals_by_name", {s.name: s for s in self.signals})
        object.__setattr__(self, "steps_by_id", {s.id: s for s in self.steps})
        object.__setattr__(
            self, "transitions_by_id", {t.id: t for t in self.transitions}
        )

    def initial_steps(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.steps if s.initial)

    def outputs(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.signals if s.kind == BOOL_OUT)

    def inputs(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.signals if s.kind in (BOOL_IN, ANALOG_IN))


@dataclass(frozen=True)
class Marking:
    """Active step set plus the activation timestamp of each active step.

    Treated as immutable: fire_set builds fresh instances. activated_at has
    exactly the keys of active.
    """

    active: frozenset[str]
    activated_at: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class IoImage:
    """A latched image of signal values. NaN or infinite analogs are rejected."""

    bools: dict[str, bool] = field(default_factory=dict)
    analogs: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name, value in self.analogs.items():
            if not math.isfinite(value):
                raise ValueError(f"non-finite analog value for {name!r}: {value!r}")


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    location: str
    message: str


def initial_marking(chart: Chart, t0: float = 0.0) -> Marking:
    ids = chart.initial_steps()
    return Marking(active=frozenset(ids), activated_at={s: t0 for s in ids})


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _walk(expr: Receptivity):
    yield expr
    if isinstance(expr, Not):
        yield from _walk(expr.child)
    elif isinstance(expr, (And, Or)):
        yield from _walk(expr.left)
        yield from _walk(expr.right)


def _check_expr(chart: Chart, expr: Receptivity, where: str, out: list[ValidationIssue]):
    issue = lambda code, msg: out.append(ValidationIssue(code, where, msg))
    for node in _walk(expr):
        if isinstance(node, (SignalRef, RisingEdge)):
            name = node.name if isinstance(node, SignalRef) else node.signal
            decl = chart.signals_by_name.get(name)
            if decl is None:
                issue("unknown-signal", f"receptivity references undeclared signal {name!r}")
            elif decl.kind == ANALOG_IN:
                issue(
                    "signal-ref-not-bool",
                    f"receptivity uses analog signal {name!r} as a boolean",
                )
        elif isinstance(node, Compare):
            decl = chart.signals_by_name.get(node.signal)
            if decl is None:
                issue("unknown-signal", f"comparison references undeclared signal {node.signal!r}")
            elif decl.kind != ANALOG_IN:
                issue(
                    "comparison-not-analog",
                    f"comparison requires an analog signal, {node.signal!r} is {decl.kind}",
                )
            if node.op not in COMPARE_OPS:
                issue("bad-operator", f"unknown comparison operator {node.op!r}")
            if not math.isfinite(node.value):
                issue("bad-constant", f"comparison constant must be finite, got {node.value!r}")
        elif isinstance(node, (StepActive, Timer)):
            sid = node.step
            if sid not in chart.steps_by_id:
                issue("unknown-step", f"receptivity references undeclared step {sid!r}")
            if isinstance(node, Timer):
                if not math.isfinite(node.seconds) or node.seconds < 0:
                    issue(
                        "bad-duration",
                        f"timer duration must be finite and >= 0, got {node.seconds!r}",
                    )


def validate_chart(chart: Chart) -> list[ValidationIssue]:
    """Structural validation. Empty result means the chart is well formed."""
    issues: list[ValidationIssue] = []

    seen: set[str] = set()
    for sig in chart.signals:
        where = f"signal {sig.name}"
        if sig.name in seen:
            issues.append(ValidationIssue("duplicate-signal", where, f"signal {sig.name!r} declared twice"))
        seen.add(sig.name)
        if sig.kind not in SIGNAL_KINDS:
            issues.append(ValidationIssue("bad-signal-kind", where, f"unknown signal kind {sig.kind!r}"))
        if sig.unit and sig.kind != ANALOG_IN:
            issues.append(
                ValidationIssue("unit-on-non-analog", where, f"unit only applies to analog signals")
            )

    seen = set()
    for step in chart.steps:
        where = f"step {step.id}"
        if step.id in seen:
            issues.append(ValidationIssue("duplicate-step", where, f"step {step.id!r} declared twice"))
        seen.add(step.id)
        for idx, act in enumerate(step.actions):
            loc = f"{where}/action {idx + 1}"
            if act.kind not in ACTION_KINDS:
                issues.append(ValidationIssue("bad-action-kind", loc, f"unknown action kind {act.kind!r}"))
            if act.trigger not in (TRIGGER_ENTER, TRIGGER_EXIT):
                issues.append(ValidationIssue("bad-trigger", loc, f"unknown trigger {act.trigger!r}"))
            elif act.kind == "do" and act.trigger == TRIGGER_EXIT:
                # continuous actions have no exit moment to fire on
                issues.append(
                    ValidationIssue("bad-trigger", loc, "do actions cannot trigger on exit")
                )
            decl = chart.signals_by_name.get(act.target)
            if decl is None:
                issues.append(
                    ValidationIssue("unknown-signal", loc, f"action targets undeclared signal {act.target!r}")
                )
            elif decl.kind != BOOL_OUT:
                # Analog or input targets are meaningless for step actions.
                issues.append(
                    ValidationIssue(
                        "action-target-not-output",
                        loc,
                        f"action target {act.target!r} is {decl.kind}, expected {BOOL_OUT}",
                    )
                )

    if not any(s.initial for s in chart.steps):
        issues.append(
            ValidationIssue("no-initial-step", "chart", "chart declares no initial step")
        )

    seen = set()
    for tr in chart.transitions:
        where = f"transition {tr.id}"
        if tr.id in seen:
            issues.append(ValidationIssue("duplicate-transition", where, f"transition {tr.id!r} declared twice"))
        seen.add(tr.id)
        if not tr.upstream:
            issues.append(ValidationIssue("empty-upstream", where, "upstream step set is empty"))
        if not tr.downstream:
            issues.append(ValidationIssue("empty-downstream", where, "downstream step set is empty"))
        for sid in sorted(tr.upstream | tr.downstream):
            if sid not in chart.steps_by_id:
                issues.append(
                    ValidationIssue("unknown-step", where, f"transition references undeclared step {sid!r}")
                )
        _check_expr(chart, tr.when, where, issues)

    return issues


# ---------------------------------------------------------------------------
# Evaluation and firing
# ---------------------------------------------------------------------------


def _bool_value(io: IoImage, name: str) -> bool:
    try:
        return io.bools[name]
    except KeyError:
        raise UnknownSignalError(f"boolean signal {name!r} missing from io image") from None


def _analog_value(io: IoImage, name: str) -> float:
    try:
        return io.analogs[name]
    except KeyError:
        raise UnknownSignalError(f"analog signal {name!r} missing from io image") from None


def eval_receptivity(
    expr: Receptivity,
    io: IoImage,
    prev_io: IoImage,
    marking: Marking,
    now: float,
) -> bool:
    """Evaluate a receptivity against latched images at time `now`.

    Rising edges compare io against prev_io. Timers use exact arithmetic:
    elapsed >= seconds, no tolerance.
    """
    match expr:
        case Const(value=v):
            return v
        case SignalRef(name=name):
            return _bool_value(io, name)
        case Compare(signal=sig, op=op, value=v):
            x = _analog_value(io, sig)
            if op == "<":
                return x < v
            if op == "<=":
                return x <= v
            if op == ">":
                return x > v
            if op == ">=":
                return x >= v
            raise ValueError(f"unknown comparison operator {op!r}")
        case Not(child=c):
            return not eval_receptivity(c, io, prev_io, marking, now)
        case And(left=a, right=b):
            return eval_receptivity(a, io, prev_io, marking, now) and eval_receptivity(
                b, io, prev_io, marking, now
            )
        case Or(left=a, right=b):
            return eval_receptivity(a, io, prev_io, marking, now) or eval_receptivity(
                b, io, prev_io, marking, now
            )
        case RisingEdge(signal=name):
            return _bool_value(io, name) and not _bool_value(prev_io, name)
        case StepActive(step=sid):
            return sid in marking.active
        case Timer(step=sid, seconds=d):
            if sid not in marking.active:
                return False
            return now - marking.activated_at[sid] >= d
    raise TypeError(f"not a receptivity node: {expr!r}")


def fireable_transitions(
    chart: Chart,
    marking: Marking,
    io: IoImage,
    prev_io: IoImage,
    now: float,
) -> frozenset[str]:
    """Rule 2: enabled (all upstream active) and receptivity true."""
    out = set()
    for tr in chart.transitions:
        if tr.upstream <= marking.active and eval_receptivity(
            tr.when, io, prev_io, marking, now
        ):
            out.add(tr.id)
    return frozenset(out)


def fire_set(
    marking: Marking,
    fired: "frozenset[str] | set[str] | list[str] | tuple[str, ...]",
    chart: Chart,
    now: float,
) -> Marking:
    """Rules 3-5: fire `fired` simultaneously and return the new marking.

    The caller guarantees receptivities were true; this only re-checks the
    structural half (upstream steps active) and raises NotFireableError
    otherwise. Steps both deactivated and activated stay active with their
    activation time refreshed to `now`; steps activated while already active
    (and not deactivated) keep their original time.
    """
    ids = list(dict.fromkeys(fired))  # order-insensitive, duplicates collapse
    deactivated: set[str] = set()
    activated: set[str] = set()
    for tid in ids:
        tr = chart.transitions_by_id.get(tid)
        if tr is None:
            raise NotFireableError(f"unknown transition {tid!r}")
        if not tr.upstream <= marking.active:
            missing = sorted(tr.upstream - marking.active)
            raise NotFireableError(
                f"transition {tid!r} not fireable: upstream steps {missing} inactive"
            )
        deactivated |= tr.upstream
        activated |= tr.downstream

    active = (marking.active - deactivated) | activated
    times: dict[str, float] = {}
    for sid in active:
        fresh = sid in activated and (sid not in marking.active or sid in deactivated)
        times[sid] = now if fresh else marking.activated_at[sid]
    return Marking(active=frozenset(active), activated_at=times)
