"""Shared test tooling: an independently written evolution oracle and
random chart generators.

The oracle re-derives receptivity evaluation and marking evolution with
deliberately different code paths than the engine (isinstance dispatch
instead of match, subset enumeration instead of direct filtering) so that a
bug in shared logic cannot cancel itself out in the comparison.
"""

from __future__ import annotations

import itertools
import random
import string

from grafcet.chart import (
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
)
from grafcet.dsl import KEYWORDS

# ---------------------------------------------------------------------------
# Independent oracle
# ---------------------------------------------------------------------------


def oracle_eval(expr, io: IoImage, prev_io: IoImage, marking: Marking, now: float) -> bool:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, SignalRef):
        return bool(io.bools[expr.name])
    if isinstance(expr, Compare):
        x = io.analogs[expr.signal]
        if expr.op == "<":
            return x < expr.value
        if expr.op == "<=":
            return x <= expr.value
        if expr.op == ">":
            return x > expr.value
        if expr.op == ">=":
            return x >= expr.value
        raise ValueError(expr.op)
    if isinstance(expr, Not):
        return not oracle_eval(expr.child, io, prev_io, marking, now)
    if isinstance(expr, And):
        return oracle_eval(expr.left, io, prev_io, marking, now) and oracle_eval(
            expr.right, io, prev_io, marking, now
        )
    if isinstance(expr, Or):
        return oracle_eval(expr.left, io, prev_io, marking, now) or oracle_eval(
            expr.right, io, prev_io, marking, now
        )
    if isinstance(expr, RisingEdge):
        return bool(io.bools[expr.signal]) and not bool(prev_io.bools[expr.signal])
    if isinstance(expr, StepActive):
        return expr.step in marking.active
    if isinstance(expr, Timer):
        return (
            expr.step in marking.active
            and now - marking.activated_at[expr.step] >= expr.seconds
        )
    raise TypeError(f"unknown receptivity node {expr!r}")


def oracle_fireable(chart: Chart, marking: Marking, io, prev_io, now) -> frozenset:
    """The simultaneously firing set, found by enumerating every subset of
    transitions and keeping the largest whose members are all fireable."""
    best: frozenset = frozenset()
    trans = chart.transitions
    for r in range(len(trans) + 1):
        for combo in itertools.combinations(trans, r):
            if all(
                t.upstream <= marking.active
                and oracle_eval(t.when, io, prev_io, marking, now)
                for t in combo
            ):
                ids = frozenset(t.id for t in combo)
                if len(ids) > len(best):
                    best = ids
    return best


def oracle_apply(chart: Chart, marking: Marking, fired_ids, now: float) -> Marking:
    fired = [chart.transitions_by_id[i] for i in fired_ids]
    deactivated = set()
    activated = set()
    for t in fired:
        deactivated |= t.upstream
        activated |= t.downstream
    active = (set(marking.active) - deactivated) | activated
    at = {}
    for sid in active:
        refreshed = sid in activated and (sid not in marking.active or sid in deactivated)
        at[sid] = now if refreshed else marking.activated_at[sid]
    return Marking(active=frozenset(active), activated_at=at)


def oracle_scan(chart: Chart, marking: Marking, io, first_prev, now):
    """One stabilization loop. Returns (marking, fired_per_iteration,
    stabilized); edge context widens to the current image after the first
    micro-iteration, as the scan rules demand."""
    cap = len(chart.transitions) + 1
    fired_list: list[frozenset] = []
    m = marking
    prev = first_prev
    for _ in range(cap):
        fired = oracle_fireable(chart, m, io, prev, now)
        if not fired:
            return m, fired_list, True
        fired_list.append(fired)
        m = oracle_apply(chart, m, fired, now)
        prev = io
    return m, fired_list, False


# ---------------------------------------------------------------------------
# Random charts: boolean-only (for the equivalence harness)
# ---------------------------------------------------------------------------


def random_bool_expr(rng: random.Random, names: list[str], depth: int):
    if depth <= 0 or rng.random() < 0.35:
        if rng.random() < 0.2:
            return Const(rng.random() < 0.5)
        return SignalRef(rng.choice(names))
    pick = rng.random()
    if pick < 0.25:
        return Not(random_bool_expr(rng, names, depth - 1))
    node = And if pick < 0.625 else Or
    return node(
        random_bool_expr(rng, names, depth - 1),
        random_bool_expr(rng, names, depth - 1),
    )


def random_bool_chart(rng: random.Random, max_steps: int = 6, max_transitions: int = 6) -> Chart:
    n_steps = rng.randint(1, max_steps)
    step_ids = [f"S{i + 1}" for i in range(n_steps)]
    initials = set(rng.sample(step_ids, rng.randint(1, n_steps)))
    steps = tuple(Step(sid, initial=sid in initials) for sid in step_ids)
    names = [f"x{i + 1}" for i in range(rng.randint(1, 3))]
    signals = tuple(SignalDecl(n, BOOL_IN) for n in names)
    transitions = []
    for j in range(rng.randint(1, max_transitions)):
        up = frozenset(rng.sample(step_ids, rng.randint(1, min(2, n_steps))))
        down = frozenset(rng.sample(step_ids, rng.randint(1, min(2, n_steps))))
        transitions.append(
            Transition(f"T{j + 1}", up, down, random_bool_expr(rng, names, 3))
        )
    return Chart(
        name="fuzz-bool",
        signals=signals,
        steps=steps,
        transitions=tuple(transitions),
    )


def random_bool_image(rng: random.Random, chart: Chart) -> IoImage:
    return IoImage(
        bools={s.name: rng.random() < 0.5 for s in chart.signals if s.kind == BOOL_IN},
        analogs={},
    )


# ---------------------------------------------------------------------------
# Random charts: full node set (for DSL round-trips)
# ---------------------------------------------------------------------------

_NAME_ALPHABET = string.ascii_lowercase + string.ascii_uppercase
_NAME_REST = _NAME_ALPHABET + string.digits + "_"
_UNIT_ALPHABET = string.ascii_letters + string.digits + " /%.\"\\-"
_DURATIONS = (0.0, 0.1, 0.25, 1.0, 2.0, 2.5, 60.0, 1000.0, 0.001)
_CONSTS = (-10.0, -2.5, -1.0, 0.0, 0.5, 1.0, 2.0, 3.75, 100.0, 1e6, 12345.678)


def _random_name(rng: random.Random, taken: set) -> str:
    while True:
        n = rng.choice(_NAME_ALPHABET) + "".join(
            rng.choice(_NAME_REST) for _ in range(rng.randint(0, 7))
        )
        if n not in KEYWORDS and n not in taken:
            taken.add(n)
            return n


def random_full_expr(rng, bools: list, analogs: list, step_ids: list, depth: int):
    if depth <= 0 or rng.random() < 0.3:
        leaf = rng.randrange(6)
        if leaf == 0:
            return Const(rng.random() < 0.5)
        if leaf == 1 and analogs:
            return Compare(
                rng.choice(analogs), rng.choice(("<", "<=", ">", ">=")), rng.choice(_CONSTS)
            )
        if leaf == 2:
            return RisingEdge(rng.choice(bools))
        if leaf == 3:
            return StepActive(rng.choice(step_ids))
        if leaf == 4:
            return Timer(rng.choice(step_ids), rng.choice(_DURATIONS))
        return SignalRef(rng.choice(bools))
    pick = rng.random()
    if pick < 0.3:
        return Not(random_full_expr(rng, bools, analogs, step_ids, depth - 1))
    node = And if pick < 0.65 else Or
    return node(
        random_full_expr(rng, bools, analogs, step_ids, depth - 1),
        random_full_expr(rng, bools, analogs, step_ids, depth - 1),
    )


def random_full_chart(rng: random.Random) -> Chart:
    taken: set = set()
    bools = [_random_name(rng, taken) for _ in range(rng.randint(1, 3))]
    analogs = [_random_name(rng, taken) for _ in range(rng.randint(0, 2))]
    outs = [_random_name(rng, taken) for _ in range(rng.randint(1, 2))]
    signals = (
        [SignalDecl(n, BOOL_IN) for n in bools]
        + [
            SignalDecl(
                n,
                ANALOG_IN,
                unit="".join(rng.choice(_UNIT_ALPHABET) for _ in range(rng.randint(0, 5))),
            )
            for n in analogs
        ]
        + [SignalDecl(n, BOOL_OUT) for n in outs]
    )
    rng.shuffle(signals)

    step_ids = [_random_name(rng, taken) for _ in range(rng.randint(1, 6))]
    initials = set(rng.sample(step_ids, rng.randint(1, len(step_ids))))
    steps = []
    for sid in step_ids:
        actions = []
        for _ in range(rng.randint(0, 2)):
            kind = rng.choice(("do", "set", "reset"))
            trigger = "enter" if kind == "do" else rng.choice(("enter", "enter", "exit"))
            actions.append(Action(kind, rng.choice(outs), trigger=trigger))
        steps.append(Step(sid, initial=sid in initials, actions=tuple(actions)))

    transitions = []
    for _ in range(rng.randint(1, 6)):
        up = frozenset(rng.sample(step_ids, rng.randint(1, min(3, len(step_ids)))))
        down = frozenset(rng.sample(step_ids, rng.randint(1, min(3, len(step_ids)))))
        transitions.append(
            Transition(
                _random_name(rng, taken),
                up,
                down,
                random_full_expr(rng, bools, analogs, step_ids, 3),
            )
        )

    name = "".join(
        rng.choice(string.ascii_letters + string.digits + " -_.\"\\")
        for _ in range(rng.randint(0, 12))
    )
    return Chart(
        name=name,
        signals=tuple(signals),
        steps=tuple(steps),
        transitions=tuple(transitions),
    )
