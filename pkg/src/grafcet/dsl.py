"""Textual chart format: parser and canonical printer.

The format is line-oriented and keyword-led:

    chart "two-pump alternation"

    signal pressure : analog_in unit "bar"
    signal p_low : bool_in
    signal cmd_A : bool_out

    step S1 initial {}
    step S2 {
      do cmd_A;
      set lamp;
      reset lamp on_exit;
    }

    trans T1 : S1 -> S2 when tmr(S1, 2s) & !fault_A;

Comments run from '#' to end of line. Identifiers are [A-Za-z_][A-Za-z0-9_]*
and may not be keywords. Expression operators in rising precedence: '|', '&',
'!'; atoms are true/false, boolean signal names, comparisons of an analog
signal against a finite constant (< <= > >=), re(sig) rising edge, X(step)
step-active, and tmr(step, <seconds>s) with a mandatory 's' suffix.

parse_chart survives arbitrary input: on malformed text it records a
diagnostic with a 1-based line/column and resumes at the next statement
boundary, so one pass can report several independent errors. Reference
checks run after parsing (declarations may appear in any order);
diagnostics point at the offending token. A result with error diagnostics
carries no chart; warnings alone do not block.

print_chart emits the canonical form: LF newlines, declaration order
preserved, upstream/downstream step lists sorted, two-space indent inside
step blocks, single space around '->', minimal parentheses. The printer is
idempotent byte for byte: parse(print(c)) equals c structurally and
print(parse(print(c))) == print(c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .chart import (
    ANALOG_IN,
    BOOL_IN,
    BOOL_OUT,
    SIGNAL_KINDS,
    Action,
    And,
    Chart,
    Compare,
    Const,
    Not,
    Or,
    Receptivity,
    RisingEdge,
    SignalDecl,
    SignalRef,
    Step,
    StepActive,
    Timer,
    Transition,
    validate_chart,
)

__all__ = [
    "ParseDiagnostic",
    "ParseResult",
    "format_diagnostics",
    "parse_chart",
    "print_chart",
]

KEYWORDS = frozenset(
    [
        "chart",
        "signal",
        "step",
        "trans",
        "when",
        "initial",
        "do",
        "set",
        "reset",
        "unit",
        "true",
        "false",
        "re",
        "X",
        "tmr",
        "on_exit",
        *SIGNAL_KINDS,
    ]
)

_STATEMENT_KEYWORDS = ("chart", "signal", "step", "trans")


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # "error" or "warning"
    line: int
    column: int
    code: str
    message: str


@dataclass(frozen=True)
class ParseResult:
    chart: "Chart | None"
    diagnostics: tuple[ParseDiagnostic, ...]

    @property
    def ok(self) -> bool:
        return self.chart is not None

    @property
    def errors(self) -> tuple[ParseDiagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "error")


def format_diagnostics(diags, filename: str = "<chart>") -> str:
    return "\n".join(
        f"{filename}:{d.line}:{d.column}: {d.severity}: {d.code}: {d.message}"
        for d in diags
    )


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

# token types: kw ident string number duration punct eof
@dataclass(frozen=True)
class _Tok:
    type: str
    text: str
    line: int
    col: int
    value: object = None


_PUNCT2 = ("->", "<=", ">=")
_PUNCT1 = ":;,{}()!&|<>"


class _Lexer:
    def __init__(self, src: str):
        self.src = src
        self.n = len(src)
        self.i = 0
        self.line = 1
        self.col = 1
        self.diags: list[ParseDiagnostic] = []

    def error(self, line, col, code, message):
        self.diags.append(ParseDiagnostic("error", line, col, code, message))

    def _advance(self, k: int = 1):
        for _ in range(k):
            if self.i < self.n and self.src[self.i] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.i += 1

    def tokens(self) -> list[_Tok]:
        out: list[_Tok] = []
        while True:
            tok = self._next()
            out.append(tok)
            if tok.type == "eof":
                return out

    def _next(self) -> _Tok:
        src, n = self.src, self.n
        while self.i < n:
            c = src[self.i]
            if c in " \t\r\n":
                self._advance()
            elif c == "#":
                while self.i < n and src[self.i] != "\n":
                    self._advance()
            else:
                break
        if self.i >= n:
            return _Tok("eof", "", self.line, self.col)

        line, col = self.line, self.col
        c = src[self.i]

        if c.isalpha() or c == "_":
            j = self.i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            text = src[self.i : j]
            self._advance(j - self.i)
            return _Tok("kw" if text in KEYWORDS else "ident", text, line, col)

        if c.isdigit() or (c == "-" and self.i + 1 < n and (src[self.i + 1].isdigit() or src[self.i + 1] == ".")):
            return self._number(line, col)

        if c == '"':
            return self._string(line, col)

        two = src[self.i : self.i + 2]
        if two in _PUNCT2:
            self._advance(2)
            return _Tok("punct", two, line, col)
        if c in _PUNCT1:
            self._advance()
            return _Tok("punct", c, line, col)

        self.error(line, col, "bad-character", f"unexpected character {c!r}")
        self._advance()
        return self._next()

    def _number(self, line, col) -> _Tok:
        src, n = self.src, self.n
        j = self.i
        if src[j] == "-":
            j += 1
        while j < n and src[j].isdigit():
            j += 1
        if j < n and src[j] == ".":
            j += 1
            while j < n and src[j].isdigit():
                j += 1
        if j < n and src[j] in "eE":
            k = j + 1
            if k < n and src[k] in "+-":
                k += 1
            if k < n and src[k].isdigit():
                j = k
                while j < n and src[j].isdigit():
                    j += 1
        text = src[self.i : j]
        try:
            value = float(text)
        except ValueError:
            self.error(line, col, "bad-number", f"malformed number {text!r}")
            value = 0.0
        self._advance(j - self.i)
        # a trailing bare 's' marks a duration in seconds
        if self.i < n and src[self.i] == "s" and not (
            self.i + 1 < n and (src[self.i + 1].isalnum() or src[self.i + 1] == "_")
        ):
            self._advance()
            return _Tok("duration", text + "s", line, col, value)
        return _Tok("number", text, line, col, value)

    def _string(self, line, col) -> _Tok:
        src, n = self.src, self.n
        self._advance()  # opening quote
        buf = []
        while self.i < n:
            c = src[self.i]
            if c == '"':
                self._advance()
                return _Tok("string", "".join(buf), line, col, "".join(buf))
            if c == "\n":
                break
            if c == "\\" and self.i + 1 < n and src[self.i + 1] in '"\\':
                buf.append(src[self.i + 1])
                self._advance(2)
                continue
            buf.append(c)
            self._advance()
        self.error(line, col, "unterminated-string", "string literal is not closed")
        return _Tok("string", "".join(buf), line, col, "".join(buf))


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _StatementError(Exception):
    """Internal: abandon the current statement and resync."""


@dataclass
class _Ref:
    kind: str  # bool-signal, analog-signal, step, action-target
    name: str
    line: int
    col: int


class _Parser:
    def __init__(self, src: str):
        lexer = _Lexer(src)
        self.toks = lexer.tokens()
        self.diags = lexer.diags
        self.pos = 0
        self.name: "str | None" = None
        self.signals: list[SignalDecl] = []
        self.steps: list[Step] = []
        self.transitions: list[Transition] = []
        self.decl_pos: dict[tuple[str, str], tuple[int, int]] = {}
        self.refs: list[_Ref] = []

    # -- token plumbing ----------------------------------------------------

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def take(self) -> _Tok:
        tok = self.toks[self.pos]
        if tok.type != "eof":
            self.pos += 1
        return tok

    def error(self, tok: _Tok, code: str, message: str):
        self.diags.append(ParseDiagnostic("error", tok.line, tok.col, code, message))

    def warn(self, tok: _Tok, code: str, message: str):
        self.diags.append(ParseDiagnostic("warning", tok.line, tok.col, code, message))

    def fail(self, tok: _Tok, code: str, message: str):
        self.error(tok, code, message)
        raise _StatementError()

    def expect_punct(self, text: str) -> _Tok:
        tok = self.peek()
        if tok.type == "punct" and tok.text == text:
            return self.take()
        self.fail(tok, "unexpected-token", f"expected {text!r}, got {_describe(tok)}")

    def expect_ident(self, what: str) -> _Tok:
        tok = self.peek()
        if tok.type == "ident":
            return self.take()
        if tok.type == "kw":
            self.fail(tok, "reserved-word", f"{tok.text!r} is a reserved word, cannot name a {what}")
        self.fail(tok, "unexpected-token", f"expected {what} name, got {_describe(tok)}")

    # -- statements --------------------------------------------------------

    def parse(self) -> ParseResult:
        while True:
            tok = self.peek()
            if tok.type == "eof":
                break
            if tok.type == "kw" and tok.text in _STATEMENT_KEYWORDS:
                handler = getattr(self, "_parse_" + tok.text)
                try:
                    handler()
                except _StatementError:
                    self._resync()
            else:
                self.error(
                    tok,
                    "unexpected-token",
                    f"expected a statement (chart, signal, step or trans), got {_describe(tok)}",
                )
                self.take()
                self._resync()
        return self._finish()

    def _resync(self):
        """Skip to the next statement keyword. Statement keywords are reserved,
        so they cannot occur inside a well-formed statement body."""
        while True:
            tok = self.peek()
            if tok.type == "eof" or (tok.type == "kw" and tok.text in _STATEMENT_KEYWORDS):
                return
            self.take()

    def _parse_chart(self):
        kw = self.take()
        tok = self.peek()
        if tok.type != "string":
            self.fail(tok, "unexpected-token", f"expected quoted chart name, got {_describe(tok)}")
        self.take()
        if self.name is not None:
            self.error(kw, "duplicate-chart-header", "chart name was already declared")
            return
        self.name = str(tok.value)

    def _parse_signal(self):
        self.take()
        name_tok = self.expect_ident("signal")
        self.expect_punct(":")
        kind_tok = self.peek()
        if not (kind_tok.type == "kw" and kind_tok.text in SIGNAL_KINDS):
            self.fail(
                kind_tok,
                "bad-signal-kind",
                f"expected one of {', '.join(SIGNAL_KINDS)}, got {_describe(kind_tok)}",
            )
        self.take()
        unit = ""
        tok = self.peek()
        if tok.type == "kw" and tok.text == "unit":
            unit_kw = self.take()
            stok = self.peek()
            if stok.type != "string":
                self.fail(stok, "unexpected-token", f"expected quoted unit, got {_describe(stok)}")
            self.take()
            if kind_tok.text == ANALOG_IN:
                unit = str(stok.value)
            else:
                self.warn(unit_kw, "unit-ignored", "unit only applies to analog signals; ignored")
        self._declare("signal", name_tok, "duplicate-signal")
        self.signals.append(SignalDecl(name=name_tok.text, kind=kind_tok.text, unit=unit))

    def _parse_step(self):
        self.take()
        name_tok = self.expect_ident("step")
        initial = False
        tok = self.peek()
        if tok.type == "kw" and tok.text == "initial":
            self.take()
            initial = True
        self.expect_punct("{")
        actions: list[Action] = []
        while True:
            tok = self.peek()
            if tok.type == "punct" and tok.text == "}":
                self.take()
                break
            if tok.type == "eof":
                self.fail(tok, "unexpected-token", "step block is not closed")
            if tok.type == "kw" and tok.text in ("do", "set", "reset"):
                try:
                    actions.append(self._parse_action())
                except _StatementError:
                    self._resync_action()
            else:
                self.error(tok, "unexpected-token", f"expected do, set, reset or '}}', got {_describe(tok)}")
                self.take()
                self._resync_action()
        self._declare("step", name_tok, "duplicate-step")
        self.steps.append(Step(id=name_tok.text, initial=initial, actions=tuple(actions)))

    def _resync_action(self):
        while True:
            tok = self.peek()
            if tok.type == "eof":
                return
            if tok.type == "punct" and tok.text == ";":
                self.take()
                return
            if tok.type == "punct" and tok.text == "}":
                return
            if tok.type == "kw" and tok.text in _STATEMENT_KEYWORDS:
                return
            self.take()

    def _parse_action(self) -> Action:
        kind_tok = self.take()
        target = self.expect_ident("output signal")
        trigger = "enter"
        tok = self.peek()
        if tok.type == "kw" and tok.text == "on_exit":
            self.take()
            if kind_tok.text == "do":
                self.fail(tok, "bad-trigger", "on_exit only applies to set/reset actions")
            trigger = "exit"
        self.expect_punct(";")
        self.refs.append(_Ref("action-target", target.text, target.line, target.col))
        return Action(kind=kind_tok.text, target=target.text, trigger=trigger)

    def _parse_trans(self):
        self.take()
        name_tok = self.expect_ident("transition")
        self.expect_punct(":")
        upstream = self._parse_step_list()
        self.expect_punct("->")
        downstream = self._parse_step_list()
        when_tok = self.peek()
        if not (when_tok.type == "kw" and when_tok.text == "when"):
            self.fail(when_tok, "unexpected-token", f"expected 'when', got {_describe(when_tok)}")
        self.take()
        expr = self._parse_expr()
        self.expect_punct(";")
        self._declare("trans", name_tok, "duplicate-transition")
        self.transitions.append(
            Transition(
                id=name_tok.text,
                upstream=frozenset(upstream),
                downstream=frozenset(downstream),
                when=expr,
            )
        )

    def _parse_step_list(self) -> list[str]:
        names = []
        while True:
            tok = self.expect_ident("step")
            self.refs.append(_Ref("step", tok.text, tok.line, tok.col))
            names.append(tok.text)
            nxt = self.peek()
            if nxt.type == "punct" and nxt.text == ",":
                self.take()
                continue
            return names

    # -- expressions: precedence ! > & > | ---------------------------------

    def _parse_expr(self) -> Receptivity:
        expr = self._parse_and()
        while True:
            tok = self.peek()
            if tok.type == "punct" and tok.text == "|":
                self.take()
                expr = Or(expr, self._parse_and())
            else:
                return expr

    def _parse_and(self) -> Receptivity:
        expr = self._parse_unary()
        while True:
            tok = self.peek()
            if tok.type == "punct" and tok.text == "&":
                self.take()
                expr = And(expr, self._parse_unary())
            else:
                return expr

    def _parse_unary(self) -> Receptivity:
        tok = self.peek()
        if tok.type == "punct" and tok.text == "!":
            self.take()
            return Not(self._parse_unary())
        return self._parse_atom()

    def _parse_atom(self) -> Receptivity:
        tok = self.peek()
        if tok.type == "punct" and tok.text == "(":
            self.take()
            expr = self._parse_expr()
            self.expect_punct(")")
            return expr
        if tok.type == "kw" and tok.text in ("true", "false"):
            self.take()
            return Const(tok.text == "true")
        if tok.type == "kw" and tok.text == "re":
            self.take()
            self.expect_punct("(")
            sig = self.expect_ident("signal")
            self.expect_punct(")")
            self.refs.append(_Ref("bool-signal", sig.text, sig.line, sig.col))
            return RisingEdge(sig.text)
        if tok.type == "kw" and tok.text == "X":
            self.take()
            self.expect_punct("(")
            sid = self.expect_ident("step")
            self.expect_punct(")")
            self.refs.append(_Ref("step", sid.text, sid.line, sid.col))
            return StepActive(sid.text)
        if tok.type == "kw" and tok.text == "tmr":
            self.take()
            self.expect_punct("(")
            sid = self.expect_ident("step")
            self.expect_punct(",")
            dur = self.peek()
            if dur.type != "duration":
                self.fail(dur, "bad-duration", f"expected a duration like 2s, got {_describe(dur)}")
            self.take()
            seconds = float(dur.value)  # type: ignore[arg-type]
            if not math.isfinite(seconds) or seconds < 0:
                self.error(dur, "bad-duration", f"timer duration must be finite and >= 0")
            self.expect_punct(")")
            self.refs.append(_Ref("step", sid.text, sid.line, sid.col))
            return Timer(sid.text, seconds)
        if tok.type == "ident":
            self.take()
            nxt = self.peek()
            if nxt.type == "punct" and nxt.text in ("<", "<=", ">", ">="):
                self.take()
                num = self.peek()
                if num.type != "number":
                    self.fail(num, "unexpected-token", f"expected a numeric constant, got {_describe(num)}")
                self.take()
                value = float(num.value)  # type: ignore[arg-type]
                if not math.isfinite(value):
                    self.error(num, "bad-constant", "comparison constant must be finite")
                self.refs.append(_Ref("analog-signal", tok.text, tok.line, tok.col))
                return Compare(tok.text, nxt.text, value)
            self.refs.append(_Ref("bool-signal", tok.text, tok.line, tok.col))
            return SignalRef(tok.text)
        self.fail(tok, "unexpected-token", f"expected an expression, got {_describe(tok)}")

    # -- reference resolution and assembly ---------------------------------

    def _declare(self, space: str, tok: _Tok, dup_code: str):
        key = (space, tok.text)
        if key in self.decl_pos:
            self.error(tok, dup_code, f"{tok.text!r} declared twice")
        else:
            self.decl_pos[key] = (tok.line, tok.col)

    def _finish(self) -> ParseResult:
        sig_kinds = {s.name: s.kind for s in self.signals}
        step_ids = {s.id for s in self.steps}
        for ref in self.refs:
            at = _Tok("ident", ref.name, ref.line, ref.col)
            if ref.kind == "step":
                if ref.name not in step_ids:
                    self.error(at, "undeclared-step", f"step {ref.name!r} is not declared")
            else:
                kind = sig_kinds.get(ref.name)
                if kind is None:
                    self.error(at, "undeclared-signal", f"signal {ref.name!r} is not declared")
                elif ref.kind == "bool-signal" and kind == ANALOG_IN:
                    self.error(at, "signal-ref-not-bool", f"analog signal {ref.name!r} used as a boolean")
                elif ref.kind == "analog-signal" and kind != ANALOG_IN:
                    self.error(at, "comparison-not-analog", f"comparison needs an analog signal, {ref.name!r} is {kind}")
                elif ref.kind == "action-target" and kind != BOOL_OUT:
                    self.error(at, "action-target-not-output", f"action target {ref.name!r} is {kind}, expected {BOOL_OUT}")

        if not any(s.initial for s in self.steps):
            self.diags.append(
                ParseDiagnostic("error", 1, 1, "no-initial-step", "chart declares no initial step")
            )

        if any(d.severity == "error" for d in self.diags):
            return ParseResult(chart=None, diagnostics=tuple(self.diags))

        chart = Chart(
            name=self.name or "",
            signals=tuple(self.signals),
            steps=tuple(self.steps),
            transitions=tuple(self.transitions),
        )
        # Backstop: the checks above mirror validate_chart; anything that
        # slips through still surfaces as a diagnostic instead of a bad chart.
        for issue in validate_chart(chart):
            self.diags.append(ParseDiagnostic("error", 1, 1, issue.code, f"{issue.location}: {issue.message}"))
        if any(d.severity == "error" for d in self.diags):
            return ParseResult(chart=None, diagnostics=tuple(self.diags))
        return ParseResult(chart=chart, diagnostics=tuple(self.diags))


def _describe(tok: _Tok) -> str:
    if tok.type == "eof":
        return "end of input"
    if tok.type == "string":
        return "a string"
    return repr(tok.text)


def parse_chart(src: str) -> ParseResult:
    """Parse chart text. Returns the chart or positioned diagnostics."""
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _fmt_num(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _prec(expr: Receptivity) -> int:
    if isinstance(expr, Or):
        return 1
    if isinstance(expr, And):
        return 2
    if isinstance(expr, Not):
        return 3
    return 4


def _fmt_expr(expr: Receptivity, ctx: int = 0) -> str:
    if isinstance(expr, Or):
        body = f"{_fmt_expr(expr.left, 1)} | {_fmt_expr(expr.right, 2)}"
    elif isinstance(expr, And):
        body = f"{_fmt_expr(expr.left, 2)} & {_fmt_expr(expr.right, 3)}"
    elif isinstance(expr, Not):
        body = f"!{_fmt_expr(expr.child, 3)}"
    elif isinstance(expr, Const):
        body = "true" if expr.value else "false"
    elif isinstance(expr, SignalRef):
        body = expr.name
    elif isinstance(expr, Compare):
        body = f"{expr.signal} {expr.op} {_fmt_num(expr.value)}"
    elif isinstance(expr, RisingEdge):
        body = f"re({expr.signal})"
    elif isinstance(expr, StepActive):
        body = f"X({expr.step})"
    elif isinstance(expr, Timer):
        body = f"tmr({expr.step}, {_fmt_num(expr.seconds)}s)"
    else:
        raise TypeError(f"not a receptivity node: {expr!r}")
    if _prec(expr) < ctx:
        return f"({body})"
    return body


def print_chart(chart: Chart) -> str:
    """Canonical text for a chart. Output always ends with a single newline."""
    sections: list[list[str]] = []
    sections.append([f'chart "{_escape(chart.name)}"'])

    if chart.signals:
        lines = []
        for sig in chart.signals:
            line = f"signal {sig.name} : {sig.kind}"
            if sig.unit and sig.kind == ANALOG_IN:
                line += f' unit "{_escape(sig.unit)}"'
            lines.append(line)
        sections.append(lines)

    if chart.steps:
        lines = []
        for st in chart.steps:
            head = f"step {st.id} initial" if st.initial else f"step {st.id}"
            if not st.actions:
                lines.append(head + " {}")
                continue
            lines.append(head + " {")
            for act in st.actions:
                suffix = " on_exit" if act.trigger == "exit" else ""
                lines.append(f"  {act.kind} {act.target}{suffix};")
            lines.append("}")
        sections.append(lines)

    if chart.transitions:
        lines = []
        for tr in chart.transitions:
            ups = ", ".join(sorted(tr.upstream))
            downs = ", ".join(sorted(tr.downstream))
            lines.append(f"trans {tr.id} : {ups} -> {downs} when {_fmt_expr(tr.when)};")
        sections.append(lines)

    return "\n\n".join("\n".join(block) for block in sections) + "\n"
