"""Line-based pulse-sequence files (``.pseq``).

Grammar, one construct per line, ``#`` to end of line is a comment::

    binding   = IDENT "=" expr
    pulse     = "pulse" "target=" ("a"|"b") "levels=" INT "," INT
                "rabi=" expr "phase=" expr "dur=" expr ["step=" IDENT]
    also      = "also" "target=" ("a"|"b") "levels=" INT "," INT
                "rabi=" expr "phase=" expr
    wait      = "wait" "dur=" expr ["step=" IDENT]
    expr      = term {("+"|"-") term}
    term      = unary {("*"|"/") unary}
    unary     = "-" unary | "+" unary | atom
    atom      = NUMBER | IDENT | "(" expr ")"

``also`` adds a drive that runs simultaneously with the preceding
``pulse`` for the same duration. Key/value pairs may appear in any order.
The gate parameters ``g_a, g_b, delta_c, omega_13, omega_02, omega_12``
and the constant ``pi`` are predefined. Values are in units of ``g_b``;
bindings whose names end in ``_si`` hold SI values (s^-1 or s) and are
converted with ``gb_si`` on use. An expression may not mix the two.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Union

from cpgate.dynamics import Drive, GateParams
from cpgate.hilbert import SQUID_LEVELS
from cpgate.protocol import Schedule, Segment

BUILTINS = ("g_a", "g_b", "delta_c", "omega_13", "omega_02", "omega_12")
CONSTANTS = {"pi": math.pi}
KEYWORDS = ("pulse", "also", "wait")
DEFAULT_GB_SI = 3.0e9
HEADER = "# cpgate pulse sequence"


class ParseError(ValueError):
    def __init__(self, line: int, column: int, message: str, token: str):
        super().__init__(f"line {line}, column {column}: {message} (at {token!r})")
        self.line = line
        self.column = column
        self.message = message
        self.token = token


class CompileError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


# --- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Ref, Neg, BinOp]


@dataclass(frozen=True)
class Binding:
    name: str
    expr: Expr
    line: int

    @property
    def is_si(self) -> bool:
        return self.name.endswith("_si")


@dataclass(frozen=True)
class DriveStmt:
    target: str
    levels: tuple[int, int]
    rabi: Expr
    phase: Expr


@dataclass
class PulseStmt:
    drives: list[DriveStmt]
    dur: Expr
    line: int
    step: str | None = None


@dataclass
class WaitStmt:
    dur: Expr
    line: int
    step: str | None = None


Statement = Union[PulseStmt, WaitStmt]


@dataclass
class SequenceAst:
    bindings: list[Binding] = field(default_factory=list)
    statements: list[Statement] = field(default_factory=list)


# --- lexer / parser -----------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/()=,])"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    col: int  # 1-based


def _tokenize(line: str, lineno: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:
            raise ParseError(lineno, pos + 1, "unexpected character", line[pos])
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    return toks


class _LineParser:
    def __init__(self, toks: list[_Tok], lineno: int, bound: set[str]):
        self.toks = toks
        self.pos = 0
        self.lineno = lineno
        self.bound = bound

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def error(self, message: str, tok: _Tok | None = None):
        if tok is None:
            tok = self.peek() or self.toks[-1]
        raise ParseError(self.lineno, tok.col, message, tok.text)

    def advance(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of line")
        self.pos += 1
        return tok

    def expect(self, text: str, what: str) -> _Tok:
        tok = self.peek()
        if tok is None or tok.text != text:
            self.error(f"expected {what}")
        return self.advance()

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    # expressions

    def expr(self) -> Expr:
        node = self.term()
        while (tok := self.peek()) is not None and tok.text in "+-" and tok.kind == "op":
            self.advance()
            node = BinOp(tok.text, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while (tok := self.peek()) is not None and tok.text in "*/" and tok.kind == "op":
            self.advance()
            node = BinOp(tok.text, node, self.unary())
        return node

    def unary(self) -> Expr:
        tok = self.peek()
        if tok is not None and tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if tok is not None and tok.text == "+":
            self.advance()
            return self.unary()
        return self.atom()

    def atom(self) -> Expr:
        tok = self.peek()
        if tok is None:
            self.error("malformed expression: expected a value")
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            if tok.text not in self.bound:
                self.error(f"unbound identifier {tok.text!r}", tok)
            self.advance()
            return Ref(tok.text)
        if tok.text == "(":
            self.advance()
            node = self.expr()
            if self.peek() is None or self.peek().text != ")":
                self.error("malformed expression: missing ')'")
            self.advance()
            return node
        self.error("malformed expression: expected a value")

    # statements

    def key(self) -> _Tok:
        tok = self.peek()
        if tok is None or tok.kind != "ident":
            self.error("expected key=value")
        self.advance()
        self.expect("=", f"'=' after {tok.text!r}")
        return tok

    def fields(self, allowed: tuple[str, ...], required: tuple[str, ...]) -> dict:
        out: dict = {}
        while not self.at_end():
            key = self.key()
            if key.text not in allowed:
                self.error(f"unknown key {key.text!r}", key)
            if key.text in out:
                self.error(f"duplicate key {key.text!r}", key)
            out[key.text] = self.value(key.text)
        missing = [k for k in required if k not in out]
        if missing:
            self.error(f"missing {missing[0]}=", self.toks[-1])
        return out

    def value(self, key: str):
        if key == "target":
            tok = self.advance()
            if tok.text not in ("a", "b"):
                self.error("unknown target (expected a or b)", tok)
            return tok.text
        if key == "levels":
            lo = self.integer()
            self.expect(",", "',' between levels")
            return (lo, self.integer())
        if key == "step":
            tok = self.advance()
            if tok.kind != "ident":
                self.error("step label must be an identifier", tok)
            return tok.text
        return self.expr()

    def integer(self) -> int:
        tok = self.advance()
        if tok.kind != "num" or not tok.text.isdigit():
            self.error("expected an integer level", tok)
        return int(tok.text)


_DRIVE_KEYS = ("target", "levels", "rabi", "phase")


def parse(source: str) -> SequenceAst:
    """Parse ``.pseq`` text; the first error raises ``ParseError``."""
    ast = SequenceAst()
    bound = set(BUILTINS) | set(CONSTANTS)
    last_pulse: PulseStmt | None = None
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = raw.split("#", 1)[0]
        toks = _tokenize(line, lineno)
        if not toks:
            continue
        head = toks[0]
        lp = _LineParser(toks, lineno, bound)
        lp.advance()
        if head.text == "pulse":
            f = lp.fields(_DRIVE_KEYS + ("dur", "step"), _DRIVE_KEYS + ("dur",))
            last_pulse = PulseStmt(
                [DriveStmt(f["target"], f["levels"], f["rabi"], f["phase"])],
                f["dur"],
                lineno,
                f.get("step"),
            )
            ast.statements.append(last_pulse)
        elif head.text == "also":
            if last_pulse is None or ast.statements[-1] is not last_pulse:
                lp.error("'also' must directly follow a pulse", head)
            f = lp.fields(_DRIVE_KEYS, _DRIVE_KEYS)
            last_pulse.drives.append(DriveStmt(f["target"], f["levels"], f["rabi"], f["phase"]))
        elif head.text == "wait":
            f = lp.fields(("dur", "step"), ("dur",))
            ast.statements.append(WaitStmt(f["dur"], lineno, f.get("step")))
            last_pulse = None
        elif head.kind == "ident" and len(toks) > 1 and toks[1].text == "=":
            if head.text in bound:
                lp.error(f"duplicate binding {head.text!r}", head)
            lp.advance()
            if lp.at_end():
                lp.error("malformed expression: expected a value")
            expr = lp.expr()
            if not lp.at_end():
                lp.error("malformed expression: unexpected token")
            ast.bindings.append(Binding(head.text, expr, lineno))
            bound.add(head.text)
        else:
            lp.error(f"unknown keyword {head.text!r}", head)
    return ast


# --- compile ------------------------------------------------------------------


def _evaluate(expr: Expr, env: dict[str, tuple[float, str | None]], line: int):
    """Value and unit tag (``None``, ``"gb"`` or ``"si"``) of ``expr``."""
    if isinstance(expr, Num):
        return expr.value, None
    if isinstance(expr, Ref):
        return env[expr.name]
    if isinstance(expr, Neg):
        v, u = _evaluate(expr.operand, env, line)
        return -v, u
    lv, lu = _evaluate(expr.left, env, line)
    rv, ru = _evaluate(expr.right, env, line)
    if lu and ru and lu != ru:
        raise CompileError(line, "expression mixes SI (_si) and g_b-unit values")
    unit = lu or ru
    if expr.op == "+":
        return lv + rv, unit
    if expr.op == "-":
        return lv - rv, unit
    if expr.op == "*":
        return lv * rv, unit
    if rv == 0:
        raise CompileError(line, "division by zero")
    return lv / rv, unit


def compile_sequence(
    ast: SequenceAst, p: GateParams, gb_si: float = DEFAULT_GB_SI
) -> Schedule:
    """Evaluate a parsed sequence into a ``Schedule`` (values in g_b units).

    ``gb_si`` is g_b in s^-1 and converts SI-tagged values: frequencies are
    divided by it, durations multiplied.
    """
    env: dict[str, tuple[float, str | None]] = {k: (v, None) for k, v in CONSTANTS.items()}
    env.update({name: (float(getattr(p, name)), "gb") for name in BUILTINS})
    for b in ast.bindings:
        value, unit = _evaluate(b.expr, env, b.line)
        own = "si" if b.is_si else "gb"
        if unit is not None and unit != own:
            raise CompileError(b.line, f"binding {b.name!r} mixes SI and g_b-unit values")
        if not (value > 0 and math.isfinite(value)):
            raise CompileError(b.line, f"binding {b.name!r} must be positive, got {value}")
        env[b.name] = (value, own)

    def frequency(expr, line):
        v, u = _evaluate(expr, env, line)
        return v / gb_si if u == "si" else v

    def duration(expr, line):
        v, u = _evaluate(expr, env, line)
        return v * gb_si if u == "si" else v

    segments = []
    for st in ast.statements:
        dur = duration(st.dur, st.line)
        if not math.isfinite(dur) or dur < 0:
            raise CompileError(st.line, f"duration must be nonnegative, got {dur}")
        drives = []
        if isinstance(st, PulseStmt):
            for d in st.drives:
                lo, hi = d.levels
                if not (0 <= lo < SQUID_LEVELS and 0 <= hi < SQUID_LEVELS):
                    raise CompileError(st.line, f"levels {lo},{hi} outside 0..{SQUID_LEVELS - 1}")
                if lo >= hi:
                    raise CompileError(st.line, f"levels must be ascending, got {lo},{hi}")
                rabi = frequency(d.rabi, st.line)
                if not (rabi > 0 and math.isfinite(rabi)):
                    raise CompileError(st.line, f"Rabi frequency must be positive, got {rabi}")
                phase, _ = _evaluate(d.phase, env, st.line)
                drives.append(Drive(d.target, lo, hi, rabi, phase))
        segments.append(Segment(dur, tuple(drives), st.step))
    return Schedule(tuple(segments))


def load_sequence(source: str, p: GateParams, gb_si: float = DEFAULT_GB_SI) -> Schedule:
    return compile_sequence(parse(source), p, gb_si)


# --- serialize ----------------------------------------------------------------


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _drive_fields(d: Drive) -> str:
    return (
        f"target={d.squid} levels={d.low},{d.high} "
        f"rabi={_num(d.rabi)} phase={_num(d.phase)}"
    )


def serialize(s: Schedule) -> str:
    """Literal-valued ``.pseq`` text that compiles back to ``s``."""
    lines = [HEADER]
    for seg in s:
        step = ""
        if seg.label is not None:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", seg.label):
                raise ValueError(f"step label {seg.label!r} is not an identifier")
            step = f" step={seg.label}"
        if seg.is_wait:
            lines.append(f"wait dur={_num(seg.duration)}{step}")
            continue
        first, *rest = seg.drives
        lines.append(f"pulse {_drive_fields(first)} dur={_num(seg.duration)}{step}")
        lines.extend(f"also {_drive_fields(d)}" for d in rest)
    return "\n".join(lines) + "\n"


def reference_sequence() -> str:
    """Text of the bundled ``cpgate.pseq``."""
    return resources.files("cpgate.data").joinpath("cpgate.pseq").read_text(encoding="utf-8")
