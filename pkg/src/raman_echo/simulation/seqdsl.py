"""
Pulse-sequence text format (.qps, UTF-8).

    init 0.5 0.5;
    mark A_start;
    pulse probe(amp=17kHz), coupling(amp=17kHz) dur 3 us;
    mark A_end;
    wait 27 us;
    pulse probe(amp=35.355kHz), coupling(amp=35.355kHz) area 2 pi;
    wait 1010 us with gamma(2,1)=0kHz;
    set gamma(2,1)=1kHz;

Grammar:

    sequence  := {stmt}
    stmt      := init | pulse | wait | set | mark
    init      := "init" NUM NUM [NUM [NUM]] ";"
    pulse     := "pulse" fieldspec {"," fieldspec} ("dur" NUM unit | "area" NUM "pi")
                 ["with" ov {"," ov}] ";"
    fieldspec := ("probe"|"coupling"|"aux") "(" "amp=" NUM "kHz" ["," "det=" NUM "kHz"]
                 ["," "phase=" NUM "deg"] ")"
    wait      := "wait" NUM unit ["with" ov {"," ov}] ";"
    set       := "set" ov ";"
    ov        := "gamma(" INT "," INT ")=" NUM "kHz"
    mark      := "mark" IDENT ";"
    unit      := "us" | "ms"

Whitespace is insignificant and '#' starts a comment that runs to the end of
the line.
"""

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from ..core.errors import SequenceError
from .model import (
    DecayOverride,
    FieldDrive,
    FieldName,
    Mark,
    PulseSegment,
    PulseSequence,
    SetOverride,
    Statement,
)

HEADER = "# raman-echo pulse sequence"

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[;,()=])
    """,
    re.VERBOSE,
)

_UNITS_US = {"us": 1.0, "ms": 1000.0}
_STATEMENTS = ("init", "pulse", "wait", "set", "mark")


class ParseError(SequenceError):
    """Syntax or literal error with its position in the source"""

    def __init__(self, line: int, column: int, message: str, token: str = ""):
        self.line = line
        self.column = column
        self.message = message
        self.token = token
        near = f" near '{token}'" if token else ""
        super().__init__(f"line {line}, column {column}: {message}{near}")


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    column: int


def tokenize(source: str) -> List[Token]:
    tokens: List[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        column = pos - line_start + 1
        if match is None:
            raise ParseError(line, column, "unexpected character", source[pos])
        kind = match.lastgroup
        assert kind is not None
        if kind == "nl":
            line += 1
            line_start = match.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, match.group(), line, column))
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0
        self.initial_populations: Optional[Tuple[float, ...]] = None

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.current
        if token.kind != "eof":
            self.pos += 1
        return token

    def error(self, message: str, token: Optional[Token] = None) -> ParseError:
        token = token or self.current
        return ParseError(token.line, token.column, message, token.value)

    def accept(self, kind: str, value: Optional[str] = None) -> Optional[Token]:
        token = self.current
        if token.kind == kind and (value is None or token.value == value):
            return self.advance()
        return None

    def expect(self, kind: str, value: Optional[str] = None, what: Optional[str] = None) -> Token:
        token = self.accept(kind, value)
        if token is None:
            found = "end of input" if self.current.kind == "eof" else f"'{self.current.value}'"
            raise self.error(f"expected {what or repr(value or kind)}, found {found}")
        return token

    def expect_keyword(self, *words: str) -> Token:
        token = self.current
        if token.kind == "ident" and token.value.lower() in words:
            return self.advance()
        expected = " or ".join(f"'{w}'" for w in words)
        found = "end of input" if token.kind == "eof" else f"'{token.value}'"
        raise self.error(f"expected {expected}, found {found}")

    def number(self, what: str, minimum: Optional[float] = None, strict: bool = False) -> float:
        token = self.expect("number", what=f"number for {what}")
        value = float(token.value)
        if not math.isfinite(value):
            raise self.error(f"{what} must be finite", token)
        if minimum is not None and (value < minimum or (strict and value == minimum)):
            bound = ">" if strict else ">="
            raise self.error(f"{what} must be {bound} {minimum:g}", token)
        return value

    def integer(self, what: str) -> int:
        token = self.expect("number", what=f"integer for {what}")
        if not token.value.isdigit():
            raise self.error(f"{what} must be a positive integer", token)
        value = int(token.value)
        if value < 1:
            raise self.error(f"{what} must be a positive integer", token)
        return value

    # statements

    def parse(self) -> PulseSequence:
        statements: List[Statement] = []
        while self.current.kind != "eof":
            keyword = self.current
            if keyword.kind != "ident" or keyword.value.lower() not in _STATEMENTS:
                raise self.error(f"unknown statement '{keyword.value}'")
            self.advance()
            handler = getattr(self, f"_{keyword.value.lower()}")
            statement = handler(keyword)
            if statement is not None:
                statements.append(statement)
            self.expect("punct", ";", what="';'")
        return PulseSequence(statements=tuple(statements), initial_populations=self.initial_populations)

    def _init(self, keyword: Token) -> None:
        if self.initial_populations is not None:
            raise self.error("initial populations given twice", keyword)
        values = [self.number("population", minimum=0.0), self.number("population", minimum=0.0)]
        while self.current.kind == "number" and len(values) < 4:
            values.append(self.number("population", minimum=0.0))
        self.initial_populations = tuple(values)

    def _pulse(self, keyword: Token) -> PulseSegment:
        fields: Dict[FieldName, FieldDrive] = {}
        while True:
            name, drive = self.fieldspec(fields)
            fields[name] = drive
            if not self.accept("punct", ","):
                break

        mode = self.expect_keyword("dur", "area")
        duration: Optional[float] = None
        area: Optional[float] = None
        if mode.value.lower() == "dur":
            duration = self.duration()
        else:
            area = self.number("pulse area", minimum=0.0, strict=True)
            self.expect_keyword("pi")
            if all(drive.amplitude_khz == 0.0 for drive in fields.values()):
                raise self.error("area given but every field amplitude is zero", mode)
        return PulseSegment(
            kind="pulse",
            fields=fields,
            duration_us=duration,
            area_pi=area,
            decay_overrides=self.with_clause(),
        )

    def _wait(self, keyword: Token) -> PulseSegment:
        duration = self.duration()
        return PulseSegment(kind="wait", duration_us=duration, decay_overrides=self.with_clause())

    def _set(self, keyword: Token) -> SetOverride:
        return SetOverride(override=self.override())

    def _mark(self, keyword: Token) -> Mark:
        return Mark(name=self.expect("ident", what="marker name").value)

    # pieces

    def fieldspec(self, seen: Dict[FieldName, FieldDrive]) -> Tuple[FieldName, FieldDrive]:
        token = self.expect("ident", what="field name")
        try:
            name = FieldName(token.value.lower())
        except ValueError:
            raise self.error(f"unknown field name '{token.value}'", token) from None
        if name in seen:
            raise self.error(f"field '{name.value}' given twice", token)

        self.expect("punct", "(", what="'('")
        values: Dict[str, float] = {}
        units = {"amp": "khz", "det": "khz", "phase": "deg"}
        while self.current.kind == "ident":
            key_token = self.advance()
            key = key_token.value.lower()
            if key not in units:
                raise self.error(f"unknown key '{key_token.value}' (expected amp, det or phase)", key_token)
            if key in values:
                raise self.error(f"key '{key}' given twice", key_token)
            self.expect("punct", "=", what="'='")
            values[key] = self.number(key, minimum=0.0 if key == "amp" else None)
            self.expect_keyword(units[key])
            if not self.accept("punct", ","):
                break
        close = self.expect("punct", ")", what="')'")
        if "amp" not in values:
            raise self.error(f"field '{name.value}' is missing required key 'amp'", close)
        return name, FieldDrive(
            amplitude_khz=values["amp"],
            detuning_khz=values.get("det", 0.0),
            phase_deg=values.get("phase", 0.0),
        )

    def duration(self) -> float:
        value = self.number("duration", minimum=0.0, strict=True)
        unit = self.expect_keyword(*_UNITS_US)
        return value * _UNITS_US[unit.value.lower()]

    def with_clause(self) -> Tuple[DecayOverride, ...]:
        if not self.accept("ident", "with"):
            return ()
        overrides = [self.override()]
        while self.accept("punct", ","):
            overrides.append(self.override())
        return tuple(overrides)

    def override(self) -> DecayOverride:
        self.expect_keyword("gamma")
        self.expect("punct", "(", what="'('")
        i = self.integer("level index")
        self.expect("punct", ",", what="','")
        j = self.integer("level index")
        self.expect("punct", ")", what="')'")
        self.expect("punct", "=", what="'='")
        value = self.number("gamma", minimum=0.0)
        self.expect_keyword("khz")
        return DecayOverride(i=i, j=j, gamma_khz=value)


def parse(source: str) -> PulseSequence:
    """Parse .qps text; raises ParseError at the first problem."""
    return _Parser(source).parse()


def parse_file(path: Union[str, Path]) -> PulseSequence:
    path = Path(path)
    try:
        source = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise SequenceError(f"cannot read sequence file {path}: {exc}") from exc
    return parse(source)


def _num(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"cannot format non-finite value {value}")
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _format_overrides(overrides: Tuple[DecayOverride, ...]) -> str:
    if not overrides:
        return ""
    return " with " + ", ".join(f"gamma({ov.i},{ov.j})={_num(ov.gamma_khz)}kHz" for ov in overrides)


def _format_field(name: FieldName, drive: FieldDrive) -> str:
    parts = [f"amp={_num(drive.amplitude_khz)}kHz"]
    if drive.detuning_khz != 0.0:
        parts.append(f"det={_num(drive.detuning_khz)}kHz")
    if drive.phase_deg != 0.0:
        parts.append(f"phase={_num(drive.phase_deg)}deg")
    return f"{name.value}({', '.join(parts)})"


def format_sequence(sequence: PulseSequence) -> str:
    """Canonical text; parse(format_sequence(s)) == s.as_written()."""
    lines = [HEADER]
    if sequence.initial_populations is not None:
        lines.append("init " + " ".join(_num(p) for p in sequence.initial_populations) + ";")
    for statement in sequence.statements:
        if isinstance(statement, Mark):
            lines.append(f"mark {statement.name};")
        elif isinstance(statement, SetOverride):
            ov = statement.override
            lines.append(f"set gamma({ov.i},{ov.j})={_num(ov.gamma_khz)}kHz;")
        elif statement.kind == "wait" and not statement.fields:
            lines.append(f"wait {_num(statement.duration_us or 0.0)} us{_format_overrides(statement.decay_overrides)};")
        else:
            fields = ", ".join(_format_field(name, drive) for name, drive in statement.fields.items())
            if statement.area_pi is not None:
                timing = f"area {_num(statement.area_pi)} pi"
            else:
                timing = f"dur {_num(statement.duration_us or 0.0)} us"
            lines.append(f"pulse {fields} {timing}{_format_overrides(statement.decay_overrides)};")
    return "\n".join(lines) + "\n"
