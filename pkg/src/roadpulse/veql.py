"""Continuous-query language: lexer, recursive-descent parser, validation.

Grammar (keywords case-insensitive)::

    query      := "Select" OPERATOR "(" "Object" ")" "from" road-name
                  where within confidence?
    where      := "WHERE" pred (("OR" | "AND") pred)*
    pred       := "Object" "=" quoted-string
    within     := "WITHIN" "Time_Window" "=" number ("sec" | "min")
    confidence := "WITH" "CONFIDENCE" ">" number "%"

The road name is the unquoted token run between "from" and "WHERE". A single
query uses one combinator: mixing OR and AND in the same WHERE clause is
rejected. Strings accept straight or typographic quotes. Object class names
are normalized to lowercase.

Note the AND combinator is kept for symmetry but is degenerate over a single
attribute: a detection has exactly one class, so AND over two distinct
classes matches nothing.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from roadpulse.errors import QueryError, ValidationError

DEFAULT_CONFIDENCE_PCT = 40.0


class OperatorKind(enum.Enum):
    TRAFFIC_CONGESTION = "Traffic_Congestion"
    VEHICLE_COUNT = "Vehicle_Count"
    FLOW_RATE = "Flow_Rate"
    MEAN_SPEED = "Mean_Speed"
    DENSITY = "Density"
    LEVEL_OF_SERVICE = "Level_Of_Service"


_OPERATORS = {k.value.lower(): k for k in OperatorKind}

# Operators that interpolate between camera pairs and so need >= 2 cameras.
INTERPOLATION_OPERATORS = frozenset({OperatorKind.TRAFFIC_CONGESTION})


@dataclass(frozen=True)
class QueryAst:
    operator: OperatorKind
    object_classes: frozenset[str]
    road_name: str
    window_seconds: float
    confidence_pct: float = DEFAULT_CONFIDENCE_PCT
    combinator: str = "OR"  # "OR" | "AND"

    @property
    def confidence_min(self) -> float:
        """Detector-confidence floor as a fraction in [0, 1]."""
        return self.confidence_pct / 100.0

    def __post_init__(self):
        if self.window_seconds <= 0:
            raise ValueError("window_seconds must be > 0")
        if not self.object_classes:
            raise ValueError("object_classes must be non-empty")
        if self.combinator not in ("OR", "AND"):
            raise ValueError(f"bad combinator {self.combinator!r}")
        if not 0.0 < self.confidence_pct < 100.0:
            raise ValueError("confidence_pct must be in (0, 100)")
        if len(self.object_classes) == 1:
            # A single predicate has no visible combinator; canonicalize so
            # equal queries compare equal.
            object.__setattr__(self, "combinator", "OR")


# ---------------------------------------------------------------------------
# Lexer

_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"\d+(?:\.\d+)?")
_PUNCT = "()=>%"
_QUOTES = {"'": "'", "‘": "’", "’": "’"}


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str  # WORD | NUMBER | STRING | one of _PUNCT
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _QUOTES:
            close = _QUOTES[ch]
            j = text.find(close, i + 1)
            if j < 0 and close != "'":
                j = text.find("'", i + 1)  # tolerate mixed quote styles
            if j < 0:
                raise QueryError("unterminated string", i)
            tokens.append(_Token("STRING", text[i + 1:j], i))
            i = j + 1
            continue
        m = _WORD.match(text, i)
        if m:
            tokens.append(_Token("WORD", m.group(), i))
            i = m.end()
            continue
        m = _NUMBER.match(text, i)
        if m:
            tokens.append(_Token("NUMBER", m.group(), i))
            i = m.end()
            continue
        if ch in _PUNCT:
            tokens.append(_Token(ch, ch, i))
            i += 1
            continue
        raise QueryError(f"unexpected character {ch!r}", i)
    return tokens


# ---------------------------------------------------------------------------
# Parser

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def _peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _next(self, expected: str) -> _Token:
        tok = self._peek()
        if tok is None:
            raise QueryError(f"expected {expected}, found end of query", len(self.text))
        self.i += 1
        return tok

    def _keyword(self, word: str):
        tok = self._next(f"keyword {word!r}")
        if tok.kind != "WORD" or tok.text.lower() != word.lower():
            raise QueryError(f"expected {word!r}, found {tok.text!r}", tok.pos)

    def _punct(self, ch: str):
        tok = self._next(f"{ch!r}")
        if tok.kind != ch:
            raise QueryError(f"expected {ch!r}, found {tok.text!r}", tok.pos)

    def _number(self, what: str) -> tuple[float, _Token]:
        tok = self._next(f"number for {what}")
        if tok.kind != "NUMBER":
            raise QueryError(f"expected number for {what}, found {tok.text!r}", tok.pos)
        return float(tok.text), tok

    def parse(self) -> QueryAst:
        self._keyword("Select")
        op_tok = self._next("operator name")
        if op_tok.kind != "WORD":
            raise QueryError(f"expected operator name, found {op_tok.text!r}", op_tok.pos)
        operator = _OPERATORS.get(op_tok.text.lower())
        if operator is None:
            raise QueryError(f"unknown operator {op_tok.text!r}", op_tok.pos)
        self._punct("(")
        self._keyword("Object")
        self._punct(")")
        self._keyword("from")

        road_words: list[str] = []
        while True:
            tok = self._peek()
            if tok is None:
                raise QueryError("expected WHERE clause after road name", len(self.text))
            if tok.kind == "WORD" and tok.text.lower() == "where":
                break
            if tok.kind not in ("WORD", "NUMBER"):
                raise QueryError(f"unexpected {tok.text!r} in road name", tok.pos)
            road_words.append(tok.text)
            self.i += 1
        if not road_words:
            raise QueryError("empty road name", self._peek().pos)

        self._keyword("WHERE")
        classes = [self._predicate()]
        combinators: set[str] = set()
        while True:
            tok = self._peek()
            if tok is not None and tok.kind == "WORD" and tok.text.lower() in ("or", "and"):
                combinators.add(tok.text.upper())
                if len(combinators) > 1:
                    raise QueryError("mixed OR/AND in one WHERE clause", tok.pos)
                self.i += 1
                classes.append(self._predicate())
            else:
                break
        combinator = combinators.pop() if combinators else "OR"

        self._keyword("WITHIN")
        self._keyword("Time_Window")
        self._punct("=")
        value, num_tok = self._number("Time_Window")
        unit_tok = self._next("time unit 'sec' or 'min'")
        unit = unit_tok.text.lower() if unit_tok.kind == "WORD" else ""
        if unit not in ("sec", "min"):
            raise QueryError(f"expected 'sec' or 'min', found {unit_tok.text!r}", unit_tok.pos)
        window_seconds = value * (60.0 if unit == "min" else 1.0)
        if window_seconds <= 0:
            raise QueryError("time window must be positive", num_tok.pos)

        confidence_pct = DEFAULT_CONFIDENCE_PCT
        tok = self._peek()
        if tok is not None and tok.kind == "WORD" and tok.text.lower() == "with":
            self._keyword("WITH")
            self._keyword("CONFIDENCE")
            self._punct(">")
            confidence_pct, pct_tok = self._number("CONFIDENCE")
            self._punct("%")
            if not 0.0 < confidence_pct < 100.0:
                raise QueryError(
                    f"confidence {confidence_pct}% outside (0, 100)", pct_tok.pos
                )
        trailing = self._peek()
        if trailing is not None:
            raise QueryError(f"unexpected trailing {trailing.text!r}", trailing.pos)

        return QueryAst(
            operator=operator,
            object_classes=frozenset(classes),
            road_name=" ".join(road_words),
            window_seconds=window_seconds,
            confidence_pct=confidence_pct,
            combinator=combinator,
        )

    def _predicate(self) -> str:
        self._keyword("Object")
        self._punct("=")
        tok = self._next("quoted object class")
        if tok.kind != "STRING":
            raise QueryError(f"expected quoted object class, found {tok.text!r}", tok.pos)
        return tok.text.strip().lower()


def parse_query(text: str) -> QueryAst:
    """Parse a query string. Raises QueryError with a character position."""
    if not isinstance(text, str):
        raise QueryError("query must be a string", 0)
    try:
        return _Parser(text).parse()
    except QueryError:
        raise
    except ValueError as exc:  # AST invariant violations surface positionless
        raise QueryError(str(exc), 0) from exc


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(x)


def pretty_print(ast: QueryAst) -> str:
    """Canonical text form; parse_query(pretty_print(a)) == a."""
    preds = f" {ast.combinator} ".join(
        f"Object = '{c}'" for c in sorted(ast.object_classes)
    )
    return (
        f"Select {ast.operator.value}(Object) from {ast.road_name} "
        f"WHERE {preds} "
        f"WITHIN Time_Window = {_fmt_num(ast.window_seconds)} sec "
        f"WITH CONFIDENCE > {_fmt_num(ast.confidence_pct)}%"
    )


@dataclass(frozen=True)
class SubscriptionSpec:
    """A query bound to concrete cameras: the validated execution plan."""

    ast: QueryAst
    cameras: tuple = ()
    route: object | None = field(default=None, compare=False)


def validate_against(ast: QueryAst, registry, graph) -> SubscriptionSpec:
    """Bind a parsed query to the camera registry.

    Resolves the road to its ordered camera list (registry order anchors the
    corridor endpoints; cameras are then ordered by position along the
    route). Interpolation operators need at least two cameras, everything
    else at least one.
    """
    from roadpulse.ingest import find_cameras
    from roadpulse.graph import shortest_path, Route

    road_cams = [c for c in registry if c.road_name.lower() == ast.road_name.lower()]
    if not road_cams:
        raise ValidationError(f"unknown road {ast.road_name!r}")
    if len(road_cams) == 1:
        route = Route((), road_cams[0].nearest_node)
        ordered = list(road_cams)
    else:
        route = shortest_path(graph, road_cams[0].nearest_node, road_cams[-1].nearest_node)
        ordered = find_cameras(registry, ast.road_name, route, graph)
    need = 2 if ast.operator in INTERPOLATION_OPERATORS else 1
    if len(ordered) < need:
        raise ValidationError(
            f"operator {ast.operator.value} needs >= {need} cameras on "
            f"{ast.road_name!r}, found {len(ordered)}"
        )
    return SubscriptionSpec(ast=ast, cameras=tuple(ordered), route=route)
