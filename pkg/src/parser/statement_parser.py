"""
Recursive descent parser for the statement language

    file        := [dim-decl] "points" ident+ ["hypotheses" constraint*] "conclusion" constraint+
    dim-decl    := "dimension" INT
    constraint  := ident+ (":" | "<=" | ">=") INT
    comment     := "#" to end of line

Whitespace and newlines are interchangeable separators.
"""

import hashlib
import re
from typing import Iterator, List, NamedTuple, Optional, Tuple
from pydantic import BaseModel, Field
import structlog

from src.core.config import settings
from src.core.exceptions import StatementSyntaxError, StatementValidationError
from src.core.models import PointUniverse, RankConstraint, Relation, Statement
from src.utils.validators import RESERVED_WORDS, StatementValidator

logger = structlog.get_logger()

_TOKEN_RE = re.compile(
    r"""
      (?P<comment>\#[^\n]*)
    | (?P<newline>\n)
    | (?P<space>[ \t\r\f\v\ufeff]+)
    | (?P<op><=|>=|:)
    | (?P<int>\d+(?![\w']))
    | (?P<ident>[^\W\d]\w*'*)
    | (?P<error>.)
    """,
    re.VERBOSE | re.UNICODE,
)

_RELATIONS = {":": Relation.EQ, "<=": Relation.LE, ">=": Relation.GE}


class Token(NamedTuple):
    kind: str  # keyword, ident, op, int, eof
    text: str
    line: int
    column: int


class SourceSpan(BaseModel):
    """Location of one constraint in the statement text"""
    section: str = Field(..., description="hypotheses or conclusion")
    index: int = Field(..., ge=0)
    line: int = Field(..., ge=1)
    column: int = Field(..., ge=1)


class SourceStatement(BaseModel):
    """Parsed statement together with its text and constraint locations"""
    raw: str
    statement: Statement
    spans: List[SourceSpan] = Field(default_factory=list)
    dimension_declared: bool = False


def tokenize(text: str) -> Iterator[Token]:
    """Split statement text into tokens, dropping whitespace and comments"""
    line, line_start = 1, 0
    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup
        column = match.start() - line_start + 1
        if kind == "newline":
            line += 1
            line_start = match.end()
        elif kind in ("space", "comment"):
            continue
        elif kind == "error":
            raise StatementSyntaxError(f"unexpected character {match.group()!r}", line, column)
        elif kind == "ident" and match.group() in RESERVED_WORDS:
            yield Token("keyword", match.group(), line, column)
        else:
            yield Token(kind, match.group(), line, column)
    yield Token("eof", "", line, len(text) - line_start + 1)


class StatementParser:
    """Parses one statement file; one instance per text"""

    def __init__(
        self,
        text: str,
        default_dimension: Optional[int] = None,
        max_points: Optional[int] = None
    ):
        self.text = text
        self.requested_dimension = default_dimension
        self.default_dimension = default_dimension if default_dimension is not None else settings.default_dimension
        self.validator = StatementValidator(max_points)
        self.tokens = list(tokenize(text))
        self.position = 0
        self.logger = logger.bind(component="statement_parser")

    # Token helpers

    def _peek(self) -> Token:
        return self.tokens[self.position]

    def _advance(self) -> Token:
        token = self.tokens[self.position]
        if token.kind != "eof":
            self.position += 1
        return token

    def _at_keyword(self, word: str) -> bool:
        token = self._peek()
        return token.kind == "keyword" and token.text == word

    def _expect_keyword(self, word: str) -> Token:
        token = self._peek()
        if not self._at_keyword(word):
            raise StatementSyntaxError(f"expected '{word}', found {self._describe(token)}", token.line, token.column)
        return self._advance()

    def _expect_int(self) -> Token:
        token = self._peek()
        if token.kind != "int":
            raise StatementSyntaxError(f"expected an integer, found {self._describe(token)}", token.line, token.column)
        return self._advance()

    @staticmethod
    def _describe(token: Token) -> str:
        return "end of input" if token.kind == "eof" else f"'{token.text}'"

    # Grammar

    def parse(self) -> SourceStatement:
        dimension, declared = self._parse_dimension()
        names = self._parse_points()
        universe = PointUniverse(names=names, dimension=dimension)

        spans: List[SourceSpan] = []
        hypotheses: List[RankConstraint] = []
        if self._at_keyword("hypotheses"):
            self._advance()
            hypotheses = self._parse_constraints(universe, "hypotheses", spans)

        conclusion_token = self._expect_keyword("conclusion")
        conclusions = self._parse_constraints(universe, "conclusion", spans)
        if not conclusions:
            raise StatementSyntaxError("conclusion section is empty", conclusion_token.line, conclusion_token.column)

        token = self._peek()
        if token.kind != "eof":
            raise StatementSyntaxError(f"unexpected {self._describe(token)}", token.line, token.column)

        statement = self.validator.validate_statement(
            Statement(universe=universe, hypotheses=hypotheses, conclusions=conclusions)
        )
        self.logger.debug(
            "Statement parsed",
            points=universe.size,
            dimension=dimension,
            hypotheses=len(hypotheses),
            conclusions=len(conclusions)
        )
        return SourceStatement(raw=self.text, statement=statement, spans=spans, dimension_declared=declared)

    def _parse_dimension(self) -> Tuple[int, bool]:
        if not self._at_keyword("dimension"):
            self.validator.validate_dimension(self.default_dimension)
            return self.default_dimension, False
        self._advance()
        token = self._expect_int()
        dimension = int(token.text)
        self.validator.validate_dimension(dimension, token.line, token.column)
        if self.requested_dimension is not None and self.requested_dimension != dimension:
            self.logger.warning(
                "Declared dimension overrides the requested one",
                declared=dimension,
                requested=self.requested_dimension
            )
        return dimension, True

    def _parse_points(self) -> List[str]:
        points_token = self._expect_keyword("points")
        names: List[str] = []
        seen = {}
        while self._peek().kind == "ident":
            token = self._advance()
            if token.text in seen:
                raise StatementValidationError(
                    f"duplicate point name '{token.text}' (first declared on line {seen[token.text]})",
                    field="points", line=token.line, column=token.column
                )
            seen[token.text] = token.line
            names.append(token.text)
        if not names:
            raise StatementSyntaxError("points section is empty", points_token.line, points_token.column)
        self.validator.validate_point_count(len(names))
        return names

    def _parse_constraints(
        self,
        universe: PointUniverse,
        section: str,
        spans: List[SourceSpan]
    ) -> List[RankConstraint]:
        constraints: List[RankConstraint] = []
        while self._peek().kind == "ident":
            first = self._peek()
            constraints.append(self._parse_constraint(universe))
            spans.append(SourceSpan(section=section, index=len(constraints) - 1, line=first.line, column=first.column))
        token = self._peek()
        if token.kind in ("op", "int"):
            raise StatementSyntaxError(f"expected a point name, found {self._describe(token)}", token.line, token.column)
        return constraints

    def _parse_constraint(self, universe: PointUniverse) -> RankConstraint:
        mask = 0
        while self._peek().kind == "ident":
            token = self._advance()
            if token.text not in universe.names:
                raise StatementValidationError(
                    f"unknown point '{token.text}'", field="constraint", line=token.line, column=token.column
                )
            mask |= 1 << universe.index(token.text)

        op = self._peek()
        if op.kind != "op":
            raise StatementSyntaxError(f"expected ':', '<=' or '>=', found {self._describe(op)}", op.line, op.column)
        self._advance()
        value_token = self._expect_int()
        value = int(value_token.text)
        self.validator.validate_rank_value(value, universe.dimension, value_token.line, value_token.column)
        return RankConstraint(points=mask, relation=_RELATIONS[op.text], value=value)


def parse_source(
    text: str,
    default_dimension: Optional[int] = None,
    max_points: Optional[int] = None
) -> SourceStatement:
    """Parse statement text, keeping constraint locations"""
    return StatementParser(text, default_dimension, max_points).parse()


def parse_statement(
    text: str,
    default_dimension: Optional[int] = None,
    max_points: Optional[int] = None
) -> Statement:
    """Parse and validate statement text"""
    return parse_source(text, default_dimension, max_points).statement


def print_statement(statement: Statement) -> str:
    """Canonical text: dimension header, one constraint per line, points in universe order"""
    universe = statement.universe
    lines = [f"dimension {universe.dimension}", "points", "  " + " ".join(universe.names), "hypotheses"]
    lines.extend("  " + statement.format_constraint(c) for c in statement.hypotheses)
    lines.append("conclusion")
    lines.extend("  " + statement.format_constraint(c) for c in statement.conclusions)
    return "\n".join(lines) + "\n"


def statement_sha256(statement: Statement) -> str:
    """Digest binding certificates to a statement, independent of source layout"""
    return hashlib.sha256(print_statement(statement).encode("utf-8")).hexdigest()
