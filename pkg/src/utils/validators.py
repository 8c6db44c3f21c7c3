"""
Statement validation utilities for rankprover
"""

import re
from typing import Optional
import structlog

from src.core.config import settings
from src.core.exceptions import StatementValidationError, UniverseTooLargeError
from src.core.models import Statement

logger = structlog.get_logger()

RESERVED_WORDS = frozenset({"dimension", "points", "hypotheses", "conclusion"})
POINT_NAME_PATTERN = re.compile(r"^[^\W\d]\w*'*$")

# Bounds are stored as int8; 2 * (d + 1) must stay below 127
MAX_DIMENSION = 60


class StatementValidator:
    """Semantic checks shared by the parser and programmatic statement builders"""

    def __init__(self, max_points: Optional[int] = None):
        self.max_points = max_points if max_points is not None else settings.max_points
        self.logger = logger.bind(component="statement_validator")

    def validate_point_name(self, name: str) -> bool:
        """Letters, digits, underscores, optional prime suffixes; not a keyword"""
        return bool(POINT_NAME_PATTERN.match(name)) and name not in RESERVED_WORDS

    def validate_point_count(self, count: int) -> None:
        if count > self.max_points:
            raise UniverseTooLargeError(count, self.max_points)

    def validate_dimension(self, dimension: int, line: Optional[int] = None, column: Optional[int] = None) -> None:
        if dimension < 2 or dimension > MAX_DIMENSION:
            raise StatementValidationError(
                f"dimension must be between 2 and {MAX_DIMENSION}, got {dimension}",
                field="dimension", line=line, column=column
            )

    def validate_rank_value(
        self,
        value: int,
        dimension: int,
        line: Optional[int] = None,
        column: Optional[int] = None
    ) -> None:
        if value > dimension + 1:
            raise StatementValidationError(
                f"rank value {value} exceeds the dimension cap {dimension + 1}",
                field="value", line=line, column=column
            )

    def validate_statement(self, statement: Statement) -> Statement:
        """Whole-statement check; the parser runs it last"""
        errors = []

        self.validate_point_count(statement.universe.size)
        for name in statement.universe.names:
            if not self.validate_point_name(name):
                errors.append(f"invalid point name: {name!r}")

        cap = statement.universe.cap
        for section, constraints in (("hypotheses", statement.hypotheses),
                                     ("conclusions", statement.conclusions)):
            for constraint in constraints:
                if constraint.value > cap:
                    errors.append(
                        f"{section}: '{statement.format_constraint(constraint)}' exceeds the dimension cap {cap}"
                    )

        if errors:
            self.logger.warning("Statement validation failed", errors=errors)
            raise StatementValidationError(f"Statement validation failed: {'; '.join(errors)}")

        return statement

