"""
Custom exceptions for rankprover
"""

from typing import Optional, Dict, Any


class RankProverException(Exception):
    """Base exception for rankprover"""

    def __init__(
        self,
        message: str,
        code: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message)
        self.message = message
        self.code = code
        self.details = details or {}


class ConfigurationError(RankProverException):
    """Configuration related errors"""

    def __init__(self, message: str, config_key: Optional[str] = None):
        super().__init__(message, code=1001, details={"config_key": config_key})
        self.config_key = config_key


class StatementSyntaxError(RankProverException):
    """Malformed statement text"""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(
            f"line {line}, column {column}: {message}",
            code=3001,
            details={"line": line, "column": column}
        )
        self.line = line
        self.column = column


class StatementValidationError(RankProverException):
    """Well-formed statement that violates a semantic rule"""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None
    ):
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message, code=3002, details={"field": field, "line": line})
        self.field = field
        self.line = line
        self.column = column


class UniverseTooLargeError(StatementValidationError):
    """More points than the configured maximum"""

    def __init__(self, point_count: int, max_points: int):
        super().__init__(
            f"statement declares {point_count} points, maximum is {max_points} "
            f"(raise --max-points or RANKPROVER_MAX_POINTS)",
            field="points"
        )
        self.code = 3003
        self.point_count = point_count
        self.max_points = max_points


class ContradictionError(RankProverException):
    """Hypotheses (or derived bounds) leave an empty rank interval"""

    def __init__(
        self,
        message: str,
        constraint: Optional[str] = None,
        target: Optional[str] = None,
        step_id: Optional[int] = None
    ):
        super().__init__(
            message,
            code=4001,
            details={"constraint": constraint, "target": target, "step_id": step_id}
        )
        self.constraint = constraint
        self.target = target
        self.step_id = step_id
        # Partially narrowed state, attached by whoever detected the contradiction
        self.state: Optional[Any] = None


class ResourceLimitError(RankProverException):
    """Saturation exceeded a pass or wall-time bound"""

    def __init__(
        self,
        message: str,
        limit: Optional[str] = None,
        passes: Optional[int] = None,
        elapsed_seconds: Optional[float] = None
    ):
        super().__init__(
            message,
            code=5001,
            details={"limit": limit, "passes": passes, "elapsed_seconds": elapsed_seconds}
        )
        self.limit = limit
        self.passes = passes
        self.elapsed_seconds = elapsed_seconds


class CertificateFormatError(RankProverException):
    """Certificate file cannot be parsed"""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"certificate line {line}: {message}"
        super().__init__(message, code=6001, details={"line": line})
        self.line = line


class CertificateHashMismatch(RankProverException):
    """Certificate was produced for a different statement"""

    def __init__(self, expected: str, found: str):
        super().__init__(
            f"certificate is bound to statement {found[:12]}..., this statement hashes to {expected[:12]}...",
            code=6002,
            details={"expected": expected, "found": found}
        )
        self.expected = expected
        self.found = found


class ModelError(RankProverException):
    """Unsupported finite model parameters"""

    def __init__(self, message: str, q: Optional[int] = None, dimension: Optional[int] = None):
        super().__init__(message, code=7001, details={"q": q, "dimension": dimension})
        self.q = q
        self.dimension = dimension


# Process exit codes shared by the sub-commands
EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_CONTRADICTION = 2
EXIT_USAGE = 3
EXIT_RESOURCE = 4
EXIT_INTERNAL = 5


def exception_to_exit_code(exc: BaseException) -> int:
    """Map an exception to the CLI exit code"""
    if isinstance(exc, ContradictionError):
        return EXIT_CONTRADICTION
    elif isinstance(exc, ResourceLimitError):
        return EXIT_RESOURCE
    elif isinstance(exc, (StatementSyntaxError, StatementValidationError,
                          ConfigurationError, CertificateFormatError, CertificateHashMismatch,
                          ModelError)):
        return EXIT_USAGE
    elif isinstance(exc, (FileNotFoundError, IsADirectoryError, PermissionError)):
        return EXIT_USAGE
    else:
        return EXIT_INTERNAL
