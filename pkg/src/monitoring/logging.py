"""
Logging configuration for rankprover
"""

import logging
import sys
from typing import Any, Optional

import structlog
from pythonjsonlogger import jsonlogger

from src.core.config import settings

# Global logger instance
logger = structlog.get_logger()


def verbosity_to_level(verbosity: int) -> str:
    """Map -v / -vv to a log level name; without flags the configured level applies"""
    if verbosity >= 2:
        return "DEBUG"
    elif verbosity == 1:
        return "INFO"
    return settings.log_level


def setup_logging(level: Optional[str] = None, json_output: Optional[bool] = None) -> None:
    """Configure structured logging on stderr; stdout is reserved for verdicts"""
    level_name = (level or settings.log_level).upper()
    numeric_level = getattr(logging, level_name, logging.WARNING)
    use_json = settings.log_json if json_output is None else json_output

    # Configure standard logging
    log_handler = logging.StreamHandler(sys.stderr)
    if use_json:
        log_handler.setFormatter(jsonlogger.JsonFormatter(
            fmt='%(asctime)s %(name)s %(levelname)s %(message)s'
        ))
    else:
        log_handler.setFormatter(logging.Formatter("%(message)s"))

    root_logger = logging.getLogger()
    root_logger.handlers.clear()
    root_logger.addHandler(log_handler)
    root_logger.setLevel(numeric_level)

    # Configure structlog
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.contextvars.merge_contextvars,
            structlog.stdlib.add_log_level,
            structlog.stdlib.add_logger_name,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.format_exc_info,
            structlog.processors.JSONRenderer() if use_json else structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )

    logger.debug("Logging configured", log_level=level_name, json=use_json)


def get_logger(name: Optional[str] = None) -> structlog.stdlib.BoundLogger:
    """Get a structured logger instance"""
    if name:
        return structlog.get_logger(name)
    return structlog.get_logger()


def log_performance_metric(metric_name: str, value: float, **kwargs: Any) -> None:
    """Log one timing or size figure"""
    perf_logger = get_logger("performance_metrics")
    perf_logger.info(
        "Performance metric",
        metric_name=metric_name,
        value=value,
        **kwargs
    )
