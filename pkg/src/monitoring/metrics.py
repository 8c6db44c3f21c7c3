"""
Prometheus metrics for rankprover
"""

from collections import Counter as TallyCounter
from typing import Dict, Iterable, Mapping

from prometheus_client import Counter, Gauge, Histogram, Info, REGISTRY, write_to_textfile
import structlog

from src.core.config import settings

logger = structlog.get_logger()

# Define Prometheus metrics
RULE_APPLICATIONS = Counter(
    'rankprover_rule_applications_total',
    'Total number of rank-interval narrowings per saturation rule',
    ['rule']
)

SATURATION_DURATION = Histogram(
    'rankprover_saturation_seconds',
    'Wall time of saturation runs in seconds',
    ['strategy'],
    buckets=(0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 30.0, 120.0, 600.0, 3600.0)
)

SATURATION_PASSES = Gauge(
    'rankprover_saturation_passes',
    'Passes (or worklist rounds) of the last saturation run'
)

STATEMENTS = Counter(
    'rankprover_statements_total',
    'Statements processed by outcome',
    ['outcome']
)

COUNTERMODEL_TRIALS = Counter(
    'rankprover_countermodel_trials_total',
    'Partial assignments tried by the countermodel search',
    ['result']
)

CERTIFICATE_CHECKS = Counter(
    'rankprover_certificate_checks_total',
    'Certificate checks by result',
    ['result']
)

PROVER_INFO = Info(
    'rankprover',
    'Information about the prover build'
)


class SaturationMetrics:
    """Metrics collector for saturation runs"""

    def record_run(
        self,
        strategy: str,
        duration_seconds: float,
        passes: int,
        rule_counts: Mapping[str, int],
        outcome: str
    ) -> None:
        if not settings.enable_metrics:
            return
        SATURATION_DURATION.labels(strategy=strategy).observe(duration_seconds)
        SATURATION_PASSES.set(passes)
        for rule, count in rule_counts.items():
            RULE_APPLICATIONS.labels(rule=rule).inc(count)
        STATEMENTS.labels(outcome=outcome).inc()
        logger.debug(
            "Saturation metrics recorded",
            component="saturation_metrics",
            strategy=strategy,
            duration_seconds=round(duration_seconds, 3),
            passes=passes,
            outcome=outcome
        )


class OracleMetrics:
    """Metrics collector for countermodel searches"""

    def record_search(self, trials: int, found: bool) -> None:
        if not settings.enable_metrics:
            return
        COUNTERMODEL_TRIALS.labels(result="found" if found else "not_found").inc(trials)


class CertificateMetrics:
    """Metrics collector for certificate checks"""

    def record_check(self, valid: bool) -> None:
        if not settings.enable_metrics:
            return
        CERTIFICATE_CHECKS.labels(result="valid" if valid else "invalid").inc()


# Global metrics instances
saturation_metrics = SaturationMetrics()
oracle_metrics = OracleMetrics()
certificate_metrics = CertificateMetrics()


def count_rules(rule_names: Iterable[str]) -> Dict[str, int]:
    """Tally rule ids of applied steps"""
    return dict(TallyCounter(rule_names))


def record_startup_metrics() -> None:
    """Record build information once per process"""
    try:
        PROVER_INFO.info({
            'name': settings.app_name,
            'version': settings.app_version,
            'max_points': str(settings.max_points),
            'strategy': settings.strategy,
        })
    except Exception as e:
        logger.error("Error recording startup metrics", error=str(e))


def write_metrics(path: str) -> None:
    """Write the text exposition format to a file"""
    write_to_textfile(path, REGISTRY)
    logger.info("Metrics written", path=path)
