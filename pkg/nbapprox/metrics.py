"""
Prometheus metrics for experiment runs.

Metrics live in a private registry so importing the library never touches the
process-wide default registry. The CLI dumps them with --metrics-file.
"""

from pathlib import Path
from typing import Union

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile

REGISTRY = CollectorRegistry()

REPLICATIONS = Counter(
    "nbapprox_replications_total",
    "Simulated datasets processed by the estimator experiment",
    registry=REGISTRY,
)

DEGENERATE_SAMPLES = Counter(
    "nbapprox_degenerate_samples_total",
    "Datasets on which an estimator could not be evaluated",
    registry=REGISTRY,
)

COMMAND_SECONDS = Histogram(
    "nbapprox_command_seconds",
    "Wall-clock duration of CLI commands",
    ["command"],
    buckets=(0.1, 0.5, 1, 5, 10, 30, 60, 300, 900),
    registry=REGISTRY,
)


def write_metrics(path: Union[str, Path]) -> None:
    """Write the registry in the Prometheus text exposition format."""
    write_to_textfile(str(path), REGISTRY)
