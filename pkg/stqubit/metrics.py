"""
Prometheus metrics for simulation runs.

Batch runs have no scrape endpoint, so the registry is dumped to a
textfile (node-exporter textfile collector format) at the end of a command.
"""

import logging
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, write_to_textfile

logger = logging.getLogger(__name__)

registry = CollectorRegistry()

# Run metrics
runs_total = Counter(
    "stqubit_runs_total", "Total CLI command runs", ["command", "status"], registry=registry
)

run_duration_seconds = Histogram(
    "stqubit_run_duration_seconds",
    "CLI command duration in seconds",
    ["command"],
    buckets=(0.1, 0.5, 1, 5, 10, 30, 60, 300, 900, 3600),
    registry=registry,
)

runs_in_progress = Gauge("stqubit_runs_in_progress", "Commands currently running", registry=registry)

# Numerical work
realizations_total = Counter(
    "stqubit_realizations_total",
    "Monte-Carlo realizations simulated",
    ["kind"],
    registry=registry,
)

integration_refinements_total = Counter(
    "stqubit_integration_refinements_total",
    "Grid doublings performed by the spectral integration",
    registry=registry,
)


@contextmanager
def track_run(command: str) -> Iterator[None]:
    """
    Count and time one command run.

    Args:
        command: Subcommand name used as label
    """
    runs_in_progress.inc()
    start_time = time.time()
    status = "error"
    try:
        yield
        status = "success"
    finally:
        duration = time.time() - start_time
        runs_total.labels(command=command, status=status).inc()
        run_duration_seconds.labels(command=command).observe(duration)
        runs_in_progress.dec()
        logger.debug(f"Command {command} finished with {status} in {duration:.2f}s")


def record_realizations(kind: str, count: int) -> None:
    """Add simulated realizations of a given kind (mc_1q, cavity)."""
    realizations_total.labels(kind=kind).inc(count)


def write_metrics(path: Optional[str]) -> None:
    """Write the registry to a textfile; no-op when path is empty."""
    if not path:
        return
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        write_to_textfile(path, registry)
        logger.info(f"Metrics written to {path}")
    except OSError as e:
        logger.error(f"Could not write metrics to {path}: {e}")
