"""
Centralized logging configuration for stqubit.

This module provides consistent logging across all simulation services.
"""

import logging
import sys
from pathlib import Path
from typing import Optional

# Libraries that log a lot at INFO/DEBUG during numerical runs
NOISY_LOGGERS = ("matplotlib", "qutip", "numba", "PIL")


def setup_logging(
    level: str = "INFO",
    log_file: Optional[str] = None,
    format_string: Optional[str] = None,
) -> None:
    """
    Configure logging for a simulation run.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional file path for log output
        format_string: Optional custom format string
    """
    if format_string is None:
        format_string = (
            "%(asctime)s - %(name)s - %(levelname)s - "
            "[seed=%(seed)s cfg=%(config_hash)s] - %(message)s"
        )

    formatter = logging.Formatter(format_string)
    context_filter = RunContextFilter()

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, level.upper()))
    root_logger.handlers.clear()

    # stdout is reserved for command output
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.addFilter(context_filter)
    root_logger.addHandler(console_handler)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        file_handler.addFilter(context_filter)
        root_logger.addHandler(file_handler)

    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance for a module.

    Args:
        name: Logger name (usually __name__)

    Returns:
        Configured logger instance
    """
    return logging.getLogger(name)


class LogConfig:
    """Run context shared by all log records."""

    LEVEL = "INFO"
    FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    seed: Optional[int] = None
    config_hash: Optional[str] = None

    @classmethod
    def set_run_context(cls, seed: Optional[int], config_hash: Optional[str]) -> None:
        """
        Record the seed and config hash of the active run.

        Args:
            seed: Base random seed
            config_hash: SHA-256 of the canonical run configuration
        """
        cls.seed = seed
        cls.config_hash = config_hash[:12] if config_hash else None

    @classmethod
    def clear_run_context(cls) -> None:
        """Forget the active run."""
        cls.seed = None
        cls.config_hash = None


class RunContextFilter(logging.Filter):
    """Stamp records with the active seed and config hash."""

    def filter(self, record: logging.LogRecord) -> bool:
        """
        Attach run context to a log record.

        Args:
            record: Log record

        Returns:
            True to keep the record
        """
        record.seed = LogConfig.seed if LogConfig.seed is not None else "-"
        record.config_hash = LogConfig.config_hash or "-"
        return True
