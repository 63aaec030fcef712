"""Configuration module for stqubit."""

from .logging_config import LogConfig, RunContextFilter, get_logger, setup_logging
from .settings import Settings, get_settings

__all__ = [
    "setup_logging",
    "get_logger",
    "LogConfig",
    "RunContextFilter",
    "Settings",
    "get_settings",
]
