"""
Process-level settings read from the environment.

Values may come from a `.env` file in the working directory.
"""

import os
from functools import lru_cache
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

load_dotenv()


class Settings(BaseModel):
    """Environment-driven defaults for CLI runs."""

    log_level: str = Field("INFO", description="Root log level")
    log_file: Optional[str] = Field(None, description="Optional log file path")
    threads: int = Field(1, ge=1, le=256, description="Worker threads for ensembles")
    metrics_file: Optional[str] = Field(
        None, description="Prometheus textfile written at the end of a run"
    )

    @field_validator("log_level")
    @classmethod
    def _upper_level(cls, value: str) -> str:
        value = value.upper()
        if value not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown log level: {value}")
        return value


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Build settings from STQUBIT_* environment variables."""
    return Settings(
        log_level=os.getenv("STQUBIT_LOG_LEVEL", "INFO"),
        log_file=os.getenv("STQUBIT_LOG_FILE") or None,
        threads=int(os.getenv("STQUBIT_THREADS", "1")),
        metrics_file=os.getenv("STQUBIT_METRICS_FILE") or None,
    )
