"""
Tests for settings, logging configuration and run metrics.
"""

import logging

import pytest
from pydantic import ValidationError as PydanticValidationError

from stqubit import metrics
from stqubit.config.logging_config import LogConfig, RunContextFilter, setup_logging
from stqubit.config.settings import Settings, get_settings


@pytest.mark.unit
class TestSettings:
    """Test environment-driven settings."""

    def test_defaults(self, monkeypatch):
        """Test defaults without environment overrides."""
        for var in ("STQUBIT_LOG_LEVEL", "STQUBIT_LOG_FILE", "STQUBIT_THREADS", "STQUBIT_METRICS_FILE"):
            monkeypatch.delenv(var, raising=False)
        get_settings.cache_clear()

        settings = get_settings()

        assert settings.log_level == "INFO"
        assert settings.threads == 1
        assert settings.metrics_file is None
        get_settings.cache_clear()

    def test_environment(self, monkeypatch):
        """Test values come from STQUBIT_* variables."""
        monkeypatch.setenv("STQUBIT_LOG_LEVEL", "debug")
        monkeypatch.setenv("STQUBIT_THREADS", "4")
        get_settings.cache_clear()

        settings = get_settings()

        assert settings.log_level == "DEBUG"
        assert settings.threads == 4
        get_settings.cache_clear()

    def test_invalid_level(self):
        """Test unknown log levels are rejected."""
        with pytest.raises(PydanticValidationError):
            Settings(log_level="chatty")


@pytest.mark.unit
class TestLoggingConfig:
    """Test logging setup and run context."""

    def teardown_method(self):
        LogConfig.clear_run_context()

    def test_context_filter(self):
        """Test records are stamped with seed and short hash."""
        LogConfig.set_run_context(42, "a" * 64)
        record = logging.LogRecord("x", logging.INFO, __file__, 1, "msg", None, None)

        assert RunContextFilter().filter(record) is True
        assert record.seed == 42
        assert record.config_hash == "a" * 12

    def test_context_filter_without_run(self):
        """Test placeholders outside a run."""
        record = logging.LogRecord("x", logging.INFO, __file__, 1, "msg", None, None)
        RunContextFilter().filter(record)

        assert record.seed == "-"
        assert record.config_hash == "-"

    def test_setup_logging_file(self, tmp_path):
        """Test file handler receives formatted records."""
        log_file = tmp_path / "logs" / "run.log"
        root = logging.getLogger()
        saved_handlers, saved_level = root.handlers[:], root.level

        try:
            setup_logging(level="DEBUG", log_file=str(log_file))
            LogConfig.set_run_context(7, "b" * 64)
            logging.getLogger("stqubit.test").info("hello")
            for handler in root.handlers:
                handler.flush()

            text = log_file.read_text()
            assert "hello" in text
            assert "seed=7" in text
            assert logging.getLogger("qutip").level == logging.WARNING
        finally:
            for handler in root.handlers:
                handler.close()
            root.handlers[:] = saved_handlers
            root.setLevel(saved_level)


@pytest.mark.unit
class TestMetrics:
    """Test run metrics."""

    def _value(self, name, labels=None):
        return metrics.registry.get_sample_value(name, labels or {}) or 0.0

    def test_track_run_success(self):
        """Test successful runs are counted."""
        before = self._value("stqubit_runs_total", {"command": "unit", "status": "success"})

        with metrics.track_run("unit"):
            pass

        after = self._value("stqubit_runs_total", {"command": "unit", "status": "success"})
        assert after == before + 1
        assert self._value("stqubit_runs_in_progress") == 0

    def test_track_run_error(self):
        """Test failing runs are counted as errors and re-raised."""
        before = self._value("stqubit_runs_total", {"command": "unit", "status": "error"})

        with pytest.raises(RuntimeError):
            with metrics.track_run("unit"):
                raise RuntimeError("boom")

        after = self._value("stqubit_runs_total", {"command": "unit", "status": "error"})
        assert after == before + 1

    def test_write_metrics(self, tmp_path):
        """Test the textfile contains the registry."""
        metrics.record_realizations("unit", 3)
        path = tmp_path / "metrics.prom"

        metrics.write_metrics(str(path))

        assert "stqubit_realizations_total" in path.read_text()

    def test_write_metrics_noop(self):
        """Test empty path writes nothing."""
        metrics.write_metrics(None)
