# ABOUTME: Tests for the cocycle-lab runtime settings
# ABOUTME: Validates environment parsing and the validate_ready checks

import logging
import os
from unittest.mock import patch

from cocyclelab.config import Settings, get_settings


class TestSettings:
    """Tests for Settings configuration class."""

    def test_defaults(self):
        """Without environment variables the CLI logs at INFO with one thread."""
        with patch.dict(os.environ, {}, clear=True):
            settings = Settings(_env_file=None)
            assert settings.log_level == "INFO"
            assert settings.threads == 1
            assert settings.validate_ready() == []

    def test_reads_prefixed_environment(self):
        """COCYCLE_LAB_* variables are picked up."""
        with patch.dict(
            os.environ, {"COCYCLE_LAB_LOG_LEVEL": "debug", "COCYCLE_LAB_THREADS": "2"}, clear=True
        ):
            settings = get_settings()
            assert settings.log_level == "DEBUG"
            assert settings.logging_level == logging.DEBUG
            assert settings.threads == 2

    def test_log_level_is_normalized(self):
        """Level names are case-insensitive and stripped."""
        settings = Settings(log_level="  warning ", _env_file=None)
        assert settings.log_level == "WARNING"

    def test_validate_ready_unknown_log_level(self):
        """Unknown level names are reported."""
        settings = Settings(log_level="chatty", _env_file=None)
        errors = settings.validate_ready()
        assert any("COCYCLE_LAB_LOG_LEVEL" in e for e in errors)

    def test_validate_ready_threads(self):
        """Thread counts below one are reported."""
        settings = Settings(threads=0, _env_file=None)
        errors = settings.validate_ready()
        assert any("COCYCLE_LAB_THREADS" in e for e in errors)

    def test_validate_ready_too_many_threads(self):
        """Thread counts far above the CPU count are reported."""
        with patch("cocyclelab.config.os.cpu_count", return_value=2):
            settings = Settings(threads=9, _env_file=None)
            assert any("CPU count" in e for e in settings.validate_ready())

    def test_unrelated_variables_are_ignored(self):
        """Other environment variables do not affect the settings."""
        with patch.dict(os.environ, {"COCYCLE_LAB_SEED": "7", "THREADS": "9"}, clear=True):
            settings = Settings(_env_file=None)
            assert settings.threads == 1
