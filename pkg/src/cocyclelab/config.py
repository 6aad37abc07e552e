# ABOUTME: Runtime settings for cocycle-lab using pydantic-settings
# ABOUTME: Loads process-level knobs (log level, worker threads) from environment variables and .env

import logging
import os

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Logging level names accepted by COCYCLE_LAB_LOG_LEVEL.
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Settings(BaseSettings):
    """
    Process-level settings loaded from the environment.

    None of these can change numerical outputs: walks are simulated in
    fixed blocks, so the thread count only affects wall-clock time.
    Experiments themselves are described by JSON documents, never by
    environment variables.
    """

    model_config = SettingsConfigDict(
        env_prefix="COCYCLE_LAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    log_level: str = "INFO"
    threads: int = 1

    @field_validator("log_level", mode="before")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        """Accept level names in any case."""
        if isinstance(v, str):
            return v.strip().upper()
        return v

    @property
    def logging_level(self) -> int:
        return getattr(logging, self.log_level, logging.INFO)

    def validate_ready(self) -> list[str]:
        """Check the settings for values the CLI cannot run with. Returns list of errors."""
        errors = []

        if self.log_level not in LOG_LEVELS:
            errors.append(f"COCYCLE_LAB_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}")

        if self.threads < 1:
            errors.append(f"COCYCLE_LAB_THREADS must be at least 1, got {self.threads}")
        elif self.threads > (os.cpu_count() or 1) * 4:
            errors.append(f"COCYCLE_LAB_THREADS={self.threads} exceeds four times the CPU count")

        return errors


def get_settings() -> Settings:
    """Get a settings instance from the current environment."""
    return Settings()
