"""Process settings using pydantic-settings.

Experiment settings live in :class:`~src.models.cli.RunConfig`. This module
only holds what belongs to the process running ``rcml``: logging verbosity,
default directories and the evaluation thread count.

Configuration Sources
=====================
Settings are loaded from the following sources in order of precedence:
1. Direct parameter assignment (highest priority)
2. Environment variables
3. .env file (if present)
4. Default values (lowest priority)

Environment Variables
=====================
- RCML_LOG_LEVEL: Logging level (debug, info, warning, error, critical)
- RCML_OUTPUT_DIR: Default output directory of train / eval / experiment commands
- RCML_DATA_DIR: Default dataset directory
- RCML_WORKERS: Threads used for relation-context fan-out during evaluation

Command-line flags (``--log-level``, ``--out``, ``--data``, ``--workers``)
override these values.

Usage Examples
==============

.. code-block:: python

    from src.config import get_settings

    settings = get_settings()
    print(settings.output_dir, settings.workers)

    settings = get_settings(force_reload=True, workers=4)
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Literal, TypedDict, Unpack

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

LogLevel = Literal["debug", "info", "warning", "error", "critical"]


class GetSettingsKwargs(TypedDict, total=False):
    """TypedDict for get_settings() keyword arguments."""

    log_level: LogLevel
    output_dir: str
    data_dir: str
    workers: int


class Settings(BaseSettings):
    """Process settings.

    Attributes
    ----------
    log_level : LogLevel
        Logging level (RCML_LOG_LEVEL, defaults to "info")
    output_dir : str
        Default output directory (RCML_OUTPUT_DIR, defaults to "runs")
    data_dir : str
        Default dataset directory (RCML_DATA_DIR, defaults to "data")
    workers : int
        Evaluation threads (RCML_WORKERS, defaults to 1)

    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    log_level: LogLevel = Field(
        default="info",
        description="Logging level",
        alias="RCML_LOG_LEVEL",
    )
    output_dir: str = Field(
        default="runs",
        description="Default output directory",
        alias="RCML_OUTPUT_DIR",
    )
    data_dir: str = Field(
        default="data",
        description="Default dataset directory",
        alias="RCML_DATA_DIR",
    )
    workers: int = Field(
        default=1,
        description="Threads for evaluation fan-out",
        alias="RCML_WORKERS",
        ge=1,
    )

    @classmethod
    def from_env_file(cls, env_file: str | Path) -> Settings:
        """Create settings from a specific .env file.

        Examples
        --------
        .. code-block:: python

            settings = Settings.from_env_file("/path/to/.env")

        """
        return cls(_env_file=str(env_file))


_settings_instance: Settings | None = None


def get_settings(
    env_file: str | Path | None = None,
    no_env_file: bool = False,
    force_reload: bool = False,
    **kwargs: Unpack[GetSettingsKwargs],
) -> Settings:
    """Get the cached settings instance, creating it on first use.

    Parameters
    ----------
    env_file : str | Path | None, optional
        Path to .env file. If provided, overrides the default .env file.
    no_env_file : bool, optional
        If True, skips loading any .env file. Defaults to False.
    force_reload : bool, optional
        If True, rebuilds the settings even if cached. Defaults to False.
    **kwargs
        Values overriding the environment

    Returns
    -------
    Settings
        The process settings instance

    """
    global _settings_instance

    if _settings_instance is not None and not force_reload:
        return _settings_instance

    config_kwargs: dict[str, object] = {}
    if no_env_file:
        config_kwargs["_env_file"] = None
    elif env_file:
        config_kwargs["_env_file"] = str(env_file)
    elif os.path.exists(".env"):
        config_kwargs["_env_file"] = ".env"

    if kwargs:
        config_kwargs.update(dict(kwargs))

    _settings_instance = Settings(**config_kwargs)
    return _settings_instance


def reset_settings() -> None:
    """Reset the cached settings instance.

    The next call to :func:`get_settings` builds a fresh instance. Primarily
    used by tests.
    """
    global _settings_instance
    _settings_instance = None
