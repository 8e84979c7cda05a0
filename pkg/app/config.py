"""
Configuration file loading and the effective run configuration.

The YAML file has three optional sections:

    defaults:   fields applied to every backend entry
    backends:   backend_id -> BackendConfig fields
    run:        RunConfig defaults

Precedence is command-line flags, then the file, then the built-in defaults.
"""

import logging
import os

from pathlib import Path

import yaml

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .services.content import DEFAULT_BUDGET, Estimator, TruncationPolicy
from .services.llm.config import MOCK_BACKEND_ID, BackendConfig, parse_backend_configs
from .services.pipeline.runner import DEFAULT_CONCURRENCY
from .services.pipeline.state import Scenario

CONFIG_ENV = "SPAMEVAL_CONFIG"
DEFAULT_CONFIG_FILE = "backends.yaml"
DEFAULT_WORKDIR = ".spameval"


class ConfigError(ValueError):
    """Raised when the configuration file is missing or malformed."""
    pass


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    scenario: Scenario = Scenario.RAW
    backends: list[str] = Field(default_factory=lambda: [MOCK_BACKEND_ID], min_length=1)
    summarizer_backend: str | None = None
    budget: int = Field(default=DEFAULT_BUDGET, ge=1)
    estimator: Estimator = Estimator.CHARS_DIV_4
    concurrency: int = Field(default=DEFAULT_CONCURRENCY, ge=1)
    cache_dir: Path | None = None
    store_dir: Path | None = None
    limit: int | None = Field(default=None, ge=1)
    seed: int = 0
    prompt_dir: Path | None = None

    @model_validator(mode="after")
    def _summarizer_for_summary(self):
        if self.scenario == Scenario.SUMMARY and not self.summarizer_backend:
            raise ValueError("The summary scenario requires a summarizer backend")
        return self

    @property
    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(max_content_tokens=self.budget, estimator=self.estimator)

    def with_workdir(self, workdir: Path) -> "RunConfig":
        """Fills cache_dir and store_dir from the workspace when they are not set."""
        return self.model_copy(update={
            "cache_dir": self.cache_dir or workdir / "cache",
            "store_dir": self.store_dir or workdir / "runs",
        })


class FileConfig(BaseModel):
    """Parsed contents of a configuration file."""
    path: Path | None = None
    backends: dict[str, BackendConfig]
    run: dict = {}


def resolve_config_path(explicit: str | Path | None = None) -> Path | None:
    """
    Picks the configuration file: the explicit path, then $SPAMEVAL_CONFIG, then
    ./backends.yaml when it exists. Returns None when there is none.
    """
    if explicit:
        return Path(explicit)
    if os.environ.get(CONFIG_ENV):
        return Path(os.environ[CONFIG_ENV])
    default = Path(DEFAULT_CONFIG_FILE)
    return default if default.is_file() else None


def load_config_file(path: str | Path | None) -> FileConfig:
    """
    Loads and validates a configuration file.

    Without a file only the built-in mock backend is available.

    Raises:
        ConfigError: If the file cannot be read or is not a valid configuration.
    """
    if path is None:
        logging.debug("No configuration file, using the built-in mock backend only")
        return FileConfig(backends=parse_backend_configs(None))

    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except FileNotFoundError:
        raise ConfigError(f"Configuration file '{path}' not found")
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Failed to read configuration file '{path}': {e}")

    if not isinstance(data, dict):
        raise ConfigError(f"Configuration file '{path}' must contain a mapping")

    unknown = set(data) - {"defaults", "backends", "run"}
    if unknown:
        raise ConfigError(f"Unknown sections in '{path}': {', '.join(sorted(unknown))}")

    run = data.get("run") or {}
    if not isinstance(run, dict):
        raise ConfigError(f"The 'run' section of '{path}' must be a mapping")

    try:
        backends = parse_backend_configs({"defaults": data.get("defaults"), "backends": data.get("backends")})
    except ValueError as e:
        raise ConfigError(f"Invalid backend configuration in '{path}': {e}")

    logging.info(f"Loaded {len(backends)} backends from {path}")
    return FileConfig(path=path, backends=backends, run=run)


def build_run_config(flags: dict, file_run: dict | None = None) -> RunConfig:
    """
    Merges command-line values over the file's run section.

    Flags whose value is None or an empty list were not given and do not override.

    Raises:
        ValueError: If the merged configuration is invalid.
    """
    given = {key: value for key, value in flags.items() if value is not None and value != []}
    return RunConfig.model_validate({**(file_run or {}), **given})
