"""Backend configuration records and their loading from a config mapping."""

import logging

from pydantic import BaseModel, ConfigDict, Field, ValidationError

MOCK_ENDPOINT = "mock"
MOCK_BACKEND_ID = "mock"
DEFAULT_API_KEY_ENV = "OPENAI_API_KEY"


class BackendConfigError(ValueError):
    """Raised when a backend entry is missing or invalid."""
    pass


class BackendConfig(BaseModel):
    """Configuration for a single chat-completion backend."""
    model_config = ConfigDict(frozen=True, protected_namespaces=())

    backend_id: str
    endpoint_url: str
    model_name: str
    temperature: float = Field(default=0.0, ge=0.0)
    max_completion_tokens: int = Field(default=16, ge=1)
    timeout: float = Field(default=60.0, gt=0)
    max_retries: int = Field(default=5, ge=0, le=20)
    rate_limit: int = Field(default=60, ge=1)
    api_key_env: str | None = DEFAULT_API_KEY_ENV

    @property
    def is_mock(self) -> bool:
        return self.endpoint_url == MOCK_ENDPOINT


MOCK_BACKEND = BackendConfig(
    backend_id=MOCK_BACKEND_ID,
    endpoint_url=MOCK_ENDPOINT,
    model_name="mock-keyword-v1",
    max_completion_tokens=500,
    rate_limit=100000,
    api_key_env=None,
)


def parse_backend_configs(data: dict | None) -> dict[str, BackendConfig]:
    """
    Builds BackendConfigs from a config mapping.

    Each entry under `backends` is merged over the `defaults` mapping. The built-in
    mock backend is added unless the mapping declares its own `mock` entry.

    Args:
        data: The parsed config file, e.g. {"defaults": {...}, "backends": {"gpt4": {...}}}.

    Returns:
        Backend configs keyed by backend_id.

    Raises:
        BackendConfigError: If an entry fails validation.
    """
    data = data or {}
    defaults = data.get("defaults") or {}
    entries = data.get("backends") or {}

    configs = {MOCK_BACKEND_ID: MOCK_BACKEND}
    for backend_id, entry in entries.items():
        merged = {**defaults, **(entry or {}), "backend_id": backend_id}
        try:
            configs[backend_id] = BackendConfig(**merged)
        except ValidationError as e:
            raise BackendConfigError(f"Invalid configuration for backend '{backend_id}': {e}") from e

    logging.debug(f"Configured backends: {', '.join(sorted(configs))}")

    return configs


def resolve_backend(configs: dict[str, BackendConfig], backend_id: str) -> BackendConfig:
    """Looks up a backend by id."""
    try:
        return configs[backend_id]
    except KeyError:
        raise BackendConfigError(
            f"Backend '{backend_id}' not configured. Available: {', '.join(sorted(configs))}"
        )
