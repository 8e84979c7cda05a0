import logging

import httpx

from .base import ChatBackend
from .client import ChatCompletionsBackend
from .config import BackendConfig
from .mock import MockChatBackend


def create_backend(config: BackendConfig, transport: httpx.AsyncBaseTransport | None = None) -> ChatBackend:
    """
    Creates the backend for a configuration.

    Args:
        config: The backend configuration; endpoint_url "mock" selects the offline backend.
        transport: Optional httpx transport for remote backends (tests use a stub app).

    Returns:
        A ChatBackend instance. Remote backends should be closed after use.
    """
    if config.is_mock:
        logging.info(f"Using mock backend '{config.backend_id}'")
        return MockChatBackend(config)

    logging.info(f"Using backend '{config.backend_id}': model {config.model_name} at {config.endpoint_url}")
    return ChatCompletionsBackend(config, transport=transport)
