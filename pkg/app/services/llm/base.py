"""
Shared types for chat-completion backends: the exchange record, usage totals,
the error hierarchy and the backend base class.
"""

from abc import ABC, abstractmethod

from langchain_core.messages import BaseMessage, SystemMessage
from pydantic import BaseModel

from .config import BackendConfig


class BackendError(Exception):
    """Base class for chat-completion backend errors."""
    pass


class AuthError(BackendError):
    """Raised on 401/403 or a missing API key. Never retried."""
    pass


class ExhaustedRetries(BackendError):
    """Raised when every attempt allowed by max_retries failed transiently."""
    pass


class MalformedResponse(BackendError):
    """Raised when a response body does not follow the chat-completions schema."""
    pass


class TransientBackendError(BackendError):
    """A retryable failure: HTTP 429, 5xx, timeouts and connection errors."""

    def __init__(self, message: str, status_code: int | None = None):
        super().__init__(message)
        self.status_code = status_code


class ChatExchange(BaseModel):
    """One completed request/response pair."""
    backend_id: str
    model_name: str
    messages: list[dict[str, str]]
    temperature: float
    max_tokens: int
    completion_text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_ms: float = 0.0
    attempt_count: int = 1


class UsageTotals(BaseModel):
    """Summed token usage and timing over a set of exchanges."""
    prompt_tokens: int = 0
    completion_tokens: int = 0
    requests: int = 0
    wall_time_ms: float = 0.0
    failed_requests: int = 0

    @property
    def mean_latency_ms(self) -> float:
        return self.wall_time_ms / self.requests if self.requests else 0.0


def usage_report(exchanges: list[ChatExchange]) -> UsageTotals:
    """
    Sums the usage of a list of exchanges.

    Args:
        exchanges: Completed exchanges.

    Returns:
        Total prompt and completion tokens, the number of requests and the summed latency.
    """
    totals = UsageTotals()
    for exchange in exchanges:
        totals.prompt_tokens += exchange.prompt_tokens
        totals.completion_tokens += exchange.completion_tokens
        totals.requests += 1
        totals.wall_time_ms += exchange.latency_ms
    return totals


def to_wire_messages(messages: list[BaseMessage]) -> list[dict[str, str]]:
    """Converts system/user messages to chat-completions `{role, content}` objects."""
    return [
        {"role": "system" if isinstance(message, SystemMessage) else "user", "content": message.content}
        for message in messages
    ]


class ChatBackend(ABC):
    """A chat-completion backend bound to one BackendConfig; keeps every completed exchange."""

    def __init__(self, config: BackendConfig):
        self.config = config
        self.exchanges: list[ChatExchange] = []

    @property
    def backend_id(self) -> str:
        return self.config.backend_id

    @abstractmethod
    async def complete(self, messages: list[BaseMessage], max_tokens: int | None = None) -> ChatExchange:
        """
        Sends the messages and returns the first completion.

        Args:
            messages: A system message followed by a user message.
            max_tokens: Overrides config.max_completion_tokens for this request.
        """

    async def aclose(self) -> None:
        pass

    async def __aenter__(self):
        return self

    async def __aexit__(self, *exc_info):
        await self.aclose()
