"""Chat-completions HTTP client with retries, backoff and rate limiting."""

import asyncio
import logging
import os
import time

import httpx

from langchain_core.messages import BaseMessage
from tenacity import AsyncRetrying, RetryError, retry_if_exception_type, stop_after_attempt, wait_random_exponential

from .base import (
    AuthError,
    BackendError,
    ChatBackend,
    ChatExchange,
    ExhaustedRetries,
    MalformedResponse,
    TransientBackendError,
    to_wire_messages,
)
from .config import BackendConfig
from .ratelimit import RateLimiter

# exponential backoff with full jitter: uniform(0, min(cap, base * 2 ** (attempt - 1)))
BACKOFF_BASE_SECONDS = 1
BACKOFF_CAP_SECONDS = 60


class ChatCompletionsBackend(ChatBackend):
    """
    Remote backend speaking the chat-completions wire format.

    Used for hosted models and for locally served ones (e.g. Flan-T5 behind an
    OpenAI-compatible server). One instance owns one connection pool and one rate
    limiter, shared by every concurrent caller.
    """

    def __init__(
        self,
        config: BackendConfig,
        transport: httpx.AsyncBaseTransport | None = None,
        rate_limiter: RateLimiter | None = None,
        sleep=asyncio.sleep,
    ):
        super().__init__(config)
        self._transport = transport
        self._client: httpx.AsyncClient | None = None
        self._sleep = sleep
        self.rate_limiter = rate_limiter or RateLimiter(config.rate_limit)

    def _get_client(self) -> httpx.AsyncClient:
        if self._client is None:
            self._client = httpx.AsyncClient(transport=self._transport, timeout=self.config.timeout)
        return self._client

    async def aclose(self) -> None:
        if self._client is not None:
            await self._client.aclose()
            self._client = None

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key_env = self.config.api_key_env
        if key_env:
            api_key = os.environ.get(key_env)
            if not api_key:
                raise AuthError(f"API key environment variable {key_env} is not set for backend '{self.backend_id}'")
            headers["Authorization"] = f"Bearer {api_key}"
        return headers

    async def complete(self, messages: list[BaseMessage], max_tokens: int | None = None) -> ChatExchange:
        """
        Posts the messages and returns the first choice.

        Transient failures (429, 5xx, timeouts, connection errors) are retried up to
        config.max_retries times with jittered exponential backoff. Every attempt
        waits for the rate limiter first.

        Raises:
            AuthError: On 401/403 or a missing API key.
            ExhaustedRetries: When all attempts failed transiently.
            MalformedResponse: When the body is not a chat-completions response.
            BackendError: On other non-retryable HTTP errors.
        """
        cfg = self.config
        wire_messages = to_wire_messages(messages)
        max_tokens = max_tokens or cfg.max_completion_tokens
        payload = {
            "model": cfg.model_name,
            "messages": wire_messages,
            "temperature": cfg.temperature,
            "max_tokens": max_tokens,
        }
        headers = self._headers()

        retrying = AsyncRetrying(
            stop=stop_after_attempt(cfg.max_retries + 1),
            wait=wait_random_exponential(multiplier=BACKOFF_BASE_SECONDS, max=BACKOFF_CAP_SECONDS),
            retry=retry_if_exception_type(TransientBackendError),
            sleep=self._sleep,
            before_sleep=self._log_retry,
        )

        started = time.perf_counter()
        attempt_count = 0
        try:
            async for attempt in retrying:
                with attempt:
                    attempt_count = attempt.retry_state.attempt_number
                    await self.rate_limiter.acquire()
                    data = await self._post(payload, headers)
        except RetryError as e:
            last_error = e.last_attempt.exception()
            raise ExhaustedRetries(
                f"Backend '{self.backend_id}' failed after {attempt_count} attempts: {last_error}"
            ) from last_error

        completion_text, prompt_tokens, completion_tokens = _parse_completion(data)

        exchange = ChatExchange(
            backend_id=self.backend_id,
            model_name=cfg.model_name,
            messages=wire_messages,
            temperature=cfg.temperature,
            max_tokens=max_tokens,
            completion_text=completion_text,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            latency_ms=(time.perf_counter() - started) * 1000,
            attempt_count=attempt_count,
        )
        self.exchanges.append(exchange)
        return exchange

    async def _post(self, payload: dict, headers: dict[str, str]) -> dict:
        try:
            response = await self._get_client().post(self.config.endpoint_url, json=payload, headers=headers)
        except httpx.TimeoutException as e:
            raise TransientBackendError(f"Request to '{self.backend_id}' timed out") from e
        except httpx.TransportError as e:
            raise TransientBackendError(f"Request to '{self.backend_id}' failed: {e}") from e

        status = response.status_code
        if status in (401, 403):
            raise AuthError(f"Backend '{self.backend_id}' rejected credentials ({status})")
        if status == 429 or status >= 500:
            raise TransientBackendError(f"Backend '{self.backend_id}' returned {status}", status_code=status)
        if status >= 400:
            raise BackendError(f"Backend '{self.backend_id}' returned {status}: {response.text[:200]}")

        try:
            return response.json()
        except ValueError as e:
            raise MalformedResponse(f"Backend '{self.backend_id}' returned a non-JSON body") from e

    def _log_retry(self, retry_state) -> None:
        logging.warning(
            f"Retrying '{self.backend_id}' after attempt {retry_state.attempt_number}: "
            f"{retry_state.outcome.exception()}"
        )


def _parse_completion(data) -> tuple[str, int, int]:
    """Reads choices[0].message.content and the usage counts from a response body."""
    try:
        content = data["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as e:
        raise MalformedResponse(f"Response has no choices[0].message.content: {e}") from e

    if not isinstance(content, str):
        raise MalformedResponse("Response content is not text")

    usage = data.get("usage") or {}
    try:
        prompt_tokens = int(usage.get("prompt_tokens") or 0)
        completion_tokens = int(usage.get("completion_tokens") or 0)
    except (TypeError, ValueError) as e:
        raise MalformedResponse(f"Response usage is not numeric: {e}") from e

    return content, max(prompt_tokens, 0), max(completion_tokens, 0)
