"""
Deterministic offline backend.

Classifies by keyword lookup and summarizes by taking the first two sentences,
which keeps whole-pipeline tests exact and free.
"""

import re
import time

from langchain_core.messages import BaseMessage, HumanMessage

from ..content import Estimator, estimate_tokens
from .base import ChatBackend, ChatExchange, to_wire_messages
from .config import MOCK_BACKEND, BackendConfig

SPAM_KEYWORDS = ("viagra", "winner", "free money", "click here", "unsubscribe now")
SUMMARY_PREFIX = "Summary: "
SUMMARY_SENTENCES = 2

CLASSIFY_PHRASE = "with a one-word answer"
SUMMARIZE_PHRASE = "Please summarise it"
BODY_TAG = "[BODY] "

_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")


def _task_text(user_text: str) -> str:
    """Returns the instruction text above the first '###' delimiter line."""
    lines = user_text.split("\n")
    end = next((index for index, line in enumerate(lines) if line == "###"), len(lines))
    return "\n".join(lines[:end])


def _embedded_content(user_text: str) -> str:
    """Returns the text between the two '###' delimiter lines."""
    lines = user_text.split("\n")
    delimiters = [index for index, line in enumerate(lines) if line == "###"]
    if len(delimiters) < 2:
        return ""
    return "\n".join(lines[delimiters[0] + 1:delimiters[1]])


def _first_sentences(text: str, count: int) -> str:
    sentences = [s for s in _SENTENCE_END.split(text.strip()) if s]
    return " ".join(sentences[:count])


def mock_complete(messages: list[BaseMessage]) -> str:
    """
    Answers a rendered prompt without a model.

    Classification prompts get "spam" when the delimited content contains one of
    SPAM_KEYWORDS (case-insensitive) and "ham" otherwise. Summarization prompts get
    "Summary: " followed by the first two sentences of the body. Anything else gets
    an empty answer.
    """
    user_text = next((m.content for m in messages if isinstance(m, HumanMessage)), "")
    content = _embedded_content(user_text)
    task = _task_text(user_text)

    if SUMMARIZE_PHRASE in task:
        body_start = content.find(BODY_TAG)
        body = content[body_start + len(BODY_TAG):] if body_start >= 0 else content
        return SUMMARY_PREFIX + _first_sentences(body, SUMMARY_SENTENCES)

    if CLASSIFY_PHRASE in task:
        lowered = content.lower()
        return "spam" if any(keyword in lowered for keyword in SPAM_KEYWORDS) else "ham"

    return ""


class MockChatBackend(ChatBackend):
    """Backend answering through mock_complete; counts calls for tests."""

    def __init__(self, config: BackendConfig = MOCK_BACKEND):
        super().__init__(config)
        self.call_count = 0

    async def complete(self, messages: list[BaseMessage], max_tokens: int | None = None) -> ChatExchange:
        started = time.perf_counter()
        self.call_count += 1

        wire_messages = to_wire_messages(messages)
        completion_text = mock_complete(messages)

        exchange = ChatExchange(
            backend_id=self.backend_id,
            model_name=self.config.model_name,
            messages=wire_messages,
            temperature=self.config.temperature,
            max_tokens=max_tokens or self.config.max_completion_tokens,
            completion_text=completion_text,
            prompt_tokens=sum(estimate_tokens(m["content"], Estimator.CHARS_DIV_4) for m in wire_messages),
            completion_tokens=estimate_tokens(completion_text, Estimator.CHARS_DIV_4),
            latency_ms=(time.perf_counter() - started) * 1000,
        )
        self.exchanges.append(exchange)
        return exchange
