"""Token-budget truncation and delimiter sanitization of email content."""

import math
import re

from enum import Enum
from typing import Callable

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .corpus import EmailContent

DEFAULT_BUDGET = 512
# how far back from the cut we look for whitespace
BOUNDARY_LOOKBACK = 20

_DELIMITER_RUN = re.compile(r"#{3,}")
_NON_WHITESPACE_RUN = re.compile(r"\S+")

_exact_estimator: Callable[[str], int] | None = None


class Estimator(str, Enum):
    """Token count estimators."""
    CHARS_DIV_4 = "chars_div_4"
    WHITESPACE_WORDS = "whitespace_words"
    PLUGGABLE_EXACT = "pluggable_exact"


class TruncationPolicy(BaseModel):
    """Budget for the content part of a prompt."""
    model_config = ConfigDict(frozen=True)

    max_content_tokens: int = Field(default=DEFAULT_BUDGET, ge=1)
    estimator: Estimator = Estimator.CHARS_DIV_4

    @model_validator(mode="after")
    def _exact_estimator_registered(self):
        if self.estimator == Estimator.PLUGGABLE_EXACT and _exact_estimator is None:
            raise ValueError("No exact token estimator registered.")
        return self


class PreparedContent(BaseModel):
    """Subject plus sanitized, possibly truncated body."""
    model_config = ConfigDict(frozen=True)

    email_id: str
    subject: str
    body: str
    truncated: bool = False


def register_estimator(fn: Callable[[str], int] | None) -> None:
    """
    Installs the exact estimator used by Estimator.PLUGGABLE_EXACT.

    The function must be deterministic and non-decreasing over prefixes of a text.
    Passing None unregisters it.
    """
    global _exact_estimator
    _exact_estimator = fn


def estimate_tokens(text: str, estimator: Estimator = Estimator.CHARS_DIV_4) -> int:
    """
    Estimates the token count of a text.

    Args:
        text: The text to measure.
        estimator: chars_div_4 is ceil(len / 4); whitespace_words counts runs of
            non-whitespace characters; pluggable_exact calls the registered function.

    Returns:
        A non-negative token estimate.
    """
    if estimator == Estimator.CHARS_DIV_4:
        return math.ceil(len(text) / 4)
    if estimator == Estimator.WHITESPACE_WORDS:
        return sum(1 for _ in _NON_WHITESPACE_RUN.finditer(text))
    if _exact_estimator is None:
        raise ValueError("No exact token estimator registered.")
    return _exact_estimator(text)


def sanitize_delimiters(text: str) -> str:
    """Replaces every run of three or more '#' with '##' so content cannot close a '###' block."""
    return _DELIMITER_RUN.sub("##", text)


def truncate_body(content: EmailContent | PreparedContent, policy: TruncationPolicy) -> PreparedContent:
    """
    Cuts the body so that subject and body together fit the token budget.

    The subject is only sanitized, never cut. The body keeps its largest prefix that
    fits the remaining budget, moved back to the last whitespace within
    BOUNDARY_LOOKBACK characters of the cut when there is one. If the subject alone
    uses up the budget, the body is emptied.

    Args:
        content: The parsed email, or an already prepared one whose truncated
            flag carries over.
        policy: The budget and estimator to apply.

    Returns:
        The prepared content, with truncated set when the body was shortened.
    """
    if isinstance(content, PreparedContent):
        email_id, already_truncated = content.email_id, content.truncated
    else:
        email_id, already_truncated = content.id, False

    subject = sanitize_delimiters(content.subject)
    body = sanitize_delimiters(content.body)

    remaining = policy.max_content_tokens - estimate_tokens(subject, policy.estimator)

    if remaining <= 0:
        cut = 0
    elif estimate_tokens(body, policy.estimator) <= remaining:
        cut = len(body)
    else:
        cut = _snap_to_whitespace(body, _largest_fitting_prefix(body, remaining, policy.estimator))

    return PreparedContent(
        email_id=email_id,
        subject=subject,
        body=body[:cut],
        truncated=already_truncated or cut < len(body),
    )


def _largest_fitting_prefix(text: str, budget: int, estimator: Estimator) -> int:
    """Binary search for the longest prefix whose estimate stays within budget."""
    low, high = 0, len(text)
    while low < high:
        middle = (low + high + 1) // 2
        if estimate_tokens(text[:middle], estimator) <= budget:
            low = middle
        else:
            high = middle - 1
    return low


def _snap_to_whitespace(text: str, cut: int) -> int:
    if cut < len(text) and text[cut].isspace():
        return cut
    for index in range(cut - 1, max(0, cut - BOUNDARY_LOOKBACK) - 1, -1):
        if text[index].isspace():
            return index
    return cut
