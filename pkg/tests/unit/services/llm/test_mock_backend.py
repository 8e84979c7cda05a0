"""
Unit tests for the offline mock backend.
"""
import pytest

from langchain_core.messages import HumanMessage, SystemMessage

from app.services.content import PreparedContent
from app.services.llm import MOCK_BACKEND, MockChatBackend, mock_complete
from app.services.llm.mock import SPAM_KEYWORDS
from app.services.prompts import (
    render_raw_classification,
    render_summarization,
    render_summary_classification,
)


def _prepared(body: str, subject: str = "Hello") -> PreparedContent:
    return PreparedContent(email_id="e1", subject=subject, body=body)


# ============================================================================
# mock_complete Tests
# ============================================================================

def test_mock_classifies_keyword_as_spam():
    assert mock_complete(render_raw_classification(_prepared("You are a WINNER, click here"))) == "spam"


def test_mock_classifies_benign_as_ham():
    assert mock_complete(render_raw_classification(_prepared("Meeting moved to 3pm"))) == "ham"


@pytest.mark.parametrize("keyword", SPAM_KEYWORDS)
def test_mock_matches_every_keyword_case_insensitively(keyword):
    assert mock_complete(render_raw_classification(_prepared(f"Hi. {keyword.upper()} inside."))) == "spam"


def test_mock_keyword_in_subject_counts():
    assert mock_complete(render_raw_classification(_prepared("nothing here", subject="Free money"))) == "spam"


def test_mock_ignores_keywords_outside_the_delimited_content():
    """Verify only the text between the '###' lines is inspected."""
    messages = [
        SystemMessage(content="You are a winner of classifiers."),
        HumanMessage(content='Please classify it with a one-word answer, "spam" or "ham". click here\n\n###\nplain note\n###\n\nAnswer:'),
    ]

    assert mock_complete(messages) == "ham"


def test_mock_routes_on_the_task_text_not_the_email():
    """Verify an email quoting the summarization instruction is still classified."""
    body = "Attached are the minutes. Please summarise it for the board. Click here for the doc."

    assert mock_complete(render_raw_classification(_prepared(body))) == "spam"


def test_mock_summarizes_an_email_quoting_the_classification_instruction():
    body = "Reply with a one-word answer. Thanks."

    assert mock_complete(render_summarization(_prepared(body))) == "Summary: Reply with a one-word answer. Thanks."


def test_mock_summarizes_first_two_sentences():
    body = "First sentence here. Second one! Third one? Fourth. Fifth."

    assert mock_complete(render_summarization(_prepared(body))) == "Summary: First sentence here. Second one!"


def test_mock_summary_of_empty_body():
    assert mock_complete(render_summarization(_prepared(""))) == "Summary: "


def test_mock_classifies_summary():
    assert mock_complete(render_summary_classification("Summary: Claim your free money now.")) == "spam"
    assert mock_complete(render_summary_classification("Summary: Notes from the meeting.")) == "ham"


def test_mock_unknown_prompt_gets_empty_answer():
    assert mock_complete([SystemMessage(content="x"), HumanMessage(content="Tell me a joke")]) == ""


def test_mock_is_pure():
    messages = render_raw_classification(_prepared("viagra deals"))
    assert mock_complete(messages) == mock_complete(messages)


# ============================================================================
# MockChatBackend Tests
# ============================================================================

@pytest.mark.asyncio
async def test_mock_backend_records_exchange():
    """Verify the exchange carries estimated usage and is kept on the backend."""
    backend = MockChatBackend()
    messages = render_raw_classification(_prepared("Meeting moved to 3pm"))

    exchange = await backend.complete(messages)

    assert exchange.completion_text == "ham"
    assert exchange.backend_id == "mock"
    assert exchange.model_name == MOCK_BACKEND.model_name
    assert exchange.prompt_tokens > 0
    assert exchange.completion_tokens == 1
    assert exchange.latency_ms >= 0
    assert exchange.attempt_count == 1
    assert backend.call_count == 1
    assert backend.exchanges == [exchange]


@pytest.mark.asyncio
async def test_mock_backend_max_tokens():
    backend = MockChatBackend()

    exchange = await backend.complete(render_summarization(_prepared("a. b.")), max_tokens=500)

    assert exchange.max_tokens == 500
