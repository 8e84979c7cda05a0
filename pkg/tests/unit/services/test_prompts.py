"""
Unit tests for the prompts module.

Renderings are compared byte for byte against the files in tests/fixtures/golden.
"""
import shutil
import pytest
from pathlib import Path

from langchain_core.messages import HumanMessage, SystemMessage

from app.services.content import PreparedContent
from app.services.prompts import (
    DEFAULT_PROMPT_DIR,
    PromptKit,
    TemplateError,
    UnsanitizedContent,
    email_block,
    get_prompt_kit,
    render_raw_classification,
    render_summarization,
    render_summary_classification,
)

GOLDEN_DIR = Path(__file__).resolve().parents[2] / "fixtures" / "golden"

LUNCH = PreparedContent(
    email_id="e1",
    subject="Team lunch",
    body="Lunch is moved to Friday at noon. Bring {snacks}!",
)


def _as_text(messages) -> str:
    return f"[system]\n{messages[0].content}\n[user]\n{messages[1].content}\n"


def _delimiter_lines(text: str) -> int:
    return sum(1 for line in text.split("\n") if line == "###")


# ============================================================================
# Golden file Tests
# ============================================================================

def test_render_raw_classification_golden():
    expected = (GOLDEN_DIR / "raw_classify.golden.txt").read_text(encoding="utf-8")
    assert _as_text(render_raw_classification(LUNCH)) == expected


def test_render_summarization_golden():
    expected = (GOLDEN_DIR / "summarize.golden.txt").read_text(encoding="utf-8")
    assert _as_text(render_summarization(LUNCH)) == expected


def test_render_summary_classification_golden():
    expected = (GOLDEN_DIR / "summary_classify.golden.txt").read_text(encoding="utf-8")
    rendered = render_summary_classification("Summary: Lunch is moved to Friday at noon.")
    assert _as_text(rendered) == expected


# ============================================================================
# Rendering Tests
# ============================================================================

def test_render_raw_classification_structure():
    """Verify one system message, then one user message holding the tagged block."""
    messages = render_raw_classification(PreparedContent(email_id="e1", subject="Hi", body="Test"))

    assert len(messages) == 2
    assert isinstance(messages[0], SystemMessage)
    assert isinstance(messages[1], HumanMessage)
    user = messages[1].content
    assert "###\n[SUBJECT] Hi\n[BODY] Test\n###" in user
    assert user.endswith("Answer:")
    assert 'with a one-word answer, "spam" or "ham"' in user
    assert _delimiter_lines(user) == 2


def test_render_raw_classification_empty_content():
    messages = render_raw_classification(PreparedContent(email_id="e1", subject="", body=""))

    assert "###\n[SUBJECT] \n[BODY] \n###" in messages[1].content


def test_render_raw_classification_rejects_delimiter():
    """Verify content holding '###' is refused."""
    with pytest.raises(UnsanitizedContent):
        render_raw_classification(PreparedContent(email_id="e1", subject="x", body="a ### b"))


def test_render_summarization_mentions_token_limit():
    messages = render_summarization(PreparedContent(email_id="e1", subject="Only subject", body=""))

    user = messages[1].content
    assert "Please summarise it ensuring that your entire answer stays within 500 tokens." in user
    assert "[BODY] \n###" in user
    assert messages[0].content.startswith("Assume the role of an expert email summariser")


def test_render_summary_classification_embeds_summary():
    messages = render_summary_classification("Marketing blast offering pills.")

    user = messages[1].content
    assert "###\nMarketing blast offering pills.\n###" in user
    assert 'classify it with a one-word answer, "spam" or "ham"' in user
    assert user.endswith("Answer:")


def test_render_summary_classification_empty_summary():
    messages = render_summary_classification("")

    assert "###\n\n###" in messages[1].content
    assert _delimiter_lines(messages[1].content) == 2


def test_render_summary_classification_rejects_delimiter():
    with pytest.raises(UnsanitizedContent):
        render_summary_classification("sneaky ### summary")


def test_rendering_is_deterministic():
    first = render_raw_classification(LUNCH)
    second = render_raw_classification(LUNCH)

    assert [m.content for m in first] == [m.content for m in second]


def test_email_block_layout():
    assert email_block(LUNCH) == "[SUBJECT] Team lunch\n[BODY] Lunch is moved to Friday at noon. Bring {snacks}!"


# ============================================================================
# PromptKit Tests
# ============================================================================

def test_get_prompt_kit_is_shared():
    assert get_prompt_kit() is get_prompt_kit()
    assert get_prompt_kit().prompt_dir == DEFAULT_PROMPT_DIR


def test_prompt_kit_custom_directory(tmp_path):
    """Verify an alternative template directory is loaded and changes the digest."""
    shutil.copytree(DEFAULT_PROMPT_DIR, tmp_path, dirs_exist_ok=True)
    (tmp_path / "raw_classify.system.txt").write_text("You sort mail.\n", encoding="utf-8")

    kit = PromptKit(tmp_path)

    assert kit.render_raw_classification(LUNCH)[0].content == "You sort mail."
    assert kit.digest != get_prompt_kit().digest


def test_prompt_kit_missing_template(tmp_path):
    shutil.copytree(DEFAULT_PROMPT_DIR, tmp_path, dirs_exist_ok=True)
    (tmp_path / "summarize.task.txt").unlink()

    with pytest.raises(TemplateError, match="not found"):
        PromptKit(tmp_path)


@pytest.mark.parametrize("task", [
    "Classify.\n\n###\n###\n\nAnswer:",
    "Classify.\n\n###\n{email}\n{email}\n###\n\nAnswer:",
    "Classify.\n\n{email}\n\nAnswer:",
    "Classify.\n\n###\nEmail: {email}\n###\n\nAnswer:",
])
def test_prompt_kit_rejects_malformed_task(tmp_path, task):
    """Verify the slot must appear once, alone on its line, between '###' lines."""
    shutil.copytree(DEFAULT_PROMPT_DIR, tmp_path, dirs_exist_ok=True)
    (tmp_path / "raw_classify.task.txt").write_text(task, encoding="utf-8")

    with pytest.raises(TemplateError):
        PromptKit(tmp_path)
