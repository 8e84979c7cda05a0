"""Prompt templates for zero-shot classification and summarization, and their rendering."""

import hashlib
import logging

from enum import Enum
from functools import lru_cache
from pathlib import Path

from langchain_core.messages import BaseMessage, HumanMessage, SystemMessage
from pydantic import BaseModel, ConfigDict

from .content import PreparedContent

DEFAULT_PROMPT_DIR = Path(__file__).resolve().parent.parent / "templates"
DELIMITER = "###"

ChatMessages = list[BaseMessage]


class PromptName(str, Enum):
    """The three prompt pairs."""
    RAW_CLASSIFY = "raw_classify"
    SUMMARIZE = "summarize"
    SUMMARY_CLASSIFY = "summary_classify"


SLOT_MARKERS = {
    PromptName.RAW_CLASSIFY: "{email}",
    PromptName.SUMMARIZE: "{email}",
    PromptName.SUMMARY_CLASSIFY: "{summary}",
}


class PromptError(Exception):
    """Base class for prompt errors."""
    pass


class UnsanitizedContent(PromptError):
    """Raised when content would break the '###' delimiters."""
    pass


class TemplateError(PromptError):
    """Raised when a template file is missing or malformed."""
    pass


class PromptBundle(BaseModel):
    """A system text and a task template with one slot."""
    model_config = ConfigDict(frozen=True)

    name: PromptName
    system_text: str
    task_template: str

    @property
    def slot(self) -> str:
        return SLOT_MARKERS[self.name]

    def render(self, slot_content: str) -> ChatMessages:
        if DELIMITER in slot_content:
            raise UnsanitizedContent(f"Content for '{self.name.value}' contains the '{DELIMITER}' delimiter")
        # plain replace: email text may contain braces
        task = self.task_template.replace(self.slot, slot_content)
        return [SystemMessage(content=self.system_text), HumanMessage(content=task)]


class PromptKit:
    """
    The three prompt bundles loaded from a template directory.

    Each bundle is stored as `<name>.system.txt` and `<name>.task.txt`; a trailing
    newline at the end of a file is ignored.
    """

    def __init__(self, prompt_dir: Path | str | None = None):
        self.prompt_dir = Path(prompt_dir) if prompt_dir else DEFAULT_PROMPT_DIR
        self.bundles = {name: self._load_bundle(name) for name in PromptName}
        self.digest = self._compute_digest()
        logging.debug(f"Loaded prompt templates from {self.prompt_dir} (digest {self.digest[:12]})")

    def _read(self, file_name: str) -> str:
        path = self.prompt_dir / file_name
        try:
            return path.read_text(encoding="utf-8").rstrip("\n")
        except FileNotFoundError:
            raise TemplateError(f"Prompt template '{path}' not found")

    def _load_bundle(self, name: PromptName) -> PromptBundle:
        system_text = self._read(f"{name.value}.system.txt")
        task_template = self._read(f"{name.value}.task.txt")

        slot = SLOT_MARKERS[name]
        if task_template.count(slot) != 1:
            raise TemplateError(f"Task template '{name.value}' must contain exactly one {slot} slot")

        lines = task_template.split("\n")
        slot_line = lines.index(slot) if slot in lines else -1
        if slot_line < 1 or slot_line + 1 >= len(lines) or lines[slot_line - 1] != DELIMITER or lines[slot_line + 1] != DELIMITER:
            raise TemplateError(f"Task template '{name.value}' must enclose {slot} between '{DELIMITER}' lines")

        return PromptBundle(name=name, system_text=system_text, task_template=task_template)

    def _compute_digest(self) -> str:
        sha = hashlib.sha256()
        for name in PromptName:
            bundle = self.bundles[name]
            for part in (name.value, bundle.system_text, bundle.task_template):
                sha.update(part.encode("utf-8"))
                sha.update(b"\0")
        return sha.hexdigest()

    def render_raw_classification(self, content: PreparedContent) -> ChatMessages:
        return self.bundles[PromptName.RAW_CLASSIFY].render(email_block(content))

    def render_summarization(self, content: PreparedContent) -> ChatMessages:
        return self.bundles[PromptName.SUMMARIZE].render(email_block(content))

    def render_summary_classification(self, summary: str) -> ChatMessages:
        return self.bundles[PromptName.SUMMARY_CLASSIFY].render(summary)


@lru_cache(maxsize=None)
def get_prompt_kit(prompt_dir: str | None = None) -> PromptKit:
    """Returns the shared PromptKit for a template directory (the bundled one by default)."""
    return PromptKit(prompt_dir)


def email_block(content: PreparedContent) -> str:
    """Lays out the tagged subject and body that fill the {email} slot."""
    return f"[SUBJECT] {content.subject}\n[BODY] {content.body}"


def render_raw_classification(content: PreparedContent) -> ChatMessages:
    """
    Renders the raw-content classification prompt.

    Raises:
        UnsanitizedContent: If subject or body contains '###'.
    """
    return get_prompt_kit().render_raw_classification(content)


def render_summarization(content: PreparedContent) -> ChatMessages:
    """
    Renders the summarization prompt for the same tagged subject/body block.

    Raises:
        UnsanitizedContent: If subject or body contains '###'.
    """
    return get_prompt_kit().render_summarization(content)


def render_summary_classification(summary: str) -> ChatMessages:
    """
    Renders the summary-based classification prompt.

    Raises:
        UnsanitizedContent: If the summary contains '###'.
    """
    return get_prompt_kit().render_summary_classification(summary)
