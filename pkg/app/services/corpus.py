"""Scan a SpamAssassin corpus tree and parse its messages into labeled records."""

import email
import hashlib
import logging
import re

from concurrent.futures import ThreadPoolExecutor
from email import policy
from email.errors import HeaderParseError
from email.header import decode_header, make_header
from email.message import Message
from enum import Enum
from pathlib import Path

from bs4 import BeautifulSoup
from pydantic import BaseModel, ConfigDict, field_validator

SKIPPED_FILE_NAMES = {"cmds"}


class Category(str, Enum):
    """SpamAssassin corpus directories."""
    SPAM = "spam"
    SPAM_2 = "spam_2"
    EASY_HAM = "easy_ham"
    EASY_HAM_2 = "easy_ham_2"
    HARD_HAM = "hard_ham"


class Label(str, Enum):
    """Class labels. Gold labels are always SPAM or HAM."""
    SPAM = "spam"
    HAM = "ham"
    UNPARSEABLE = "unparseable"


SPAM_CATEGORIES = {Category.SPAM, Category.SPAM_2}
CATEGORY_NAMES = {category.value for category in Category}


class CorpusError(Exception):
    """Base class for corpus ingestion errors."""
    pass


class MissingRoot(CorpusError):
    """Raised when the corpus root directory does not exist."""
    pass


class NoCategories(CorpusError):
    """Raised when the corpus root holds no recognized category directory."""
    pass


class UnknownCategory(CorpusError):
    """Raised when a category name is outside the closed set."""
    pass


class RawMessage(BaseModel):
    """One raw message file as found on disk."""
    model_config = ConfigDict(frozen=True)

    source_path: Path
    category: Category
    raw: bytes

    @field_validator("raw")
    @classmethod
    def _non_empty(cls, value: bytes) -> bytes:
        if not value:
            raise ValueError("raw message bytes must not be empty")
        return value


class EmailContent(BaseModel):
    """A parsed, labeled corpus message."""
    model_config = ConfigDict(frozen=True)

    id: str
    category: Category
    source_path: str
    subject: str
    body: str
    gold_label: Label
    parse_warning: bool = False


def label_from_category(category: Category | str) -> Label:
    """
    Maps a corpus category to its gold label.

    Raises:
        UnknownCategory: If the category is not one of the SpamAssassin directories.
    """
    try:
        category = Category(category)
    except ValueError:
        raise UnknownCategory(f"Unknown corpus category '{category}'")

    return Label.SPAM if category in SPAM_CATEGORIES else Label.HAM


def scan_corpus(root_dir: Path | str, skipped: list[Path] | None = None) -> list[RawMessage]:
    """
    Lists every message file under the recognized category directories.

    Files are returned in lexicographic order of their path relative to the root,
    so two scans of the same tree always agree. Files named `cmds` and dotfiles
    are ignored; zero-byte files are left out and appended to `skipped`.

    Args:
        root_dir: The corpus root holding `spam/`, `easy_ham/`, ... directories.
        skipped: Optional list collecting the paths of empty files.

    Returns:
        The raw messages in scan order.

    Raises:
        MissingRoot: If root_dir does not exist.
        NoCategories: If no recognized category directory is present.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise MissingRoot(f"Corpus root '{root}' does not exist")

    category_dirs = [d for d in root.iterdir() if d.is_dir() and d.name in CATEGORY_NAMES]
    if not category_dirs:
        raise NoCategories(f"No category directory ({', '.join(sorted(CATEGORY_NAMES))}) found under '{root}'")

    paths = []
    for category_dir in category_dirs:
        for path in category_dir.iterdir():
            if path.name in SKIPPED_FILE_NAMES or path.name.startswith("."):
                continue
            if path.is_file():
                paths.append(path)

    paths.sort(key=lambda p: p.relative_to(root).as_posix())

    messages = []
    for path in paths:
        raw = path.read_bytes()
        if not raw:
            logging.warning(f"Skipping empty message file {path}")
            if skipped is not None:
                skipped.append(path)
            continue
        messages.append(RawMessage(source_path=path, category=Category(path.parent.name), raw=raw))

    logging.debug(f"Scanned {len(messages)} messages under {root}")

    return messages


def parse_message(msg: RawMessage) -> EmailContent:
    """
    Extracts the subject and body text of a raw message.

    Never fails on message content: undecodable bytes become U+FFFD, and a message
    the parser cannot handle keeps an empty subject and its raw payload as body,
    flagged with parse_warning.
    """
    subject = ""
    parse_warning = False
    try:
        parsed = email.message_from_bytes(msg.raw, policy=policy.compat32)
        subject = _decode_subject(parsed.get("Subject"))
        body = _select_body(parsed, msg.raw)
    except Exception as e:
        logging.warning(f"Could not parse {msg.source_path}, falling back to raw payload: {e}")
        subject = ""
        body = _decode_bytes(_raw_body(msg.raw), None)
        parse_warning = True

    return EmailContent(
        id=hashlib.sha256(msg.raw).hexdigest(),
        category=msg.category,
        source_path=msg.source_path.as_posix(),
        subject=subject,
        body=body,
        gold_label=label_from_category(msg.category),
        parse_warning=parse_warning,
    )


def load_corpus(root_dir: Path | str, workers: int = 1, skipped: list[Path] | None = None) -> list[EmailContent]:
    """Scans and parses a corpus; parsing may run on a thread pool, scan order is kept."""
    messages = scan_corpus(root_dir, skipped=skipped)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            contents = list(pool.map(parse_message, messages))
    else:
        contents = [parse_message(msg) for msg in messages]

    warnings = sum(1 for content in contents if content.parse_warning)
    logging.info(f"Loaded {len(contents)} messages from {root_dir} ({warnings} parse warnings)")

    return contents


def gold_labels(contents: list[EmailContent]) -> dict[str, Label]:
    """
    Maps email ids to gold labels.

    Identical files share an id; when copies sit in categories with different
    labels the first one in scan order is kept and the conflict is logged.
    """
    gold: dict[str, Label] = {}
    for content in contents:
        known = gold.setdefault(content.id, content.gold_label)
        if known != content.gold_label:
            logging.warning(
                f"Email {content.id[:12]} ({content.source_path}) is filed as {content.gold_label.value} "
                f"but an identical copy is {known.value}; scoring it as {known.value}"
            )
    return gold


def _decode_bytes(data: bytes, charset: str | None) -> str:
    """Decodes with the declared charset when it is valid for the data, else UTF-8 lossily."""
    if charset:
        try:
            return data.decode(charset)
        except (LookupError, UnicodeDecodeError):
            pass
    return data.decode("utf-8", errors="replace")


def _scrub_surrogates(text: str) -> str:
    """Turns surrogate-escaped raw bytes left by the parser into real text."""
    try:
        return text.encode("utf-8", errors="surrogateescape").decode("utf-8", errors="replace")
    except UnicodeEncodeError:
        return text.encode("utf-8", errors="replace").decode("utf-8")


def _decode_subject(value) -> str:
    if value is None:
        return ""

    text = str(value)
    try:
        subject = str(make_header(decode_header(text)))
    except (HeaderParseError, LookupError, UnicodeDecodeError):
        chunks = []
        for chunk, charset in decode_header(text):
            chunks.append(_decode_bytes(chunk, charset) if isinstance(chunk, bytes) else chunk)
        subject = "".join(chunks)

    # unfold continuation lines
    subject = re.sub(r"\s*\r?\n\s*", " ", subject)
    return _scrub_surrogates(subject).strip()


def _part_text(part: Message) -> str:
    payload = part.get_payload(decode=True)
    if payload is None:
        return ""
    return _decode_bytes(payload, part.get_content_charset())


def _html_to_text(html: str) -> str:
    soup = BeautifulSoup(html, "html.parser")
    for tag in soup(["script", "style"]):
        tag.decompose()
    return re.sub(r"\s+", " ", soup.get_text(" ")).strip()


def _raw_body(raw: bytes) -> bytes:
    """Everything after the header/body separator, or the whole message if there is none."""
    match = re.search(rb"\r?\n\r?\n", raw)
    return raw[match.end():] if match else raw


def _select_body(parsed: Message, raw: bytes) -> str:
    """
    Picks the body text: first text/plain part, else the first text/html part
    stripped to plain text, else the raw payload.
    """
    if parsed.is_multipart():
        parts = [part for part in parsed.walk() if not part.is_multipart()]
    else:
        parts = [parsed]

    parts = [part for part in parts if part.get_content_disposition() != "attachment"]

    plain = next((part for part in parts if part.get_content_type() == "text/plain"), None)
    if plain is not None:
        return _part_text(plain)

    html = next((part for part in parts if part.get_content_type() == "text/html"), None)
    if html is not None:
        return _html_to_text(_part_text(html))

    return _decode_bytes(_raw_body(raw), None)
