import argparse
import hashlib
import json
import logging

from collections import Counter
from pathlib import Path

from pydantic import BaseModel, ValidationError
from rich.console import Console
from rich.table import Table

from ..services.corpus import Category, CorpusError, EmailContent, Label, gold_labels, load_corpus

CORPUS_FILE = "corpus.jsonl"
MANIFEST_FILE = "manifest.json"


class NotIngested(CorpusError):
    """Raised when a workspace has no ingested corpus."""
    pass


class CorpusManifest(BaseModel):
    """Summary of an ingested corpus."""
    corpus_root: str
    total: int
    categories: dict[str, int]
    spam: int
    ham: int
    spam_ratio: float
    parse_warnings: int
    skipped_files: int
    corpus_digest: str


def corpus_digest(emails: list[EmailContent]) -> str:
    """sha256 over the ordered email ids."""
    sha = hashlib.sha256()
    for content in emails:
        sha.update(content.id.encode("ascii"))
        sha.update(b"\n")
    return sha.hexdigest()


def build_manifest(corpus_root: Path | str, emails: list[EmailContent], skipped_files: int = 0) -> CorpusManifest:
    counts = Counter(content.category.value for content in emails)
    spam = sum(1 for content in emails if content.gold_label == Label.SPAM)
    return CorpusManifest(
        corpus_root=Path(corpus_root).as_posix(),
        total=len(emails),
        categories={category.value: counts.get(category.value, 0) for category in Category},
        spam=spam,
        ham=len(emails) - spam,
        spam_ratio=spam / len(emails) if emails else 0.0,
        parse_warnings=sum(1 for content in emails if content.parse_warning),
        skipped_files=skipped_files,
        corpus_digest=corpus_digest(emails),
    )


def cmd_ingest(corpus_root: Path | str, workdir: Path | str, workers: int = 1) -> CorpusManifest:
    """
    Parses the corpus and writes `corpus.jsonl` and `manifest.json` into the workspace.

    Args:
        corpus_root: The SpamAssassin tree with its category directories.
        workdir: The workspace directory, created when missing.
        workers: Threads used for parsing.

    Returns:
        The manifest that was written.

    Raises:
        MissingRoot: If corpus_root does not exist.
        NoCategories: If it holds no category directory.
    """
    workdir = Path(workdir)
    skipped: list[Path] = []
    emails = load_corpus(corpus_root, workers=workers, skipped=skipped)
    gold_labels(emails)

    workdir.mkdir(parents=True, exist_ok=True)
    with open(workdir / CORPUS_FILE, "w", encoding="utf-8") as f:
        for content in emails:
            f.write(content.model_dump_json() + "\n")

    manifest = build_manifest(corpus_root, emails, skipped_files=len(skipped))
    (workdir / MANIFEST_FILE).write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")

    logging.info(f"Ingested {manifest.total} messages into {workdir} (spam ratio {manifest.spam_ratio:.4f})")
    return manifest


def load_ingested(workdir: Path | str) -> list[EmailContent]:
    """
    Reads the email records written by cmd_ingest, in corpus order.

    Raises:
        NotIngested: If the workspace has no corpus, or the corpus file is unreadable.
    """
    path = Path(workdir) / CORPUS_FILE
    if not path.is_file():
        raise NotIngested(f"No ingested corpus in '{workdir}'; run 'ingest' first")

    try:
        with open(path, encoding="utf-8") as f:
            return [EmailContent.model_validate_json(line) for line in f if line.strip()]
    except (OSError, ValidationError) as e:
        raise NotIngested(f"Corpus file '{path}' is unreadable: {e}")


def read_manifest(workdir: Path | str) -> CorpusManifest:
    path = Path(workdir) / MANIFEST_FILE
    if not path.is_file():
        raise NotIngested(f"No corpus manifest in '{workdir}'; run 'ingest' first")
    return CorpusManifest.model_validate(json.loads(path.read_text(encoding="utf-8")))


def print_manifest(manifest: CorpusManifest, console: Console) -> None:
    table = Table(title=f"Corpus {manifest.corpus_root}", show_header=True, header_style="bold cyan")
    table.add_column("Category")
    table.add_column("Messages", justify="right")
    for category, count in manifest.categories.items():
        table.add_row(category, str(count))
    table.add_row("[bold]total[/bold]", f"[bold]{manifest.total}[/bold]")
    console.print(table)
    console.print(
        f"spam {manifest.spam} / ham {manifest.ham} (ratio {manifest.spam_ratio:.4f}), "
        f"{manifest.parse_warnings} parse warnings, {manifest.skipped_files} skipped files"
    )


def handle(args: argparse.Namespace, console: Console) -> int:
    manifest = cmd_ingest(args.corpus_root, args.workdir, workers=args.workers)
    print_manifest(manifest, console)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("ingest", help="Parse a SpamAssassin corpus into the workspace")
    parser.add_argument("corpus_root", type=Path, help="Directory holding spam/, spam_2/, easy_ham/, ... folders")
    parser.add_argument("--workers", type=int, default=1, help="Parser threads (default: 1)")
    parser.set_defaults(handler=handle)
