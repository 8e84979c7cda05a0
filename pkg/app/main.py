import argparse
import logging
import os
import re
import sys

from pathlib import Path

from rich.console import Console

from .commands import COMMANDS
from .config import DEFAULT_WORKDIR, ConfigError
from .services.corpus import CorpusError
from .services.llm import BackendError
from .services.metrics import MetricsError
from .services.pipeline import StoreError, UnknownRun
from .services.prompts import PromptError

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
NOISY_LOGGERS = ("httpx", "httpcore")

EXIT_RUNTIME_ERROR = 1
EXIT_USAGE_ERROR = 2

# usage errors win when an exception is both (UnknownRun is a StoreError)
_USAGE_ERRORS = (ConfigError, UnknownRun, CorpusError, PromptError, ValueError)
_RUNTIME_ERRORS = (BackendError, StoreError, MetricsError, OSError)


class _SensitiveHeaderFilter(logging.Filter):
    """Redact sensitive HTTP headers (e.g. Authorization, X-Api-Key) from log messages.

    Attached to root logger handlers so it intercepts records propagated from
    any child logger (e.g. httpcore.http11) that may emit raw request headers
    carrying a backend API key at DEBUG level.
    """
    _HEADER_PATTERNS = [
        re.compile(
            r"""([(\[{,]?\s*b?['"]Authorization['"]\s*[:,]\s*b?['"])(.*?)(['"])""",
            re.IGNORECASE,
        ),
        re.compile(
            r"""([(\[{,]?\s*b?['"]X-Api-Key['"]\s*[:,]\s*b?['"])(.*?)(['"])""",
            re.IGNORECASE,
        ),
        re.compile(
            r"""(Authorization:\s*)(Bearer\s+)?\S+""",
            re.IGNORECASE,
        ),
    ]

    def filter(self, record: logging.LogRecord) -> bool:
        if record.args:
            record.msg = record.getMessage()
            record.args = None
        msg = record.msg
        if isinstance(msg, str) and ("authorization" in msg.lower() or "x-api-key" in msg.lower()):
            for pattern in self._HEADER_PATTERNS:
                msg = pattern.sub(r"\1[REDACTED]\3" if pattern.groups >= 3 else r"\1[REDACTED]", msg)
            record.msg = msg
        return True


def configure_logging(level: str | None = None) -> None:
    """
    Sets up root logging once per process.

    The level comes from `level`, else $LOG_LEVEL, else INFO. httpx and httpcore
    stay at WARNING unless the level is DEBUG.
    """
    level = (level or os.environ.get('LOG_LEVEL', 'INFO')).upper()
    logging.basicConfig(level=level, format=LOG_FORMAT)
    root = logging.getLogger()
    root.setLevel(level)

    sensitive_filter = _SensitiveHeaderFilter()
    for handler in root.handlers:
        if not any(isinstance(f, _SensitiveHeaderFilter) for f in handler.filters):
            handler.addFilter(sensitive_filter)

    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(logging.DEBUG if level == "DEBUG" else logging.WARNING)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spameval",
        description="Zero-shot spam classification with chat-completion models on the SpamAssassin corpus",
    )
    parser.add_argument("--workdir", type=Path, default=Path(DEFAULT_WORKDIR),
                        help=f"Workspace for corpus, cache and runs (default: {DEFAULT_WORKDIR})")
    parser.add_argument("--config", type=Path, help="Backend configuration file (default: $SPAMEVAL_CONFIG or ./backends.yaml)")
    parser.add_argument("--log-level", help="Logging level (default: $LOG_LEVEL or INFO)")

    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def exit_code_for(error: Exception) -> int:
    return EXIT_USAGE_ERROR if isinstance(error, _USAGE_ERRORS) else EXIT_RUNTIME_ERROR


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    console = Console()

    try:
        return args.handler(args, console)
    except (*_USAGE_ERRORS, *_RUNTIME_ERRORS) as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)
    except KeyboardInterrupt:
        print("error: interrupted; re-run the same command to resume", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    except Exception as e:
        logging.error(f"Unexpected failure: {e}", exc_info=True)
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
