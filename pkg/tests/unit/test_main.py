import logging
import pytest

from app.main import EXIT_RUNTIME_ERROR, EXIT_USAGE_ERROR, build_parser, configure_logging, exit_code_for, main
from app.services.llm import AuthError, BackendConfigError, ExhaustedRetries
from app.services.metrics import MissingGold
from app.services.pipeline import StoreError, UnknownRun


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("SPAMEVAL_CONFIG", raising=False)
    return tmp_path / "ws"


@pytest.mark.parametrize("error,code", [
    (BackendConfigError("Backend 'x' not configured"), EXIT_USAGE_ERROR),
    (UnknownRun("Run 'abc' not found"), EXIT_USAGE_ERROR),
    (ValueError("bad budget"), EXIT_USAGE_ERROR),
    (AuthError("401"), EXIT_RUNTIME_ERROR),
    (ExhaustedRetries("gave up"), EXIT_RUNTIME_ERROR),
    (StoreError("disk full"), EXIT_RUNTIME_ERROR),
    (MissingGold("e1"), EXIT_RUNTIME_ERROR),
])
def test_exit_code_for(error, code):
    assert exit_code_for(error) == code


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_main_missing_corpus_root(workdir, capsys):
    assert main(["--workdir", str(workdir), "ingest", str(workdir / "nowhere")]) == EXIT_USAGE_ERROR
    assert "does not exist" in capsys.readouterr().err


def test_main_run_before_ingest(workdir, capsys):
    assert main(["--workdir", str(workdir), "run"]) == EXIT_USAGE_ERROR
    assert "run 'ingest' first" in capsys.readouterr().err


def test_main_report_unknown_run(workdir, tmp_path):
    corpus = tmp_path / "corpus" / "spam"
    corpus.mkdir(parents=True)
    (corpus / "00001").write_text("Subject: hi\n\nclick here\n", encoding="utf-8")
    assert main(["--workdir", str(workdir), "ingest", str(tmp_path / "corpus")]) == 0

    assert main(["--workdir", str(workdir), "report", "0123456789abcdef"]) == EXIT_USAGE_ERROR


def test_main_unknown_backend(workdir, tmp_path):
    corpus = tmp_path / "corpus" / "easy_ham"
    corpus.mkdir(parents=True)
    (corpus / "00001").write_text("Subject: hi\n\nlunch?\n", encoding="utf-8")
    main(["--workdir", str(workdir), "ingest", str(tmp_path / "corpus")])

    assert main(["--workdir", str(workdir), "run", "--backend", "gpt4"]) == EXIT_USAGE_ERROR


def test_main_auth_error_exits_with_runtime_error(workdir, tmp_path, monkeypatch, capsys):
    """Verify a missing API key stops the run with exit code 1 and no request sent."""
    corpus = tmp_path / "corpus" / "easy_ham"
    corpus.mkdir(parents=True)
    (corpus / "00001").write_text("Subject: hi\n\nlunch?\n", encoding="utf-8")
    config = tmp_path / "backends.yaml"
    config.write_text(
        "backends:\n"
        "  remote:\n"
        "    endpoint_url: http://127.0.0.1:9/v1/chat/completions\n"
        "    model_name: some-model\n"
        "    api_key_env: SPAMEVAL_TEST_MISSING_KEY\n",
        encoding="utf-8",
    )
    monkeypatch.delenv("SPAMEVAL_TEST_MISSING_KEY", raising=False)
    main(["--workdir", str(workdir), "ingest", str(tmp_path / "corpus")])

    code = main(["--workdir", str(workdir), "--config", str(config), "run", "--backend", "remote"])

    assert code == EXIT_RUNTIME_ERROR
    assert "SPAMEVAL_TEST_MISSING_KEY" in capsys.readouterr().err


def test_configure_logging_quiets_http_loggers():
    configure_logging("INFO")

    assert logging.getLogger("httpx").level == logging.WARNING
    assert logging.getLogger("httpcore").level == logging.WARNING

    configure_logging("DEBUG")
    assert logging.getLogger("httpcore").level == logging.DEBUG
    configure_logging("WARNING")
