"""
End-to-end runs over the checked-in synthetic corpus with the mock backend.

The metrics are checked against a brute-force counter that reads the message
files directly and applies the mock's keyword rule, without going through
ingestion, prompts or the pipeline.
"""
import json
import pytest

from pathlib import Path
from unittest.mock import patch

from app.commands.ingest import cmd_ingest
from app.commands.report import cmd_report
from app.commands.run import cmd_run
from app.config import RunConfig, load_config_file
from app.main import main
from app.services.llm import MockChatBackend
from app.services.pipeline import RunStore, Scenario

SYNTHETIC_CORPUS = Path(__file__).resolve().parent.parent / "fixtures" / "synthetic_corpus"
KEYWORDS = ("viagra", "winner", "free money", "click here", "unsubscribe now")


def brute_force_counts(root: Path) -> dict[str, int]:
    counts = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    for path in sorted(root.glob("*/*")):
        text = path.read_text(encoding="utf-8").lower()
        predicted_spam = any(keyword in text for keyword in KEYWORDS)
        gold_spam = path.parent.name.startswith("spam")
        if predicted_spam and gold_spam:
            counts["tp"] += 1
        elif predicted_spam:
            counts["fp"] += 1
        elif gold_spam:
            counts["fn"] += 1
        else:
            counts["tn"] += 1
    return counts


def brute_force_metrics(counts: dict[str, int]) -> dict[str, float]:
    tp, fp, tn, fn = counts["tp"], counts["fp"], counts["tn"], counts["fn"]
    pr = tp / (tp + fp)
    re = tp / (tp + fn)
    return {
        "ac": (tp + tn) / (tp + fn + tn + fp),
        "ba": (tp / (tp + fn) + tn / (tn + fp)) / 2,
        "pr": pr,
        "re": re,
        "f1": 2 * pr * re / (pr + re),
    }


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("SPAMEVAL_CONFIG", raising=False)
    return tmp_path / "ws"


def _only_run_id(workdir: Path) -> str:
    run_ids = [d.name for d in (workdir / "runs").iterdir() if d.is_dir()]
    assert len(run_ids) == 1
    return run_ids[0]


def test_brute_force_counter_sees_planted_labels():
    assert brute_force_counts(SYNTHETIC_CORPUS) == {"tp": 18, "fp": 5, "tn": 30, "fn": 7}


def test_ingest_synthetic_corpus(workdir):
    manifest = cmd_ingest(SYNTHETIC_CORPUS, workdir)

    assert manifest.total == 60
    assert manifest.spam == 25
    assert manifest.categories["easy_ham"] == 25
    assert manifest.categories["hard_ham"] == 10
    assert manifest.parse_warnings == 0


def test_raw_metrics_equal_brute_force(workdir):
    """Verify all five metrics from the pipeline equal the brute-force computation exactly."""
    cmd_ingest(SYNTHETIC_CORPUS, workdir)
    result = cmd_run(RunConfig(), load_config_file(None), workdir)

    rows = [json.loads(line) for line in cmd_report([result.run_id], workdir, fmt="jsonl").splitlines()]
    expected = brute_force_metrics(brute_force_counts(SYNTHETIC_CORPUS))

    assert len(rows) == 1
    assert rows[0]["backend_id"] == "mock"
    assert rows[0]["coverage"] == 1.0
    assert rows[0]["sample_size"] == 60
    for metric, value in expected.items():
        assert rows[0][metric] == value, metric


def test_summary_loses_late_keyword(tmp_path, workdir):
    """Verify a keyword past the second sentence is caught on raw content but lost in the summary."""
    corpus = tmp_path / "corpus"
    (corpus / "spam").mkdir(parents=True)
    (corpus / "easy_ham").mkdir()
    (corpus / "spam" / "00001.late").write_text(
        "Subject: Hello again\n\nHope you are well. It has been a while. We have news. "
        "Click here to claim your reward.\n",
        encoding="utf-8",
    )
    (corpus / "easy_ham" / "00002.plain").write_text(
        "Subject: Lunch\n\nThai place today? I can book a table.\n",
        encoding="utf-8",
    )
    cmd_ingest(corpus, workdir)
    file_config = load_config_file(None)

    raw = cmd_run(RunConfig(), file_config, workdir)
    summary = cmd_run(RunConfig(scenario=Scenario.SUMMARY, summarizer_backend="mock"), file_config, workdir)

    assert raw.run_id != summary.run_id
    raw_labels = [p.label.value for p in raw.prediction_sets[0].predictions]
    summary_predictions = summary.prediction_sets[0].predictions
    assert raw_labels == ["ham", "spam"]
    assert [p.label.value for p in summary_predictions] == ["ham", "ham"]
    assert summary_predictions[1].summary_text == "Summary: Hope you are well. It has been a while."
    assert "summarizer:mock" in summary.usage


def test_cli_is_deterministic_and_resumable(workdir, capsys):
    """Verify ingest, run and report through the CLI, then a rerun and a fresh run that make no model calls."""
    assert main(["--workdir", str(workdir), "ingest", str(SYNTHETIC_CORPUS)]) == 0
    assert main(["--workdir", str(workdir), "run", "--backend", "mock"]) == 0
    run_id = _only_run_id(workdir)
    assert run_id in capsys.readouterr().out

    first = workdir / "first.md"
    assert main(["--workdir", str(workdir), "report", run_id, "--out", str(first)]) == 0

    with patch.object(MockChatBackend, "complete", side_effect=AssertionError("backend called")):
        assert main(["--workdir", str(workdir), "run", "--backend", "mock"]) == 0
        assert _only_run_id(workdir) == run_id

        assert main(["--workdir", str(workdir), "run", "--backend", "mock", "--fresh"]) == 0
        assert _only_run_id(workdir) == run_id

    store = RunStore(workdir / "runs")
    predictions = store.load(run_id)
    assert len(predictions) == 60
    assert all(p.cached for p in predictions)
    assert store.read_manifest(run_id)["status"] == "complete"

    second = workdir / "second.md"
    assert main(["--workdir", str(workdir), "report", run_id, "--out", str(second)]) == 0
    assert second.read_bytes() == first.read_bytes()

    csv_out = workdir / "report.csv"
    assert main(["--workdir", str(workdir), "report", run_id, "--format", "csv", "--out", str(csv_out)]) == 0
    assert csv_out.read_text(encoding="utf-8").splitlines()[0] == "model,scenario,ac,ba,pr,re,f1,coverage"


def test_cli_limit_samples_in_corpus_order(workdir):
    cmd_ingest(SYNTHETIC_CORPUS, workdir)

    first = cmd_run(RunConfig(limit=20, seed=7), load_config_file(None), workdir)
    again = cmd_run(RunConfig(limit=20, seed=7), load_config_file(None), workdir)
    other = cmd_run(RunConfig(limit=20, seed=8), load_config_file(None), workdir)

    ids = [p.email_id for p in first.prediction_sets[0].predictions]
    assert len(ids) == 20
    assert again.run_id == first.run_id
    assert other.run_id != first.run_id
    manifest = RunStore(workdir / "runs").read_manifest(first.run_id)
    assert manifest["email_ids"] == ids
    assert manifest["sample_size"] == 20
