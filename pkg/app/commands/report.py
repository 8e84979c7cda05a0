import argparse
import logging

from pathlib import Path

from rich.console import Console

from ..services.corpus import Label, gold_labels
from ..services.metrics import MetricsRow, metrics_row
from ..services.pipeline import PolicySnapshot, PredictionSet, RunStore, Scenario
from ..services.report import ReportFormat, ReportMeta, report
from .ingest import load_ingested


def load_prediction_sets(store: RunStore, run_id: str) -> list[PredictionSet]:
    """
    Rebuilds the prediction sets of a stored run, one per backend in run order,
    with predictions in the order of the run's email ids.

    Raises:
        UnknownRun: If the run has no manifest.
    """
    manifest = store.read_manifest(run_id)
    scenario = Scenario(manifest["scenario"])
    policy = PolicySnapshot(**manifest["policy"])

    stored = {}
    for prediction in store.load(run_id):
        stored.setdefault(prediction.key, prediction)

    if manifest.get("status") != "complete":
        logging.warning(f"Run {run_id} did not complete; reporting the predictions stored so far")

    prediction_sets = []
    for backend_id in manifest["backends"]:
        predictions = [
            stored[key]
            for key in ((email_id, backend_id, scenario.value) for email_id in manifest["email_ids"])
            if key in stored
        ]
        prediction_sets.append(PredictionSet(
            run_id=run_id,
            scenario=scenario,
            backend_id=backend_id,
            predictions=predictions,
            policy=policy,
        ))
    return prediction_sets


def cmd_report(
    run_ids: list[str],
    workdir: Path | str,
    fmt: ReportFormat | str = ReportFormat.MARKDOWN,
    out: Path | str | None = None,
    store_dir: Path | str | None = None,
) -> str:
    """
    Merges stored runs into one report.

    Args:
        run_ids: Runs to report, rows follow this order.
        workdir: The workspace with the ingested corpus (gold labels).
        fmt: md, csv or jsonl.
        out: When given, the report is also written to this file.
        store_dir: The run store; <workdir>/runs by default.

    Returns:
        The rendered report.

    Raises:
        UnknownRun: If a run id is not in the store.
        MissingGold: If a prediction's email is not in the ingested corpus.
    """
    workdir = Path(workdir)
    store = RunStore(store_dir or workdir / "runs")
    gold: dict[str, Label] = gold_labels(load_ingested(workdir))

    rows: list[MetricsRow] = []
    policies: list[PolicySnapshot] = []
    for run_id in run_ids:
        for pset in load_prediction_sets(store, run_id):
            rows.append(metrics_row(pset, gold))
            policies.append(pset.policy)

    meta = ReportMeta()
    if policies:
        if len({(p.budget, p.estimator) for p in policies}) > 1:
            logging.warning("Reported runs use different truncation policies; the first one is shown")
        meta = ReportMeta(budget=policies[0].budget, estimator=policies[0].estimator)

    document = report(rows, fmt, meta)

    if out:
        Path(out).write_text(document, encoding="utf-8")
        logging.info(f"Report written to {out}")

    return document


def handle(args: argparse.Namespace, console: Console) -> int:
    document = cmd_report(args.run_ids, args.workdir, fmt=args.format, out=args.out, store_dir=args.store_dir)
    if not args.out:
        print(document, end="")
    else:
        console.print(f"Report written to {args.out}")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("report", help="Compute metrics for stored runs")
    parser.add_argument("run_ids", nargs="+", help="Run ids printed by 'run'")
    parser.add_argument("--format", choices=[f.value for f in ReportFormat], default=ReportFormat.MARKDOWN.value,
                        help="Output format (default: md)")
    parser.add_argument("--out", type=Path, help="Write the report to this file")
    parser.add_argument("--store-dir", type=Path, help="Run store (default: <workdir>/runs)")
    parser.set_defaults(handler=handle)
