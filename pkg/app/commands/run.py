import argparse
import asyncio
import hashlib
import json
import logging
import random
import shutil

from pathlib import Path

import httpx

from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from ..config import FileConfig, RunConfig, build_run_config, load_config_file, resolve_config_path
from ..services.content import Estimator
from ..services.corpus import EmailContent
from ..services.llm import BackendConfig, ChatBackend, UsageTotals, create_backend, resolve_backend, usage_report
from ..services.pipeline import CompletionCache, PredictionSet, RunStore, Scenario, run_scenario
from ..services.prompts import get_prompt_kit
from .ingest import load_ingested, read_manifest

RUN_ID_LENGTH = 16
# settings that cannot change a prediction
_NON_SEMANTIC_RUN_FIELDS = {"cache_dir", "store_dir", "concurrency", "prompt_dir"}
_NON_SEMANTIC_BACKEND_FIELDS = {"timeout", "max_retries", "rate_limit", "api_key_env"}


class RunResult(BaseModel):
    run_id: str
    prediction_sets: list[PredictionSet]
    usage: dict[str, UsageTotals]
    cache_hits: int
    cache_misses: int


def sample_corpus(corpus: list[EmailContent], limit: int | None, seed: int) -> list[EmailContent]:
    """A seeded uniform sample of `limit` emails, kept in corpus order; the whole corpus without a limit."""
    if limit is None or limit >= len(corpus):
        return list(corpus)
    chosen = set(random.Random(seed).sample(range(len(corpus)), limit))
    return [content for index, content in enumerate(corpus) if index in chosen]


def compute_run_id(
    config: RunConfig,
    backend_configs: list[BackendConfig],
    summarizer_config: BackendConfig | None,
    prompt_digest: str,
    email_ids: list[str],
) -> str:
    """
    Derives a run id from everything that determines the run's predictions.

    Filesystem locations, concurrency and retry settings are left out, so the same
    command in another workspace yields the same id.
    """
    identity = {
        "config": config.model_dump(mode="json", exclude=_NON_SEMANTIC_RUN_FIELDS),
        "backends": [cfg.model_dump(mode="json", exclude=_NON_SEMANTIC_BACKEND_FIELDS) for cfg in backend_configs],
        "summarizer": summarizer_config.model_dump(mode="json", exclude=_NON_SEMANTIC_BACKEND_FIELDS) if summarizer_config else None,
        "prompt_digest": prompt_digest,
        "email_ids": email_ids,
    }
    canonical = json.dumps(identity, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:RUN_ID_LENGTH]


def _usage_by_backend(prediction_sets: list[PredictionSet], backends: list[ChatBackend],
                      summarizer: ChatBackend | None) -> dict[str, UsageTotals]:
    """
    Token usage per classifier taken from its predictions, with request counts and
    latency from the calls made in this invocation. The summarizer is listed under
    "summarizer:<backend_id>" with the tokens recorded once per summarized email, so
    resumed and cached runs report the full cost.
    """
    usage = {}
    for pset, backend in zip(prediction_sets, backends):
        live = usage_report(backend.exchanges)
        usage[backend.backend_id] = UsageTotals(
            prompt_tokens=sum(p.prompt_tokens for p in pset.predictions),
            completion_tokens=sum(p.completion_tokens for p in pset.predictions),
            requests=live.requests,
            wall_time_ms=live.wall_time_ms,
            failed_requests=sum(1 for p in pset.predictions if p.failed),
        )
    if summarizer is not None and prediction_sets:
        live = usage_report(summarizer.exchanges)
        per_email = {p.email_id: p for p in prediction_sets[0].predictions}
        usage[f"summarizer:{summarizer.backend_id}"] = live.model_copy(update={
            "prompt_tokens": sum(p.summary_prompt_tokens for p in per_email.values()),
            "completion_tokens": sum(p.summary_completion_tokens for p in per_email.values()),
        })
    return usage


async def _execute(
    config: RunConfig,
    corpus: list[EmailContent],
    backend_configs: list[BackendConfig],
    summarizer_config: BackendConfig | None,
    run_id: str,
    transport: httpx.AsyncBaseTransport | None,
) -> RunResult:
    cache = CompletionCache(config.cache_dir)
    store = RunStore(config.store_dir)
    prompts = get_prompt_kit(str(config.prompt_dir) if config.prompt_dir else None)

    backends = [create_backend(cfg, transport=transport) for cfg in backend_configs]
    summarizer = create_backend(summarizer_config, transport=transport) if summarizer_config else None
    try:
        prediction_sets = await run_scenario(
            corpus,
            config.scenario,
            backends,
            config.policy,
            cache,
            store,
            run_id,
            summarizer=summarizer,
            concurrency=config.concurrency,
            prompts=prompts,
        )
    finally:
        for backend in backends + ([summarizer] if summarizer else []):
            await backend.aclose()

    return RunResult(
        run_id=run_id,
        prediction_sets=prediction_sets,
        usage=_usage_by_backend(prediction_sets, backends, summarizer),
        cache_hits=cache.hits,
        cache_misses=cache.misses,
    )


def cmd_run(
    config: RunConfig,
    file_config: FileConfig,
    workdir: Path | str,
    fresh: bool = False,
    transport: httpx.AsyncBaseTransport | None = None,
) -> RunResult:
    """
    Runs one scenario over the ingested corpus and records it under its run id.

    Re-running the same configuration resumes the stored run; `fresh` discards the
    stored predictions first (the completion cache is kept).

    Args:
        config: The effective run configuration.
        file_config: Backends declared in the configuration file.
        workdir: The workspace holding the ingested corpus.
        fresh: Start the run over instead of resuming it.
        transport: Optional httpx transport for remote backends.

    Returns:
        The run id, its prediction sets, usage totals and cache statistics.

    Raises:
        NotIngested: If the workspace has no corpus.
        BackendConfigError: If a backend id is not configured.
        AuthError: If a backend rejects its credentials.
        StoreError: If predictions cannot be persisted.
    """
    workdir = Path(workdir)
    config = config.with_workdir(workdir)
    manifest = read_manifest(workdir)

    corpus = sample_corpus(load_ingested(workdir), config.limit, config.seed)
    if not corpus:
        raise ValueError(f"The corpus in '{workdir}' is empty")

    backend_ids = list(dict.fromkeys(config.backends))
    backend_configs = [resolve_backend(file_config.backends, backend_id) for backend_id in backend_ids]
    summarizer_config = None
    if config.scenario == Scenario.SUMMARY:
        summarizer_config = resolve_backend(file_config.backends, config.summarizer_backend)

    prompts = get_prompt_kit(str(config.prompt_dir) if config.prompt_dir else None)
    email_ids = [content.id for content in corpus]
    run_id = compute_run_id(config, backend_configs, summarizer_config, prompts.digest, email_ids)

    store = RunStore(config.store_dir)
    if fresh and store.run_dir(run_id).is_dir():
        logging.info(f"Discarding stored predictions of run {run_id}")
        shutil.rmtree(store.run_dir(run_id))

    logging.info(f"Run {run_id}: {config.scenario.value} scenario, {len(corpus)} of {manifest.total} emails, "
                 f"backends {', '.join(backend_ids)}")

    run_manifest = {
        "run_id": run_id,
        "status": "running",
        "scenario": config.scenario.value,
        "backends": backend_ids,
        "summarizer": config.summarizer_backend if summarizer_config else None,
        "config": config.model_dump(mode="json"),
        "policy": {
            "budget": config.budget,
            "estimator": config.estimator.value,
            "prompt_digest": prompts.digest,
        },
        "corpus_digest": manifest.corpus_digest,
        "sample_size": len(corpus),
        "email_ids": email_ids,
    }
    # an aborted run keeps this manifest with status "running"
    store.write_manifest(run_id, run_manifest)

    result = asyncio.run(_execute(config, corpus, backend_configs, summarizer_config, run_id, transport))

    store.write_manifest(run_id, {
        **run_manifest,
        "status": "complete",
        "usage": {backend_id: totals.model_dump(mode="json") for backend_id, totals in result.usage.items()},
        "cache": {"hits": result.cache_hits, "misses": result.cache_misses},
    })

    return result


def print_result(result: RunResult, console: Console) -> None:
    console.print(f"[bold]run_id[/bold] {result.run_id}")

    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Backend")
    table.add_column("Requests", justify="right")
    table.add_column("Prompt tok", justify="right")
    table.add_column("Completion tok", justify="right")
    table.add_column("Failed", justify="right")
    table.add_column("Mean latency (ms)", justify="right")
    for backend_id, totals in result.usage.items():
        table.add_row(
            backend_id,
            str(totals.requests),
            str(totals.prompt_tokens),
            str(totals.completion_tokens),
            str(totals.failed_requests),
            f"{totals.mean_latency_ms:.1f}",
        )
    console.print(table)
    console.print(f"cache: {result.cache_hits} hits, {result.cache_misses} misses")


def handle(args: argparse.Namespace, console: Console) -> int:
    file_config = load_config_file(resolve_config_path(args.config))
    config = build_run_config(
        {
            "scenario": args.scenario,
            "backends": args.backend,
            "summarizer_backend": args.summarizer,
            "budget": args.budget,
            "estimator": args.estimator,
            "concurrency": args.concurrency,
            "limit": args.limit,
            "seed": args.seed,
            "cache_dir": args.cache_dir,
            "store_dir": args.store_dir,
            "prompt_dir": args.prompt_dir,
        },
        file_config.run,
    )
    result = cmd_run(config, file_config, args.workdir, fresh=args.fresh)
    print_result(result, console)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="Classify the ingested corpus with one or more backends")
    parser.add_argument("--scenario", choices=[s.value for s in Scenario], help="raw (default) or summary")
    parser.add_argument("--backend", action="append", help="Classifier backend id; repeat for several")
    parser.add_argument("--summarizer", help="Summarizer backend id (summary scenario)")
    parser.add_argument("--budget", type=int, help="Token budget for subject and body")
    parser.add_argument("--estimator", choices=[e.value for e in Estimator], help="Token estimator")
    parser.add_argument("--concurrency", type=int, help="Requests in flight (default: 4)")
    parser.add_argument("--limit", type=int, help="Classify a seeded sample of this many emails")
    parser.add_argument("--seed", type=int, help="Sampling seed (default: 0)")
    parser.add_argument("--cache-dir", type=Path, help="Completion cache (default: <workdir>/cache)")
    parser.add_argument("--store-dir", type=Path, help="Run store (default: <workdir>/runs)")
    parser.add_argument("--prompt-dir", type=Path, help="Directory with prompt templates")
    parser.add_argument("--fresh", action="store_true", help="Discard stored predictions of this run first")
    parser.set_defaults(handler=handle)
