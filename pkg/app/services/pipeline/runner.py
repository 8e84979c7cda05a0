"""
The two evaluation scenarios.

raw:     truncate -> classification prompt -> completion -> label
summary: truncate -> summarization prompt -> summary -> classification prompt -> label

Completions go through the CompletionCache, predictions are appended to the
RunStore as they are produced, and a rerun of the same run id skips every
(email, backend, scenario) already stored.
"""

import asyncio
import logging

from ..content import TruncationPolicy, sanitize_delimiters, truncate_body
from ..corpus import EmailContent, Label
from ..llm.base import AuthError, BackendError, ChatBackend
from ..prompts import PromptKit, get_prompt_kit
from .cache import CachedCompletion, CompletionCache
from .labels import parse_label
from .state import PolicySnapshot, Prediction, PredictionSet, Scenario
from .store import RunStore, StoreError

SUMMARY_MAX_TOKENS = 500
DEFAULT_CONCURRENCY = 4


def _error_note(error: Exception) -> str:
    return f"[error] {type(error).__name__}: {error}"


def _failed_prediction(email: EmailContent, scenario: Scenario, backend: ChatBackend, error: Exception,
                       summary_text: str | None = None) -> Prediction:
    logging.warning(f"Email {email.id[:12]} failed on '{backend.backend_id}' ({scenario.value}): {error}")
    return Prediction(
        email_id=email.id,
        scenario=scenario,
        backend_id=backend.backend_id,
        label=Label.UNPARSEABLE,
        raw_completion=_error_note(error),
        summary_text=summary_text,
        failed=True,
    )


async def classify_raw(
    email: EmailContent,
    backend: ChatBackend,
    policy: TruncationPolicy,
    cache: CompletionCache,
    prompts: PromptKit | None = None,
) -> Prediction:
    """
    Classifies the truncated subject and body of one email.

    A backend failure other than AuthError gives an unparseable prediction with
    failed set and the error recorded in raw_completion.

    Raises:
        AuthError: When the backend rejects its credentials.
    """
    prompts = prompts or get_prompt_kit()
    messages = prompts.render_raw_classification(truncate_body(email, policy))

    try:
        entry, cached = await cache.complete(backend, messages)
    except AuthError:
        raise
    except BackendError as e:
        return _failed_prediction(email, Scenario.RAW, backend, e)

    return Prediction(
        email_id=email.id,
        scenario=Scenario.RAW,
        backend_id=backend.backend_id,
        label=parse_label(entry.completion_text),
        raw_completion=entry.completion_text,
        prompt_tokens=entry.prompt_tokens,
        completion_tokens=entry.completion_tokens,
        cached=cached,
    )


async def summarize_email(
    email: EmailContent,
    backend: ChatBackend,
    policy: TruncationPolicy,
    cache: CompletionCache,
    prompts: PromptKit | None = None,
) -> CachedCompletion:
    """
    Produces the summary of one email with its token usage; '###' runs in the
    summary text are sanitized.

    Raises:
        BackendError: When the summarizer fails; callers decide how to degrade.
    """
    prompts = prompts or get_prompt_kit()
    messages = prompts.render_summarization(truncate_body(email, policy))
    entry, _ = await cache.complete(backend, messages, max_tokens=SUMMARY_MAX_TOKENS)
    return entry.model_copy(update={"completion_text": sanitize_delimiters(entry.completion_text)})


async def summarize(
    email: EmailContent,
    backend: ChatBackend,
    policy: TruncationPolicy,
    cache: CompletionCache,
    prompts: PromptKit | None = None,
) -> str:
    """Produces the sanitized summary text of one email."""
    return (await summarize_email(email, backend, policy, cache, prompts)).completion_text


async def classify_summary_text(
    email: EmailContent,
    summary: CachedCompletion,
    classifier: ChatBackend,
    cache: CompletionCache,
    prompts: PromptKit | None = None,
) -> Prediction:
    """
    Classifies an already produced summary.

    prompt_tokens and completion_tokens are the classifier's; the summarizer's
    usage is carried in summary_prompt_tokens and summary_completion_tokens.
    """
    prompts = prompts or get_prompt_kit()
    summary_text = sanitize_delimiters(summary.completion_text)
    messages = prompts.render_summary_classification(summary_text)
    summary_usage = {
        "summary_prompt_tokens": summary.prompt_tokens,
        "summary_completion_tokens": summary.completion_tokens,
    }

    try:
        entry, cached = await cache.complete(classifier, messages)
    except AuthError:
        raise
    except BackendError as e:
        failed = _failed_prediction(email, Scenario.SUMMARY, classifier, e, summary_text=summary_text)
        return failed.model_copy(update=summary_usage)

    return Prediction(
        email_id=email.id,
        scenario=Scenario.SUMMARY,
        backend_id=classifier.backend_id,
        label=parse_label(entry.completion_text),
        raw_completion=entry.completion_text,
        summary_text=summary_text,
        prompt_tokens=entry.prompt_tokens,
        completion_tokens=entry.completion_tokens,
        cached=cached,
        **summary_usage,
    )


async def classify_from_summary(
    email: EmailContent,
    summarizer: ChatBackend,
    classifier: ChatBackend,
    policy: TruncationPolicy,
    cache: CompletionCache,
    prompts: PromptKit | None = None,
) -> Prediction:
    """
    Summarizes one email with the summarizer, then classifies the summary.

    A failed summarization short-circuits to an unparseable prediction with an
    empty summary_text; the classifier is not called.
    """
    try:
        summary = await summarize_email(email, summarizer, policy, cache, prompts)
    except AuthError:
        raise
    except BackendError as e:
        return _failed_prediction(email, Scenario.SUMMARY, classifier, e, summary_text="")

    return await classify_summary_text(email, summary, classifier, cache, prompts)


async def run_scenario(
    corpus: list[EmailContent],
    scenario: Scenario,
    backends: list[ChatBackend],
    policy: TruncationPolicy,
    cache: CompletionCache,
    store: RunStore,
    run_id: str,
    summarizer: ChatBackend | None = None,
    concurrency: int = DEFAULT_CONCURRENCY,
    prompts: PromptKit | None = None,
) -> list[PredictionSet]:
    """
    Runs one scenario for every backend over the corpus.

    Emails are processed with at most `concurrency` in flight. In the summary
    scenario each email is summarized once and the same summary goes to every
    classifier backend. Predictions already in the store for this run are reused
    and not queried again.

    Args:
        corpus: The emails, in corpus order.
        scenario: raw or summary.
        backends: The classifier backends.
        policy: Truncation budget and estimator.
        cache: The completion cache.
        store: The run store predictions are appended to.
        run_id: The run the predictions belong to.
        summarizer: The summarizer backend; required for the summary scenario.
        concurrency: Maximum number of concurrent requests.
        prompts: The prompt templates; the bundled ones by default.

    Returns:
        One PredictionSet per backend, in the order of `backends`, each holding one
        prediction per email in corpus order.

    Raises:
        AuthError: When any backend rejects its credentials; the run stops.
        StoreError: When predictions cannot be persisted; the run stops.
    """
    if not corpus:
        raise ValueError("Cannot run a scenario over an empty corpus")
    if not backends:
        raise ValueError("At least one backend is required")
    if scenario == Scenario.SUMMARY and summarizer is None:
        raise ValueError("The summary scenario requires a summarizer backend")

    prompts = prompts or get_prompt_kit()
    semaphore = asyncio.Semaphore(max(concurrency, 1))

    done: dict[tuple[str, str, str], Prediction] = {}
    if store.run_dir(run_id).is_dir():
        for prediction in store.load(run_id):
            done.setdefault(prediction.key, prediction)
        if done:
            logging.info(f"Resuming run {run_id}: {len(done)} predictions already stored")

    # identical message files share an id and one prediction
    pending = list({
        (email.id, backend.backend_id): (email, backend)
        for backend in backends
        for email in corpus
        if (email.id, backend.backend_id, scenario.value) not in done
    }.values())

    summaries: dict[str, CachedCompletion | BackendError] = {}
    if scenario == Scenario.SUMMARY and pending:
        to_summarize = list({email.id: email for email, _ in pending}.values())
        logging.info(f"Summarizing {len(to_summarize)} emails with '{summarizer.backend_id}'")

        async def summarize_one(email: EmailContent) -> None:
            async with semaphore:
                try:
                    summaries[email.id] = await summarize_email(email, summarizer, policy, cache, prompts)
                except AuthError:
                    raise
                except BackendError as e:
                    summaries[email.id] = e

        await _run_all(summarize_one(email) for email in to_summarize)

    async def predict_one(email: EmailContent, backend: ChatBackend) -> None:
        async with semaphore:
            if scenario == Scenario.RAW:
                prediction = await classify_raw(email, backend, policy, cache, prompts)
            else:
                summary = summaries[email.id]
                if isinstance(summary, BackendError):
                    prediction = _failed_prediction(email, scenario, backend, summary, summary_text="")
                else:
                    prediction = await classify_summary_text(email, summary, backend, cache, prompts)

        prediction = prediction.model_copy(update={"run_id": run_id})
        await store.append(prediction)
        done[prediction.key] = prediction

    logging.info(f"Run {run_id}: {len(pending)} predictions to produce ({scenario.value}, {len(backends)} backends)")
    await _run_all(predict_one(email, backend) for email, backend in pending)

    snapshot = PolicySnapshot(
        budget=policy.max_content_tokens,
        estimator=policy.estimator.value,
        prompt_digest=prompts.digest,
    )
    return [
        PredictionSet(
            run_id=run_id,
            scenario=scenario,
            backend_id=backend.backend_id,
            predictions=[done[(email.id, backend.backend_id, scenario.value)] for email in corpus],
            policy=snapshot,
        )
        for backend in backends
    ]


async def _run_all(coros) -> None:
    """Runs the coroutines together; the first abort condition cancels the rest and is re-raised."""
    try:
        async with asyncio.TaskGroup() as tg:
            for coro in coros:
                tg.create_task(coro)
    except ExceptionGroup as eg:
        error = next((e for e in eg.exceptions if isinstance(e, (AuthError, StoreError))), eg.exceptions[0])
        logging.error(f"Run aborted: {error}")
        if isinstance(error, OSError):
            raise StoreError(f"Run store I/O failed: {error}") from error
        raise error from None
