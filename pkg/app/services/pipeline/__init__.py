from .cache import CachedCompletion, CompletionCache, make_cache_key
from .labels import parse_label
from .runner import (
    SUMMARY_MAX_TOKENS,
    classify_from_summary,
    classify_raw,
    classify_summary_text,
    run_scenario,
    summarize,
    summarize_email,
)
from .state import PolicySnapshot, Prediction, PredictionSet, Scenario
from .store import RunStore, StoreError, UnknownRun
