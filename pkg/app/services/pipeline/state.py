"""Types for predictions and prediction sets."""
from datetime import datetime, timezone
from enum import Enum

from pydantic import BaseModel, Field, model_validator

from ..corpus import Label


class Scenario(str, Enum):
    """Raw truncated content, or a summary produced by a summarizer backend."""
    RAW = "raw"
    SUMMARY = "summary"


class PolicySnapshot(BaseModel):
    """The content policy a prediction set was produced under."""
    budget: int
    estimator: str
    prompt_digest: str


class Prediction(BaseModel):
    """One parsed answer of one backend for one email."""
    run_id: str = ""
    email_id: str
    scenario: Scenario
    backend_id: str
    label: Label
    raw_completion: str
    summary_text: str | None = None
    prompt_tokens: int = 0
    completion_tokens: int = 0
    summary_prompt_tokens: int = 0
    summary_completion_tokens: int = 0
    cached: bool = False
    failed: bool = False
    timestamp: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    @model_validator(mode="after")
    def _summary_present(self):
        if self.scenario == Scenario.SUMMARY and self.summary_text is None:
            raise ValueError("summary predictions must carry summary_text")
        return self

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.email_id, self.backend_id, self.scenario.value)


class PredictionSet(BaseModel):
    """All predictions of one backend in one run, in corpus order."""
    run_id: str
    scenario: Scenario
    backend_id: str
    predictions: list[Prediction]
    policy: PolicySnapshot
