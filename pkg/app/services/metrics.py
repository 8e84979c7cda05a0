"""
Binary classification metrics with spam as the positive class.

Unparseable predictions are kept out of the confusion matrix and only counted,
so coverage can be reported next to the metrics.
"""

from collections.abc import Mapping

from pydantic import BaseModel, Field

from .corpus import Label
from .pipeline.state import PredictionSet, Scenario

POSITIVE_LABEL = Label.SPAM


class MetricsError(Exception):
    """Base class for metric computation errors."""
    pass


class MissingGold(MetricsError):
    """Raised when a prediction refers to an email without a gold label."""
    pass


class EmptyMatrix(MetricsError):
    """Raised when a metric needs at least one parsed prediction."""
    pass


class OneClassAbsent(MetricsError):
    """Raised when balanced accuracy is asked for without both classes present."""
    pass


class NoPositives(MetricsError):
    """Raised when recall is asked for without any gold spam."""
    pass


class EmptyInput(MetricsError):
    """Raised when a report is asked for without any rows."""
    pass


class ConfusionMatrix(BaseModel):
    tp: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    tn: int = Field(default=0, ge=0)
    fn: int = Field(default=0, ge=0)
    unparseable_count: int = Field(default=0, ge=0)

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp

    @property
    def total(self) -> int:
        return self.positives + self.negatives


class MetricsRow(BaseModel):
    """One report row; a metric is None where it is undefined."""
    backend_id: str
    scenario: Scenario
    ac: float | None = None
    ba: float | None = None
    pr: float | None = None
    re: float | None = None
    f1: float | None = None
    coverage: float
    sample_size: int
    prompt_tokens: int = 0
    completion_tokens: int = 0
    summary_prompt_tokens: int = 0
    summary_completion_tokens: int = 0
    failed: int = 0


def confusion(preds: PredictionSet, gold: Mapping[str, Label]) -> ConfusionMatrix:
    """
    Tallies the predictions of a set against the gold labels.

    Raises:
        MissingGold: If a prediction's email has no gold label.
    """
    cm = ConfusionMatrix()
    for prediction in preds.predictions:
        if prediction.email_id not in gold:
            raise MissingGold(f"No gold label for email {prediction.email_id}")

        if prediction.label == Label.UNPARSEABLE:
            cm.unparseable_count += 1
            continue

        predicted_spam = prediction.label == POSITIVE_LABEL
        gold_spam = Label(gold[prediction.email_id]) == POSITIVE_LABEL
        if predicted_spam and gold_spam:
            cm.tp += 1
        elif predicted_spam:
            cm.fp += 1
        elif gold_spam:
            cm.fn += 1
        else:
            cm.tn += 1
    return cm


def accuracy(cm: ConfusionMatrix) -> float:
    """(TP + TN) / (P + N). Raises EmptyMatrix when P + N = 0."""
    if cm.total == 0:
        raise EmptyMatrix("Accuracy is undefined without parsed predictions")
    return (cm.tp + cm.tn) / cm.total


def balanced_accuracy(cm: ConfusionMatrix) -> float:
    """Mean of TP / P and TN / N. Raises OneClassAbsent when P or N is 0."""
    if cm.positives == 0 or cm.negatives == 0:
        raise OneClassAbsent("Balanced accuracy needs both spam and ham among parsed predictions")
    return (cm.tp / cm.positives + cm.tn / cm.negatives) / 2


def precision(cm: ConfusionMatrix) -> float | None:
    """TP / (TP + FP), or None when nothing was predicted spam."""
    predicted_positive = cm.tp + cm.fp
    if predicted_positive == 0:
        return None
    return cm.tp / predicted_positive


def recall(cm: ConfusionMatrix) -> float:
    """TP / (TP + FN). Raises NoPositives when P is 0."""
    if cm.positives == 0:
        raise NoPositives("Recall is undefined without gold spam among parsed predictions")
    return cm.tp / cm.positives


def f1(pr: float, re: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if pr + re == 0:
        return 0.0
    return 2 * pr * re / (pr + re)


def _defined(metric, cm: ConfusionMatrix) -> float | None:
    try:
        return metric(cm)
    except MetricsError:
        return None


def metrics_row(preds: PredictionSet, gold: Mapping[str, Label]) -> MetricsRow:
    """
    Computes every metric of one prediction set.

    Undefined metrics are None; F1 is None whenever precision or recall is.

    Raises:
        MissingGold: If a prediction's email has no gold label.
    """
    cm = confusion(preds, gold)
    pr = precision(cm)
    re = _defined(recall, cm)
    sample_size = len(preds.predictions)

    return MetricsRow(
        backend_id=preds.backend_id,
        scenario=preds.scenario,
        ac=_defined(accuracy, cm),
        ba=_defined(balanced_accuracy, cm),
        pr=pr,
        re=re,
        f1=f1(pr, re) if pr is not None and re is not None else None,
        coverage=cm.total / sample_size if sample_size else 0.0,
        sample_size=sample_size,
        prompt_tokens=sum(p.prompt_tokens for p in preds.predictions),
        completion_tokens=sum(p.completion_tokens for p in preds.predictions),
        summary_prompt_tokens=sum(p.summary_prompt_tokens for p in preds.predictions),
        summary_completion_tokens=sum(p.summary_completion_tokens for p in preds.predictions),
        failed=sum(1 for p in preds.predictions if p.failed),
    )
