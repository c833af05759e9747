"""ROC curves, outcome matrices and detection-cost totals.

Fraud is the positive class and suspicion is the ranking score: a record
alerts when its suspicion reaches the decision threshold.  The ROC sweep
visits every distinct score, so tied records flip together and the
trapezoidal area equals the Mann-Whitney pairwise statistic with half credit
for ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import FRAUD, LEGAL
from .errors import EvaluationError

FULL_AMOUNT = "full_amount"
FIXED_PER_MISS = "fixed_per_miss"

__all__ = [
    "FULL_AMOUNT",
    "FIXED_PER_MISS",
    "RocCurve",
    "OutcomeMatrix",
    "CostParams",
    "roc",
    "outcomes",
    "total_cost",
    "missed_fraud_amounts",
]


def _check_labels(scores: Sequence[float], labels: Sequence[str]) -> tuple[int, int]:
    if len(scores) != len(labels):
        raise EvaluationError(
            f"scores and labels differ in length ({len(scores)} vs {len(labels)})"
        )
    bad = {label for label in labels if label not in (LEGAL, FRAUD)}
    if bad:
        raise EvaluationError(f"unknown labels {sorted(bad)}")
    n_fraud = sum(1 for label in labels if label == FRAUD)
    return n_fraud, len(labels) - n_fraud


@dataclass(frozen=True)
class RocCurve:
    """(fpr, tpr) points swept over descending thresholds, plus the area."""

    points: tuple[tuple[float, float], ...]
    thresholds: tuple[float, ...]
    auc: float


def roc(suspicions: Sequence[float], labels: Sequence[str]) -> RocCurve:
    """ROC over all distinct suspicion values; area by the trapezoidal rule.

    Needs at least one fraud and one legal record, otherwise the area is
    undefined.  Points start at (0, 0) (threshold above every score) and end
    at (1, 1).
    """
    n_fraud, n_legal = _check_labels(suspicions, labels)
    if n_fraud == 0 or n_legal == 0:
        raise EvaluationError("ROC needs at least one fraud and one legal record")
    ranked = sorted(zip(suspicions, labels), key=lambda pair: -pair[0])
    points = [(0.0, 0.0)]
    thresholds = [math.inf]
    tp = fp = 0
    i = 0
    while i < len(ranked):
        threshold = ranked[i][0]
        while i < len(ranked) and ranked[i][0] == threshold:
            if ranked[i][1] == FRAUD:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((fp / n_legal, tp / n_fraud))
        thresholds.append(threshold)
    auc = sum(
        (x1 - x0) * (y0 + y1) / 2.0
        for (x0, y0), (x1, y1) in zip(points, points[1:])
    )
    return RocCurve(tuple(points), tuple(thresholds), auc)


@dataclass(frozen=True)
class OutcomeMatrix:
    """Hit / false alarm / miss / normal counts at one decision threshold."""

    hit: int
    false_alarm: int
    miss: int
    normal: int

    @property
    def total(self) -> int:
        return self.hit + self.false_alarm + self.miss + self.normal

    def as_dict(self) -> dict[str, int]:
        return {
            "hit": self.hit,
            "false_alarm": self.false_alarm,
            "miss": self.miss,
            "normal": self.normal,
        }


def outcomes(
    suspicions: Sequence[float], labels: Sequence[str], alert_threshold: float
) -> OutcomeMatrix:
    """Counts per cell: a record alerts iff suspicion >= alert_threshold."""
    _check_labels(suspicions, labels)
    hit = false_alarm = miss = normal = 0
    for suspicion, label in zip(suspicions, labels):
        alerted = suspicion >= alert_threshold
        if label == FRAUD:
            if alerted:
                hit += 1
            else:
                miss += 1
        elif alerted:
            false_alarm += 1
        else:
            normal += 1
    return OutcomeMatrix(hit, false_alarm, miss, normal)


@dataclass(frozen=True)
class CostParams:
    """Cost of challenging alerts plus the cost of what slips through.

    Every raised alert (hit or false alarm) costs ``challenge_cost``; a missed
    fraud costs its full transaction amount or a fixed value per miss.
    """

    challenge_cost: float
    miss_cost_mode: str = FULL_AMOUNT
    fixed_miss_cost: float = 0.0

    def __post_init__(self) -> None:
        if self.challenge_cost < 0:
            raise EvaluationError("challenge cost must be >= 0")
        if self.miss_cost_mode not in (FULL_AMOUNT, FIXED_PER_MISS):
            raise EvaluationError(f"unknown miss cost mode {self.miss_cost_mode!r}")
        if self.fixed_miss_cost < 0:
            raise EvaluationError("fixed miss cost must be >= 0")


def total_cost(
    matrix: OutcomeMatrix,
    missed_amounts: Sequence[float] | None,
    params: CostParams,
) -> float:
    """challenge_cost * alerts + the miss losses; normal outcomes cost nothing."""
    if params.miss_cost_mode == FULL_AMOUNT:
        if missed_amounts is None:
            raise EvaluationError("full-amount miss costing needs the missed fraud amounts")
        if len(missed_amounts) != matrix.miss:
            raise EvaluationError(
                f"expected {matrix.miss} missed amounts, got {len(missed_amounts)}"
            )
        miss_cost = float(sum(missed_amounts))
    else:
        miss_cost = params.fixed_miss_cost * matrix.miss
    return params.challenge_cost * (matrix.hit + matrix.false_alarm) + miss_cost


def missed_fraud_amounts(
    suspicions: Sequence[float],
    labels: Sequence[str],
    amounts: Sequence[float],
    alert_threshold: float,
) -> list[float]:
    """Amounts of the fraud records that would not alert at this threshold."""
    _check_labels(suspicions, labels)
    if len(amounts) != len(labels):
        raise EvaluationError("amounts must parallel scores and labels")
    return [
        amount
        for suspicion, label, amount in zip(suspicions, labels, amounts)
        if label == FRAUD and suspicion < alert_threshold
    ]
