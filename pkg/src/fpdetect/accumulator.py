"""Windowed suspicion accumulation and threshold alarms.

Single suspicious transactions are noisy: a profile filtered by minimum
support misclassifies some legal behavior, and a burst of low-amount frauds
can hide below any per-transaction threshold.  The accumulator therefore sums
suspicion * expiring-weight * amount over an accumulation window and compares
that alert value against an ascending severity ladder.  The amount factor
keeps alarms economical: many highly suspicious near-zero purchases do not
outrank one big one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import ConfigurationError, ContractError
from .matcher import SuspicionRecord

SLIDING = "sliding"
SINCE_UPDATE = "since_update"

STEP = "step"
NATURAL_LOG = "natural_log"
POLYNOMIAL = "polynomial"
EXPIRING_KINDS = (STEP, NATURAL_LOG, POLYNOMIAL)

__all__ = [
    "SLIDING",
    "SINCE_UPDATE",
    "STEP",
    "NATURAL_LOG",
    "POLYNOMIAL",
    "EXPIRING_KINDS",
    "ExpiringFunction",
    "AlertState",
    "expiring_weight",
    "alert_value",
    "fire",
    "slide",
]


@dataclass(frozen=True)
class ExpiringFunction:
    """Recency weight f(t) in [0, 1] over the accumulation window (t2, t1].

    Step weighs every in-window transaction equally; the natural-log and
    polynomial shapes emphasize more recent transactions, normalized so that
    f(t2) = 0 and f(t1) = 1.  Use the classmethod constructors.
    """

    kind: str
    t2: int
    t1: int | None = None
    degree: int = 1

    def __post_init__(self) -> None:
        if self.kind not in EXPIRING_KINDS:
            raise ConfigurationError(f"unknown expiring function kind {self.kind!r}")
        if self.kind != STEP or self.t1 is not None:
            if self.t1 is None:
                raise ConfigurationError(f"{self.kind} expiring function needs a window end")
            if not self.t2 < self.t1:
                raise ConfigurationError(
                    f"expiring window must satisfy t2 < t1, got ({self.t2}, {self.t1})"
                )
        if self.degree < 1:
            raise ConfigurationError(f"polynomial degree must be >= 1, got {self.degree}")

    @classmethod
    def step(cls, cutoff: int, horizon: int | None = None) -> "ExpiringFunction":
        return cls(STEP, cutoff, horizon)

    @classmethod
    def natural_log(cls, t2: int, t1: int) -> "ExpiringFunction":
        return cls(NATURAL_LOG, t2, t1)

    @classmethod
    def polynomial(cls, degree: int, t2: int, t1: int) -> "ExpiringFunction":
        return cls(POLYNOMIAL, t2, t1, degree)

    def re_anchor(self, t2: int, t1: int) -> "ExpiringFunction":
        """The same shape over a moved window."""
        return ExpiringFunction(self.kind, t2, t1, self.degree)


def expiring_weight(fn: ExpiringFunction, t: int) -> float:
    """f(t): 0 at or before t2, rising to 1 at t1 (step jumps straight to 1)."""
    if t <= fn.t2:
        return 0.0
    if fn.t1 is not None and t > fn.t1:
        raise ContractError(
            f"transaction at {t} is beyond the window end {fn.t1} (future transaction)"
        )
    if fn.kind == STEP:
        return 1.0
    assert fn.t1 is not None
    x = (t - fn.t2) / (fn.t1 - fn.t2)
    if fn.kind == NATURAL_LOG:
        return min(1.0, max(0.0, math.log1p(x * (math.e - 1.0))))
    return x**fn.degree


def alert_value(records: Sequence[SuspicionRecord], fn: ExpiringFunction) -> float:
    """AlertValue = sum of suspicion * f(t) * amount over the window records."""
    return sum(
        r.suspicion * expiring_weight(fn, r.scored_at) * r.transaction.amount
        for r in records
    )


@dataclass
class AlertState:
    """Accumulation-window contents and the alarm ladder for one entity.

    Thresholds are (alert_value, severity) pairs, strictly ascending in value
    with severities ordered by position.  ``anchor_mode`` picks how the window
    start follows time: SLIDING keeps t2 = t1 - span, SINCE_UPDATE pins t2 to
    the last profile update.  Single-writer per entity: slides must be
    serialized, fire is read-only.
    """

    records: list[SuspicionRecord]
    expiring: ExpiringFunction
    thresholds: list[tuple[float, str]]
    profile_updated_at: int
    span: int
    anchor_mode: str = SLIDING

    def __post_init__(self) -> None:
        if self.span <= 0:
            raise ConfigurationError(f"window span must be positive, got {self.span}")
        if self.anchor_mode not in (SLIDING, SINCE_UPDATE):
            raise ConfigurationError(f"unknown anchor mode {self.anchor_mode!r}")
        values = [v for v, _ in self.thresholds]
        severities = [s for _, s in self.thresholds]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigurationError("alert thresholds must be strictly ascending")
        if len(set(severities)) != len(severities):
            raise ConfigurationError("alert severities must be distinct")


def fire(state: AlertState) -> tuple[float, str | None]:
    """The current alert value and the highest severity it reaches, if any.

    A value exactly at a threshold fires that threshold's severity.
    """
    if not state.thresholds:
        raise ConfigurationError("no alert thresholds configured")
    value = alert_value(state.records, state.expiring)
    severity = None
    for threshold, label in state.thresholds:
        if value >= threshold:
            severity = label
    return value, severity


def slide(
    state: AlertState, now: int, new_records: Sequence[SuspicionRecord] = ()
) -> AlertState:
    """Advances the window to end at ``now``, evicting and appending records.

    New records must be sorted by scored_at and not be from the future.
    Interleaving slides and appends is equivalent to one batch slide with the
    concatenated records.
    """
    previous = None
    for record in new_records:
        if record.scored_at > now:
            raise ContractError(
                f"record scored at {record.scored_at} is in the future of {now}"
            )
        if previous is not None and record.scored_at < previous:
            raise ContractError("new records must be sorted by scored_at")
        previous = record.scored_at
    t1 = now
    t2 = state.profile_updated_at if state.anchor_mode == SINCE_UPDATE else now - state.span
    kept = [r for r in [*state.records, *new_records] if t2 < r.scored_at <= t1]
    return replace(state, records=kept, expiring=state.expiring.re_anchor(t2, t1))
