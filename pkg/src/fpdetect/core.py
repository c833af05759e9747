"""Items, transactions, windows and association-rule semantics.

An item is a discretized attribute/value pair; a transaction is a timestamped
item set with a monetary amount for one entity.  Windows pick the "recent"
slice of an entity's history that profiling and alerting operate on.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ConfigurationError, ContractError

LEGAL = "legal"
FRAUD = "fraud"

__all__ = [
    "LEGAL",
    "FRAUD",
    "Item",
    "Transaction",
    "TimeWindow",
    "CountWindow",
    "WindowSpec",
    "Rule",
    "Passthrough",
    "Interval",
    "RangeBuckets",
    "ValueMap",
    "GranularityConfig",
    "discretize",
    "with_amount_item",
    "window_select",
    "interval_display",
]


@dataclass(frozen=True, order=True)
class Item:
    """A discretized attribute/value pair, e.g. ``Item("hour", "evening")``.

    Items compare and sort by (attribute, value); that total order is the
    deterministic tie-break wherever occurrence counts are equal.
    """

    attribute: str
    value: str

    def __post_init__(self) -> None:
        if not self.attribute or not self.value:
            raise ValueError("item attribute and value must be non-empty")

    def __str__(self) -> str:
        return f"{self.attribute}={self.value}"


@dataclass(frozen=True)
class Transaction:
    """One timestamped purchase-like event of an entity.

    ``items`` is a set: duplicates collapse.  ``amount`` is the consumed money
    of the transaction and must be non-negative; it doubles as a discretizable
    attribute via :func:`with_amount_item`.
    """

    entity_id: str
    timestamp: int
    items: frozenset[Item]
    amount: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", frozenset(self.items))
        if self.amount < 0:
            raise ValueError(f"transaction amount must be >= 0, got {self.amount}")


@dataclass(frozen=True)
class TimeWindow:
    """All transactions in the trailing ``duration`` seconds, (now-d, now]."""

    duration: int

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("time window duration must be positive")


@dataclass(frozen=True)
class CountWindow:
    """The most recent ``n`` transactions."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("count window size must be >= 1")


WindowSpec = TimeWindow | CountWindow


@dataclass(frozen=True)
class Rule:
    """An association rule antecedent -> consequent with its two measures.

    Support is the fraction of analyzed transactions containing both sides;
    confidence is the fraction of antecedent-containing transactions that also
    contain the consequent, so support <= confidence <= 1 always holds.
    """

    antecedent: frozenset[Item]
    consequent: frozenset[Item]
    support: Fraction | float
    confidence: Fraction | float

    def __post_init__(self) -> None:
        object.__setattr__(self, "antecedent", frozenset(self.antecedent))
        object.__setattr__(self, "consequent", frozenset(self.consequent))
        if not self.antecedent:
            raise ValueError("rule antecedent must be non-empty")
        if not self.consequent:
            raise ValueError("rule consequent must be non-empty")
        if self.antecedent & self.consequent:
            raise ValueError("rule antecedent and consequent must be disjoint")
        if not 0 <= self.support <= self.confidence <= 1:
            raise ValueError(
                f"rule measures need 0 <= support <= confidence <= 1, "
                f"got support={self.support}, confidence={self.confidence}"
            )


# --------------------------------------------------------------------------
# Discretization: raw attribute values -> bucket-labelled items
# --------------------------------------------------------------------------

_INTERVAL_LABEL = re.compile(r"^\[-?\d+(?:\.\d+)?,-?\d+(?:\.\d+)?\)$")


def _fmt_bound(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _as_number(attribute: str, raw: object) -> float:
    try:
        return float(raw)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise ConfigurationError(
            f"attribute {attribute!r}: value {raw!r} is not numeric"
        ) from None


@dataclass(frozen=True)
class Passthrough:
    """Uses the stringified raw value as the bucket label."""

    def bucket(self, attribute: str, raw: object) -> str:
        return str(raw)


@dataclass(frozen=True)
class Interval:
    """Half-open numeric buckets [lo, hi) of a fixed width.

    Labels are canonical "[lo,hi)" strings; pretty rendering such as "$0-$25"
    is display-only (see :func:`interval_display`).
    """

    width: float
    origin: float = 0.0

    def __post_init__(self) -> None:
        if self.width <= 0:
            raise ConfigurationError("interval width must be positive")

    def bucket(self, attribute: str, raw: object) -> str:
        if isinstance(raw, str):
            if _INTERVAL_LABEL.match(raw):
                return raw  # already a bucket label
            raw = _as_number(attribute, raw)
        x = _as_number(attribute, raw)
        k = math.floor((x - self.origin) / self.width)
        lo = self.origin + k * self.width
        return f"[{_fmt_bound(lo)},{_fmt_bound(lo + self.width)})"


@dataclass(frozen=True)
class RangeBuckets:
    """Explicit named [lo, hi) ranges for a numeric attribute."""

    ranges: tuple[tuple[float, float, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "ranges", tuple(tuple(r) for r in self.ranges))
        for lo, hi, label in self.ranges:
            if lo >= hi or not label:
                raise ConfigurationError(f"bad range bucket ({lo}, {hi}, {label!r})")

    def bucket(self, attribute: str, raw: object) -> str:
        labels = {label for _, _, label in self.ranges}
        if isinstance(raw, str) and raw in labels:
            return raw
        x = _as_number(attribute, raw)
        for lo, hi, label in self.ranges:
            if lo <= x < hi:
                return label
        raise ConfigurationError(
            f"attribute {attribute!r}: value {raw!r} falls outside every range bucket"
        )


@dataclass(frozen=True)
class ValueMap:
    """Explicit raw-value -> label mapping, e.g. "21:00" -> "Evening"."""

    mapping: Mapping[str, str]
    default: str | None = None

    def bucket(self, attribute: str, raw: object) -> str:
        key = str(raw)
        if key in self.mapping:
            return self.mapping[key]
        if key in set(self.mapping.values()):
            return key  # already a bucket label
        if self.default is not None:
            return self.default
        raise ConfigurationError(
            f"attribute {attribute!r}: value {raw!r} has no bucket mapping"
        )


BucketSpec = Passthrough | Interval | RangeBuckets | ValueMap


@dataclass(frozen=True)
class GranularityConfig:
    """Per-attribute bucketing specs plus an optional catch-all default."""

    specs: Mapping[str, BucketSpec] = field(default_factory=dict)
    default: BucketSpec | None = None

    def spec_for(self, attribute: str) -> BucketSpec:
        spec = self.specs.get(attribute, self.default)
        if spec is None:
            raise ConfigurationError(
                f"no granularity spec for attribute {attribute!r} and no default"
            )
        return spec


def discretize(raw_record: Mapping[str, object], config: GranularityConfig) -> set[Item]:
    """Maps each raw attribute value to exactly one bucket-labelled item.

    Deterministic and idempotent: feeding a bucket label back through its own
    spec returns the label unchanged.
    """
    return {
        Item(attribute, config.spec_for(attribute).bucket(attribute, raw))
        for attribute, raw in raw_record.items()
    }


def with_amount_item(
    transaction: Transaction,
    config: GranularityConfig,
    attribute: str = "amount",
) -> Transaction:
    """Adds the transaction's amount as a bucketed item when configured.

    Leaves the transaction untouched when the config carries no explicit spec
    for ``attribute``; existing items are never rebucketed.
    """
    if attribute not in config.specs:
        return transaction
    extra = discretize({attribute: transaction.amount}, config)
    return replace(transaction, items=transaction.items | extra)


def window_select(
    transactions: Sequence[Transaction], spec: WindowSpec, now: int
) -> list[Transaction]:
    """Returns the window's slice of a time-ordered transaction sequence.

    Time windows keep timestamps in (now - duration, now]; count windows keep
    the last n.  Relative order is preserved and the result is always a
    contiguous suffix-by-time of the input.
    """
    for earlier, later in zip(transactions, transactions[1:]):
        if later.timestamp < earlier.timestamp:
            raise ContractError("transactions must be sorted by timestamp ascending")
    if isinstance(spec, TimeWindow):
        lo = now - spec.duration
        return [t for t in transactions if lo < t.timestamp <= now]
    if isinstance(spec, CountWindow):
        return list(transactions[-spec.n :])
    raise ContractError(f"unknown window spec {spec!r}")


def interval_display(value: str, unit: str = "") -> str:
    """Renders a canonical "[lo,hi)" label for people: "[0,25)" -> "$0-$25"."""
    m = re.match(r"^\[(-?\d+(?:\.\d+)?),(-?\d+(?:\.\d+)?)\)$", value)
    if m is None:
        return value
    return f"{unit}{m.group(1)}-{unit}{m.group(2)}"
